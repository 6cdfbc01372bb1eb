#include <cmath>

#include "perturblab/odeflow.hpp"

namespace perturblab::odeflow {

namespace {

// Cubic Lagrange interpolant of samples around cell [j, j+1], exact against the exponential kernel
// up to the quadrature order.
double cell_integral(const Vec& t, const Vec& G, std::size_t j) {
  const std::size_t n = t.size();
  std::size_t s = j == 0 ? 0 : j - 1;
  if (s + 3 >= n) s = n - 4;
  static const double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                               0.8611363115940526};
  static const double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                               0.3478548451374538};
  const double a = t[j], b = t[j + 1];
  double total = 0;
  for (int q = 0; q < 4; ++q) {
    const double sq = 0.5 * (a + b) + 0.5 * (b - a) * gx[q];
    double val = 0;
    for (std::size_t i = s; i < s + 4; ++i) {
      double L = 1;
      for (std::size_t k = s; k < s + 4; ++k)
        if (k != i) L *= (sq - t[k]) / (t[i] - t[k]);
      val += L * G[i];
    }
    total += gw[q] * std::exp(-(b - sq)) * val;
  }
  return 0.5 * (b - a) * total;
}

}  // namespace

PicardResult picard_iterate(const std::function<double(double)>& g, double lipschitz_K, double x0,
                            double eps, int n, double t_max, int grid_points) {
  if (grid_points < 4) throw Error("picard_iterate needs at least 4 grid points");
  PicardResult r;
  r.lambda = std::abs(eps) * lipschitz_K * (1.0 - std::exp(-t_max));
  if (r.lambda >= 1.0)
    throw ConvergenceError("contraction violated: lambda = eps*K*(1-e^{-t}) = " +
                           std::to_string(r.lambda) + " >= 1");
  r.t.resize(grid_points);
  for (int i = 0; i < grid_points; ++i) r.t[i] = t_max * i / (grid_points - 1);

  Vec x(grid_points);
  for (int i = 0; i < grid_points; ++i) x[i] = x0 * std::exp(-r.t[i]);
  r.iterates.push_back(x);
  for (int k = 0; k < n; ++k) {
    Vec G(grid_points);
    for (int i = 0; i < grid_points; ++i) G[i] = g(x[i]);
    Vec next(grid_points);
    double J = 0;
    next[0] = x0;
    for (int i = 0; i + 1 < grid_points; ++i) {
      J = std::exp(-(r.t[i + 1] - r.t[i])) * J + cell_integral(r.t, G, i);
      next[i + 1] = x0 * std::exp(-r.t[i + 1]) + eps * J;
    }
    x = next;
    r.iterates.push_back(x);
  }
  double d1 = 0;
  if (r.iterates.size() > 1)
    for (int i = 0; i < grid_points; ++i)
      d1 = std::max(d1, std::abs(r.iterates[1][i] - r.iterates[0][i]));
  r.error_bound = std::pow(r.lambda, n) / (1 - r.lambda) * d1;
  return r;
}

double gronwall_bound(double K, double M, double eps, double t) {
  if (!(K > 0)) throw Error("gronwall_bound needs K > 0");
  if (t < 0) throw Error("gronwall_bound needs t >= 0");
  return eps * M / K * std::expm1(K * t);
}

}  // namespace perturblab::odeflow
