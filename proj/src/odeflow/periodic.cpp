#include <boost/math/quadrature/gauss.hpp>

#include <cmath>

#include "perturblab/odeflow.hpp"

namespace perturblab::odeflow {

namespace {

Eigen::VectorXd to_eigen(const Vec& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); }

// Field on (x, U) with U' = A(x,t) U, U stored column-major after x.
VectorField variational_field(const VectorField& field) {
  const int n = field.dimension;
  VectorField var;
  var.dimension = n + n * n;
  var.name = field.name + "+variational";
  var.rhs = [field, n](const Vec& s, double t, const Vec&) {
    Vec x(s.begin(), s.begin() + n);
    Vec out(n + n * n);
    Vec fx = field(x, t);
    std::copy(fx.begin(), fx.end(), out.begin());
    Mat A = field.jacobian_at(x, t);
    Eigen::Map<const Mat> U(s.data() + n, n, n);
    Eigen::Map<Mat> dU(out.data() + n, n, n);
    dU = A * U;
    return out;
  };
  return var;
}

}  // namespace

double orbit_average(const Trajectory& orbit, double T,
                     const std::function<double(const Vec&, double)>& g) {
  const double t0 = orbit.times.front();
  const int panels = 128;
  const double w = T / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = t0 + p * w, b = a + w;
    total += boost::math::quadrature::gauss<double, 10>::integrate(
        [&](double t) { return g(orbit.at(t), t); }, a, b);
  }
  return total / T;
}

FloquetData floquet_analysis(const VectorField& field, const Vec& x_star, double T,
                             const Options& opts, int n_samples) {
  const int n = field.dimension;
  VectorField var = variational_field(field);
  Vec s0(n + n * n, 0.0);
  std::copy(x_star.begin(), x_star.end(), s0.begin());
  for (int i = 0; i < n; ++i) s0[n + i * n + i] = 1.0;

  Options o = opts;
  o.dense = true;
  o.record_steps = true;
  Trajectory tr = integrate(var, s0, 0.0, T, o);
  if (!tr.ok()) throw NumericalError("variational integration failed: " + tr.message);

  FloquetData fd;
  fd.period = T;
  Vec sT = tr.final_state();
  fd.monodromy = Eigen::Map<const Mat>(sT.data() + n, n, n);
  Eigen::EigenSolver<Mat> es(fd.monodromy);
  for (int i = 0; i < n; ++i) {
    cplx mu = es.eigenvalues()(i);
    fd.multipliers.push_back(mu);
    fd.exponents.push_back(std::log(mu) / T);
  }
  for (int k = 0; k <= n_samples; ++k) {
    double t = T * k / n_samples;
    Vec s = k == n_samples ? sT : tr.at(t);
    fd.sample_times.push_back(t);
    fd.principal_samples.push_back(Eigen::Map<const Mat>(s.data() + n, n, n));
  }

  Trajectory orbit;
  orbit.times = {0.0};
  orbit.dense = tr.dense;
  fd.trace_integral = T * orbit_average(orbit, T, [&](const Vec& s, double t) {
    Vec x(s.begin(), s.begin() + n);
    return field.jacobian_at(x, t).trace();
  });
  const double predicted = std::exp(fd.trace_integral);
  fd.liouville_defect = std::abs(fd.monodromy.determinant() - predicted) / std::max(predicted, 1e-300);
  return fd;
}

PeriodicOrbit find_periodic_orbit(const VectorField& field, const Vec& x_guess, double T_guess,
                                  const PeriodicOptions& opts) {
  const int n = field.dimension;
  const bool autonomous = !field.period.has_value();
  Options io = opts.integration;
  io.record_steps = false;
  io.dense = false;

  Eigen::VectorXd x = to_eigen(x_guess);
  double T = T_guess;
  const Vec x_ref = x_guess;
  const Eigen::VectorXd f_ref = to_eigen(field(x_ref, 0.0));
  const double fd_base = std::cbrt(std::numeric_limits<double>::epsilon());

  auto phi = [&](const Eigen::VectorXd& xs, double tt) {
    Vec v(xs.data(), xs.data() + n);
    return to_eigen(flow(field, v, 0.0, tt, io));
  };

  PeriodicOrbit po;
  double res = 0;
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    Eigen::VectorXd xT = phi(x, T);
    Eigen::VectorXd F = xT - x;
    res = F.lpNorm<Eigen::Infinity>();

    const int m = autonomous ? n + 1 : n;
    Mat J = Mat::Zero(m, m);
    for (int j = 0; j < n; ++j) {
      const double h = fd_base * std::max(1.0, std::abs(x(j)));
      Eigen::VectorXd xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      J.block(0, j, n, 1) = (phi(xp, T) - phi(xm, T)) / (2 * h);
    }
    J.block(0, 0, n, n) -= Mat::Identity(n, n);
    Eigen::VectorXd rhs(m);
    rhs.head(n) = -F;
    if (autonomous) {
      J.block(0, n, n, 1) = to_eigen(field(Vec(xT.data(), xT.data() + n), T));
      J.block(n, 0, 1, n) = f_ref.transpose();
      rhs(n) = -f_ref.dot(x - to_eigen(x_ref));
    }
    Eigen::FullPivLU<Mat> lu(J);
    if (lu.rcond() < 1e-9)
      throw ConvergenceError("singular return-map Jacobian: orbit is not hyperbolic");
    if (res < opts.tol) break;
    Eigen::VectorXd d = lu.solve(rhs);
    x += d.head(n);
    if (autonomous) T += d(n);
    if (!x.allFinite() || !std::isfinite(T) || T <= 0)
      throw ConvergenceError("periodic-orbit Newton iteration diverged");
  }
  if (res >= opts.tol)
    throw ConvergenceError("periodic-orbit Newton did not converge in " +
                           std::to_string(opts.max_iterations) + " iterations (residual " +
                           std::to_string(res) + ")");

  Vec xs(x.data(), x.data() + n);
  Options od = opts.integration;
  od.dense = true;
  po.orbit = integrate(field, xs, 0.0, T, od);
  po.period = T;
  po.newton_iterations = it;
  po.residual = res;
  po.floquet = floquet_analysis(field, xs, T, opts.integration, opts.principal_samples);
  return po;
}

CharacteristicExponents characteristic_exponents(const VectorField& field, const Trajectory& orbit,
                                                 double T, double tol) {
  if (field.dimension != 2) throw Error("characteristic_exponents expects a planar field");
  const Vec& x0 = orbit.states.front();
  Vec xT = orbit.dense.empty() ? orbit.final_state() : orbit.at(orbit.times.front() + T);
  if (norm_inf(Vec{xT[0] - x0[0], xT[1] - x0[1]}) > 1e-5 * std::max(1.0, norm_inf(x0)))
    throw Error("orbit is not T-periodic within tolerance");

  CharacteristicExponents ce;
  ce.lambda = orbit_average(orbit, T, [&](const Vec& x, double t) { return field.divergence(x, t); });
  FloquetData fd = floquet_analysis(field, x0, T);
  int trivial = std::abs(fd.multipliers[0] - 1.0) < std::abs(fd.multipliers[1] - 1.0) ? 0 : 1;
  ce.lambda_monodromy = std::log(std::abs(fd.multipliers[1 - trivial])) / T;
  ce.hyperbolic = std::abs(ce.lambda) > tol;
  if (std::abs(ce.lambda - ce.lambda_monodromy) > tol * std::max(1.0, std::abs(ce.lambda)))
    throw NumericalError("divergence quadrature and monodromy disagree: orbit input is invalid");
  return ce;
}

}  // namespace perturblab::odeflow
