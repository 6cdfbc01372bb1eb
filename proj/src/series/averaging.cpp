#include "perturblab/series/averaging.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>

namespace perturblab::series {

namespace {

double period_of(const VectorField& g) {
  if (!g.period || !(*g.period > 0)) throw Error("averaging needs a field with a positive period");
  return *g.period;
}

Vec mean_over_period(const VectorField& g, const Vec& y, const Vec& p, double T, int nodes) {
  Vec acc(y.size(), 0.0);
  for (int i = 0; i < nodes; ++i) {
    Vec v = g.rhs(y, T * i / nodes, p);
    for (std::size_t c = 0; c < v.size(); ++c) {
      if (!std::isfinite(v[c])) throw NumericalError("non-finite field value in averaging quadrature", T * i / nodes, y);
      acc[c] += v[c];
    }
  }
  for (double& a : acc) a /= nodes;
  return acc;
}

}  // namespace

VectorField averaged_field(const VectorField& g, int nodes) {
  const double T = period_of(g);
  if (nodes < 2) throw Error("averaging quadrature needs at least 2 nodes");
  VectorField avg;
  avg.dimension = g.dimension;
  avg.params = g.params;
  avg.name = "<" + g.name + ">";
  avg.rhs = [g, T, nodes](const Vec& y, double, const Vec& p) { return mean_over_period(g, y, p, T, nodes); };
  return avg;
}

std::function<Vec(const Vec&, double)> averaging_generator(const VectorField& g, int nodes) {
  const double T = period_of(g);
  return [g, T, nodes](const Vec& y, double t) {
    const Vec mean = mean_over_period(g, y, g.params, T, nodes);
    double s = std::fmod(t, T);
    if (s < 0) s += T;
    using GL = boost::math::quadrature::gauss<double, 8>;
    const auto& xa = GL::abscissa();
    const auto& wa = GL::weights();
    const int panels = std::max(1, static_cast<int>(std::ceil(32 * s / T)));
    const double w = s / panels;
    Vec acc(y.size(), 0.0);
    for (int p = 0; p < panels; ++p) {
      const double mid = (p + 0.5) * w;
      for (std::size_t q = 0; q < xa.size(); ++q)
        for (int sgn : {-1, 1}) {
          const double tq = mid + sgn * 0.5 * w * xa[q];
          Vec v = g.rhs(y, tq, g.params);
          for (std::size_t c = 0; c < v.size(); ++c) acc[c] += 0.5 * w * wa[q] * (v[c] - mean[c]);
        }
    }
    return acc;
  };
}

Mat rotation_flow(double omega, double t) {
  Mat E(2, 2);
  const double c = std::cos(omega * t), s = std::sin(omega * t);
  E << c, s / omega, -omega * s, c;
  return E;
}

VectorField van_der_pol_transform(const VectorField& f, double omega) {
  if (f.dimension != 2) throw Error("van der Pol transformation expects a planar field");
  if (!(omega > 0)) throw Error("van der Pol transformation needs omega > 0");
  VectorField out;
  out.dimension = 2;
  out.params = f.params;
  out.name = f.name + "@rotating";
  out.period = f.period;
  out.rhs = [f, omega](const Vec& h, double t, const Vec& p) {
    const Mat E = rotation_flow(omega, t), Einv = rotation_flow(omega, -t);
    Eigen::Vector2d x = E * Eigen::Vector2d(h[0], h[1]);
    Vec fx = f.rhs({x(0), x(1)}, t, p);
    // subtract B(omega) x
    Eigen::Vector2d r(fx[0] - x(1), fx[1] + omega * omega * x(0));
    Eigen::Vector2d d = Einv * r;
    return Vec{d(0), d(1)};
  };
  return out;
}

}  // namespace perturblab::series
