#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <numeric>

#include "perturblab/twistmap.hpp"

namespace perturblab::twistmap {

namespace {

Point iterate_q(const TwistMap& m, Point x, int q) {
  for (int i = 0; i < q; ++i) x = m(x);
  return x;
}

Eigen::Matrix2d jacobian_q(const TwistMap& m, Point x, int q) {
  Eigen::Matrix2d J = Eigen::Matrix2d::Identity();
  for (int i = 0; i < q; ++i) {
    J = m.jacobian_at(x) * J;
    x = m(x);
  }
  return J;
}

double toms(const std::function<double(double)>& f, double a, double b, double fa, double fb) {
  boost::math::tools::eps_tolerance<double> tol(50);
  std::uintmax_t it = 100;
  const auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, it);
  return 0.5 * (r.first + r.second);
}

}  // namespace

PBResult pb_periodic_orbits(const TwistMap& m, int p, int q, std::pair<double, double> strip, int lines) {
  if (q <= 0) throw ConfigError("pb_periodic_orbits needs q > 0");
  if (std::gcd(p, q) != 1) throw ConfigError("p/q must be in lowest terms");
  const auto [Ia, Ib] = strip;
  if (!(Ib > Ia)) throw ConfigError("empty action strip");
  const int M = lines > 0 ? lines : std::max(64, 32 * q);
  const double target = kTwoPi * p;

  auto A = [&](double phi, double I) { return iterate_q(m, {phi, I}, q).phi - phi - target; };
  // the point on the vertical line through phi that Pi^q moves vertically
  auto vertical = [&](double phi) {
    const double fa = A(phi, Ia), fb = A(phi, Ib);
    if (!(fa < 0 && fb > 0))
      throw ConfigError("p/q is not between the strip-edge rotation numbers at phi = " + std::to_string(phi));
    return toms([&](double I) { return A(phi, I); }, Ia, Ib, fa, fb);
  };
  auto R = [&](double phi) {
    const double I = vertical(phi);
    return iterate_q(m, {phi, I}, q).I - I;
  };

  Vec phis(M), rs(M);
  double rmax = 0;
  for (int i = 0; i < M; ++i) {
    phis[i] = kTwoPi * i / M;
    rs[i] = R(phis[i]);
    rmax = std::max(rmax, std::abs(rs[i]));
  }
  PBResult res;
  if (rmax < 1e-12 * (1 + std::max(std::abs(Ia), std::abs(Ib)))) {
    res.degenerate = true;
    return res;
  }

  auto known = [&](Point x) {
    for (const auto& o : res.orbits)
      for (const auto& y : o.points) {
        const double d = std::abs(wrap_angle(x.phi - y.phi + kPi) - kPi);
        if (d < 1e-7 && std::abs(x.I - y.I) < 1e-7) return true;
      }
    return false;
  };

  for (int i = 0; i < M; ++i) {
    const int j = (i + 1) % M;
    const double a = phis[i], b = j == 0 ? kTwoPi : phis[j];
    double phi;
    if (rs[i] == 0.0)
      phi = a;
    else if (rs[i] * rs[j] < 0)
      phi = toms(R, a, b, rs[i], rs[j]);
    else
      continue;
    Point x{phi, vertical(phi)};
    // polish the fixed point of the lifted Pi^q - (2 pi p, 0)
    double res_norm = 1;
    for (int it = 0; it < 30; ++it) {
      const Point y = iterate_q(m, x, q);
      const Eigen::Vector2d G(y.phi - x.phi - target, y.I - x.I);
      res_norm = G.cwiseAbs().maxCoeff();
      if (res_norm < 1e-13) break;
      const Eigen::Vector2d d = (jacobian_q(m, x, q) - Eigen::Matrix2d::Identity()).partialPivLu().solve(-G);
      x.phi += d(0);
      x.I += d(1);
    }
    if (!(res_norm < 1e-10)) continue;
    x.phi = wrap_angle(x.phi);
    if (known(x)) continue;

    PeriodicOrbit o;
    o.p = p;
    o.q = q;
    o.residual = res_norm;
    Point y = x;
    for (int k = 0; k < q; ++k) {
      o.points.push_back({wrap_angle(y.phi), y.I});
      y = m(y);
    }
    o.trace = jacobian_q(m, x, q).trace();
    const double margin = std::abs(o.trace) - 2;
    o.stability = std::abs(margin) <= 1e-6 ? Stability::parabolic
                  : margin < 0           ? Stability::elliptic
                                         : Stability::hyperbolic;
    res.orbits.push_back(o);
  }
  if (res.orbits.size() < 2)
    throw ConvergenceError("found " + std::to_string(res.orbits.size()) + " periodic orbit(s) of type " +
                           std::to_string(p) + "/" + std::to_string(q) + ", expected at least two");
  return res;
}

}  // namespace perturblab::twistmap
