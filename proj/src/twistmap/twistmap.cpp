#include "perturblab/twistmap.hpp"

#include <cmath>
#include <random>

namespace perturblab::twistmap {

double wrap_angle(double phi) {
  double r = std::fmod(phi, kTwoPi);
  if (r < 0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

Eigen::Matrix2d TwistMap::jacobian_at(Point x) const {
  if (jacobian) return jacobian(x.phi, x.I, eps);
  const double h = 1e-6;
  Eigen::Matrix2d J;
  const Point a = advance(x.phi + h, x.I, eps), b = advance(x.phi - h, x.I, eps);
  const Point c = advance(x.phi, x.I + h, eps), d = advance(x.phi, x.I - h, eps);
  J << (a.phi - b.phi) / (2 * h), (c.phi - d.phi) / (2 * h), (a.I - b.I) / (2 * h), (c.I - d.I) / (2 * h);
  return J;
}

TwistMap standard_map(double eps) {
  TwistMap m;
  m.eps = eps;
  m.advance = [](double phi, double I, double e) {
    const double Ih = I + e * std::sin(phi);
    return Point{phi + Ih, Ih};
  };
  m.jacobian = [](double phi, double, double e) {
    const double c = e * std::cos(phi);
    Eigen::Matrix2d J;
    J << 1 + c, 1, c, 1;
    return J;
  };
  m.increment = [](double phi, double I, double e) { return I + e * std::sin(phi); };
  m.omega = [](double I) { return I; };
  m.omega_prime = [](double) { return 1.0; };
  m.twist_bound = 1.0;
  m.area_preserving = true;
  m.intersection_property = true;
  m.name = "standard";
  return m;
}

double jacobian_determinant(const TwistMap& m, Point x) {
  TwistMap fd = m;
  fd.jacobian = nullptr;
  return fd.jacobian_at(x).determinant();
}

double area_defect(const TwistMap& m, double I_lo, double I_hi, int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> P(0, kTwoPi), A(I_lo, I_hi);
  double worst = 0;
  for (int i = 0; i < n; ++i) {
    const Point x{P(rng), A(rng)};
    worst = std::max(worst, std::abs(jacobian_determinant(m, x) - 1));
  }
  return worst;
}

double min_twist(const TwistMap& m, double I_lo, double I_hi, int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> P(0, kTwoPi), A(I_lo, I_hi);
  double worst = std::numeric_limits<double>::infinity();
  TwistMap fd = m;
  fd.jacobian = nullptr;
  for (int i = 0; i < n; ++i) worst = std::min(worst, fd.jacobian_at({P(rng), A(rng)})(0, 1));
  return worst;
}

OrbitRecord iterate_orbit(const TwistMap& m, Point seed, int n, double escape_bound) {
  OrbitRecord r;
  r.seed = seed;
  r.lifted_angles.reserve(n + 1);
  r.actions.reserve(n + 1);
  Point x = seed;
  r.lifted_angles.push_back(x.phi);
  r.actions.push_back(x.I);
  for (int j = 0; j < n; ++j) {
    x = m(x);
    if (!std::isfinite(x.phi) || !std::isfinite(x.I) || std::abs(x.I) > escape_bound) {
      r.escaped = true;
      break;
    }
    r.lifted_angles.push_back(x.phi);
    r.actions.push_back(x.I);
  }
  return r;
}

RotationNumber rotation_number(const TwistMap& m, Point seed, int n) {
  if (n < 2) throw ConfigError("rotation_number needs n >= 2");
  const auto orb = iterate_orbit(m, seed, n);
  if (orb.escaped)
    throw NumericalError("orbit escaped after " + std::to_string(orb.lifted_angles.size() - 1) + " steps", 0.0,
                         {orb.lifted_angles.back(), orb.actions.back()});
  const auto& a = orb.lifted_angles;
  RotationNumber r;
  r.n = n;
  r.value = (a[n] - a[0]) / (kTwoPi * n);
  const int h = n / 2;
  const double half = (a[h] - a[0]) / (kTwoPi * h);
  const double tail = (a[n] - a[h]) / (kTwoPi * (n - h));
  r.alternative = tail;
  if (m.increment) {
    double s = 0;
    for (int j = 1; j <= n; ++j) s += m.increment(a[j], orb.actions[j], m.eps);
    r.alternative = s / (kTwoPi * n);
  }
  r.error = std::abs(r.value - half) + std::abs(r.value - r.alternative);
  return r;
}

std::string to_string(Stability s) {
  switch (s) {
    case Stability::elliptic: return "elliptic";
    case Stability::hyperbolic: return "hyperbolic";
    case Stability::parabolic: return "parabolic";
  }
  return "?";
}

Portrait phase_portrait(const TwistMap& m, const std::vector<Point>& seeds, int n_iter, double escape_bound) {
  std::vector<OrbitRecord> orbits(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) { orbits[i] = iterate_orbit(m, seeds[i], n_iter, escape_bound); });
  Portrait p;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    p.escaped.push_back(orbits[i].escaped);
    for (std::size_t j = 0; j < orbits[i].actions.size(); ++j)
      p.points.push_back({wrap_angle(orbits[i].lifted_angles[j]), orbits[i].actions[j], static_cast<int>(i)});
  }
  return p;
}

}  // namespace perturblab::twistmap
