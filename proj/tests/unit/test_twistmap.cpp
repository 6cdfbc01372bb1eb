#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>

#include "perturblab/twistmap.hpp"

using namespace perturblab;
using namespace perturblab::twistmap;
using namespace perturblab::diophantine;

namespace {

const DiophantineFrequency& golden() {
  static const auto g = make_frequency(golden_mean(), 0.38, 1.0, 10000);
  return g;
}

double angle_dist(double a, double b) { return std::abs(wrap_angle(a - b + kPi) - kPi); }

}  // namespace

TEST_CASE("standard map: closed-form cases") {
  auto m0 = standard_map(0.0);
  for (double phi : {0.0, 1.0, 5.0})
    for (double I : {-1.0, 0.5, 3.0}) {
      const Point y = m0({phi, I});
      CHECK(y.phi == phi + I);
      CHECK(y.I == I);
    }
  auto m = standard_map(0.7);
  for (int p = -2; p <= 2; ++p)
    for (double phi : {0.0, kPi}) {
      const Point y = m({phi, kTwoPi * p});
      CHECK(angle_dist(y.phi, phi) < 1e-12);
      CHECK(std::abs(y.I - kTwoPi * p) < 1e-12);
    }
  CHECK(area_defect(m, -5, 5, 200) < 1e-8);
  CHECK(min_twist(m, -5, 5, 200) >= *m.twist_bound - 1e-6);
  CHECK(m.area_preserving);
}

TEST_CASE("analytic Jacobian agrees with finite differences") {
  auto m = standard_map(0.9);
  TwistMap fd = m;
  fd.jacobian = nullptr;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(-4, 4);
  for (int i = 0; i < 20; ++i) {
    const Point x{U(rng), U(rng)};
    CHECK((m.jacobian_at(x) - fd.jacobian_at(x)).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("orbit records keep lifted angles") {
  auto m = standard_map(0.4);
  auto orb = iterate_orbit(m, {1.0, 2.0}, 500);
  REQUIRE(orb.lifted_angles.size() == 501);
  for (std::size_t j = 0; j + 1 < orb.lifted_angles.size(); ++j) {
    const Point y = m({orb.lifted_angles[j], orb.actions[j]});
    CHECK(orb.lifted_angles[j + 1] == y.phi);
    CHECK(orb.actions[j + 1] == y.I);
  }
  CHECK(orb.lifted_angles.back() > 50.0);  // no re-wrapping

  TwistMap blow;
  blow.advance = [](double phi, double I, double) { return Point{phi + I, 2 * I}; };
  auto e = iterate_orbit(blow, {0, 1}, 100, 1e3);
  CHECK(e.escaped);
  CHECK_THROWS_AS(rotation_number(blow, {0, 1}, 100), NumericalError);
}

TEST_CASE("rotation numbers") {
  auto r = rotation_number(standard_map(0.0), {0.3, 1.0}, 1000);
  CHECK(std::abs(r.value - 1 / kTwoPi) < 1e-10);
  CHECK(r.error < 1e-10);
  auto h = rotation_number(standard_map(0.5), {0.0, 0.0}, 1000);
  CHECK(h.value == 0.0);

  // lift consistency on a regular orbit
  auto m = standard_map(0.3);
  auto a = rotation_number(m, {0.4, 3.5}, 2000);
  auto b = rotation_number(m, {0.4 + kTwoPi, 3.5}, 2000);
  CHECK(std::abs(a.value - b.value) < 1e-9);
  CHECK(a.error < 1e-2);
}

TEST_CASE("invariant circle of the integrable map") {
  auto c = invariant_circle(standard_map(0.0), golden(), 16, 1e-12);
  CHECK(c.sup_u() < 1e-14);
  CHECK(c.sup_v() < 1e-14);
  CHECK(c.action == kTwoPi * golden().to_double());
  CHECK(c.residual < 1e-12);
}

TEST_CASE("first iterate is the difference-equation approximation") {
  const double eps = 0.1, alpha = kTwoPi * golden().to_double();
  auto c = invariant_circle(standard_map(eps), golden(), 32, 1e-10);
  REQUIRE(c.u0_coeffs.size() == 65);
  // f = g = eps sin(psi): only the first harmonic, divided by e^{i alpha} - 1
  const cplx d = std::polar(1.0, alpha) - 1.0;
  const cplx g1 = eps / cplx(0, 2);
  const cplx v1 = g1 / d, u1 = (g1 + v1) / d;
  CHECK(std::abs(c.v0_coeffs[33] - v1) < 1e-14);
  CHECK(std::abs(c.u0_coeffs[33] - u1) < 1e-14);
  CHECK(std::abs(c.v0_coeffs[31] - std::conj(v1)) < 1e-14);
  for (int k = 2; k <= 32; ++k) {
    CHECK(std::abs(c.u0_coeffs[32 + k]) < 1e-14);
    CHECK(std::abs(c.v0_coeffs[32 + k]) < 1e-14);
  }
}

TEST_CASE("invariant circles at small and moderate eps") {
  auto c1 = invariant_circle(standard_map(0.1), golden(), 64, 1e-10);
  auto c2 = invariant_circle(standard_map(0.05), golden(), 64, 1e-10);
  CHECK(c1.residual < 1e-10);
  CHECK(c1.tail_mass < 1e-11);
  const double n1 = c1.sup_u() + c1.sup_v(), n2 = c2.sup_u() + c2.sup_v();
  CHECK(n1 < 1.0 * 0.1);
  CHECK(n1 / n2 == doctest::Approx(2.0).epsilon(0.1));
  // real-valued, zero-mean corrections
  for (int k = 0; k <= c1.K; ++k) {
    CHECK(std::abs(c1.u_coeffs[c1.K + k] - std::conj(c1.u_coeffs[c1.K - k])) < 1e-13);
    CHECK(std::abs(c1.v_coeffs[c1.K + k] - std::conj(c1.v_coeffs[c1.K - k])) < 1e-13);
  }
  CHECK(std::abs(c1.u_coeffs[c1.K]) < 1e-14);
  CHECK(std::abs(c1.v_coeffs[c1.K]) < 1e-14);

  auto m = standard_map(0.5);
  auto c = invariant_circle(m, golden(), 64, 1e-10);
  CHECK(c.residual < 1e-10);
  CHECK(c.conjugacy_defect(m, 512) <= c.residual);
  auto r = rotation_number(m, c.at(0.0), 100000);
  CHECK(std::abs(r.value - golden().to_double()) < 1e-6);
  CHECK(std::abs(r.value - golden().to_double()) <= 10 * r.error + 1e-9);
}

TEST_CASE("invariant circle fails past breakup") {
  try {
    invariant_circle(standard_map(1.2), golden(), 64, 1e-10);
    FAIL("expected divergence");
  } catch (const CircleDivergence& e) {
    CHECK(!e.defect_history.empty());
  }
  auto raw = golden();
  raw.C.reset();
  CHECK_THROWS_AS(invariant_circle(standard_map(0.1), raw, 16, 1e-10), ConfigError);
  // passes the check for q <= 2 but sits 1e-7 away from 1/3
  auto near = make_frequency(Quad(1) / 3 + Quad(1e-7), 0.05, 1.0, 2);
  REQUIRE(near.C);
  try {
    invariant_circle(standard_map(0.1), near, 16, 1e-10);
    FAIL("expected guard");
  } catch (const DenominatorGuardError& e) {
    CHECK(e.harmonic == 3);
  }
}

TEST_CASE("Birkhoff sums of v stay bounded") {
  auto c = invariant_circle(standard_map(0.5), golden(), 64, 1e-10);
  const double alpha = kTwoPi * golden().to_double();
  // geometric-sum bound, harmonic by harmonic
  double bound = 0;
  for (int k = 1; k <= c.K; ++k) bound += 2 * 2 * std::abs(c.v_coeffs[c.K + k]) / std::abs(std::polar(1.0, k * alpha) - 1.0);
  double s = 0, worst = 0;
  for (int j = 1; j <= 20000; ++j) {
    s += c.v(0.7 + j * alpha);
    worst = std::max(worst, std::abs(s));
  }
  CHECK(worst <= bound + 1e-9);
  CHECK(worst > 0);
}

TEST_CASE("breakup scan") {
  BreakupOptions o;
  o.K = 256;
  auto fam = [](double e) { return standard_map(e); };
  auto b = breakup_scan(fam, golden(), 0.5, 1.2, 0.01, o);
  CHECK(b.hi - b.lo <= 0.01 + 1e-12);
  CHECK(b.lo >= 0.85);
  CHECK(b.hi <= 1.05);
  // 1/(3 + golden) is a noble number with a weaker circle
  auto n3 = make_frequency(Quad(1) / (3 + golden_mean()), 0.1, 1.0, 10000);
  auto b3 = breakup_scan(fam, n3, 0.5, 1.2, 0.01, o);
  CHECK(b3.hi < b.lo);
  // 1/(2 + golden) = 1 - golden is conjugate to golden by (phi, I) -> (-phi, 2 pi - I)
  auto n2 = make_frequency(Quad(1) / (2 + golden_mean()), 0.1, 1.0, 10000);
  auto b2 = breakup_scan(fam, n2, 0.5, 1.2, 0.01, o);
  CHECK(std::abs(b2.lo - b.lo) <= 0.02);
  CHECK_THROWS_WITH_AS(breakup_scan(fam, golden(), 0.1, 0.2, 0.01, o), doctest::Contains("no transition"), Error);
}

TEST_CASE("Poincare-Birkhoff orbits of type 0/1") {
  const double eps = 0.1;
  auto res = pb_periodic_orbits(standard_map(eps), 0, 1, {-1.0, 1.0});
  REQUIRE(res.orbits.size() == 2);
  int seen = 0;
  for (const auto& o : res.orbits) {
    REQUIRE(o.points.size() == 1);
    CHECK(std::abs(o.points[0].I) < 1e-12);
    if (angle_dist(o.points[0].phi, kPi) < 1e-10) {
      CHECK(o.stability == Stability::elliptic);
      CHECK(o.trace == doctest::Approx(2 - eps).epsilon(1e-10));
      seen |= 1;
    } else {
      CHECK(angle_dist(o.points[0].phi, 0) < 1e-10);
      CHECK(o.stability == Stability::hyperbolic);
      CHECK(o.trace == doctest::Approx(2 + eps).epsilon(1e-10));
      seen |= 2;
    }
  }
  CHECK(seen == 3);
}

TEST_CASE("Poincare-Birkhoff orbits of type 1/2 at eps = 0.8") {
  auto m = standard_map(0.8);
  auto res = pb_periodic_orbits(m, 1, 2, {kPi - 0.9, kPi + 0.9});
  REQUIRE(res.orbits.size() >= 2);
  bool ell = false, hyp = false;
  for (const auto& o : res.orbits) {
    REQUIRE(o.points.size() == 2);
    Point x = o.points[0];
    const Point y = m(m(x));
    CHECK(std::abs(y.phi - x.phi - kTwoPi) < 1e-10);
    CHECK(std::abs(y.I - x.I) < 1e-10);
    ell |= o.stability == Stability::elliptic;
    hyp |= o.stability == Stability::hyperbolic;
  }
  CHECK(ell);
  CHECK(hyp);
}

TEST_CASE("Poincare-Birkhoff counts for small eps") {
  // chains of order q have |trace| - 2 = O(eps^q); keep it above the parabolic margin
  const double eps = 0.2;
  auto m = standard_map(eps);
  for (auto [p, q] : {std::pair{1, 3}, std::pair{1, 4}, std::pair{2, 5}, std::pair{1, 2}}) {
    CAPTURE(p);
    CAPTURE(q);
    const double I0 = kTwoPi * p / q;
    auto res = pb_periodic_orbits(m, p, q, {I0 - 0.3, I0 + 0.3});
    int ne = 0, nh = 0;
    for (const auto& o : res.orbits) {
      ne += o.stability == Stability::elliptic;
      nh += o.stability == Stability::hyperbolic;
      CHECK(o.points.size() == static_cast<std::size_t>(q));
    }
    CHECK(ne == 1);
    CHECK(nh == 1);
  }
}

TEST_CASE("Poincare-Birkhoff degenerate and invalid cases") {
  auto res = pb_periodic_orbits(standard_map(0.0), 1, 3, {1.5, 2.5});
  CHECK(res.degenerate);
  CHECK(res.orbits.empty());
  CHECK_THROWS_AS(pb_periodic_orbits(standard_map(0.1), 2, 4, {2.8, 3.4}), ConfigError);
  CHECK_THROWS_AS(pb_periodic_orbits(standard_map(0.1), 1, 2, {0.5, 1.0}), ConfigError);
}

TEST_CASE("phase portraits") {
  std::vector<Point> seeds;
  for (int i = 0; i < 6; ++i) seeds.push_back({0.1 * i, 0.5 + i});
  auto flat = phase_portrait(standard_map(0.0), seeds, 200);
  for (const auto& pt : flat.points) CHECK(pt.I == seeds[pt.seed_index].I);

  // island around the elliptic point (pi, 0)
  auto isl = phase_portrait(standard_map(0.8), {{kPi + 0.5, 0.0}}, 2000);
  CHECK_FALSE(isl.escaped[0]);
  for (const auto& pt : isl.points) {
    CHECK(std::abs(pt.phi - kPi) < 1.5);
    CHECK(std::abs(pt.I) < 1.5);
  }

  // deterministic regardless of worker count
  setenv("PERTURBLAB_THREADS", "1", 1);
  auto one = phase_portrait(standard_map(0.6), seeds, 300);
  setenv("PERTURBLAB_THREADS", "4", 1);
  auto four = phase_portrait(standard_map(0.6), seeds, 300);
  unsetenv("PERTURBLAB_THREADS");
  REQUIRE(one.points.size() == four.points.size());
  for (std::size_t i = 0; i < one.points.size(); ++i) {
    CHECK(one.points[i].phi == four.points[i].phi);
    CHECK(one.points[i].I == four.points[i].I);
  }
}

TEST_CASE("orbits seeded on a circle stay on it") {
  auto m = standard_map(0.5);
  auto c = invariant_circle(m, golden(), 64, 1e-10);
  std::vector<Point> seeds{c.at(0.0), c.at(2.0), c.at(4.0)};
  auto cloud = phase_portrait(m, seeds, 2000);
  double worst = 0;
  for (const auto& pt : cloud.points) {
    // invert phi = psi + u(psi)
    double psi = pt.phi;
    for (int it = 0; it < 50; ++it) {
      const double h = 1e-6;
      const double F = angle_dist(psi + c.u(psi), pt.phi) * ((wrap_angle(psi + c.u(psi) - pt.phi + kPi) - kPi) < 0 ? -1 : 1);
      const double dF = 1 + (c.u(psi + h) - c.u(psi - h)) / (2 * h);
      psi -= F / dF;
      if (std::abs(F) < 1e-14) break;
    }
    worst = std::max(worst, std::abs(pt.I - c.at(psi).I));
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("circle json") {
  auto c = invariant_circle(standard_map(0.2), golden(), 16, 1e-10);
  auto j = to_json(c);
  CHECK(j["K"] == c.K);
  CHECK(j["u_coeffs"].size() == 2 * c.K + 1);
  CHECK(j["residual"].get<double>() < 1e-10);
}
