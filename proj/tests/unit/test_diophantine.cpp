#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "perturblab/diophantine.hpp"

using namespace perturblab;
using namespace perturblab::diophantine;

TEST_CASE("continued fractions of classical numbers") {
  auto g = continued_fraction(golden_mean(), 30);
  REQUIRE(g.partial_quotients.size() == 31);
  CHECK(g.partial_quotients[0] == 0);
  for (std::size_t i = 1; i < g.partial_quotients.size(); ++i) CHECK(g.partial_quotients[i] == 1);
  auto s = continued_fraction(sqrt2(), 25);
  CHECK(s.partial_quotients[0] == 1);
  for (std::size_t i = 1; i < s.partial_quotients.size(); ++i) CHECK(s.partial_quotients[i] == 2);
  auto r = continued_fraction(7.0 / 3.0, 10);
  CHECK(r.terminated);
  CHECK(r.partial_quotients == std::vector<long long>{2, 3});
  auto e = continued_fraction_rational(7, 3);
  CHECK(e.partial_quotients == std::vector<long long>{2, 3});
  CHECK(e.convergents.back().p == 7);
  CHECK(e.convergents.back().q == 3);
  CHECK(continued_fraction_rational(-7, 3).partial_quotients == std::vector<long long>{-3, 1, 2});
}

TEST_CASE("precision exhaustion is reported") {
  // double golden mean carries ~1e-16 error: expansion stops well before 200 terms
  auto g = continued_fraction((std::sqrt(5.0) - 1) / 2, 200);
  CHECK(g.precision_exhausted);
  CHECK(g.last_trustworthy_index > 10);
  CHECK(g.last_trustworthy_index < 60);
  for (int i = 1; i <= g.last_trustworthy_index; ++i) CHECK(g.partial_quotients[i] == 1);
  auto q = continued_fraction(golden_mean(), 400);
  CHECK(q.precision_exhausted);
  CHECK(q.last_trustworthy_index > 60);
}

TEST_CASE("convergent properties") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(0, 1);
  for (Quad w : {golden_mean(), sqrt2(), Quad(boost::math::constants::pi<Quad>()), sqrt(Quad(3)) - 1}) {
    auto cf = continued_fraction(w, 30);
    const auto& c = cf.convergents;
    long long f1 = 1, f2 = 1;
    for (std::size_t i = 0; i + 1 < c.size(); ++i) {
      const Quad err = abs(w - Quad(c[i].p) / Quad(c[i].q));
      CHECK(err < Quad(1) / (Quad(c[i].q) * Quad(c[i + 1].q)));
      CHECK(std::gcd(c[i].p, c[i].q) == 1);
      // alternation around the value
      if (i + 1 < c.size()) CHECK((Quad(c[i].p) / c[i].q - w) * (Quad(c[i + 1].p) / c[i + 1].q - w) < 0);
      // Fibonacci growth
      if (i >= 1) {
        CHECK(c[i].q >= f1);
        const long long f = f1 + f2;
        f2 = f1;
        f1 = f;
      }
    }
  }
}

TEST_CASE("certification of quadratic irrationals") {
  auto s = certify_type(sqrt2(), 0.29, 1.0, 10000);
  CHECK(s.passed);
  // independent bound 1/((sqrt2+2) q^2) holds everywhere
  CHECK(s.worst_margin >= 1 / (std::sqrt(2.0) + 2));
  auto sx = certify_type(sqrt2(), 0.29, 1.0, 10000, ScanMode::exhaustive);
  CHECK(sx.passed);
  CHECK(sx.worst_margin == doctest::Approx(s.worst_margin).epsilon(1e-12));
  CHECK(sx.worst_q == s.worst_q);

  auto g = certify_type(golden_mean(), 0.38, 1.0, 10000);
  CHECK(g.passed);
  auto gx = certify_type(golden_mean(), 0.38, 1.0, 10000, ScanMode::exhaustive);
  CHECK(gx.passed);
  CHECK(gx.worst_margin == doctest::Approx(g.worst_margin).epsilon(1e-12));
  CHECK(g.worst_q == 1);
  CHECK(g.worst_margin == doctest::Approx(0.381966).epsilon(1e-5));
  // slightly above the worst ratio fails
  CHECK_FALSE(certify_type(golden_mean(), 0.39, 1.0, 10000).passed);
}

TEST_CASE("rational input fails with zero margin") {
  auto c = certify_type(Quad(1) / 3, 0.01, 1.0, 100);
  CHECK_FALSE(c.passed);
  CHECK(c.worst_margin == 0.0);
  CHECK(c.worst_p == 1);
  CHECK(c.worst_q == 3);
  CHECK_THROWS(certify_type(sqrt2(), 0.1, 1.0, 0));
}

TEST_CASE("certification is monotone in (C, nu)") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(0.05, 0.35), N(1.0, 2.0);
  for (int t = 0; t < 20; ++t) {
    const double C = U(rng), nu = N(rng);
    auto base = certify_type(sqrt2(), C, nu, 2000);
    if (!base.passed) continue;
    CHECK(certify_type(sqrt2(), C * 0.9, nu, 2000).passed);
    CHECK(certify_type(sqrt2(), C, nu + 0.3, 2000).passed);
  }
}

TEST_CASE("convergent scan agrees with the exhaustive scan") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> U(0, 1);
  for (int t = 0; t < 10; ++t) {
    Quad w = Quad(U(rng)) + sqrt(Quad(7)) * Quad(1e-9);
    auto a = certify_type(w, 0.01, 1.0, 3000);
    auto b = certify_type(w, 0.01, 1.0, 3000, ScanMode::exhaustive);
    CHECK(a.worst_margin == doctest::Approx(b.worst_margin).epsilon(1e-9));
    CHECK(a.passed == b.passed);
  }
}

TEST_CASE("Liouville constants") {
  auto r = liouville_constant({-2, 0, 1}, 1.0, 2.0);
  CHECK(r.nu == 1.0);
  CHECK(r.k == 0);
  CHECK(static_cast<double>(r.root) == doctest::Approx(std::sqrt(2.0)));
  // delta solves delta = 1/(2 (sqrt2 + delta))
  CHECK(r.delta == doctest::Approx((-2 * std::sqrt(2.0) + 4) / 4).epsilon(1e-9));
  CHECK(r.C == doctest::Approx(r.delta).epsilon(1e-9));
  CHECK(certify_type(r.root, r.C, r.nu, 10000, ScanMode::exhaustive).passed);

  auto c = liouville_constant({-2, 0, 0, 1}, 1.0, 2.0, 0);
  CHECK(c.nu == 2.0);
  CHECK(certify_type(c.root, c.C, c.nu, 10000).passed);

  auto g = liouville_constant({-1, 1, 1}, 0.0, 1.0);  // x^2 + x - 1, golden mean
  CHECK(certify_type(g.root, g.C, g.nu, 10000, ScanMode::exhaustive).passed);
  CHECK(static_cast<double>(g.root) == doctest::Approx(static_cast<double>(golden_mean())));

  CHECK_THROWS(liouville_constant({-2, 0, 1}, -2.0, 2.0));   // both roots inside
  CHECK_THROWS(liouville_constant({-2, 0, 1}, 2.0, 3.0));    // none
  CHECK_THROWS(liouville_constant({-4, 0, 1}, 1.0, 3.0));    // root 2 is rational
  CHECK_THROWS(liouville_constant({1, 1}, -2.0, 0.0));       // degree 1
}

TEST_CASE("small denominators") {
  auto g = make_frequency(golden_mean(), 0.38, 1.0, 10000);
  REQUIRE(g.C);
  auto s1 = small_denominator_bound(g, 1);
  CHECK(s1.bound == doctest::Approx(1.52));
  CHECK(s1.actual == doctest::Approx(2 * std::sin(kPi * 0.6180339887498949)).epsilon(1e-12));
  CHECK(s1.actual >= s1.bound);
  CHECK(small_denominator_bound(g, 2).bound == doctest::Approx(4 * 0.38 / 2));
  for (long long q = -1000; q <= 1000; ++q) {
    if (q == 0) continue;
    auto s = small_denominator_bound(g, q);
    CHECK(s.actual >= s.bound);
  }
  auto s2 = make_frequency(sqrt2(), 0.29, 1.0, 10000);
  for (long long q = 1; q <= 1000; ++q) CHECK_NOTHROW(small_denominator_bound(s2, q));
  auto bad = make_frequency(golden_mean(), 0.5, 1.0, 10000);
  CHECK_FALSE(bad.C);
  CHECK_THROWS(small_denominator_bound(bad, 1));
  CHECK_THROWS(small_denominator_bound(g, 0));
}

TEST_CASE("identity |e^{2 pi i q w} - 1| = 2|sin(pi q w)|") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<long long> Q(-100000, 100000);
  for (int t = 0; t < 100; ++t) {
    const long long q = Q(rng);
    const Quad x = Quad(q) * sqrt2();
    const double frac = static_cast<double>(x - floor(x));
    const double lhs = std::abs(std::polar(1.0, kTwoPi * frac) - 1.0);
    CHECK(std::abs(lhs - small_denominator(sqrt2(), q)) < 1e-12);
  }
}

TEST_CASE("excluded measure") {
  CHECK(excluded_measure_bound(0.1, 2.0) == doctest::Approx(0.1 * kPi * kPi / 6));
  CHECK(std::isinf(excluded_measure_bound(0.1, 1.0)));
}

TEST_CASE("json records") {
  auto c = certify_type(sqrt2(), 0.29, 1.0, 100);
  auto j = to_json(c);
  CHECK(j["passed"] == true);
  CHECK(j["worst_q"] == c.worst_q);
  CHECK(to_json(continued_fraction_rational(7, 3))["partial_quotients"].size() == 2);
}
