#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <random>

#include "perturblab/bifurcation.hpp"
#include "perturblab/odeflow.hpp"
#include "perturblab/series/birkhoff.hpp"

using namespace perturblab;
using namespace perturblab::bifurcation;
using series::BiPoly;

namespace {

Mat mat2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

// random S with condition number below 1e3
Mat random_similarity(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  for (;;) {
    Mat S = mat2(u(rng), u(rng), u(rng), u(rng));
    Eigen::JacobiSVD<Mat> svd(S);
    const auto sv = svd.singularValues();
    if (sv(1) > 0 && sv(0) / sv(1) < 1e3) return S;
  }
}

int count_roots_scan(const std::function<double(double)>& f, double a, double b, int n = 200000) {
  int c = 0;
  double prev = f(a);
  for (int i = 1; i <= n; ++i) {
    const double x = a + (b - a) * i / n;
    const double v = f(x);
    if ((prev < 0) != (v < 0)) ++c;
    prev = v;
  }
  return c;
}

}  // namespace

TEST_CASE("linear classification of planar equilibria") {
  auto c = classify_equilibrium(mat2(-1, 0, 0, -2));
  CHECK(c.label == EquilibriumLabel::node);
  CHECK(c.stability == -1);
  CHECK(c.hyperbolic);
  CHECK(c.eigenvalues[0].real() == doctest::Approx(-2));
  CHECK(c.eigenvalues[1].real() == doctest::Approx(-1));

  c = classify_equilibrium(mat2(0, -1, 1, 0));
  CHECK(c.label == EquilibriumLabel::center);
  CHECK(c.elliptic);
  CHECK_FALSE(c.hyperbolic);
  CHECK(std::abs(c.eigenvalues[0].imag()) == doctest::Approx(1));

  c = classify_equilibrium(mat2(1, 1, 0, 1));
  CHECK(c.label == EquilibriumLabel::improper_node);
  CHECK(c.stability == 1);
  CHECK(c.independent_eigenvectors == 1);

  c = classify_equilibrium(mat2(-3, 0, 0, -3));
  CHECK(c.label == EquilibriumLabel::degenerate_node);
  CHECK(c.independent_eigenvectors == 2);
  CHECK(c.stability == -1);

  CHECK(classify_equilibrium(mat2(1, 0, 0, -2)).label == EquilibriumLabel::saddle);
  c = classify_equilibrium(mat2(0.1, -1, 1, 0.1));
  CHECK(c.label == EquilibriumLabel::focus);
  CHECK(c.stability == 1);
  c = classify_equilibrium(mat2(0, 0, 0, -1));
  CHECK(c.label == EquilibriumLabel::saddle_node_candidate);
  CHECK_FALSE(c.hyperbolic);
  CHECK(classify_equilibrium(mat2(0, 1, 0, 0)).label == EquilibriumLabel::elliptic);
  CHECK(classify_equilibrium(mat2(0, 1, 0, 0)).independent_eigenvectors == 1);
  CHECK(classify_equilibrium(mat2(0, 0, 0, 0)).label == EquilibriumLabel::elliptic);
  CHECK_THROWS_AS(classify_equilibrium(Mat::Identity(3, 3)), ConfigError);
}

TEST_CASE("classification is invariant under similarity") {
  std::mt19937 rng(7);
  const std::vector<Mat> cases{mat2(-1, 0, 0, -2), mat2(0, -1, 1, 0), mat2(1, 1, 0, 1),  mat2(-3, 0, 0, -3),
                               mat2(2, 0, 0, -1),  mat2(-0.2, -3, 3, -0.2), mat2(0, 0, 0, 0.5), mat2(0, 1, 0, 0),
                               mat2(0.5, 0, 0, 4)};
  for (const Mat& J : cases) {
    const auto ref = classify_equilibrium(J);
    for (int t = 0; t < 200; ++t) {
      const Mat S = random_similarity(rng);
      const auto c = classify_equilibrium(S.inverse() * J * S);
      CHECK(c.label == ref.label);
      CHECK(c.stability == ref.stability);
      CHECK(c.hyperbolic == ref.hyperbolic);
    }
  }
}

TEST_CASE("cusp family: equilibrium counts") {
  auto s = cusp_region(3, 2);
  CHECK(s.critical);
  CHECK(s.count == 2);
  CHECK(s.equilibria[0].x == doctest::Approx(-1));
  CHECK(s.equilibria[0].multiplicity == 2);
  CHECK(s.equilibria[1].x == doctest::Approx(2));
  CHECK(s.equilibria[1].stability == -1);

  s = cusp_region(1, 0);
  REQUIRE(s.count == 3);
  CHECK(s.equilibria[0].x == doctest::Approx(-1));
  CHECK(std::abs(s.equilibria[1].x) < 1e-14);
  CHECK(s.equilibria[2].x == doctest::Approx(1));
  CHECK(s.equilibria[0].stability == -1);
  CHECK(s.equilibria[1].stability == 1);
  CHECK(s.equilibria[2].stability == -1);

  s = cusp_region(-1, 0);
  REQUIRE(s.count == 1);
  CHECK(std::abs(s.equilibria[0].x) < 1e-14);
  CHECK(s.equilibria[0].stability == -1);

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int t = 0; t < 200; ++t) {
    const double l1 = u(rng), l2 = u(rng);
    const auto r = cusp_region(l1, l2);
    if (r.critical) continue;
    CHECK(r.count == (27 * l2 * l2 < 4 * l1 * l1 * l1 ? 3 : 1));
    CHECK(r.count == count_roots_scan([&](double x) { return -x * x * x + l1 * x + l2; }, -4, 4, 40000));
    for (const auto& e : r.equilibria) CHECK(std::abs(-e.x * e.x * e.x + l1 * e.x + l2) < 1e-12);
  }
}

TEST_CASE("center manifold of the cubic example") {
  // x1' = x1 x2, x2' = -x2 + x1^2
  auto sys = make_center_system(
      -1.0, [](const Jet& a, const Jet& b) { return a * b; }, [](const Jet& a, const Jet&) { return a * a; });
  const int N = 8;
  const auto cm = center_manifold_coeffs(sys, N);
  // oracle: h = x^2 - x h h' by fixed-point substitution on coefficient arrays
  Vec h(N + 1, 0.0);
  for (int it = 0; it < N; ++it) {
    Vec xhh(N + 1, 0.0);
    for (int i = 0; i <= N; ++i)
      for (int j = 1; i + j <= N + 1; ++j)
        if (i + j <= N) xhh[i + j] += h[i] * j * h[j];
    Vec nh(N + 1, 0.0);
    nh[2] = 1;
    for (int k = 0; k <= N; ++k) nh[k] -= xhh[k];
    h = nh;
  }
  for (int k = 0; k <= N; ++k) CHECK(cm.h[k] == doctest::Approx(h[k]).epsilon(1e-13));
  CHECK(cm.h[2] == doctest::Approx(1));
  CHECK(cm.h[4] == doctest::Approx(-2));
  CHECK(cm.reduced[3] == doctest::Approx(1));
  CHECK(cm.reduced[5] == doctest::Approx(-2));
  CHECK(cm.c == 0.0);
  CHECK_FALSE(cm.elementary_saddle_node);
  for (double r : cm.residual) CHECK(std::abs(r) < 1e-13);

  // exact in rational mode
  RationalPoly g1{{{1, 1}, Rational(1)}}, g2{{{2, 0}, Rational(1)}};
  const auto rc = center_manifold_coeffs(Rational(-1), g1, g2, 10);
  CHECK(rc.h[2] == 1);
  CHECK(rc.h[4] == -2);
  CHECK(rc.reduced[3] == 1);
  CHECK(rc.reduced[5] == -2);
  for (const auto& r : rc.residual) CHECK(r == 0);
  for (int k = 0; k <= 8; ++k) CHECK(cm.h[k] == doctest::Approx(static_cast<double>(rc.h[k])).epsilon(1e-13));
}

TEST_CASE("center manifold: invariant axis, saddle-node flag, errors") {
  auto flat = make_center_system(
      2.0, [](const Jet& a, const Jet& b) { return a * a + a * b; }, [](const Jet& a, const Jet&) { return a * 0.0; });
  const auto cm = center_manifold_coeffs(flat, 7);
  for (double v : cm.h) CHECK(v == 0.0);
  CHECK(cm.c == doctest::Approx(1));
  CHECK(cm.elementary_saddle_node);

  // transcendental terms: residual vanishes through the order
  auto tr = make_center_system(
      -0.5, [](const Jet& a, const Jet& b) { return sin(a) * b + a * a; },
      [](const Jet& a, const Jet& b) { return exp(a) * b * b + a * a * cos(b) - a * a; });
  const auto ct = center_manifold_coeffs(tr, 10);
  for (double r : ct.residual) CHECK(std::abs(r) < 1e-10);
  CHECK(ct.c == doctest::Approx(1));

  auto g = make_center_system(
      0.0, [](const Jet& a, const Jet&) { return a * a; }, [](const Jet& a, const Jet&) { return a * a; });
  CHECK_THROWS_AS(center_manifold_coeffs(g, 4), ConfigError);
  auto lim = make_center_system(
      -1.0, [](const Jet& a, const Jet&) { return a * a; }, [](const Jet& a, const Jet&) { return a * a; }, 3);
  CHECK_THROWS_AS(center_manifold_coeffs(lim, 5), ConfigError);
  auto lin = make_center_system(
      -1.0, [](const Jet& a, const Jet&) { return a * 1.0; }, [](const Jet& a, const Jet&) { return a * a; });
  CHECK_THROWS_AS(center_manifold_coeffs(lin, 4), ConfigError);
}

TEST_CASE("saddle-node function H on the textbook families") {
  auto r = saddle_node_H([](double x, double l) { return l + x * x; }, {-0.1, 0.1});
  for (std::size_t i = 0; i < r.lambda.size(); ++i) CHECK(r.H[i] == doctest::Approx(r.lambda[i]).epsilon(1e-8));
  CHECK(r.kind == NodeBifurcationKind::saddle_node);
  CHECK(r.c == doctest::Approx(1));

  r = saddle_node_H([](double x, double l) { return l * l - x * x; }, {-0.1, 0.1});
  for (std::size_t i = 0; i < r.lambda.size(); ++i)
    CHECK(r.H[i] == doctest::Approx(-r.lambda[i] * r.lambda[i]).epsilon(1e-8));
  CHECK(r.kind == NodeBifurcationKind::transcritical);

  r = saddle_node_H([](double x, double l) { return l * x - x * x; }, {-0.1, 0.1});
  for (std::size_t i = 0; i < r.lambda.size(); ++i) {
    CHECK(r.H[i] == doctest::Approx(-r.lambda[i] * r.lambda[i] / 4).epsilon(1e-7).scale(1e-12));
    CHECK(r.phi[i] == doctest::Approx(r.lambda[i] / 2).epsilon(1e-9).scale(1e-12));
  }
  CHECK(r.kind == NodeBifurcationKind::transcritical);

  // pitchfork through the derivative family
  r = saddle_node_H([](double x, double l) { return l - 3 * x * x; }, {-0.1, 0.1});
  CHECK(r.kind == NodeBifurcationKind::saddle_node);

  CHECK_THROWS_AS(saddle_node_H([](double x, double l) { return l + x * x * x; }, {-0.1, 0.1}), NumericalError);
  CHECK_THROWS_AS(saddle_node_H([](double x, double l) { return l + x; }, {-0.1, 0.1}), ConfigError);
}

TEST_CASE("sign of H predicts the number of equilibria") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 50; ++t) {
    const double a = u(rng) > 0 ? 1 + u(rng) * 0.5 : -1 - u(rng) * 0.5;
    const double b = u(rng), c = (u(rng) > 0 ? 1 : -1) * (1 + 0.5 * std::abs(u(rng))), d = 0.4 * u(rng);
    auto F = [=](double x, double l) { return a * l + b * l * x + c * x * x + d * x * x * x; };
    double l = 0.002 + 0.008 * std::abs(u(rng));
    if (u(rng) < 0) l = -l;
    const auto r = saddle_node_H(F, {-std::abs(l), std::abs(l)}, 3);
    const std::size_t i = l > 0 ? r.lambda.size() - 1 : 0;
    const int roots = count_roots_scan([&](double x) { return F(x, r.lambda[i]); }, -0.5, 0.5);
    CHECK(r.equilibria[i] == roots);
  }
}

TEST_CASE("Hopf coefficient: pure resonant term and closed-form check") {
  BiPoly G(3);
  G.at(2, 1) = cplx(-0.4, 0.7);
  auto h = hopf_coefficient(G, 1.3);
  CHECK(std::abs(h.c21 - cplx(-0.4, 0.7)) < 1e-15);
  CHECK(h.supercritical);

  // first Lyapunov value in the z, conj z convention: Re G21 - Im(G20 G11) / w
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 20; ++t) {
    BiPoly R(3);
    for (int j = 0; j <= 3; ++j)
      for (int k = 0; j + k <= 3; ++k)
        if (j + k >= 2) R.at(j, k) = cplx(u(rng), u(rng));
    const double w = 0.5 + std::abs(u(rng));
    const auto hr = hopf_coefficient(R, w);
    const cplx g20 = R(2, 0), g11 = R(1, 1), g02 = R(0, 2);
    const cplx expect = R(2, 1) + cplx(0, 1) / w * (g20 * g11 - std::norm(g11) - 2.0 / 3.0 * std::norm(g02));
    CHECK(std::abs(hr.c21 - expect) < 1e-12);
    for (int j = 0; j <= 2; ++j) CHECK(std::abs(hr.normal_form(j, 2 - j)) < 1e-13);
  }
  CHECK_THROWS_AS(hopf_coefficient(G, 0.0), ConfigError);
}

TEST_CASE("Hopf coefficient predicts the slow 1/sqrt(t) decay") {
  // x' = -y + x^2 - x y - x^3, y' = x + x y + y^2 / 2
  auto F = make_planar([](const auto& v) {
    using T = std::decay_t<decltype(v[0])>;
    const T& x = v[0];
    const T& y = v[1];
    return std::vector<T>{-y + x * x - x * y - x * x * x, x + x * y + y * y * 0.5};
  });
  const auto h = hopf_coefficient(F, {0, 0});
  REQUIRE(h.c21.real() < 0);
  CHECK(h.supercritical);
  // numerical differentiation path agrees with the jets
  PlanarField Ffd = F;
  Ffd.f_jet = nullptr;
  const auto hfd = hopf_coefficient(Ffd, {0, 0});
  CHECK(std::abs(hfd.c21 - h.c21) < 1e-6);

  // r^2 ~ 1 / (2 |Re c21| t) for large t, with r measured in the normal-form variable
  auto field = odeflow::make_field(2, [&](const Vec& s, double) { return F(s); });
  odeflow::Options o = odeflow::Options::tight(1e-11, 1e-14);
  o.dense = true;
  o.record_steps = false;
  const double t1 = 4000;
  const auto tr = odeflow::integrate(field, {0.1, 0}, 0, t1, o);
  REQUIRE(tr.ok());
  auto radius_w = [&](double t) {
    // average |w|^2 over one turn near t
    double m = 0;
    const int n = 64;
    for (int i = 0; i < n; ++i) {
      const Vec s = tr.at(t - kTwoPi * i / n);
      const cplx z(s[0], s[1]);
      const cplx w = z + h.h.eval(z);
      m += std::norm(w) / n;
    }
    return m;
  };
  const double ta = 2000, tb = 3990;
  const double slope = (1 / radius_w(tb) - 1 / radius_w(ta)) / (tb - ta);
  CHECK(slope == doctest::Approx(-2 * h.c21.real()).epsilon(0.03));
}

TEST_CASE("Hopf coefficient vanishes in the real part for Hamiltonian fields") {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 10; ++t) {
    // H = (x^2 + y^2) / 2 + cubic + quartic
    Vec c(9);
    for (auto& v : c) v = u(rng);
    auto F = make_planar([c](const auto& v) {
      using T = std::decay_t<decltype(v[0])>;
      const T& x = v[0];
      const T& y = v[1];
      const T Hx = x + 3 * c[0] * x * x + 2 * c[1] * x * y + c[2] * y * y + 4 * c[4] * x * x * x +
                   3 * c[5] * x * x * y + 2 * c[6] * x * y * y + c[7] * y * y * y;
      const T Hy = y + c[1] * x * x + 2 * c[2] * x * y + 3 * c[3] * y * y + c[5] * x * x * x + 2 * c[6] * x * x * y +
                   3 * c[7] * x * y * y + 4 * c[8] * y * y * y;
      return std::vector<T>{-Hy, Hx};
    });
    CHECK(std::abs(hopf_coefficient(F, {0, 0}).c21.real()) < 1e-12);
  }
}

TEST_CASE("Hopf coefficient against the Birkhoff normal form of the time-1 map") {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const double w = 1.0, T = 1.0;
  BiPoly G(3);
  for (int j = 0; j <= 3; ++j)
    for (int k = 0; j + k <= 3; ++k)
      if (j + k >= 2) G.at(j, k) = cplx(u(rng), u(rng));
  const auto hr = hopf_coefficient(G, w);
  const BiPoly Gc = G.conj_swap();
  const int n = 3;
  series::JetState s{BiPoly::z(n), BiPoly::zbar(n)};
  auto rhs = [&](const series::JetState& x, double) {
    return series::JetState{cplx(0, w) * x[0] + G.compose(x[0], x[1]), cplx(0, -w) * x[1] + Gc.compose(x[0], x[1])};
  };
  const auto out = series::jet_flow_rk4(rhs, s, 0, T, 400);
  const double theta = w * T / kTwoPi;
  const auto nf = series::birkhoff_normal_form(out[0], theta, 3, false);
  REQUIRE(nf.C.size() >= 1);
  const cplx expect = std::exp(cplx(0, w * T)) * T * hr.c21;
  CHECK(std::abs(nf.C[0] - expect) < 1e-8);
  CHECK(nf.area_defect == doctest::Approx(T * hr.c21.real()).epsilon(1e-8));
}

TEST_CASE("heteroclinic splitting: closed forms") {
  auto f1 = [](double x) { return x * (1 - x); };
  auto a = [](double x) { return -(1 - 2 * x); };
  auto none = heteroclinic_splitting(f1, a, [](double) { return 0.0; });
  for (double v : none.h1_samples)
    if (std::isfinite(v)) CHECK(v == 0.0);
  CHECK(none.endpoint_value == 0.0);

  // exponential factor is one: h1 = (1/f1) int_0^x g2
  auto res = heteroclinic_splitting(f1, a, [](double y) { return y * (1 - y); });
  for (double x : {0.05, 0.2, 0.5, 0.8, 0.95}) {
    const double exact = (x / 2 - x * x / 3) / (1 - x);
    CHECK(res.h1(x) == doctest::Approx(exact).epsilon(1e-10));
    CHECK(res.h1_sym(x) == doctest::Approx(exact).epsilon(1e-10));
  }
  CHECK(res.h1(0) == 0.0);
  CHECK(res.endpoint_value == doctest::Approx(1.0 / 6).epsilon(1e-10));

  // antisymmetric g2 keeps the connection: h1 bounded and zero at both ends
  auto keep = heteroclinic_splitting(f1, a, [](double y) { return y * (1 - y) * (1 - 2 * y); });
  CHECK(std::abs(keep.endpoint_value) < 1e-12);
  for (double x : {0.1, 0.5, 0.9, 0.999}) CHECK(keep.h1(x) == doctest::Approx(x * (1 - x) / 2).epsilon(1e-9));
}

TEST_CASE("heteroclinic splitting: the two displayed forms, linearity, singularities") {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int t = 0; t < 5; ++t) {
    const double p = u(rng), q = u(rng), r = u(rng), s = u(rng);
    auto f1 = [=](double x) { return x * (1 - x) * (1 + p * x); };
    auto a = [=](double x) { return -1.2 + q * x + 2 * x * x; };
    auto g2 = [=](double x) { return std::sin(kPi * x) * (1 + r * x) + s * x * (1 - x); };
    auto g2x2 = [=](double x) { return 2 * g2(x); };
    const auto A = heteroclinic_splitting(f1, a, g2);
    const auto B = heteroclinic_splitting(f1, a, g2x2);
    for (double x : {0.1, 0.3, 0.6, 0.85}) {
      const double v = A.h1(x);
      CHECK(std::abs(v - A.h1_sym(x)) < 1e-8 * (1 + std::abs(v)));
      CHECK(std::abs(B.h1(x) - 2 * v) < 1e-10 * (1 + std::abs(v)));
    }
    CHECK(std::abs(B.endpoint_value - 2 * A.endpoint_value) < 1e-10 * (1 + std::abs(A.endpoint_value)));
  }
  // integrand ~ y^{-1 - a(0)/f1'(0)} near the left saddle
  const auto e = heteroclinic_splitting([](double x) { return x * (1 - x); }, [](double) { return -0.5; },
                                        [](double) { return 1.0; });
  CHECK(e.singular_exponent == doctest::Approx(-0.5).epsilon(1e-3));
  CHECK_THROWS_AS(heteroclinic_splitting([](double x) { return x * (1 - x); }, [](double) { return 0.5; },
                                         [](double) { return 1.0; }),
                  NumericalError);
}

TEST_CASE("homoclinic return ratio near a saddle") {
  auto p = homoclinic_return_profile(-2, 1, 0.1, {1e-4, 1e-6});
  CHECK(p.ratio[0] == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(p.ratio[1] == doctest::Approx(1e-5).epsilon(1e-12));
  CHECK(p.limit == RatioLimit::zero);
  CHECK(p.periodic_orbit_sign == 1);
  p = homoclinic_return_profile(-1, 2, 0.1, {1e-4});
  CHECK(p.limit == RatioLimit::infinity);
  CHECK(p.periodic_orbit_sign == -1);
  CHECK(p.ratio[0] == doctest::Approx(std::sqrt(1e3)));

  // oracle: integrate the linear saddle from (eps, x2) until x2 = eps
  for (auto [a1, a2] : {std::pair{-2.0, 1.0}, std::pair{-0.7, 1.3}}) {
    auto F = odeflow::make_field(2, [a1, a2](const Vec& x, double) { return Vec{a1 * x[0], a2 * x[1]}; });
    odeflow::Options o = odeflow::Options::tight(1e-13, 1e-300);
    o.h0 = 1e-3;
    odeflow::EventSpec ev;
    ev.g = [](const Vec& x, double) { return x[1] - 0.1; };
    ev.terminal = true;
    o.events = {ev};
    const double x2 = 1e-5;
    const auto tr = odeflow::integrate(F, {0.1, x2}, 0, 1e3, o);
    REQUIRE(!tr.events.empty());
    const double measured = tr.events.front().state[0] / x2;
    CHECK(measured == doctest::Approx(homoclinic_return_profile(a1, a2, 0.1, {x2}).ratio[0]).epsilon(1e-7));
  }

  // H = splitting log(|a1|/a2) is positive exactly on the periodic-orbit side
  CHECK(homoclinic_H(0.1, -2, 1) > 0);
  CHECK(homoclinic_H(-0.1, -2, 1) < 0);
  CHECK(homoclinic_H(-0.1, -1, 2) > 0);
  CHECK(homoclinic_H(0.1, -1, 2) < 0);
  CHECK_THROWS_AS(homoclinic_return_profile(-1, 1, 0.1, {1e-3}), ConfigError);
  CHECK_THROWS_AS(homoclinic_return_profile(1, 1, 0.1, {1e-3}), ConfigError);
}

TEST_CASE("Takens-Bogdanov diagram: regions and local curves") {
  auto d = takens_bogdanov_diagram(0.1, 0.3);
  CHECK(d.region == 1);
  CHECK(d.equilibria.empty());

  d = takens_bogdanov_diagram(-0.04, 0.2);
  CHECK(d.curve == 'B');
  REQUIRE(d.classes.size() == 2);
  CHECK(d.classes[0].label == EquilibriumLabel::saddle);
  CHECK(d.classes[1].label == EquilibriumLabel::center);

  CHECK(takens_bogdanov_diagram(0, 0.1).curve == 'A');
  CHECK(takens_bogdanov_diagram(0, -0.1).curve == 'D');
  CHECK(takens_bogdanov_diagram(0, 0).curve == 'O');
  d = takens_bogdanov_diagram(-0.04, 0.3);
  CHECK(d.region == 2);
  CHECK(d.classes[1].stability == 1);
  d = takens_bogdanov_diagram(-0.04, 0.17);
  CHECK(d.region == 3);
  CHECK(d.classes[1].stability == -1);
  CHECK(takens_bogdanov_diagram(-0.04, 0.1).region == 4);
  CHECK(takens_bogdanov_diagram(-0.04, -0.1).region == 4);

  // closed-form eigenvalues against the Jacobian
  for (double l2 : {-0.3, 0.05, 0.15, 0.25}) {
    const auto F = takens_bogdanov_field(-0.04, l2);
    for (int b : {+1, -1}) {
      const auto ev = tb_eigenvalues(-0.04, l2, b);
      Eigen::EigenSolver<Mat> es(F.jacobian({b * 0.2, 0}));
      const cplx e0 = es.eigenvalues()(0), e1 = es.eigenvalues()(1);
      const bool ok = (std::abs(e0 - ev[0]) < 1e-12 && std::abs(e1 - ev[1]) < 1e-12) ||
                      (std::abs(e0 - ev[1]) < 1e-12 && std::abs(e1 - ev[0]) < 1e-12);
      CHECK(ok);
    }
  }
  CHECK(tb_hopf_lambda2(-0.04) == doctest::Approx(0.2).epsilon(1e-10));
  // unstable orbit at the Hopf curve
  const auto h = hopf_coefficient(takens_bogdanov_field(-0.04, 0.2), {-0.2, 0});
  CHECK(h.c21.real() > 0);
}

TEST_CASE("Takens-Bogdanov homoclinic curve") {
  for (double l1 : {-0.04, -0.01, -0.0025}) {
    const double s = std::sqrt(-l1);
    const double hc = tb_homoclinic_lambda2(l1);
    const double pred = 5.0 / 7.0 * s;
    CHECK(std::abs(hc - pred) <= pred * std::pow(-l1, 0.25));
    CHECK(std::abs(tb_splitting(l1, hc)) < 1e-8);
    CHECK(tb_splitting(l1, 0.9 * hc) * tb_splitting(l1, 1.1 * hc) < 0);
  }
  // relative correction shrinks with lambda1
  const double k1 = tb_homoclinic_lambda2(-0.04) / 0.2, k2 = tb_homoclinic_lambda2(-0.0025) / 0.05;
  CHECK(std::abs(k2 - 5.0 / 7) < std::abs(k1 - 5.0 / 7));
  CHECK_THROWS_AS(tb_homoclinic_lambda2(0.01), ConfigError);
}
