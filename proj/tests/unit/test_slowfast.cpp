#include <doctest.h>

#include <boost/math/special_functions/airy.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <complex>

#include "perturblab/slowfast.hpp"

using namespace perturblab;
using namespace perturblab::slowfast;

namespace {

Vec linspace(double a, double b, int n) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}

double factorial(int k) { return std::tgamma(k + 1.0); }

}  // namespace

TEST_CASE("jet arithmetic against Taylor coefficients") {
  const int R = 6;
  const double a = 0.7;
  const Jet d = Jet::delta(R, a);
  const Jet s = sin(d), c = cos(d), e = exp(d), l = log(d), p = pow(d, 1.5);
  for (int m = 0; m <= R; ++m) {
    double dm = 1;  // m-th derivative helpers
    const double fm = factorial(m);
    const double sinm = std::sin(a + m * kPi / 2), cosm = std::cos(a + m * kPi / 2);
    CHECK(s(0, m) == doctest::Approx(sinm / fm).epsilon(1e-13));
    CHECK(c(0, m) == doctest::Approx(cosm / fm).epsilon(1e-13));
    CHECK(e(0, m) == doctest::Approx(std::exp(a) / fm).epsilon(1e-13));
    for (int k = 0; k < m; ++k) dm *= 1.5 - k;
    CHECK(p(0, m) == doctest::Approx(dm * std::pow(a, 1.5 - m) / fm).epsilon(1e-12));
    if (m > 0) CHECK(l(0, m) == doctest::Approx((m % 2 ? 1 : -1) / (m * std::pow(a, m))).epsilon(1e-12));
  }
  // mixed variables and the inverse
  const Jet x = Jet::eps(R) * 2.0 + d * d + 1.0;
  const Jet one = x * x.inverse();
  for (int i = 0; i <= R; ++i)
    for (int m = 0; i + m <= R; ++m) CHECK(std::abs(one(i, m) - (i == 0 && m == 0 ? 1.0 : 0.0)) < 1e-12);
  CHECK(Jet::eps(R).times_eps()(2, 0) == 1.0);
  CHECK(sqrt(d * d)(0, 1) == doctest::Approx(1.0));
  CHECK_THROWS_AS(Jet(R, 0.0).inverse(), std::domain_error);
}

TEST_CASE("slow manifold of the sine model and the linear test") {
  const auto sys = ssm_model(0.1);
  const auto chart = slow_manifold(sys, linspace(0, 2 * kPi, 101), {0.0});
  REQUIRE(chart.size() == 101);
  CHECK_FALSE(chart.fold);
  for (const auto& p : chart.points) {
    CHECK(std::abs(p.x_star[0] - std::sin(p.y[0])) < 1e-12);
    CHECK(p.A(0, 0) == doctest::Approx(-1.0));
    CHECK(p.dxdy(0, 0) == doctest::Approx(std::cos(p.y[0])).epsilon(1e-10));
  }
  CHECK(chart.spectral_margin == doctest::Approx(1.0));
  CHECK(chart.attracting);
  CHECK(chart.x_star(1.234)[0] == doctest::Approx(std::sin(1.234)).epsilon(1e-3));

  const auto lin = slow_manifold(linear_test(0.1), linspace(-1, 1, 21), {0.3});
  for (const auto& p : lin.points) {
    CHECK(p.x_star[0] == doctest::Approx(p.y[0]).epsilon(1e-12));
    CHECK(p.lyapunov_rate == doctest::Approx(1.0));
  }
  CHECK(lin.spectral_margin == doctest::Approx(1.0));
}

TEST_CASE("van der Pol branches end at the saddle-node points") {
  const auto sys = van_der_pol(0.01);
  // right branch from x = 2 at y = 2/3 downwards
  const auto right = slow_manifold(sys, linspace(2.0 / 3, -1.0, 400), {2.0});
  REQUIRE(right.fold);
  CHECK(right.fold->x[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(right.fold->y[0] == doctest::Approx(-2.0 / 3).epsilon(1e-8));
  CHECK(right.attracting);
  const auto left = slow_manifold(sys, linspace(-2.0 / 3, 1.0, 400), {-2.0});
  REQUIRE(left.fold);
  CHECK(left.fold->x[0] == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(left.fold->y[0] == doctest::Approx(2.0 / 3).epsilon(1e-8));
  // a grid ending exactly on the fold is refused at that point
  const auto exact = slow_manifold(sys, linspace(2.0 / 3, -2.0 / 3, 50), {2.0});
  CHECK(exact.fold);
  CHECK(exact.size() < 50);
}

TEST_CASE("chart identity dx*/dy = -A^{-1} f_y and the spectral bound") {
  for (const auto& [sys, grid, guess] :
       {std::tuple{van_der_pol(0.01), linspace(0.5, -0.6, 221), Vec{1.9}},
        std::tuple{ssm_model(0.05), linspace(-3, 3, 121), Vec{0.0}},
        std::tuple{drifted_hopf(0.01), linspace(-2, -0.1, 77), Vec{2.0, 0.0}}}) {
    const auto ch = slow_manifold(sys, grid, guess);
    REQUIRE(ch.size() == grid.size());
    for (std::size_t i = 1; i + 1 < ch.size(); ++i) {
      const double y = ch.points[i].y[0], h = 1e-5;
      const auto p = fast_equilibrium(sys, {y + h}, ch.points[i].x_star, 1e-14);
      const auto m = fast_equilibrium(sys, {y - h}, ch.points[i].x_star, 1e-14);
      REQUIRE(p.converged);
      REQUIRE(m.converged);
      for (int a = 0; a < sys.n_fast; ++a) {
        const double fd = (p.x[a] - m.x[a]) / (2 * h);
        CHECK(std::abs(ch.points[i].dxdy(a, 0) - fd) < 1e-6 * (1 + std::abs(fd)));
      }
      for (const auto& l : ch.points[i].eigenvalues) CHECK(l.real() <= -ch.spectral_margin + 1e-12);
      CHECK(ch.points[i].residual < 1e-10);
    }
  }
}

TEST_CASE("Tihonov verification on the sine model") {
  const Vec eps{0.1, 0.05, 0.02};
  const double y0 = 0.3, x0 = 1.5;
  const auto sys = ssm_model(0.1);
  const auto chart = slow_manifold(sys, linspace(0, 4, 401), {0.0});
  TihonovOptions o;
  o.horizon = 3.0;
  const auto rep = tihonov_verify(sys, chart, {x0}, {y0}, eps, o);
  REQUIRE(rep.runs.size() == 3);
  CHECK(rep.d_slope == doctest::Approx(1.0).epsilon(0.1));
  CHECK(rep.rate_constant == doctest::Approx(1.0).epsilon(0.05));
  CHECK(std::isnan(rep.reduced_slope));  // y' = 1 is reproduced exactly
  for (const auto& run : rep.runs) {
    const double e = run.eps;
    CHECK_FALSE(run.exited);
    auto xbar = [e, y0](double t) { return (std::sin(y0 + t) - e * std::cos(y0 + t)) / (1 + e * e); };
    double worst = 0;
    for (std::size_t i = 0; i < run.t.size(); ++i)
      if (run.t[i] >= 5 * e * std::abs(std::log(e))) worst = std::max(worst, std::abs(run.x[i][0] - xbar(run.t[i])));
    CHECK(worst < 2 * e * e);
    // the distance to the slow manifold settles at the ssm7 value
    double dmax = 0;
    for (std::size_t i = 0; i < run.t.size(); ++i)
      if (run.t[i] >= run.settle_time)
        dmax = std::max(dmax, std::abs(xbar(run.t[i]) - std::sin(y0 + run.t[i])));
    CHECK(std::abs(run.d_inf - dmax) < 2 * e * e);
    // at t = k eps |log eps| the transient has shrunk by eps^k
    for (int k : {1, 2}) {
      const double tk = k * e * std::abs(std::log(e));
      std::size_t j = 0;
      while (run.t[j] < tk) ++j;
      const double t = run.t[j];
      const double transient = run.x[j][0] - xbar(t);
      CHECK(transient == doctest::Approx((x0 - xbar(0)) * std::exp(-t / e)).epsilon(1e-5));
      CHECK(std::exp(-tk / e) == doctest::Approx(std::pow(e, k)).epsilon(1e-12));
    }
  }
}

TEST_CASE("Tihonov verification: basin check and chart exit") {
  const auto sys = ssm_model(0.1);
  const auto chart = slow_manifold(sys, linspace(0, 1.5, 151), {0.0});
  TihonovOptions o;
  o.horizon = 3.0;
  const auto rep = tihonov_verify(sys, chart, {0.2}, {0.5}, {0.05}, o);
  CHECK(rep.runs[0].exited);
  CHECK(rep.runs[0].exit_time == doctest::Approx(1.0).epsilon(1e-3));
  CHECK_THROWS_AS(tihonov_verify(sys, chart, {50.0}, {0.5}, {0.05}, o), ConfigError);
  CHECK_THROWS_AS(tihonov_verify(sys, chart, {0.0}, {3.0}, {0.05}, o), ConfigError);
}

TEST_CASE("expansion of the sine model reproduces the alternating derivative pattern") {
  const auto sys = ssm_model(0.05);
  const auto chart = slow_manifold(sys, linspace(-3, 3, 61), {0.0});
  const auto ex = asymptotic_expansion(sys, chart, 10);
  for (std::size_t i = 0; i < ex.y.size(); ++i) {
    const double y = ex.y[i];
    CHECK(std::abs(ex.u[0][i][0] - std::sin(y)) < 1e-12);
    CHECK(std::abs(ex.u[1][i][0] + std::cos(y)) < 1e-12);
    CHECK(std::abs(ex.u[2][i][0] + std::sin(y)) < 1e-12);
    CHECK(std::abs(ex.u[3][i][0] - std::cos(y)) < 1e-12);
    // (-1)^j h^{(j)} for all orders
    for (int j = 0; j <= 10; ++j) {
      const double hj = std::sin(y + j * kPi / 2) * (j % 2 ? -1 : 1);
      CHECK(std::abs(ex.u[j][i][0] - hj) < 1e-10);
    }
    // resummed series against the periodic solution
    const double e = 0.05;
    CHECK(std::abs(ex.value(i, e)[0] - (std::sin(y) - e * std::cos(y)) / (1 + e * e)) < 1e-8);
  }
  for (double res : ex.residuals) CHECK(res < 1e-12);
}

TEST_CASE("expansion against the Fourier representation of the periodic solution") {
  // h(y) = sin y + cos(2y)/2 - sin(3y)/3; periodic solution sum h_k e^{iky} / (1 + i eps k)
  const auto sys = scalar_drift_model(0.05, [](const auto& y) {
    using std::cos;
    using std::sin;
    return sin(y) + 0.5 * cos(2.0 * y) - sin(3.0 * y) / 3.0;
  });
  const auto chart = slow_manifold(sys, linspace(0, kTwoPi, 41), {0.0});
  const auto ex = asymptotic_expansion(sys, chart, 12);
  const double e = 0.05;
  for (std::size_t i = 0; i < ex.y.size(); ++i) {
    const double y = ex.y[i];
    using C = std::complex<double>;
    const C I(0, 1);
    // sin ky = (e^{iky} - e^{-iky}) / 2i, cos ky = (e^{iky} + e^{-iky}) / 2
    auto mode = [&](int k, C ck) { return ck * std::exp(I * double(k) * y) / (1.0 + I * e * double(k)); };
    C x = 0;
    for (int s : {1, -1}) {
      x += mode(s, double(s) / (2.0 * I));
      x += mode(2 * s, 0.25);
      x += mode(3 * s, -(double(s) / (2.0 * I)) / 3.0);
    }
    CHECK(std::abs(ex.value(i, e)[0] - x.real()) < 1e-8);
  }
}

TEST_CASE("factorial growth and optimal truncation for a meromorphic drift") {
  auto sys = scalar_drift_model(0.1, [](const auto& y) { return 1.0 / (1.0 + y * y); });
  const auto chart = slow_manifold(sys, linspace(-2, 2, 81), {1.0});
  const auto ex = asymptotic_expansion(sys, chart, 18);
  for (int k = 0; k <= 18; ++k) {
    const double ratio = ex.amplitude_estimates[k] / factorial(k);
    CHECK(ratio <= 1 + 1e-8);
    CHECK(ratio >= 0.5);
    if (k % 2 == 0) CHECK(ratio == doctest::Approx(1.0).epsilon(1e-8));  // attained at y = 0
  }
  const auto t = optimal_truncation(ex, 0.1);
  CHECK(t.k_star >= 8);
  CHECK(t.k_star <= 12);
  CHECK_FALSE(t.not_disordered);
  CHECK(t.remainder / std::exp(-10.0) < 10);
  CHECK(t.remainder / std::exp(-10.0) > 0.1);
  REQUIRE(ex.optimal_k);
  CHECK(*ex.optimal_k == t.k_star);
}

TEST_CASE("optimal truncation tables") {
  Vec fact, geo;
  for (int k = 0; k <= 20; ++k) {
    fact.push_back(factorial(k));
    geo.push_back(1.0);
  }
  const auto a = optimal_truncation(fact, 0.1);
  CHECK(a.k_star == 10);
  CHECK(a.remainder == doctest::Approx(factorial(10) * 1e-10));
  CHECK(a.remainder / std::exp(-10.0) < 10);
  CHECK(optimal_truncation(fact, 0.5).k_star == 2);
  const auto g = optimal_truncation(geo, 0.3);
  CHECK(g.k_star == 20);
  CHECK(g.not_disordered);
  CHECK_THROWS_AS(optimal_truncation(Vec{}, 0.1), ConfigError);
}

TEST_CASE("no drift gives a vanishing expansion") {
  const auto sys = delayed_hopf(0.01);
  const auto chart = slow_manifold(sys, linspace(-1, -0.2, 17), {0.1, 0.1});
  const auto ex = asymptotic_expansion(sys, chart, 6);
  for (int j = 0; j <= 6; ++j) CHECK(ex.amplitude_estimates[j] < 1e-14);
}

TEST_CASE("finite-difference mode and smoothness limit") {
  auto sys = van_der_pol(0.01);
  const auto chart = slow_manifold(sys, linspace(0.5, -0.5, 101), {1.9});
  const auto jet = asymptotic_expansion(sys, chart, 1);
  sys.f_jet = nullptr;
  sys.g_jet = nullptr;
  const auto fd = asymptotic_expansion(sys, chart, 1);
  for (std::size_t i = 0; i < chart.size(); ++i) CHECK(std::abs(fd.u[1][i][0] - jet.u[1][i][0]) < 1e-6);
  CHECK_THROWS_AS(asymptotic_expansion(sys, chart, 2), ConfigError);
}

TEST_CASE("expansion consistency: invariance defect scales as eps^{r+1}") {
  const auto sys = van_der_pol(0.01);
  const auto chart = slow_manifold(sys, linspace(0.5, -0.4, 46), {1.9});
  const auto ex = asymptotic_expansion(sys, chart, 4);
  const Vec eps{0.02, 0.01, 0.005};
  for (int r = 0; r <= 3; ++r) {
    Vec d;
    for (double e : eps) d.push_back(invariance_defect(sys, ex, e, r));
    CHECK(loglog_slope(eps, d) == doctest::Approx(r + 1).epsilon(0.15));
  }
}

TEST_CASE("disordering near the fold happens at |y| ~ eps^{2/3}") {
  const auto sys = fold_normal_form(1e-3);
  Vec grid;
  for (int i = 0; i <= 400; ++i) grid.push_back(-0.5 * std::pow(10.0, -6.0 * i / 400));
  const auto chart = slow_manifold(sys, grid, {0.7});
  REQUIRE(chart.size() == grid.size());
  const auto ex = asymptotic_expansion(sys, chart, 2);
  // leading branch behaviour x* ~ sqrt(-y), u1 ~ 1/y
  const std::size_t last = chart.size() - 1;
  CHECK(ex.u[0][last][0] / std::sqrt(-ex.y[last]) == doctest::Approx(1.0).epsilon(1e-2));
  CHECK(ex.u[1][last][0] * ex.y[last] == doctest::Approx(-0.25).epsilon(1e-2));
  const Vec eps{1e-3, 1e-4, 1e-5};
  Vec loc;
  for (double e : eps) {
    const double y = disordering_location(ex, e);
    REQUIRE(std::isfinite(y));
    loc.push_back(std::abs(y));
  }
  CHECK(loglog_slope(eps, loc) == doctest::Approx(2.0 / 3).epsilon(0.15));
}

TEST_CASE("symbolic expansion in rational arithmetic") {
  const auto u = symbolic_expansion(TrigPoly::sin(), Rational(-1), 7);
  const TrigPoly s = TrigPoly::sin(), c = TrigPoly::cos();
  const std::vector<TrigPoly> pattern{s, c * Rational(-1), s * Rational(-1), c};
  for (int j = 0; j < 8; ++j) CHECK(u[j] == pattern[j % 4]);
  CHECK(u[1].to_string() == "-cos(y)");
  // general a and h: a u_j - u_{j-1}' = 0 exactly
  const Rational a(-3, 2);
  const TrigPoly h = TrigPoly::sin(2, Rational(1, 3)) + TrigPoly::cos(5, Rational(-2, 7)) + TrigPoly::cos(0, 4);
  const auto v = symbolic_expansion(h, a, 6);
  CHECK(v[0] * a + h == TrigPoly{});
  for (int j = 1; j <= 6; ++j) CHECK(v[j] * a + v[j - 1].derivative() * Rational(-1) == TrigPoly{});
  CHECK_THROWS_AS(symbolic_expansion(h, Rational(0), 2), ConfigError);
}

TEST_CASE("delayed Hopf: exit at y = -y0 and approach to the cycle") {
  const auto sys = delayed_hopf(0.01);
  const auto a = hopf_delay(sys, -0.5, 0.01, 0.1);
  CHECK(a.predicted_exit == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(std::abs(a.observed_exit - 0.5) < 0.05);
  CHECK(a.threshold_shift < 0.05);
  CHECK(a.check_y == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(a.cycle_error < 0.02);
  CHECK(a.alpha(1.0).real() == doctest::Approx(-0.5 + 0.5).epsilon(1e-8));  // y0 t + t^2/2 at t = 1
  CHECK(std::abs(a.alpha(0.4).real() - (-0.5 * 0.4 + 0.08)) < 1e-8);
  const auto b = hopf_delay(delayed_hopf(1e-3), -0.5, 1e-3, 0.1);
  CHECK(std::abs(b.observed_exit - a.observed_exit) < 0.05);
  HopfDelayOptions z;
  z.r0 = 0.0;
  CHECK_THROWS_AS(hopf_delay(sys, -0.5, 0.01, 0.1, z), NoExitError);
  CHECK_THROWS_AS(hopf_delay(sys, 0.5, 0.01, 0.1), ConfigError);
}

TEST_CASE("level-line admissibility reproduces min(-t0, 1)") {
  auto re = [](cplx s) { return drifted_alpha(s).real(); };
  for (double t0 : {-3.0, -2.0, -1.5, -1.0, -0.7, -0.3})
    CHECK(std::abs(level_line_exit(re, t0, 2.5, 0.01) - std::min(-t0, 1.0)) < 0.02);
  // level lines are hyperbolas centred at -i
  for (double t : {-1.0, 0.3, 2.0})
    for (double tau : {-2.0, -0.5, 0.7})
      CHECK(re({t, tau}) == doctest::Approx(0.5 * (t * t - (tau + 1) * (tau + 1) + 1)));
}

TEST_CASE("Psi by deformed-path quadrature agrees with the real-axis integral") {
  const double eps = 0.1, t0 = -1.0;
  for (double t : {-0.5, 0.2, 0.8, 1.4}) {
    const auto p = drifted_psi(t, t0, eps);
    auto f = [&](double s, bool im) {
      const cplx v = std::exp((drifted_alpha(t) - drifted_alpha(s)) / eps);
      return im ? v.imag() : v.real();
    };
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    const cplx direct(GK::integrate([&](double s) { return f(s, false); }, t0, t, 20, 1e-14),
                      GK::integrate([&](double s) { return f(s, true); }, t0, t, 20, 1e-14));
    const cplx val = p.scaled * std::exp(p.log_scale);
    CHECK(std::abs(val - direct) < 1e-8 * (1 + std::abs(direct)));
  }
  // small inside the buffer interval, exponentially large beyond it
  CHECK(drifted_psi(0.5, -2.0, 0.005).log_abs() < std::log(0.005));
  CHECK(drifted_psi(1.3, -2.0, 0.005).log_abs() > 10);
}

TEST_CASE("buffer point of the drifted Hopf family") {
  const double eps = 0.005;
  const auto a = buffer_point(-2.0, eps);
  REQUIRE(a.buffer_point);
  CHECK(*a.buffer_point == doctest::Approx(1.0).epsilon(0.02));
  CHECK(a.predicted_exit == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::abs(a.observed_exit - 1.0) < 0.1);
  CHECK(a.threshold == doctest::Approx(10 * std::sqrt(eps)));
  CHECK(a.threshold_shift < 0.05);
  CHECK(a.naive_max <= eps);
  CHECK(a.exit_discrepancy > 10 * eps);
  // double precision loses the solution before the buffer point
  CHECK(a.double_precision_exit < a.observed_exit - 0.2);

  const auto b = buffer_point(drifted_hopf(eps), -0.5, eps);
  CHECK(std::abs(b.observed_exit - 0.5) < 0.1);
  CHECK(b.predicted_exit == doctest::Approx(std::min(0.5, *b.buffer_point)).epsilon(0.02));

  CHECK_THROWS_AS(buffer_point(delayed_hopf(eps), -2.0, eps), ConfigError);
  CHECK_THROWS_AS(buffer_point(0.5, eps), ConfigError);
}

TEST_CASE("van der Pol relaxation cycle") {
  const auto m = relaxation_cycle(1e-3);
  CHECK(m.landing_x == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(m.jump_delay > 0);
  CHECK(m.excursion > 0);
  CHECK(m.x_min < -2.0);
  CHECK(m.x_max > 2.0);
  CHECK(m.period > 3 - 2 * std::log(2.0));
  CHECK(m.period < 3 - 2 * std::log(2.0) + 0.2);
  CHECK(m.return_residual < 1e-6);

  const auto ric = riccati_inner();
  CHECK(ric.v_blowup == doctest::Approx(-boost::math::airy_ai_zero<double>(1)).epsilon(1e-8));
  CHECK(ric.v_level < ric.v_blowup);
  CHECK(ric.v_level > 0);

  const auto s = relaxation_scaling({1e-3, 3e-3, 1e-2});
  CHECK(s.delay_exponent == doctest::Approx(2.0 / 3).epsilon(0.1));
  CHECK(s.excursion_exponent == doctest::Approx(1.0 / 3).epsilon(0.1));
}

TEST_CASE("system validation") {
  SlowFastSystem s = ssm_model(0.1);
  s.eps = -1;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = ssm_model(0.1);
  s.n_fast = 2;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = ssm_model(0.1);
  s.domain = Box{{-1, 0}, {1, 1}};
  CHECK_NOTHROW(s.validate());
  CHECK(s.domain.contains({0.5, 0.5}));
  CHECK_FALSE(s.domain.contains({2.0, 0.5}));
  CHECK_THROWS_AS(slow_manifold(ssm_model(0.1), Vec{}, {0.0}), ConfigError);
}
