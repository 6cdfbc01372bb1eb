#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "perturblab/common.hpp"
#include "perturblab/slowfast/jet.hpp"

namespace perturblab::slowfast {

using FastRhs = std::function<Vec(const Vec& x, const Vec& y)>;
using JetRhs = std::function<std::vector<Jet>(const std::vector<Jet>& x, const std::vector<Jet>& y)>;

struct Box {
  Vec lo, hi;
  bool contains(const Vec& p) const;
};

// eps x' = f(x, y), y' = g(x, y)
struct SlowFastSystem {
  int n_fast = 1;
  int n_slow = 1;
  FastRhs f;
  FastRhs g;
  double eps = 0.1;
  Box domain;  // over (x, y); empty means unbounded
  JetRhs f_jet;
  JetRhs g_jet;
  std::string name;

  Vec fast(const Vec& x, const Vec& y) const;
  Vec slow(const Vec& x, const Vec& y) const;
  Mat fast_jacobian(const Vec& x, const Vec& y) const;  // df/dx
  Mat fast_slow_jacobian(const Vec& x, const Vec& y) const;  // df/dy
  bool has_jets() const { return static_cast<bool>(f_jet) && static_cast<bool>(g_jet); }
  void validate() const;
};

// Builds both the double and the jet versions from generic callables F(x, y) -> vector.
template <class F, class G>
SlowFastSystem make_system(int n_fast, int n_slow, double eps, F f, G g, std::string name = {}) {
  SlowFastSystem s;
  s.n_fast = n_fast;
  s.n_slow = n_slow;
  s.eps = eps;
  s.name = std::move(name);
  s.f = [f](const Vec& x, const Vec& y) { return Vec(f(x, y)); };
  s.g = [g](const Vec& x, const Vec& y) { return Vec(g(x, y)); };
  s.f_jet = [f](const std::vector<Jet>& x, const std::vector<Jet>& y) { return std::vector<Jet>(f(x, y)); };
  s.g_jet = [g](const std::vector<Jet>& x, const std::vector<Jet>& y) { return std::vector<Jet>(g(x, y)); };
  return s;
}

SlowFastSystem ssm_model(double eps);          // eps x' = -x + sin y, y' = 1
SlowFastSystem linear_test(double eps);        // eps x' = -x + y, y' = 1
SlowFastSystem van_der_pol(double eps);        // eps x' = y + x - x^3/3, y' = -x
SlowFastSystem fold_normal_form(double eps);   // eps x' = -y - x^2 - x^3/3, y' = 1 + x
SlowFastSystem delayed_hopf(double eps);       // Hopf normal form with slowly varying y, y' = 1
SlowFastSystem drifted_hopf(double eps);       // the same with a y-dependent slow manifold (-y, 0)

// eps x' = -x + h(y), y' = 1 for a generic callable h
template <class H>
SlowFastSystem scalar_drift_model(double eps, H h, std::string name = "scalar_drift") {
  auto f = [h](const auto& x, const auto& y) {
    using T = std::decay_t<decltype(x[0])>;
    return std::vector<T>{-x[0] + h(y[0])};
  };
  auto g = [](const auto& x, const auto&) {
    using T = std::decay_t<decltype(x[0])>;
    T one = x[0] * 0.0;
    one += 1.0;
    return std::vector<T>{one};
  };
  return make_system(1, 1, eps, f, g, std::move(name));
}

// ---- slow manifold ----

struct NewtonResult {
  Vec x;
  double residual = 0;
  int iterations = 0;
  bool converged = false;
};

NewtonResult fast_equilibrium(const SlowFastSystem& sys, const Vec& y, const Vec& guess, double tol = 1e-12,
                              int max_iter = 50);

struct FoldReport {
  Vec x;
  Vec y;
  double det = 0;
  double sigma_min = 0;
  int last_regular_index = -1;
};

struct ChartPoint {
  Vec y;
  Vec x_star;
  Mat A;       // df/dx at (x*, y)
  Mat dxdy;    // -A^{-1} df/dy
  std::vector<cplx> eigenvalues;
  double residual = 0;
  double lyapunov_rate = 0;  // contraction rate of the Lyapunov quadratic norm
};

struct ChartOptions {
  double tol = 1e-12;
  double fold_sigma = 1e-4;     // sigma_min(A) threshold for fold detection
  double jump_factor = 20.0;    // continuation jump relative to the predicted step
  bool refine_fold = true;
};

struct SlowManifoldChart {
  std::vector<ChartPoint> points;
  double spectral_margin = 0;  // a0: max Re eigenvalue <= -a0 on the chart
  bool attracting = false;
  std::optional<FoldReport> fold;
  double tolerance = 1e-12;

  std::size_t size() const { return points.size(); }
  // piecewise-linear interpolation of x* for scalar slow variables
  Vec x_star(double y) const;
  std::pair<double, double> y_range() const;
  bool covers(double y) const;
};

SlowManifoldChart slow_manifold(const SlowFastSystem& sys, const std::vector<Vec>& y_grid, const Vec& x_guess,
                                const ChartOptions& opts = {});
SlowManifoldChart slow_manifold(const SlowFastSystem& sys, const Vec& y_grid, const Vec& x_guess,
                                const ChartOptions& opts = {});

// Solves A^T P + P A = -I.
Mat lyapunov_solve(const Mat& A);

// Largest radius (capped) on which the Lyapunov form of the chart point decreases along the fast flow.
double basin_radius(const SlowFastSystem& sys, const ChartPoint& p, double cap = 10.0);

// ---- Tihonov verification ----

struct TihonovOptions {
  double horizon = 3.0;
  double settle_k = 5.0;  // distances count after t >= settle_k eps |log eps|
  double rtol = 1e-10;
  double atol = 1e-12;
  int samples = 2000;
};

struct TihonovRun {
  double eps = 0;
  double settle_time = 0;
  double d_inf = 0;            // sup of d(t) after settle_time
  double transient_rate = 0;   // fitted exponential rate of the initial approach
  double reduced_error = 0;    // sup |y(t) - y0(t)| against the reduced flow
  bool exited = false;
  double exit_time = 0;
  Vec t, d;
  std::vector<Vec> x, y;
};

struct TihonovReport {
  std::vector<TihonovRun> runs;
  double basin_radius = 0;
  double d_slope = 0;       // slope of log d_inf against log eps
  double reduced_slope = 0; // NaN when the reduced flow is exact
  double rate_constant = 0; // mean of transient_rate * eps
};

TihonovReport tihonov_verify(const SlowFastSystem& sys, const SlowManifoldChart& chart, const Vec& x0, const Vec& y0,
                             const Vec& eps_list, const TihonovOptions& opts = {});

// ---- asymptotic expansion ----

struct ExpansionOptions {
  double overflow_guard = 1e250;
  double residual_tol = 1e-8;
};

struct AsymptoticExpansion {
  int order = 0;
  Vec y;                               // grid (scalar slow variable)
  std::vector<std::vector<Vec>> u;     // u[j][i]: order j at grid point i; u[0] is x*
  std::vector<std::vector<Vec>> du;    // d/dy of u[j] at grid point i
  Vec amplitude_estimates;             // sup norm of each order over the grid
  Vec residuals;                       // defining-system residual per order
  std::optional<int> optimal_k;
  double remainder_estimate = 0;

  // x* + sum_{j<=k} eps^j u_j at grid point i
  Vec value(std::size_t i, double eps, int k = -1) const;
};

AsymptoticExpansion asymptotic_expansion(const SlowFastSystem& sys, const SlowManifoldChart& chart, int r,
                                         const ExpansionOptions& opts = {});

// sup over the grid of |f(X, y) - eps X'(y) g(X, y)| with X the order-k truncation
double invariance_defect(const SlowFastSystem& sys, const AsymptoticExpansion& e, double eps, int k = -1);

// y where eps |u2| / |u1| first reaches 1 along the grid (NaN if never)
double disordering_location(const AsymptoticExpansion& e, double eps);

struct Truncation {
  int k_star = 0;
  double remainder = 0;
  bool not_disordered = false;
  Vec terms;
};

Truncation optimal_truncation(const Vec& amplitudes, double eps);
Truncation optimal_truncation(const AsymptoticExpansion& e, double eps);

// Exact expansion of eps x' = a x + h(y), y' = 1 for trigonometric h with rational coefficients.
using Rational = boost::multiprecision::cpp_rational;

struct TrigPoly {
  std::map<int, std::pair<Rational, Rational>> terms;  // k -> (cos coeff, sin coeff)

  static TrigPoly sin(int k = 1, Rational c = 1);
  static TrigPoly cos(int k = 1, Rational c = 1);
  TrigPoly derivative() const;
  TrigPoly operator*(const Rational& c) const;
  TrigPoly operator+(const TrigPoly& o) const;
  bool operator==(const TrigPoly& o) const;
  double operator()(double y) const;
  std::string to_string() const;
  void prune();
};

std::vector<TrigPoly> symbolic_expansion(const TrigPoly& h, const Rational& a, int r);

// ---- bifurcation delay ----

class NoExitError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

struct PsiValue {
  cplx scaled;          // Psi * exp(-log_scale)
  double log_scale = 0;
  double log_abs() const { return std::log(std::abs(scaled)) + log_scale; }
};

struct DelayAnalysis {
  std::function<cplx(double)> alpha;
  std::function<PsiValue(double, double)> psi;
  double predicted_exit = 0;
  double observed_exit = 0;
  std::optional<double> buffer_point;
  double threshold = 0;
  double alt_threshold = 0;
  double alt_exit = 0;           // observed exit under alt_threshold
  double threshold_shift = 0;    // |alt_exit - observed_exit|
  double check_y = 0;
  double check_radius = 0;
  double cycle_error = 0;        // |r - cycle radius| at check_y
  double double_precision_exit = std::numeric_limits<double>::quiet_NaN();
  double naive_max = 0;          // sup |z_naive| up to the exit
  double exit_discrepancy = 0;   // |z - z_naive| at the observed exit
  int precision_digits = 16;
  Vec t, r;                      // sampled |fast deviation|
};

struct HopfDelayOptions {
  double r0 = 0.1;
  double phi0 = 0.0;
  double y_end = 1.5;
  double threshold_factor = 2.0;
  double rtol = 1e-10;
  std::function<double(double)> cycle_radius;  // default sqrt(max(y, 0))
};

// Slow passage through a Hopf bifurcation starting at slow time y0 < 0.
DelayAnalysis hopf_delay(const SlowFastSystem& sys, double y0, double eps, double r_threshold,
                         const HopfDelayOptions& opts = {});

struct BufferOptions {
  double threshold = 0;             // default 10 sqrt(eps)
  double threshold_factor = 0.5;
  double t_end = 2.5;
  double grid_h = 0.01;              // level-line search resolution
  int taylor_order = 50;
  bool double_precision_check = true;
};

// alpha(s) = i s + s^2 / 2 analytic phase of the drifted Hopf family
cplx drifted_alpha(cplx s);
PsiValue drifted_psi(double t, double t0, double eps);
// maximal t reachable from t0 along paths where Re alpha stays >= Re alpha(t)
double level_line_exit(const std::function<double(cplx)>& re_alpha, double t0, double t_max, double h,
                       double tau_lo = -3.0, double tau_hi = 1.0);

DelayAnalysis buffer_point(double t0, double eps, const BufferOptions& opts = {});
// Checks that sys is the drifted Hopf family before running.
DelayAnalysis buffer_point(const SlowFastSystem& sys, double t0, double eps, const BufferOptions& opts = {});

// ---- relaxation oscillations ----

struct CycleMetrics {
  double eps = 0;
  double period = 0;
  double jump_delay = 0;   // y overshoot past the fold value
  double excursion = 0;    // |x - x_fold| when y reaches the fold value
  double x_min = 0;
  double x_max = 0;
  double landing_x = 0;    // outer branch point at the fold level
  int return_iterations = 0;
  double return_residual = 0;
};

struct RelaxationOptions {
  int max_returns = 20;
  double return_tol = 1e-8;
  double rtol = 1e-10;
  double atol = 1e-12;
};

CycleMetrics relaxation_cycle(double vdp_eps, const RelaxationOptions& opts = {});

struct RelaxationScaling {
  std::vector<CycleMetrics> cycles;
  double delay_exponent = 0;
  double excursion_exponent = 0;
  double limit_period = 0;  // extrapolated eps -> 0
  double riccati_blowup = 0;
  double delay_constant = 0; // jump_delay / eps^{2/3} fitted
};

RelaxationScaling relaxation_scaling(const Vec& eps_list, const RelaxationOptions& opts = {});

// du/dv = -u^2 - v from the attracting branch u ~ sqrt(-v): v where u reaches `level` and where it blows up.
struct RiccatiResult {
  double v_level = 0;
  double v_blowup = 0;
};
RiccatiResult riccati_inner(double level = -1.0);

}  // namespace perturblab::slowfast
