#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "perturblab/common.hpp"

namespace perturblab::odeflow {

using Rhs = std::function<Vec(const Vec& x, double t, const Vec& p)>;
using JacobianFn = std::function<Mat(const Vec& x, double t, const Vec& p)>;

struct VectorField {
  int dimension = 0;
  Rhs rhs;
  Vec params;
  std::optional<double> period;
  std::string name;
  JacobianFn jacobian;

  Vec operator()(const Vec& x, double t) const;
  // Analytic Jacobian when supplied, central differences otherwise.
  Mat jacobian_at(const Vec& x, double t) const;
  double divergence(const Vec& x, double t) const;
};

VectorField make_field(int dimension, std::function<Vec(const Vec&, double)> f,
                       std::string name = {}, std::optional<double> period = {});

enum class Status { ok, step_underflow, nonfinite, max_steps, escaped, event_stop };

std::string to_string(Status s);

struct IntegratorStats {
  long steps = 0;
  long rejected = 0;
  long evaluations = 0;
  double rtol = 0.0;
  double atol = 0.0;
};

// One accepted step of the 5(4) pair with its continuous extension.
struct DenseSegment {
  double t0 = 0.0;
  double h = 0.0;
  Vec r1, r2, r3, r4, r5;
  Vec eval(double t) const;
};

struct SectionEvent {
  double time = 0.0;
  Vec state;
  int crossing_index = 0;
  int direction = 0;
  bool transversal = true;
  int event_id = 0;
};

struct Trajectory {
  Vec times;
  std::vector<Vec> states;
  IntegratorStats stats;
  Status status = Status::ok;
  std::string message;
  double escape_time_estimate = std::numeric_limits<double>::quiet_NaN();
  std::vector<DenseSegment> dense;
  std::vector<SectionEvent> events;

  bool ok() const { return status == Status::ok || status == Status::event_stop; }
  const Vec& final_state() const { return states.back(); }
  double final_time() const { return times.back(); }
  // Dense interpolation; requires Options::dense.
  Vec at(double t) const;
};

struct EventSpec {
  std::function<double(const Vec&, double)> g;
  // Gradient of g, used for the transversality test. Empty: transversality is not checked.
  std::function<Vec(const Vec&, double)> gradient;
  int direction = 0;  // +1 increasing crossings only, -1 decreasing only, 0 both
  bool terminal = false;
  int max_count = 1;  // terminal events stop after this many crossings
};

struct Options {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h0 = 0.0;
  double hmax = std::numeric_limits<double>::infinity();
  long max_steps = 20'000'000;
  bool dense = false;
  bool record_steps = true;
  double blowup_norm = 1e12;
  double event_time_tol = 1e-10;
  double transversality_tol = 1e-8;
  std::vector<EventSpec> events;
  // Optional stop predicate evaluated after every accepted step.
  std::function<bool(const Vec&, double)> stop_when;

  static Options tight(double rtol = 1e-12, double atol = 1e-14) {
    Options o;
    o.rtol = rtol;
    o.atol = atol;
    return o;
  }
};

// Adaptive explicit Runge-Kutta 5(4) (Dormand-Prince). t1 < t0 integrates backwards.
Trajectory integrate(const VectorField& field, const Vec& x0, double t0, double t1,
                     const Options& opts = {});
Trajectory integrate(const VectorField& field, const Vec& x0, std::pair<double, double> t_span,
                     double tol);

// Fixed-step implicit midpoint rule with Newton iterations on each step.
Trajectory integrate_implicit_midpoint(const VectorField& field, const Vec& x0, double t0,
                                       double t1, long n_steps, double newton_tol = 1e-13);

Vec flow(const VectorField& field, const Vec& x0, double t0, double t1, const Options& opts = {});

// ---- sections ----

struct Section {
  enum class Kind { hyperplane, stroboscopic };
  Kind kind = Kind::hyperplane;
  Vec normal;
  double offset = 0.0;
  int direction = +1;
  double period = 0.0;
  double phase = 0.0;

  static Section hyperplane(Vec normal, double offset, int direction = +1);
  static Section stroboscopic(double period, double phase = 0.0);
};

std::vector<SectionEvent> poincare_section(const VectorField& field, const Section& section,
                                           const Vec& x0, int n_crossings,
                                           const Options& opts = {},
                                           double t_max = 1e6);

// ---- periodic orbits ----

struct FloquetData {
  double period = 0.0;
  Mat monodromy;
  std::vector<cplx> multipliers;
  std::vector<cplx> exponents;
  Vec sample_times;
  std::vector<Mat> principal_samples;
  double trace_integral = 0.0;
  double liouville_defect = 0.0;
};

struct PeriodicOrbit {
  Trajectory orbit;
  double period = 0.0;
  FloquetData floquet;
  int newton_iterations = 0;
  double residual = 0.0;
};

struct PeriodicOptions {
  double tol = 1e-9;
  int max_iterations = 50;
  Options integration = Options::tight();
  int principal_samples = 16;
};

PeriodicOrbit find_periodic_orbit(const VectorField& field, const Vec& x_guess, double T_guess,
                                  const PeriodicOptions& opts = {});

FloquetData floquet_analysis(const VectorField& field, const Vec& x_star, double T,
                             const Options& opts = Options::tight(), int n_samples = 16);

// (1/T) times the integral over one period of g along the orbit, 128 Gauss-Legendre panels.
double orbit_average(const Trajectory& orbit, double T, const std::function<double(const Vec&, double)>& g);

struct CharacteristicExponents {
  double zero = 0.0;
  double lambda = 0.0;
  double lambda_monodromy = 0.0;
  bool hyperbolic = false;
};

CharacteristicExponents characteristic_exponents(const VectorField& field, const Trajectory& orbit,
                                                 double T, double tol = 1e-6);

// ---- iteration and bounds ----

struct PicardResult {
  Vec t;
  std::vector<Vec> iterates;  // x^(0) .. x^(n) sampled on t
  double lambda = 0.0;        // contraction factor at t_max
  double error_bound = 0.0;   // lambda^n/(1-lambda) * |x1 - x0|
};

// Iterates (Tx)(t) = x0 e^{-t} + eps * int_0^t e^{-(t-s)} g(x(s)) ds.
PicardResult picard_iterate(const std::function<double(double)>& g, double lipschitz_K, double x0,
                            double eps, int n, double t_max, int grid_points = 2001);

double gronwall_bound(double K, double M, double eps, double t);

// ---- output ----

std::string trajectory_csv(const Trajectory& traj, bool with_events = false);

}  // namespace perturblab::odeflow
