#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "perturblab/common.hpp"
#include "perturblab/diophantine.hpp"

namespace perturblab::twistmap {

struct Point {
  double phi = 0.0;
  double I = 0.0;
};

using Advance = std::function<Point(double phi, double I, double eps)>;
using MapJacobian = std::function<Eigen::Matrix2d(double phi, double I, double eps)>;

// phi is treated as a real (lifted) angle by advance; callers reduce mod 2 pi when needed.
struct TwistMap {
  Advance advance;
  double eps = 0.0;
  std::function<double(double)> omega;        // Omega(I); identity when empty
  std::function<double(double)> omega_prime;  // dOmega/dI; 1 when empty
  std::optional<double> twist_bound;
  bool area_preserving = false;
  bool intersection_property = false;
  MapJacobian jacobian;  // optional, central differences otherwise
  // Alternative angle-increment estimator for rotation numbers (I + eps sin phi for the
  // standard map); empty means use the tail average only.
  std::function<double(double phi, double I, double eps)> increment;
  std::string name;

  Point operator()(Point x) const { return advance(x.phi, x.I, eps); }
  Eigen::Matrix2d jacobian_at(Point x) const;
  double Omega(double I) const { return omega ? omega(I) : I; }
  double Omega_prime(double I) const { return omega_prime ? omega_prime(I) : 1.0; }
};

TwistMap standard_map(double eps);

// Property checks used by tests and the CLI.
double jacobian_determinant(const TwistMap& m, Point x);
// max |det - 1| over n random points in [0,2pi) x [I_lo, I_hi].
double area_defect(const TwistMap& m, double I_lo, double I_hi, int n, unsigned seed = 1);
// min of d phi_hat / dI over the strip, by finite differences.
double min_twist(const TwistMap& m, double I_lo, double I_hi, int n, unsigned seed = 1);

struct OrbitRecord {
  Point seed;
  std::vector<double> lifted_angles;
  std::vector<double> actions;
  bool escaped = false;
};

OrbitRecord iterate_orbit(const TwistMap& m, Point seed, int n, double escape_bound = 1e6);

struct RotationNumber {
  double value = 0.0;
  double error = 0.0;
  double alternative = 0.0;  // increment-based estimate, equals value when no increment form
  int n = 0;
};

// Throws NumericalError if the orbit escapes.
RotationNumber rotation_number(const TwistMap& m, Point seed, int n);

// Fourier tables are indexed k = -K..K at position k + K.
struct InvariantCircle {
  diophantine::DiophantineFrequency omega;
  int K = 0;
  std::vector<cplx> u_coeffs;
  std::vector<cplx> v_coeffs;
  double action = 0.0;  // Omega^{-1}(2 pi omega)
  double residual = 0.0;
  double tail_mass = 0.0;
  int newton_iterations = 0;
  std::vector<double> defect_history;
  std::vector<cplx> u0_coeffs, v0_coeffs;  // first iterate

  double u(double psi) const;
  double v(double psi) const;
  Point at(double psi) const { return {psi + u(psi), action + v(psi)}; }
  double sup_u() const;
  double sup_v() const;
  // sup over a grid of |Pi(K(psi)) - K(psi + 2 pi omega)|.
  double conjugacy_defect(const TwistMap& m, int grid = 512) const;
};

struct CircleOptions {
  int max_doublings = 2;
  int max_iterations = 80;
  int grid_factor = 4;                        // grid points per harmonic
  const InvariantCircle* initial = nullptr;   // continuation guess instead of the first iterate
  double divergence_factor = 1e3;             // defect growth that counts as divergence
};

class CircleDivergence : public ConvergenceError {
 public:
  CircleDivergence(const std::string& what, std::vector<double> history)
      : ConvergenceError(what), defect_history(std::move(history)) {}
  std::vector<double> defect_history;
};

class DenominatorGuardError : public NumericalError {
 public:
  DenominatorGuardError(const std::string& what, long long k) : NumericalError(what), harmonic(k) {}
  long long harmonic;
};

InvariantCircle invariant_circle(const TwistMap& m, const diophantine::DiophantineFrequency& omega, int K,
                                 double tol, const CircleOptions& opts = {});

struct BreakupSample {
  double eps = 0.0;
  bool converged = false;
  double defect = 0.0;
  int K = 0;
};

struct BreakupResult {
  double lo = 0.0;  // last converged
  double hi = 0.0;  // first failure
  std::vector<BreakupSample> samples;
  std::string method = "bisection on Newton convergence with continuation; numerical estimate, not a proof";
};

struct BreakupOptions {
  int K = 64;
  double tol = 1e-10;
  double max_step = 0.02;  // continuation step
  CircleOptions circle;
};

BreakupResult breakup_scan(const std::function<TwistMap(double)>& family,
                           const diophantine::DiophantineFrequency& omega, double eps_lo, double eps_hi,
                           double bisection_tol, const BreakupOptions& opts = {});

enum class Stability { elliptic, hyperbolic, parabolic };
std::string to_string(Stability s);

struct PeriodicOrbit {
  int p = 0;
  int q = 1;
  std::vector<Point> points;  // q points, phi reduced to [0, 2 pi)
  double trace = 0.0;         // of D Pi^q
  Stability stability = Stability::parabolic;
  double residual = 0.0;
};

struct PBResult {
  std::vector<PeriodicOrbit> orbits;
  bool degenerate = false;  // Pi^q restricted to the strip is a rotation by 2 pi p
};

PBResult pb_periodic_orbits(const TwistMap& m, int p, int q, std::pair<double, double> strip,
                            int lines = 0);

struct PortraitPoint {
  double phi = 0.0;  // mod 2 pi
  double I = 0.0;
  int seed_index = 0;
};

struct Portrait {
  std::vector<PortraitPoint> points;
  std::vector<bool> escaped;
};

Portrait phase_portrait(const TwistMap& m, const std::vector<Point>& seeds, int n_iter,
                        double escape_bound = 1e6);

nlohmann::json to_json(const InvariantCircle& c);

double wrap_angle(double phi);  // to [0, 2 pi)

}  // namespace perturblab::twistmap
