#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "perturblab/common.hpp"

namespace perturblab::diophantine {

using Quad = boost::multiprecision::cpp_bin_float_quad;

// Pairs (p_i, q_i) of convergents of a continued fraction.
struct Convergent {
  long long p = 0;
  long long q = 1;
};

struct ContinuedFraction {
  std::vector<long long> partial_quotients;  // a_0, a_1, ...
  std::vector<Convergent> convergents;
  bool terminated = false;            // the input is rational (within the tracked precision)
  bool precision_exhausted = false;   // stopped early; the last index is the last trustworthy one
  int last_trustworthy_index = -1;
};

// x carries a relative uncertainty rel_err; the expansion stops once a partial quotient is
// no longer determined by the data.
ContinuedFraction continued_fraction(const Quad& x, int n, double rel_err = 0.0);
ContinuedFraction continued_fraction(double x, int n);
ContinuedFraction continued_fraction_rational(long long p, long long q);

Quad golden_mean();  // (sqrt 5 - 1)/2
Quad sqrt2();

enum class ScanMode { convergents, exhaustive };

struct Certification {
  bool passed = false;
  double C = 0.0;
  double nu = 0.0;
  long long q_max = 0;
  long long worst_p = 0;
  long long worst_q = 0;
  double worst_margin = 0.0;  // min over checked p/q of |omega - p/q| q^{1+nu}
  ScanMode mode = ScanMode::convergents;
};

struct DiophantineFrequency {
  Quad value;
  ContinuedFraction cf;
  std::optional<double> C;
  std::optional<double> nu;
  std::optional<Certification> certification;

  double to_double() const { return static_cast<double>(value); }
};

Certification certify_type(const Quad& omega, double C, double nu, long long q_max,
                           ScanMode mode = ScanMode::convergents);

// Certifies and wraps; C and nu are set only if the check passes.
DiophantineFrequency make_frequency(const Quad& omega, double C, double nu, long long q_max,
                                    ScanMode mode = ScanMode::convergents);

struct LiouvilleResult {
  double C = 0.0;
  double nu = 0.0;
  int k = 0;
  double delta = 0.0;           // radius used in the Taylor bound
  double isolation_radius = 0.0;
  double M = 0.0;               // sup |P^{(k+1)}|/(k+1)! on [omega - delta, omega + delta]
  Quad root;
};

// coeffs[j] multiplies x^j. k < 0 picks the order of vanishing at the root.
LiouvilleResult liouville_constant(const std::vector<long long>& coeffs, double lo, double hi, int k = -1);

struct SmallDenominator {
  double bound = 0.0;   // 4 C / |q|^nu
  double actual = 0.0;  // |e^{2 pi i q omega} - 1|
};

SmallDenominator small_denominator_bound(const DiophantineFrequency& omega, long long q);

// |e^{2 pi i q omega} - 1| = 2 |sin(pi q omega)|, evaluated in extended precision.
double small_denominator(const Quad& omega, long long q);

// Measure of non-Diophantine numbers of type (C, nu) in [0,1] is at most C zeta(nu).
double excluded_measure_bound(double C, double nu);

nlohmann::json to_json(const Certification& c);
nlohmann::json to_json(const ContinuedFraction& cf);

}  // namespace perturblab::diophantine
