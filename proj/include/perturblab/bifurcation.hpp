#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <array>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "perturblab/common.hpp"
#include "perturblab/series/bipoly.hpp"
#include "perturblab/slowfast/jet.hpp"

namespace perturblab::bifurcation {

using slowfast::Jet;
using Rational = boost::multiprecision::cpp_rational;

// ---- planar fields ----

struct PlanarField {
  std::function<Vec(const Vec&)> f;
  std::function<std::vector<Jet>(const std::vector<Jet>&)> f_jet;  // optional exact Taylor data
  std::string name;

  Vec operator()(const Vec& x) const { return f(x); }
  Mat jacobian(const Vec& x) const;
  bool has_jets() const { return static_cast<bool>(f_jet); }
};

// Double and jet versions from one generic callable x -> vector.
template <class F>
PlanarField make_planar(F f, std::string name = {}) {
  PlanarField p;
  p.f = [f](const Vec& x) { return Vec(f(x)); };
  p.f_jet = [f](const std::vector<Jet>& x) { return std::vector<Jet>(f(x)); };
  p.name = std::move(name);
  return p;
}

// Real Taylor coefficients c[i][j] of x1^i x2^j, total degree <= order, for each component.
using Taylor2 = std::vector<std::vector<double>>;
std::array<Taylor2, 2> taylor_coefficients(const PlanarField& field, const Vec& at, const Mat& basis, int order);

// ---- equilibrium classification ----

enum class EquilibriumLabel {
  node,
  saddle,
  focus,
  center,
  degenerate_node,
  improper_node,
  saddle_node_candidate,
  elliptic,
};

std::string to_string(EquilibriumLabel l);

struct ClassifyOptions {
  double equal_tol = 1e-12;  // discriminant relative to |J|^2
  double vector_tol = 1e-9;  // second singular value of the eigenvector problem
  double zero_tol = 1e-9;    // real parts relative to |J|
};

struct EquilibriumClass {
  Vec location;
  std::array<cplx, 2> eigenvalues;
  EquilibriumLabel label = EquilibriumLabel::node;
  bool hyperbolic = true;
  bool elliptic = false;
  int stability = 0;  // -1 attracting, +1 repelling, 0 neither
  int independent_eigenvectors = 2;
};

EquilibriumClass classify_equilibrium(const Mat& J, const ClassifyOptions& opts = {});
EquilibriumClass classify_equilibrium(const PlanarField& field, const Vec& x_star, const ClassifyOptions& opts = {});

// ---- one-dimensional cusp x' = -x^3 + l1 x + l2 ----

struct CuspEquilibrium {
  double x = 0;
  int stability = 0;  // -1 stable, +1 unstable, 0 semi-stable (double root)
  int multiplicity = 1;
};

struct CuspSummary {
  double lambda1 = 0, lambda2 = 0;
  double discriminant = 0;  // 4 l1^3 - 27 l2^2
  int count = 0;            // distinct equilibria
  bool critical = false;
  std::vector<CuspEquilibrium> equilibria;  // ascending
};

CuspSummary cusp_region(double lambda1, double lambda2, double rel_tol = 1e-12);

// ---- center manifold of x1' = g1, x2' = a x2 + g2 ----

struct CenterManifoldSystem {
  double a = -1;
  std::function<Jet(const Jet& x1, const Jet& x2)> g1, g2;
  int smoothness = 1000;  // highest order at which the Taylor data are trusted
};

template <class G1, class G2>
CenterManifoldSystem make_center_system(double a, G1 g1, G2 g2, int smoothness = 1000) {
  CenterManifoldSystem s;
  s.a = a;
  s.g1 = [g1](const Jet& x1, const Jet& x2) { return Jet(g1(x1, x2)); };
  s.g2 = [g2](const Jet& x1, const Jet& x2) { return Jet(g2(x1, x2)); };
  s.smoothness = smoothness;
  return s;
}

struct CenterManifold {
  int order = 0;
  Vec h;        // h[k] multiplies x1^k
  Vec reduced;  // reduced[k] multiplies x1^k in x1' = g1(x1, h(x1))
  double c = 0;
  bool elementary_saddle_node = false;
  Vec residual;  // Taylor coefficients of a h + g2 - h' g1
};

CenterManifold center_manifold_coeffs(const CenterManifoldSystem& sys, int order);

// Polynomial input with exact coefficients: (i, j) -> coefficient of x1^i x2^j.
using RationalPoly = std::map<std::pair<int, int>, Rational>;

struct RationalCenterManifold {
  int order = 0;
  std::vector<Rational> h, reduced, residual;
  Rational c;
  bool elementary_saddle_node = false;
};

RationalCenterManifold center_manifold_coeffs(const Rational& a, const RationalPoly& g1, const RationalPoly& g2,
                                              int order);

// ---- saddle-node function ----

enum class NodeBifurcationKind { saddle_node, transcritical, isolated, none };
std::string to_string(NodeBifurcationKind k);

struct SaddleNodeReport {
  double c = 0;  // half the second x-derivative at the origin
  Vec lambda, phi, H;
  std::vector<int> equilibria;  // 0, 1 or 2 per sample
  NodeBifurcationKind kind = NodeBifurcationKind::none;
};

SaddleNodeReport saddle_node_H(const std::function<double(double x, double lambda)>& F,
                               std::pair<double, double> bracket, int samples = 41, double degeneracy_tol = 1e-8);

// ---- Hopf coefficient ----

struct HopfReport {
  double omega0 = 0;
  cplx c21;
  bool supercritical = false;  // Re c21 < 0
  series::BiPoly G;            // input nonlinearity in z, conj z
  series::BiPoly h;            // quadratic change of variables w = z + h
  series::BiPoly normal_form;  // w' through cubic order
};

// z' = i omega0 z + G(z, conj z); G of degree 2..3
HopfReport hopf_coefficient(const series::BiPoly& G, double omega0);
// Planar field with imaginary eigenvalues at x_star; jets when available, finite differences otherwise.
HopfReport hopf_coefficient(const PlanarField& field, const Vec& x_star);

// ---- heteroclinic splitting ----

using AxisFunction = std::function<double(double)>;

struct SplittingOptions {
  double endpoint_offset = 1e-12;
  double tol = 1e-12;
  int grid = 21;  // h1 samples on [0, 1]
};

struct SplittingResult {
  std::function<double(double)> h1;      // leading coefficient of the perturbed connection
  std::function<double(double)> h1_sym;  // the same through the symmetric form
  Vec x, h1_samples;
  double endpoint_value = 0;  // weighted integral over (0, 1); zero iff the connection survives to first order
  double quadrature_error = 0;
  double singular_exponent = 0;  // integrand ~ y^p near the left saddle
};

SplittingResult heteroclinic_splitting(AxisFunction f1, AxisFunction df2dx2, AxisFunction g2,
                                       AxisFunction df1dx1 = {}, const SplittingOptions& opts = {});

// ---- homoclinic return map near a saddle ----

enum class RatioLimit { zero, infinity };

struct HomoclinicProfile {
  double a1 = 0, a2 = 0, eps = 0;
  double exponent = 0;  // 1 - |a1| / a2
  Vec x2, ratio;
  RatioLimit limit = RatioLimit::zero;
  int periodic_orbit_sign = 0;  // sign of the splitting that yields a periodic orbit
};

HomoclinicProfile homoclinic_return_profile(double a1, double a2, double eps_box, const Vec& x2_samples);
// Delay function H = splitting * log(|a1| / a2); positive means a hyperbolic periodic orbit.
double homoclinic_H(double splitting, double a1, double a2);

// ---- Takens-Bogdanov unfolding y1' = y2, y2' = l1 + l2 y2 + y1^2 + y1 y2 ----

PlanarField takens_bogdanov_field(double lambda1, double lambda2);

struct TBOptions {
  bool locate_homoclinic = true;
  double seed_distance = 1e-6;
  double tol = 1e-10;
  double homoclinic_lambda2 = std::numeric_limits<double>::quiet_NaN();  // known value, skips the shooting
};

struct TBDiagnosis {
  double lambda1 = 0, lambda2 = 0;
  int region = 0;   // 1..4, 0 on a curve
  char curve = 0;   // 'A'..'D', 'O' at the origin, 0 inside a region
  std::vector<Vec> equilibria;  // x+ then x-
  std::vector<std::array<cplx, 2>> eigenvalues_at_equilibria;
  std::vector<EquilibriumClass> classes;
  double hopf_lambda2 = std::numeric_limits<double>::quiet_NaN();
  double homoclinic_lambda2 = std::numeric_limits<double>::quiet_NaN();
  double homoclinic_predicted = std::numeric_limits<double>::quiet_NaN();
};

// Closed-form eigenvalues at x+ (saddle) and x-.
std::array<cplx, 2> tb_eigenvalues(double lambda1, double lambda2, int branch);

// Splitting of the saddle's left separatrices on y2 = 0; zero on the homoclinic curve.
double tb_splitting(double lambda1, double lambda2, double seed_distance = 1e-6);
double tb_homoclinic_lambda2(double lambda1, const TBOptions& opts = {});
double tb_hopf_lambda2(double lambda1, double tol = 1e-13);

TBDiagnosis takens_bogdanov_diagram(double lambda1, double lambda2, const TBOptions& opts = {});

}  // namespace perturblab::bifurcation
