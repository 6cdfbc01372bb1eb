#pragma once

#include <array>
#include <functional>
#include <vector>

#include "perturblab/common.hpp"

namespace perturblab::series {

// Truncated polynomial sum c_jk z^j zbar^k with j + k <= degree.
class BiPoly {
 public:
  explicit BiPoly(int degree = 0);

  static BiPoly constant(cplx c, int degree);
  static BiPoly z(int degree);
  static BiPoly zbar(int degree);

  int degree() const { return n_; }
  cplx operator()(int j, int k) const;
  cplx& at(int j, int k);

  BiPoly operator-() const;
  BiPoly& operator+=(const BiPoly& o);
  BiPoly& operator-=(const BiPoly& o);
  BiPoly& operator*=(cplx s);
  friend BiPoly operator+(BiPoly a, const BiPoly& b) { return a += b; }
  friend BiPoly operator-(BiPoly a, const BiPoly& b) { return a -= b; }
  friend BiPoly operator*(BiPoly a, cplx s) { return a *= s; }
  friend BiPoly operator*(cplx s, BiPoly a) { return a *= s; }
  friend BiPoly operator*(BiPoly a, double s) { return a *= cplx(s); }
  friend BiPoly operator*(double s, BiPoly a) { return a *= cplx(s); }
  friend BiPoly operator*(const BiPoly& a, const BiPoly& b);

  // The polynomial of conj(P(z, conj z)) in the same variables.
  BiPoly conj_swap() const;
  // P(a, b), truncated to this polynomial's degree.
  BiPoly compose(const BiPoly& a, const BiPoly& b) const;
  // P(h, conj h) for a map h of z.
  BiPoly compose_map(const BiPoly& h) const { return compose(h, h.conj_swap()); }
  BiPoly d_dz() const;
  BiPoly d_dzbar() const;
  BiPoly truncated(int degree) const;
  BiPoly homogeneous(int d) const;
  BiPoly with_degree(int degree) const;

  cplx eval(cplx z, cplx zbar) const;
  cplx eval(cplx z) const { return eval(z, std::conj(z)); }
  double max_abs() const;
  double max_abs_from(int d) const;

 private:
  int n_;
  std::vector<cplx> c_;  // (j, k) at j*(n+1)+k
};

// Compositional inverse of a near-identity map z + O(z^2).
BiPoly inverse_map(const BiPoly& h);

using JetState = std::array<BiPoly, 2>;
using JetRhs = std::function<JetState(const JetState&, double)>;

// Classical RK4 on polynomial states: transports the Taylor jet of a planar flow.
JetState jet_flow_rk4(const JetRhs& rhs, JetState x0, double t0, double t1, int steps);

}  // namespace perturblab::series
