#include "perturblab/series/bipoly.hpp"

#include <cmath>

namespace perturblab::series {

BiPoly::BiPoly(int degree) : n_(degree), c_((degree + 1) * (degree + 1), 0.0) {
  if (degree < 0) throw Error("negative polynomial degree");
}

BiPoly BiPoly::constant(cplx c, int degree) {
  BiPoly p(degree);
  p.at(0, 0) = c;
  return p;
}

BiPoly BiPoly::z(int degree) {
  BiPoly p(degree);
  if (degree >= 1) p.at(1, 0) = 1.0;
  return p;
}

BiPoly BiPoly::zbar(int degree) {
  BiPoly p(degree);
  if (degree >= 1) p.at(0, 1) = 1.0;
  return p;
}

cplx BiPoly::operator()(int j, int k) const {
  if (j < 0 || k < 0 || j + k > n_) return 0.0;
  return c_[j * (n_ + 1) + k];
}

cplx& BiPoly::at(int j, int k) {
  if (j < 0 || k < 0 || j + k > n_) throw Error("monomial outside the truncation");
  return c_[j * (n_ + 1) + k];
}

BiPoly BiPoly::operator-() const {
  BiPoly r = *this;
  for (auto& x : r.c_) x = -x;
  return r;
}

BiPoly& BiPoly::operator+=(const BiPoly& o) {
  if (o.n_ != n_) *this = with_degree(std::min(n_, o.n_));
  for (int j = 0; j <= n_; ++j)
    for (int k = 0; j + k <= n_; ++k) at(j, k) += o(j, k);
  return *this;
}

BiPoly& BiPoly::operator-=(const BiPoly& o) { return *this += -o; }

BiPoly& BiPoly::operator*=(cplx s) {
  for (auto& x : c_) x *= s;
  return *this;
}

BiPoly operator*(const BiPoly& a, const BiPoly& b) {
  const int n = std::min(a.n_, b.n_);
  BiPoly r(n);
  for (int j1 = 0; j1 <= n; ++j1)
    for (int k1 = 0; j1 + k1 <= n; ++k1) {
      const cplx ca = a(j1, k1);
      if (ca == 0.0) continue;
      for (int j2 = 0; j1 + k1 + j2 <= n; ++j2)
        for (int k2 = 0; j1 + k1 + j2 + k2 <= n; ++k2) r.at(j1 + j2, k1 + k2) += ca * b(j2, k2);
    }
  return r;
}

BiPoly BiPoly::conj_swap() const {
  BiPoly r(n_);
  for (int j = 0; j <= n_; ++j)
    for (int k = 0; j + k <= n_; ++k) r.at(k, j) = std::conj((*this)(j, k));
  return r;
}

BiPoly BiPoly::compose(const BiPoly& a, const BiPoly& b) const {
  const int n = n_;
  const BiPoly A = a.with_degree(n), B = b.with_degree(n);
  std::vector<BiPoly> pa{constant(1.0, n)}, pb{constant(1.0, n)};
  for (int j = 1; j <= n; ++j) {
    pa.push_back(pa.back() * A);
    pb.push_back(pb.back() * B);
  }
  BiPoly r(n);
  for (int j = 0; j <= n; ++j)
    for (int k = 0; j + k <= n; ++k) {
      const cplx c = (*this)(j, k);
      if (c != 0.0) r += c * (pa[j] * pb[k]);
    }
  return r;
}

BiPoly BiPoly::d_dz() const {
  BiPoly r(n_);
  for (int j = 1; j <= n_; ++j)
    for (int k = 0; j + k <= n_; ++k) r.at(j - 1, k) = static_cast<double>(j) * (*this)(j, k);
  return r;
}

BiPoly BiPoly::d_dzbar() const {
  BiPoly r(n_);
  for (int j = 0; j <= n_; ++j)
    for (int k = 1; j + k <= n_; ++k) r.at(j, k - 1) = static_cast<double>(k) * (*this)(j, k);
  return r;
}

BiPoly BiPoly::truncated(int degree) const {
  BiPoly r = *this;
  for (int j = 0; j <= n_; ++j)
    for (int k = 0; j + k <= n_; ++k)
      if (j + k > degree) r.at(j, k) = 0.0;
  return r;
}

BiPoly BiPoly::homogeneous(int d) const {
  BiPoly r(n_);
  for (int j = 0; j <= d; ++j)
    if (j <= n_ && d - j <= n_ && d <= n_) r.at(j, d - j) = (*this)(j, d - j);
  return r;
}

BiPoly BiPoly::with_degree(int degree) const {
  BiPoly r(degree);
  for (int j = 0; j <= degree; ++j)
    for (int k = 0; j + k <= degree; ++k) r.at(j, k) = (*this)(j, k);
  return r;
}

cplx BiPoly::eval(cplx z, cplx zbar) const {
  cplx s = 0.0, zj = 1.0;
  for (int j = 0; j <= n_; ++j) {
    cplx inner = 0.0, zk = 1.0;
    for (int k = 0; j + k <= n_; ++k) {
      inner += (*this)(j, k) * zk;
      zk *= zbar;
    }
    s += zj * inner;
    zj *= z;
  }
  return s;
}

double BiPoly::max_abs() const { return max_abs_from(0); }

double BiPoly::max_abs_from(int d) const {
  double m = 0;
  for (int j = 0; j <= n_; ++j)
    for (int k = 0; j + k <= n_; ++k)
      if (j + k >= d) m = std::max(m, std::abs((*this)(j, k)));
  return m;
}

BiPoly inverse_map(const BiPoly& h) {
  const int n = h.degree();
  if (std::abs(h(0, 0)) > 1e-14 || std::abs(h(1, 0) - 1.0) > 1e-12 || std::abs(h(0, 1)) > 1e-12)
    throw Error("inverse_map expects a near-identity map");
  const BiPoly P = h - BiPoly::z(n);
  // u = w - P(u, conj u); each pass fixes one more degree
  BiPoly u = BiPoly::z(n);
  for (int it = 0; it < n; ++it) u = BiPoly::z(n) - P.compose_map(u);
  return u;
}

JetState jet_flow_rk4(const JetRhs& rhs, JetState x, double t0, double t1, int steps) {
  if (steps <= 0) throw Error("jet_flow_rk4 needs a positive step count");
  const double h = (t1 - t0) / steps;
  auto axpy = [](const JetState& a, double s, const JetState& b) {
    return JetState{a[0] + s * b[0], a[1] + s * b[1]};
  };
  for (int i = 0; i < steps; ++i) {
    const double t = t0 + i * h;
    JetState k1 = rhs(x, t);
    JetState k2 = rhs(axpy(x, h / 2, k1), t + h / 2);
    JetState k3 = rhs(axpy(x, h / 2, k2), t + h / 2);
    JetState k4 = rhs(axpy(x, h, k3), t + h);
    for (int c = 0; c < 2; ++c) x[c] += (h / 6) * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
  }
  return x;
}

}  // namespace perturblab::series
