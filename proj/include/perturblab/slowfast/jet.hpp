#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace perturblab::slowfast {

// Truncated Taylor polynomial in two variables (eps, delta), total degree <= order.
// Coefficient of eps^i delta^m at (i, m).
class Jet {
 public:
  Jet() = default;
  explicit Jet(int order, double c = 0.0) : R_(order), c_((order + 1) * (order + 1), 0.0) { c_[0] = c; }

  static Jet eps(int order) {
    Jet j(order);
    if (order >= 1) j(1, 0) = 1;
    return j;
  }
  static Jet delta(int order, double value = 0.0) {
    Jet j(order, value);
    if (order >= 1) j(0, 1) = 1;
    return j;
  }

  int order() const { return R_; }
  double& operator()(int i, int m) { return c_[i * (R_ + 1) + m]; }
  double operator()(int i, int m) const { return c_[i * (R_ + 1) + m]; }
  double value() const { return c_.empty() ? 0.0 : c_[0]; }

  // coefficient of eps^i as a polynomial in delta
  std::vector<double> eps_slice(int i) const {
    std::vector<double> s(R_ - i + 1);
    for (int m = 0; m + i <= R_; ++m) s[m] = (*this)(i, m);
    return s;
  }
  void set_eps_slice(int i, const std::vector<double>& s) {
    for (int m = 0; m + i <= R_ && m < static_cast<int>(s.size()); ++m) (*this)(i, m) = s[m];
  }

  Jet d_delta() const {
    Jet r(R_);
    for (int i = 0; i <= R_; ++i)
      for (int m = 1; i + m <= R_; ++m) r(i, m - 1) = m * (*this)(i, m);
    return r;
  }
  Jet times_eps() const {
    Jet r(R_);
    for (int i = 0; i < R_; ++i)
      for (int m = 0; i + 1 + m <= R_; ++m) r(i + 1, m) = (*this)(i, m);
    return r;
  }

  Jet& operator+=(const Jet& o) {
    adopt(o);
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    adopt(o);
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k];
    return *this;
  }
  Jet& operator+=(double a) {
    c_[0] += a;
    return *this;
  }
  Jet& operator-=(double a) {
    c_[0] -= a;
    return *this;
  }
  Jet& operator*=(double a) {
    for (auto& x : c_) x *= a;
    return *this;
  }
  Jet& operator/=(double a) {
    for (auto& x : c_) x /= a;
    return *this;
  }

  friend Jet operator*(const Jet& a, const Jet& b) {
    const int R = common(a, b);
    Jet r(R);
    for (int i1 = 0; i1 <= R; ++i1)
      for (int m1 = 0; i1 + m1 <= R; ++m1) {
        const double x = a(i1, m1);
        if (x == 0.0) continue;
        for (int i2 = 0; i1 + m1 + i2 <= R; ++i2)
          for (int m2 = 0; i1 + m1 + i2 + m2 <= R; ++m2) r(i1 + i2, m1 + m2) += x * b(i2, m2);
      }
    return r;
  }
  Jet inverse() const {
    const double a0 = value();
    if (a0 == 0.0) throw std::domain_error("Jet inverse of a series with zero constant term");
    Jet r(R_);
    // graded recursion: a0 r_n = -sum_{(k,l) != 0} a_{kl} r_{n-(k,l)}
    for (int deg = 0; deg <= R_; ++deg)
      for (int i = 0; i <= deg; ++i) {
        const int m = deg - i;
        double s = deg == 0 ? 1.0 : 0.0;
        for (int k = 0; k <= i; ++k)
          for (int l = 0; l <= m; ++l) {
            if (k == 0 && l == 0) continue;
            s -= (*this)(k, l) * r(i - k, m - l);
          }
        r(i, m) = s / a0;
      }
    return r;
  }
  // f(a0 + t) with derivative data d[n] = f^{(n)}(a0) / n!
  Jet compose(const std::vector<double>& d) const {
    Jet t = *this;
    t.c_[0] = 0;
    Jet r(R_, d[R_]);
    for (int n = R_ - 1; n >= 0; --n) {
      r = r * t;
      r.c_[0] += d[n];
    }
    return r;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator+(Jet a, double b) { return a += b; }
  friend Jet operator+(double b, Jet a) { return a += b; }
  friend Jet operator-(Jet a, double b) { return a -= b; }
  friend Jet operator-(double b, const Jet& a) { return -a + b; }
  friend Jet operator*(Jet a, double b) { return a *= b; }
  friend Jet operator*(double b, Jet a) { return a *= b; }
  friend Jet operator/(Jet a, double b) { return a /= b; }
  friend Jet operator/(const Jet& a, const Jet& b) { return a * b.inverse(); }
  friend Jet operator/(double a, const Jet& b) { return b.inverse() * a; }
  friend Jet operator-(Jet a) { return a *= -1.0; }

 private:
  static int common(const Jet& a, const Jet& b) {
    if (a.R_ != b.R_) throw std::invalid_argument("Jet order mismatch");
    return a.R_;
  }
  void adopt(const Jet& o) {
    if (c_.empty()) *this = Jet(o.R_, 0.0);
    common(*this, o);
  }

  int R_ = 0;
  std::vector<double> c_;
};

inline Jet sin(const Jet& a) {
  std::vector<double> d(a.order() + 1);
  const double s = std::sin(a.value()), c = std::cos(a.value());
  double f = 1;
  for (int n = 0; n <= a.order(); ++n) {
    if (n > 0) f *= n;
    const double v = n % 4 == 0 ? s : n % 4 == 1 ? c : n % 4 == 2 ? -s : -c;
    d[n] = v / f;
  }
  return a.compose(d);
}

inline Jet cos(const Jet& a) {
  std::vector<double> d(a.order() + 1);
  const double s = std::sin(a.value()), c = std::cos(a.value());
  double f = 1;
  for (int n = 0; n <= a.order(); ++n) {
    if (n > 0) f *= n;
    const double v = n % 4 == 0 ? c : n % 4 == 1 ? -s : n % 4 == 2 ? -c : s;
    d[n] = v / f;
  }
  return a.compose(d);
}

inline Jet exp(const Jet& a) {
  std::vector<double> d(a.order() + 1);
  const double e = std::exp(a.value());
  double f = 1;
  for (int n = 0; n <= a.order(); ++n) {
    if (n > 0) f *= n;
    d[n] = e / f;
  }
  return a.compose(d);
}

inline Jet log(const Jet& a) {
  const double a0 = a.value();
  if (!(a0 > 0)) throw std::domain_error("Jet log of a non-positive value");
  std::vector<double> d(a.order() + 1);
  d[0] = std::log(a0);
  for (int n = 1; n <= a.order(); ++n) d[n] = (n % 2 ? 1.0 : -1.0) / (n * std::pow(a0, n));
  return a.compose(d);
}

// a^p for real p, a0 > 0
inline Jet pow(const Jet& a, double p) {
  const double a0 = a.value();
  if (!(a0 > 0)) throw std::domain_error("Jet pow of a non-positive value");
  std::vector<double> d(a.order() + 1);
  double binom = 1;
  for (int n = 0; n <= a.order(); ++n) {
    if (n > 0) binom *= (p - n + 1) / n;
    d[n] = binom * std::pow(a0, p - n);
  }
  return a.compose(d);
}

inline Jet sqrt(const Jet& a) { return pow(a, 0.5); }

}  // namespace perturblab::slowfast
