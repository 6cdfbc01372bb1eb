#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "json.hpp"
#include "perturblab/common.hpp"

namespace perturblab::series {

using Rational = boost::multiprecision::cpp_rational;

// Exact complex rational re + i im.
struct GaussRational {
  Rational re{0};
  Rational im{0};

  GaussRational() = default;
  GaussRational(long long r) : re(r) {}  // NOLINT
  GaussRational(Rational r, Rational i = 0) : re(std::move(r)), im(std::move(i)) {}

  GaussRational operator-() const { return {-re, -im}; }
  GaussRational& operator+=(const GaussRational& o) { re += o.re; im += o.im; return *this; }
  GaussRational& operator-=(const GaussRational& o) { re -= o.re; im -= o.im; return *this; }
  GaussRational& operator*=(const GaussRational& o) {
    Rational r = re * o.re - im * o.im;
    im = re * o.im + im * o.re;
    re = std::move(r);
    return *this;
  }
  GaussRational& operator/=(const GaussRational& o) {
    const Rational d = o.re * o.re + o.im * o.im;
    if (d == 0) throw Error("division by zero Gaussian rational");
    Rational r = (re * o.re + im * o.im) / d;
    im = (im * o.re - re * o.im) / d;
    re = std::move(r);
    return *this;
  }
  friend GaussRational operator+(GaussRational a, const GaussRational& b) { return a += b; }
  friend GaussRational operator-(GaussRational a, const GaussRational& b) { return a -= b; }
  friend GaussRational operator*(GaussRational a, const GaussRational& b) { return a *= b; }
  friend GaussRational operator/(GaussRational a, const GaussRational& b) { return a /= b; }
  friend bool operator==(const GaussRational& a, const GaussRational& b) { return a.re == b.re && a.im == b.im; }

  cplx to_complex() const { return {static_cast<double>(re), static_cast<double>(im)}; }
  std::string str() const;
};

template <class C>
struct CoeffTraits;

template <>
struct CoeffTraits<cplx> {
  static constexpr double prune = 1e-14;
  static cplx from_int(long long n) { return cplx(static_cast<double>(n), 0.0); }
  static cplx imag_unit() { return {0.0, 1.0}; }
  static bool negligible(const cplx& c) { return std::abs(c) < prune; }
  static cplx conj(const cplx& c) { return std::conj(c); }
  static cplx to_complex(const cplx& c) { return c; }
  static double magnitude(const cplx& c) { return std::abs(c); }
};

template <>
struct CoeffTraits<GaussRational> {
  static GaussRational from_int(long long n) { return GaussRational(n); }
  static GaussRational imag_unit() { return {Rational(0), Rational(1)}; }
  static bool negligible(const GaussRational& c) { return c.re == 0 && c.im == 0; }
  static GaussRational conj(const GaussRational& c) { return {c.re, -c.im}; }
  static cplx to_complex(const GaussRational& c) { return c.to_complex(); }
  static double magnitude(const GaussRational& c) { return std::abs(c.to_complex()); }
};

using MultiIndex = std::vector<int>;

struct TermKey {
  MultiIndex k;  // angle harmonic
  MultiIndex m;  // action monomial
};

// Order: L1 norm of k, then k, then m.
struct TermKeyLess {
  bool operator()(const TermKey& a, const TermKey& b) const {
    auto l1 = [](const MultiIndex& v) {
      int s = 0;
      for (int x : v) s += std::abs(x);
      return s;
    };
    const int la = l1(a.k), lb = l1(b.k);
    if (la != lb) return la < lb;
    if (a.k != b.k) return a.k < b.k;
    return a.m < b.m;
  }
};

constexpr int kNoTruncation = std::numeric_limits<int>::max();

// Sum of c * exp(i k.phi) * I^m over stored (k, m).
template <class C>
class FourierTaylorSeries {
 public:
  using Traits = CoeffTraits<C>;
  using Terms = std::map<TermKey, C, TermKeyLess>;

  FourierTaylorSeries() = default;
  FourierTaylorSeries(int n_angles, int n_actions, int truncation = kNoTruncation)
      : n_angles_(n_angles), n_actions_(n_actions), truncation_(truncation) {
    if (n_angles < 0 || n_actions < 0) throw Error("negative variable count");
  }

  static FourierTaylorSeries monomial(int na, int nI, MultiIndex k, MultiIndex m, C c,
                                      int truncation = kNoTruncation) {
    FourierTaylorSeries s(na, nI, truncation);
    s.add_term(std::move(k), std::move(m), std::move(c));
    return s;
  }
  // amp * I^m * cos(k.phi)
  static FourierTaylorSeries cosine(int na, int nI, const MultiIndex& k, const MultiIndex& m, C amp,
                                    int truncation = kNoTruncation) {
    FourierTaylorSeries s(na, nI, truncation);
    if (std::all_of(k.begin(), k.end(), [](int x) { return x == 0; })) {
      s.add_term(k, m, amp);
      return s;
    }
    C half = amp / Traits::from_int(2);
    s.add_term(k, m, half);
    s.add_term(negated(k), m, half);
    return s;
  }
  // amp * I^m * sin(k.phi)
  static FourierTaylorSeries sine(int na, int nI, const MultiIndex& k, const MultiIndex& m, C amp,
                                  int truncation = kNoTruncation) {
    FourierTaylorSeries s(na, nI, truncation);
    C c = amp / (Traits::from_int(2) * Traits::imag_unit());
    s.add_term(k, m, c);
    s.add_term(negated(k), m, -c);
    return s;
  }

  int n_angles() const { return n_angles_; }
  int n_actions() const { return n_actions_; }
  int truncation() const { return truncation_; }
  const Terms& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  C coefficient(const MultiIndex& k, const MultiIndex& m) const {
    auto it = terms_.find(TermKey{k, m});
    return it == terms_.end() ? C{} : it->second;
  }

  void add_term(MultiIndex k, MultiIndex m, C c) {
    if (static_cast<int>(k.size()) != n_angles_ || static_cast<int>(m.size()) != n_actions_)
      throw Error("multi-index length does not match the variable counts");
    for (int x : m)
      if (x < 0) throw Error("negative action exponent");
    if (degree(m) > truncation_) return;
    auto [it, inserted] = terms_.try_emplace(TermKey{std::move(k), std::move(m)}, c);
    if (!inserted) it->second += c;
    if (Traits::negligible(it->second)) terms_.erase(it);
  }

  FourierTaylorSeries operator-() const {
    FourierTaylorSeries r = *this;
    for (auto& [key, c] : r.terms_) c = -c;
    return r;
  }
  FourierTaylorSeries& operator+=(const FourierTaylorSeries& o) {
    check_same_variables(o);
    truncation_ = std::min(truncation_, o.truncation_);
    drop_above_truncation();
    for (const auto& [key, c] : o.terms_) add_term(key.k, key.m, c);
    return *this;
  }
  FourierTaylorSeries& operator-=(const FourierTaylorSeries& o) { return *this += -o; }
  friend FourierTaylorSeries operator+(FourierTaylorSeries a, const FourierTaylorSeries& b) { return a += b; }
  friend FourierTaylorSeries operator-(FourierTaylorSeries a, const FourierTaylorSeries& b) { return a -= b; }

  friend FourierTaylorSeries operator*(const C& s, const FourierTaylorSeries& a) {
    FourierTaylorSeries r(a.n_angles_, a.n_actions_, a.truncation_);
    for (const auto& [key, c] : a.terms_) r.add_term(key.k, key.m, s * c);
    return r;
  }
  friend FourierTaylorSeries operator*(const FourierTaylorSeries& a, const FourierTaylorSeries& b) {
    a.check_same_variables(b);
    FourierTaylorSeries r(a.n_angles_, a.n_actions_, std::min(a.truncation_, b.truncation_));
    for (const auto& [ka, ca] : a.terms_)
      for (const auto& [kb, cb] : b.terms_) {
        MultiIndex m(a.n_actions_);
        for (int i = 0; i < a.n_actions_; ++i) m[i] = ka.m[i] + kb.m[i];
        if (degree(m) > r.truncation_) continue;
        MultiIndex k(a.n_angles_);
        for (int i = 0; i < a.n_angles_; ++i) k[i] = ka.k[i] + kb.k[i];
        r.add_term(std::move(k), std::move(m), ca * cb);
      }
    return r;
  }

  FourierTaylorSeries d_angle(int j) const {
    if (j < 0 || j >= n_angles_) throw Error("angle index out of range");
    FourierTaylorSeries r(n_angles_, n_actions_, truncation_);
    for (const auto& [key, c] : terms_)
      if (key.k[j] != 0) r.add_term(key.k, key.m, Traits::imag_unit() * Traits::from_int(key.k[j]) * c);
    return r;
  }
  FourierTaylorSeries d_action(int j) const {
    if (j < 0 || j >= n_actions_) throw Error("action index out of range");
    FourierTaylorSeries r(n_angles_, n_actions_, truncation_);
    for (const auto& [key, c] : terms_)
      if (key.m[j] > 0) {
        MultiIndex m = key.m;
        --m[j];
        r.add_term(key.k, std::move(m), Traits::from_int(key.m[j]) * c);
      }
    return r;
  }

  // Keeps harmonics with k_j = 0, i.e. the mean over angle j.
  FourierTaylorSeries average_over(int j) const {
    if (j < 0 || j >= n_angles_) throw Error("angle index out of range");
    FourierTaylorSeries r(n_angles_, n_actions_, truncation_);
    for (const auto& [key, c] : terms_)
      if (key.k[j] == 0) r.add_term(key.k, key.m, c);
    return r;
  }

  FourierTaylorSeries truncated(int t) const {
    FourierTaylorSeries r(n_angles_, n_actions_, std::min(t, truncation_));
    for (const auto& [key, c] : terms_) r.add_term(key.k, key.m, c);
    return r;
  }

  cplx evaluate(const Vec& phi, const Vec& I) const {
    if (static_cast<int>(phi.size()) != n_angles_ || static_cast<int>(I.size()) != n_actions_)
      throw Error("evaluation point has wrong dimension");
    cplx s = 0.0;
    for (const auto& [key, c] : terms_) {
      double arg = 0, mono = 1;
      for (int i = 0; i < n_angles_; ++i) arg += key.k[i] * phi[i];
      for (int i = 0; i < n_actions_; ++i) mono *= std::pow(I[i], key.m[i]);
      s += Traits::to_complex(c) * mono * std::polar(1.0, arg);
    }
    return s;
  }

  // coefficient(-k, m) == conj(coefficient(k, m)) for all terms
  bool is_real(double tol = 1e-12) const {
    for (const auto& [key, c] : terms_) {
      const C partner = coefficient(negated(key.k), key.m);
      if (Traits::magnitude(Traits::conj(c) - partner) > tol) return false;
    }
    return true;
  }

  double max_abs() const {
    double m = 0;
    for (const auto& [key, c] : terms_) m = std::max(m, Traits::magnitude(c));
    return m;
  }

  void check_same_variables(const FourierTaylorSeries& o) const {
    if (n_angles_ != o.n_angles_ || n_actions_ != o.n_actions_)
      throw Error("series have different variable counts (" + std::to_string(n_angles_) + "," +
                  std::to_string(n_actions_) + ") vs (" + std::to_string(o.n_angles_) + "," +
                  std::to_string(o.n_actions_) + ")");
  }

  static int degree(const MultiIndex& m) { return std::accumulate(m.begin(), m.end(), 0); }
  static MultiIndex negated(MultiIndex k) {
    for (int& x : k) x = -x;
    return k;
  }

 private:
  void drop_above_truncation() {
    for (auto it = terms_.begin(); it != terms_.end();)
      it = degree(it->first.m) > truncation_ ? terms_.erase(it) : std::next(it);
  }

  int n_angles_ = 0;
  int n_actions_ = 0;
  int truncation_ = kNoTruncation;
  Terms terms_;
};

using CSeries = FourierTaylorSeries<cplx>;
using QSeries = FourierTaylorSeries<GaussRational>;

// Sum_i df/dphi_i dg/dI_i - df/dI_i dg/dphi_i
template <class C>
FourierTaylorSeries<C> poisson_bracket(const FourierTaylorSeries<C>& f, const FourierTaylorSeries<C>& g) {
  f.check_same_variables(g);
  if (f.n_angles() != f.n_actions())
    throw Error("Poisson bracket needs as many actions as angles");
  FourierTaylorSeries<C> r(f.n_angles(), f.n_actions(), std::min(f.truncation(), g.truncation()));
  for (int i = 0; i < f.n_angles(); ++i) {
    r += f.d_angle(i) * g.d_action(i);
    r -= f.d_action(i) * g.d_angle(i);
  }
  return r;
}

template <class C>
bool series_equal(const FourierTaylorSeries<C>& a, const FourierTaylorSeries<C>& b, double tol = 0.0) {
  FourierTaylorSeries<C> d = a - b;
  return d.empty() || d.max_abs() <= tol;
}

// Keeps exactly the harmonics with zero index along the fast angle.
template <class C>
FourierTaylorSeries<C> average_hamiltonian(const FourierTaylorSeries<C>& H, int fast_angle_index) {
  return H.average_over(fast_angle_index);
}

template <class C>
nlohmann::json to_json(const FourierTaylorSeries<C>& s) {
  nlohmann::json j;
  j["variables"] = {{"angles", s.n_angles()}, {"actions", s.n_actions()}};
  j["truncation"] = s.truncation() == kNoTruncation ? nlohmann::json(nullptr) : nlohmann::json(s.truncation());
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [key, c] : s.terms()) {
    nlohmann::json t;
    t["k"] = key.k;
    t["m"] = key.m;
    if constexpr (std::is_same_v<C, GaussRational>) {
      t["re"] = c.re.str();
      t["im"] = c.im.str();
    } else {
      t["re"] = c.real();
      t["im"] = c.imag();
    }
    terms.push_back(std::move(t));
  }
  j["terms"] = std::move(terms);
  return j;
}

CSeries series_from_json(const nlohmann::json& j);
CSeries to_complex(const QSeries& s);

}  // namespace perturblab::series
