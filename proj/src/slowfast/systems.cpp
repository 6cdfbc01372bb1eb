#include <cmath>

#include "perturblab/slowfast.hpp"

namespace perturblab::slowfast {

namespace {

template <class T>
T constant_like(const T& x, double c) {
  T r = x * 0.0;
  r += c;
  return r;
}

}  // namespace

bool Box::contains(const Vec& p) const {
  if (lo.empty()) return true;
  for (std::size_t i = 0; i < p.size() && i < lo.size(); ++i)
    if (p[i] < lo[i] || p[i] > hi[i]) return false;
  return true;
}

Vec SlowFastSystem::fast(const Vec& x, const Vec& y) const { return f(x, y); }
Vec SlowFastSystem::slow(const Vec& x, const Vec& y) const { return g(x, y); }

namespace {

// Column k of the Jacobian of F with respect to argument `which` from first-order jets.
Mat jet_jacobian(const JetRhs& F, const Vec& x, const Vec& y, int rows, bool wrt_x) {
  const int n = wrt_x ? static_cast<int>(x.size()) : static_cast<int>(y.size());
  Mat J(rows, n);
  for (int k = 0; k < n; ++k) {
    std::vector<Jet> X, Y;
    for (double v : x) X.emplace_back(1, v);
    for (double v : y) Y.emplace_back(1, v);
    (wrt_x ? X : Y)[k](0, 1) = 1.0;
    const auto r = F(X, Y);
    for (int i = 0; i < rows; ++i) J(i, k) = r[i](0, 1);
  }
  return J;
}

Mat fd_jacobian(const FastRhs& F, const Vec& x, const Vec& y, int rows, bool wrt_x) {
  const Vec& base = wrt_x ? x : y;
  const int n = static_cast<int>(base.size());
  Mat J(rows, n);
  for (int k = 0; k < n; ++k) {
    const double h = 1e-6 * (1 + std::abs(base[k]));
    Vec a = base, b = base;
    a[k] += h;
    b[k] -= h;
    const Vec fa = wrt_x ? F(a, y) : F(x, a);
    const Vec fb = wrt_x ? F(b, y) : F(x, b);
    for (int i = 0; i < rows; ++i) J(i, k) = (fa[i] - fb[i]) / (2 * h);
  }
  return J;
}

}  // namespace

Mat SlowFastSystem::fast_jacobian(const Vec& x, const Vec& y) const {
  if (f_jet) return jet_jacobian(f_jet, x, y, n_fast, true);
  return fd_jacobian(f, x, y, n_fast, true);
}

Mat SlowFastSystem::fast_slow_jacobian(const Vec& x, const Vec& y) const {
  if (f_jet) return jet_jacobian(f_jet, x, y, n_fast, false);
  return fd_jacobian(f, x, y, n_fast, false);
}

void SlowFastSystem::validate() const {
  if (n_fast < 1 || n_slow < 1) throw ConfigError("slow-fast system needs n_fast, n_slow >= 1");
  if (!f || !g) throw ConfigError("slow-fast system needs both f and g");
  if (!(eps > 0)) throw ConfigError("eps must be positive");
  if (!domain.lo.empty() &&
      (domain.lo.size() != static_cast<std::size_t>(n_fast + n_slow) || domain.hi.size() != domain.lo.size()))
    throw ConfigError("domain box must have n_fast + n_slow bounds");
  Vec x(n_fast, 0.0), y(n_slow, 0.0);
  if (!domain.lo.empty()) {
    for (int i = 0; i < n_fast; ++i) x[i] = 0.5 * (domain.lo[i] + domain.hi[i]);
    for (int i = 0; i < n_slow; ++i) y[i] = 0.5 * (domain.lo[n_fast + i] + domain.hi[n_fast + i]);
  }
  const Vec fx = f(x, y), gx = g(x, y);
  if (fx.size() != static_cast<std::size_t>(n_fast)) throw ConfigError("f returns the wrong dimension");
  if (gx.size() != static_cast<std::size_t>(n_slow)) throw ConfigError("g returns the wrong dimension");
  for (double v : fx)
    if (!std::isfinite(v)) throw ConfigError("f is not finite at the domain centre");
  for (double v : gx)
    if (!std::isfinite(v)) throw ConfigError("g is not finite at the domain centre");
}

SlowFastSystem ssm_model(double eps) {
  using std::sin;
  auto f = [](const auto& x, const auto& y) {
    using T = std::decay_t<decltype(x[0])>;
    return std::vector<T>{-x[0] + sin(y[0])};
  };
  auto g = [](const auto& x, const auto&) { return std::vector{constant_like(x[0], 1.0)}; };
  return make_system(1, 1, eps, f, g, "ssm");
}

SlowFastSystem linear_test(double eps) {
  auto f = [](const auto& x, const auto& y) { return std::vector{-x[0] + y[0]}; };
  auto g = [](const auto& x, const auto&) { return std::vector{constant_like(x[0], 1.0)}; };
  return make_system(1, 1, eps, f, g, "linear");
}

SlowFastSystem van_der_pol(double eps) {
  auto f = [](const auto& x, const auto& y) { return std::vector{y[0] + x[0] - x[0] * x[0] * x[0] / 3.0}; };
  auto g = [](const auto& x, const auto&) { return std::vector{-x[0]}; };
  return make_system(1, 1, eps, f, g, "van_der_pol");
}

SlowFastSystem fold_normal_form(double eps) {
  auto f = [](const auto& x, const auto& y) { return std::vector{-y[0] - x[0] * x[0] - x[0] * x[0] * x[0] / 3.0}; };
  auto g = [](const auto& x, const auto&) { return std::vector{1.0 + x[0]}; };
  return make_system(1, 1, eps, f, g, "fold");
}

SlowFastSystem delayed_hopf(double eps) {
  auto f = [](const auto& x, const auto& y) {
    const auto r2 = x[0] * x[0] + x[1] * x[1];
    return std::vector{y[0] * x[0] - x[1] - x[0] * r2, x[0] + y[0] * x[1] - x[1] * r2};
  };
  auto g = [](const auto& x, const auto&) { return std::vector{constant_like(x[0], 1.0)}; };
  return make_system(2, 1, eps, f, g, "delayed_hopf");
}

SlowFastSystem drifted_hopf(double eps) {
  auto f = [](const auto& x, const auto& y) {
    const auto u = x[0] + y[0];
    const auto r2 = u * u + x[1] * x[1];
    return std::vector{y[0] * u - x[1] - u * r2, u + y[0] * x[1] - x[1] * r2};
  };
  auto g = [](const auto& x, const auto&) { return std::vector{constant_like(x[0], 1.0)}; };
  return make_system(2, 1, eps, f, g, "drifted_hopf");
}

}  // namespace perturblab::slowfast
