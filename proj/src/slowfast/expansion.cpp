#include <cmath>
#include <limits>
#include <sstream>

#include "perturblab/slowfast.hpp"

namespace perturblab::slowfast {

namespace {

using JetVec = std::vector<Jet>;

// Series in delta with matrix or vector coefficients: index m -> coefficient of delta^m.
using VecSeries = std::vector<Eigen::VectorXd>;
using MatSeries = std::vector<Mat>;

VecSeries slice(const JetVec& v, int i) {
  const int D = v[0].order();
  VecSeries s(D - i + 1, Eigen::VectorXd::Zero(v.size()));
  for (std::size_t a = 0; a < v.size(); ++a)
    for (int m = 0; m + i <= D; ++m) s[m](a) = v[a](i, m);
  return s;
}

JetVec residual(const SlowFastSystem& sys, const JetVec& X, const JetVec& Y) {
  JetVec R = sys.f_jet(X, Y);
  const JetVec G = sys.g_jet(X, Y);
  for (std::size_t a = 0; a < X.size(); ++a) R[a] -= (X[a].d_delta() * G[0]).times_eps();
  return R;
}

struct PointExpansion {
  std::vector<Vec> u, du;
  Vec residual;
};

PointExpansion expand_at(const SlowFastSystem& sys, const ChartPoint& p, int r) {
  const int n = sys.n_fast;
  const int D = r + 1;
  JetVec X(n), Y{Jet::delta(D, p.y[0])};
  for (int a = 0; a < n; ++a) X[a] = Jet(D, p.x_star[a]);
  const auto lu = p.A.partialPivLu();

  // slow manifold as a series in delta
  for (int it = 0; it <= D + 1; ++it) {
    const JetVec F = sys.f_jet(X, Y);
    const VecSeries s = slice(F, 0);
    for (int m = 0; m <= D; ++m) {
      const Eigen::VectorXd c = lu.solve(s[m]);
      for (int a = 0; a < n; ++a) X[a](0, m) -= c(a);
    }
  }

  MatSeries A;
  for (int j = 1; j <= r; ++j) {
    const VecSeries b = slice(residual(sys, X, Y), j);
    if (j == 1) {
      A.assign(D, Mat::Zero(n, n));
      for (int k = 0; k < n; ++k) {
        JetVec Xk = X;
        Xk[k](1, 0) += 1.0;
        const VecSeries c = slice(residual(sys, Xk, Y), 1);
        for (int m = 0; m < D; ++m) A[m].col(k) = c[m] - b[m];
      }
    }
    const int deg = D - j;
    std::vector<Eigen::VectorXd> U(deg + 1);
    for (int m = 0; m <= deg; ++m) {
      Eigen::VectorXd rhs = -b[m];
      for (int l = 1; l <= m; ++l) rhs -= A[l] * U[m - l];
      U[m] = lu.solve(rhs);
      for (int a = 0; a < n; ++a) X[a](j, m) = U[m](a);
    }
  }

  PointExpansion out;
  const JetVec R = residual(sys, X, Y);
  for (int j = 0; j <= r; ++j) {
    Vec u(n), du(n);
    for (int a = 0; a < n; ++a) {
      u[a] = X[a](j, 0);
      du[a] = X[a](j, 1);
    }
    out.u.push_back(u);
    out.du.push_back(du);
    double res = 0;
    for (int a = 0; a < n; ++a) res = std::max(res, std::abs(R[a](j, 0)));
    out.residual.push_back(res);
  }
  return out;
}

}  // namespace

Vec AsymptoticExpansion::value(std::size_t i, double eps, int k) const {
  if (k < 0 || k > order) k = order;
  Vec x = u[0][i];
  double e = 1;
  for (int j = 1; j <= k; ++j) {
    e *= eps;
    for (std::size_t a = 0; a < x.size(); ++a) x[a] += e * u[j][i][a];
  }
  return x;
}

AsymptoticExpansion asymptotic_expansion(const SlowFastSystem& sys, const SlowManifoldChart& chart, int r,
                                         const ExpansionOptions& opts) {
  sys.validate();
  if (r < 0) throw ConfigError("expansion order must be non-negative");
  if (chart.points.empty()) throw ConfigError("empty chart");
  if (sys.n_slow != 1) throw ConfigError("asymptotic_expansion supports a scalar slow variable");
  const std::size_t N = chart.points.size();
  AsymptoticExpansion e;
  e.order = r;
  e.u.assign(r + 1, std::vector<Vec>(N));
  e.du.assign(r + 1, std::vector<Vec>(N));
  e.residuals.assign(r + 1, 0.0);
  for (const auto& p : chart.points) e.y.push_back(p.y[0]);

  if (sys.has_jets()) {
    std::vector<PointExpansion> pts(N);
    parallel_for(N, [&](std::size_t i) { pts[i] = expand_at(sys, chart.points[i], r); });
    for (std::size_t i = 0; i < N; ++i)
      for (int j = 0; j <= r; ++j) {
        e.u[j][i] = pts[i].u[j];
        e.du[j][i] = pts[i].du[j];
        e.residuals[j] = std::max(e.residuals[j], pts[i].residual[j]);
      }
  } else {
    if (r > 1) throw ConfigError("order exceeds available smoothness: finite differences support r <= 1");
    for (std::size_t i = 0; i < N; ++i) {
      const auto& p = chart.points[i];
      e.u[0][i] = p.x_star;
      const Eigen::VectorXd gy = Eigen::Map<const Eigen::VectorXd>(sys.slow(p.x_star, p.y).data(), 1);
      const Eigen::VectorXd dx = p.dxdy.col(0);
      e.du[0][i] = Vec(dx.data(), dx.data() + dx.size());
      if (r == 1) {
        // u1 = -A^{-1} w0 with w0 = -(dx*/dy) g
        const Eigen::VectorXd w0 = -dx * gy(0);
        const Eigen::VectorXd u1 = -p.A.partialPivLu().solve(w0);
        e.u[1][i] = Vec(u1.data(), u1.data() + u1.size());
        e.residuals[1] = std::max(e.residuals[1], (p.A * u1 + w0).lpNorm<Eigen::Infinity>());
      }
      e.residuals[0] = std::max(e.residuals[0], p.residual);
    }
    if (r == 1)
      for (std::size_t i = 0; i < N; ++i) {
        const std::size_t a = i == 0 ? 0 : i - 1, b = i + 1 == N ? N - 1 : i + 1;
        Vec d(sys.n_fast, 0.0);
        if (b > a)
          for (int k = 0; k < sys.n_fast; ++k) d[k] = (e.u[1][b][k] - e.u[1][a][k]) / (e.y[b] - e.y[a]);
        e.du[1][i] = d;
      }
  }

  for (int j = 0; j <= r; ++j) {
    double amp = 0;
    for (std::size_t i = 0; i < N; ++i) {
      const double v = norm_inf(e.u[j][i]);
      if (!std::isfinite(v)) throw NumericalError("amplitude blow-up at order " + std::to_string(j), e.y[i]);
      amp = std::max(amp, v);
    }
    if (amp > opts.overflow_guard) throw NumericalError("amplitude blow-up at order " + std::to_string(j));
    e.amplitude_estimates.push_back(amp);
    if (e.residuals[j] > opts.residual_tol * (1 + amp))
      throw NumericalError("order " + std::to_string(j) + " fails its defining system (residual " +
                           std::to_string(e.residuals[j]) + ")");
  }
  const Truncation t = optimal_truncation(e.amplitude_estimates, sys.eps);
  if (!t.not_disordered) e.optimal_k = t.k_star;
  e.remainder_estimate = t.remainder;
  return e;
}

double invariance_defect(const SlowFastSystem& sys, const AsymptoticExpansion& e, double eps, int k) {
  if (k < 0 || k > e.order) k = e.order;
  double worst = 0;
  for (std::size_t i = 0; i < e.y.size(); ++i) {
    const Vec X = e.value(i, eps, k);
    Vec dX = e.du[0][i];
    double p = 1;
    for (int j = 1; j <= k; ++j) {
      p *= eps;
      for (std::size_t a = 0; a < dX.size(); ++a) dX[a] += p * e.du[j][i][a];
    }
    const Vec y{e.y[i]};
    const Vec f = sys.fast(X, y);
    const double g = sys.slow(X, y)[0];
    for (std::size_t a = 0; a < f.size(); ++a) worst = std::max(worst, std::abs(f[a] - eps * dX[a] * g));
  }
  return worst;
}

double disordering_location(const AsymptoticExpansion& e, double eps) {
  if (e.order < 2) throw ConfigError("disordering needs an expansion of order >= 2");
  double prev_ratio = 0;
  for (std::size_t i = 0; i < e.y.size(); ++i) {
    const double ratio = eps * norm_inf(e.u[2][i]) / norm_inf(e.u[1][i]);
    if (ratio >= 1) {
      if (i == 0 || prev_ratio <= 0) return e.y[i];
      const double s = -std::log(prev_ratio) / (std::log(ratio) - std::log(prev_ratio));
      return e.y[i - 1] + s * (e.y[i] - e.y[i - 1]);
    }
    prev_ratio = ratio;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

Truncation optimal_truncation(const Vec& amplitudes, double eps) {
  if (amplitudes.empty()) throw ConfigError("no amplitudes");
  if (!(eps > 0)) throw ConfigError("eps must be positive");
  Truncation t;
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < amplitudes.size(); ++k) {
    const double a = std::abs(amplitudes[k]);
    const double term = a == 0 ? 0.0 : std::exp(k * std::log(eps) + std::log(a));
    t.terms.push_back(term);
    m = std::min(m, term);
  }
  for (std::size_t k = 0; k < t.terms.size(); ++k)
    if (t.terms[k] <= m * (1 + 1e-9)) t.k_star = static_cast<int>(k);
  t.remainder = m;
  t.not_disordered = t.k_star + 1 == static_cast<int>(amplitudes.size());
  return t;
}

Truncation optimal_truncation(const AsymptoticExpansion& e, double eps) {
  return optimal_truncation(e.amplitude_estimates, eps);
}

// ---- trigonometric polynomials ----

TrigPoly TrigPoly::sin(int k, Rational c) {
  TrigPoly p;
  p.terms[k] = {Rational(0), c};
  p.prune();
  return p;
}

TrigPoly TrigPoly::cos(int k, Rational c) {
  TrigPoly p;
  p.terms[k] = {c, Rational(0)};
  p.prune();
  return p;
}

void TrigPoly::prune() {
  for (auto it = terms.begin(); it != terms.end();)
    if (it->second.first == 0 && it->second.second == 0)
      it = terms.erase(it);
    else
      ++it;
}

TrigPoly TrigPoly::derivative() const {
  TrigPoly d;
  // (a cos ky + b sin ky)' = k b cos ky - k a sin ky
  for (const auto& [k, ab] : terms) d.terms[k] = {ab.second * k, -ab.first * k};
  d.prune();
  return d;
}

TrigPoly TrigPoly::operator*(const Rational& c) const {
  TrigPoly r;
  for (const auto& [k, ab] : terms) r.terms[k] = {ab.first * c, ab.second * c};
  r.prune();
  return r;
}

TrigPoly TrigPoly::operator+(const TrigPoly& o) const {
  TrigPoly r = *this;
  for (const auto& [k, ab] : o.terms) {
    auto& t = r.terms[k];
    t.first += ab.first;
    t.second += ab.second;
  }
  r.prune();
  return r;
}

bool TrigPoly::operator==(const TrigPoly& o) const { return terms == o.terms; }

double TrigPoly::operator()(double y) const {
  double s = 0;
  for (const auto& [k, ab] : terms)
    s += ab.first.convert_to<double>() * std::cos(k * y) + ab.second.convert_to<double>() * std::sin(k * y);
  return s;
}

std::string TrigPoly::to_string() const {
  std::ostringstream os;
  bool first = true;
  auto emit = [&](const Rational& c, const char* fn, int k) {
    if (c == 0) return;
    if (!first) os << (c < 0 ? " - " : " + ");
    else if (c < 0) os << "-";
    first = false;
    const Rational a = c < 0 ? Rational(-c) : c;
    if (a != 1) os << a << "*";
    os << fn << "(";
    if (k != 1) os << k;
    os << "y)";
  };
  for (const auto& [k, ab] : terms) {
    if (k == 0) {
      if (ab.first != 0) {
        os << (first ? "" : ab.first < 0 ? " - " : " + ")
           << (first ? ab.first : ab.first < 0 ? Rational(-ab.first) : ab.first);
        first = false;
      }
      continue;
    }
    emit(ab.first, "cos", k);
    emit(ab.second, "sin", k);
  }
  return first ? "0" : os.str();
}

std::vector<TrigPoly> symbolic_expansion(const TrigPoly& h, const Rational& a, int r) {
  if (a == 0) throw ConfigError("the fast coefficient must be nonzero");
  if (r < 0) throw ConfigError("expansion order must be non-negative");
  std::vector<TrigPoly> u{h * Rational(-1 / a)};
  for (int j = 1; j <= r; ++j) u.push_back(u.back().derivative() * Rational(1 / a));
  return u;
}

}  // namespace perturblab::slowfast
