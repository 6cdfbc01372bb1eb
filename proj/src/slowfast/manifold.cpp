#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <random>

#include "perturblab/odeflow.hpp"
#include "perturblab/slowfast.hpp"

namespace perturblab::slowfast {

namespace {

Eigen::VectorXd to_eigen(const Vec& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); }
Vec to_vec(const Eigen::VectorXd& v) { return Vec(v.data(), v.data() + v.size()); }

double max_real(const std::vector<cplx>& ev) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& l : ev) m = std::max(m, l.real());
  return m;
}

std::vector<cplx> eigenvalues(const Mat& A) {
  Eigen::EigenSolver<Mat> es(A, false);
  std::vector<cplx> r;
  for (int i = 0; i < A.rows(); ++i) r.push_back(es.eigenvalues()(i));
  return r;
}

ChartPoint make_point(const SlowFastSystem& sys, const Vec& y, const Vec& x, double residual) {
  ChartPoint p;
  p.y = y;
  p.x_star = x;
  p.residual = residual;
  p.A = sys.fast_jacobian(x, y);
  p.dxdy = -p.A.partialPivLu().solve(sys.fast_slow_jacobian(x, y));
  p.eigenvalues = eigenvalues(p.A);
  if (max_real(p.eigenvalues) < 0) {
    const Mat P = lyapunov_solve(p.A);
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (P + P.transpose()));
    p.lyapunov_rate = 1.0 / (2.0 * es.eigenvalues().maxCoeff());
  }
  return p;
}

// Refines a fold between two grid points with (f = 0, det A = 0).
std::optional<FoldReport> refine_fold(const SlowFastSystem& sys, const Vec& y_prev, const Vec& y_next,
                                      const Vec& x_prev) {
  const int n = sys.n_fast;
  Vec dir(y_prev.size());
  for (std::size_t i = 0; i < dir.size(); ++i) dir[i] = y_next[i] - y_prev[i];
  auto y_of = [&](double s) {
    Vec y = y_prev;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += s * dir[i];
    return y;
  };
  auto G = [&](const Eigen::VectorXd& z) {
    Vec x(z.data(), z.data() + n);
    const Vec y = y_of(z(n));
    Eigen::VectorXd r(n + 1);
    const Vec fx = sys.fast(x, y);
    for (int i = 0; i < n; ++i) r(i) = fx[i];
    r(n) = sys.fast_jacobian(x, y).determinant();
    return r;
  };
  Eigen::VectorXd z(n + 1);
  for (int i = 0; i < n; ++i) z(i) = x_prev[i];
  z(n) = 0.5;
  for (int it = 0; it < 60; ++it) {
    const Eigen::VectorXd r = G(z);
    if (!r.allFinite()) return std::nullopt;
    if (r.norm() < 1e-12) {
      FoldReport f;
      f.x = Vec(z.data(), z.data() + n);
      f.y = y_of(z(n));
      f.det = r(n);
      f.sigma_min = Eigen::JacobiSVD<Mat>(sys.fast_jacobian(f.x, f.y)).singularValues().minCoeff();
      return f;
    }
    Mat J(n + 1, n + 1);
    for (int k = 0; k <= n; ++k) {
      const double h = 1e-7 * (1 + std::abs(z(k)));
      Eigen::VectorXd a = z, b = z;
      a(k) += h;
      b(k) -= h;
      J.col(k) = (G(a) - G(b)) / (2 * h);
    }
    Eigen::VectorXd d = J.colPivHouseholderQr().solve(-r);
    if (!d.allFinite()) return std::nullopt;
    if (d.norm() > 1.0) d *= 1.0 / d.norm();
    z += d;
  }
  return std::nullopt;
}

}  // namespace

NewtonResult fast_equilibrium(const SlowFastSystem& sys, const Vec& y, const Vec& guess, double tol, int max_iter) {
  NewtonResult res;
  Eigen::VectorXd x = to_eigen(guess);
  auto F = [&](const Eigen::VectorXd& v) { return to_eigen(sys.fast(to_vec(v), y)); };
  Eigen::VectorXd r = F(x);
  double nr = r.norm();
  for (int it = 0; it < max_iter && r.allFinite(); ++it) {
    res.iterations = it;
    if (nr < tol * (1 + x.norm())) {
      res.converged = true;
      break;
    }
    const Mat A = sys.fast_jacobian(to_vec(x), y);
    const Eigen::VectorXd d = A.fullPivLu().solve(-r);
    if (!d.allFinite()) break;
    double lambda = 1;
    Eigen::VectorXd xn;
    Eigen::VectorXd rn;
    for (int k = 0; k < 30; ++k) {
      xn = x + lambda * d;
      rn = F(xn);
      if (rn.allFinite() && rn.norm() < (1 - 1e-4 * lambda) * nr) break;
      lambda *= 0.5;
    }
    if (!rn.allFinite()) break;
    x = xn;
    r = rn;
    nr = r.norm();
  }
  if (!res.converged && nr < tol * (1 + x.norm())) res.converged = true;
  res.x = to_vec(x);
  res.residual = nr;
  return res;
}

Mat lyapunov_solve(const Mat& A) {
  const int n = A.rows();
  const Mat I = Mat::Identity(n, n);
  Mat K = Mat::Zero(n * n, n * n);
  // vec(A^T P + P A) = (I (x) A^T + A^T (x) I) vec(P)
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      K.block(i * n, j * n, n, n) += I(i, j) * A.transpose();
      K.block(i * n, j * n, n, n) += A(j, i) * I;
    }
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(I.data(), n * n);
  const Eigen::VectorXd p = K.fullPivLu().solve(rhs);
  return Eigen::Map<const Mat>(p.data(), n, n);
}

double basin_radius(const SlowFastSystem& sys, const ChartPoint& p, double cap) {
  const int n = sys.n_fast;
  if (p.lyapunov_rate <= 0) return 0.0;
  const Mat P = lyapunov_solve(p.A);
  std::vector<Eigen::VectorXd> dirs;
  for (int i = 0; i < n; ++i) {
    dirs.push_back(Eigen::VectorXd::Unit(n, i));
    dirs.push_back(-Eigen::VectorXd::Unit(n, i));
  }
  std::mt19937_64 rng(7);
  std::normal_distribution<double> N;
  if (n > 1)
    for (int k = 0; k < 32; ++k) {
      Eigen::VectorXd v(n);
      for (int i = 0; i < n; ++i) v(i) = N(rng);
      dirs.push_back(v.normalized());
    }
  const Eigen::VectorXd xs = to_eigen(p.x_star);
  auto decreasing = [&](double rad) {
    for (const auto& d : dirs) {
      const Eigen::VectorXd xi = rad * d;
      const Eigen::VectorXd f = to_eigen(sys.fast(to_vec(xs + xi), p.y));
      if (!f.allFinite() || xi.dot(P * f) >= 0) return false;
    }
    return true;
  };
  double good = 0;
  for (double rad = 1e-3; rad <= cap * (1 + 1e-12); rad *= 1.25) {
    if (!decreasing(rad)) break;
    good = rad;
  }
  return std::min(good, cap);
}

Vec SlowManifoldChart::x_star(double y) const {
  if (points.empty()) throw ConfigError("empty chart");
  if (points.size() == 1) return points[0].x_star;
  const bool inc = points.back().y[0] > points.front().y[0];
  std::size_t lo = 0, hi = points.size() - 1;
  auto key = [&](std::size_t i) { return inc ? points[i].y[0] : -points[i].y[0]; };
  const double k = inc ? y : -y;
  if (k < key(0) - 1e-12 || k > key(hi) + 1e-12) throw ConfigError("y outside the chart");
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    (key(mid) <= k ? lo : hi) = mid;
  }
  const double s = (k - key(lo)) / (key(hi) - key(lo));
  Vec x = points[lo].x_star;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += s * (points[hi].x_star[i] - x[i]);
  return x;
}

std::pair<double, double> SlowManifoldChart::y_range() const {
  if (points.empty()) throw ConfigError("empty chart");
  const double a = points.front().y[0], b = points.back().y[0];
  return {std::min(a, b), std::max(a, b)};
}

bool SlowManifoldChart::covers(double y) const {
  if (points.empty()) return false;
  const auto [a, b] = y_range();
  return y >= a - 1e-12 && y <= b + 1e-12;
}

SlowManifoldChart slow_manifold(const SlowFastSystem& sys, const std::vector<Vec>& y_grid, const Vec& x_guess,
                                const ChartOptions& opts) {
  sys.validate();
  if (y_grid.empty()) throw ConfigError("empty slow grid");
  if (x_guess.size() != static_cast<std::size_t>(sys.n_fast)) throw ConfigError("x_guess has the wrong dimension");
  SlowManifoldChart chart;
  chart.tolerance = opts.tol;

  NewtonResult first = fast_equilibrium(sys, y_grid[0], x_guess, opts.tol);
  if (!first.converged)
    throw ConvergenceError("Newton did not converge at the first grid point (residual " +
                           std::to_string(first.residual) + ")");
  double prev_step = 0;
  double prev_det = 0;
  for (std::size_t i = 0; i < y_grid.size(); ++i) {
    NewtonResult nr;
    Vec pred;
    if (i == 0) {
      nr = first;
      pred = first.x;
    } else {
      const ChartPoint& p = chart.points.back();
      Eigen::VectorXd dy = to_eigen(y_grid[i]) - to_eigen(p.y);
      pred = to_vec(to_eigen(p.x_star) + p.dxdy * dy);
      nr = fast_equilibrium(sys, y_grid[i], pred, opts.tol);
    }
    bool fold = !nr.converged;
    ChartPoint cp;
    if (!fold) {
      cp = make_point(sys, y_grid[i], nr.x, nr.residual);
      const double smin = Eigen::JacobiSVD<Mat>(cp.A).singularValues().minCoeff();
      const double det = cp.A.determinant();
      if (smin < opts.fold_sigma || !cp.dxdy.allFinite()) fold = true;
      if (i > 0 && det * prev_det < 0) fold = true;
      if (i > 0) {
        const double step = (to_eigen(nr.x) - to_eigen(chart.points.back().x_star)).norm();
        if (i > 1 && step > opts.jump_factor * (prev_step + 1e-8)) fold = true;
        if (!fold) prev_step = step;
      }
      if (!fold) prev_det = det;
    }
    if (fold) {
      if (i == 0) throw ConvergenceError("the first grid point is singular");
      FoldReport rep;
      std::optional<FoldReport> refined;
      if (opts.refine_fold) refined = refine_fold(sys, chart.points.back().y, y_grid[i], chart.points.back().x_star);
      if (refined) {
        rep = *refined;
      } else {
        rep.x = chart.points.back().x_star;
        rep.y = chart.points.back().y;
        rep.det = chart.points.back().A.determinant();
        rep.sigma_min = Eigen::JacobiSVD<Mat>(chart.points.back().A).singularValues().minCoeff();
      }
      rep.last_regular_index = static_cast<int>(i) - 1;
      chart.fold = rep;
      break;
    }
    chart.points.push_back(std::move(cp));
  }
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& p : chart.points) worst = std::max(worst, max_real(p.eigenvalues));
  chart.spectral_margin = -worst;
  chart.attracting = chart.spectral_margin > 0;
  return chart;
}

SlowManifoldChart slow_manifold(const SlowFastSystem& sys, const Vec& y_grid, const Vec& x_guess,
                                const ChartOptions& opts) {
  std::vector<Vec> g;
  for (double y : y_grid) g.push_back({y});
  return slow_manifold(sys, g, x_guess, opts);
}

TihonovReport tihonov_verify(const SlowFastSystem& sys, const SlowManifoldChart& chart, const Vec& x0, const Vec& y0,
                             const Vec& eps_list, const TihonovOptions& opts) {
  sys.validate();
  if (chart.points.empty()) throw ConfigError("empty chart");
  if (sys.n_slow != 1) throw ConfigError("tihonov_verify supports a scalar slow variable");
  if (eps_list.empty()) throw ConfigError("empty eps list");
  const int nf = sys.n_fast;
  if (!chart.covers(y0[0])) throw ConfigError("initial slow value outside the chart");

  // nearest chart point for the basin estimate
  std::size_t near = 0;
  for (std::size_t i = 0; i < chart.points.size(); ++i)
    if (std::abs(chart.points[i].y[0] - y0[0]) < std::abs(chart.points[near].y[0] - y0[0])) near = i;
  TihonovReport rep;
  rep.basin_radius = basin_radius(sys, chart.points[near]);
  const NewtonResult xs0 = fast_equilibrium(sys, y0, chart.x_star(y0[0]));
  if (!xs0.converged) throw ConvergenceError("no fast equilibrium at the initial slow value");
  if ((to_eigen(x0) - to_eigen(xs0.x)).norm() >= rep.basin_radius)
    throw ConfigError("initial condition outside the estimated basin of the slow manifold");

  const auto [ylo, yhi] = chart.y_range();
  rep.runs.resize(eps_list.size());
  parallel_for(eps_list.size(), [&](std::size_t k) {
    const double eps = eps_list[k];
    TihonovRun run;
    run.eps = eps;
    run.settle_time = opts.settle_k * eps * std::abs(std::log(eps));
    auto field = odeflow::make_field(nf + 1, [&sys, eps, nf](const Vec& s, double) {
      const Vec x(s.begin(), s.begin() + nf), y(s.begin() + nf, s.end());
      Vec r = sys.fast(x, y);
      for (double& v : r) v /= eps;
      const Vec gy = sys.slow(x, y);
      r.insert(r.end(), gy.begin(), gy.end());
      return r;
    });
    odeflow::Options o;
    o.rtol = opts.rtol;
    o.atol = opts.atol;
    o.dense = true;
    o.record_steps = false;
    o.stop_when = [&](const Vec& s, double) { return s[nf] < ylo || s[nf] > yhi; };
    Vec s0 = x0;
    s0.push_back(y0[0]);
    const auto tr = odeflow::integrate(field, s0, 0.0, opts.horizon, o);
    if (!tr.ok()) throw NumericalError("integration failed: " + tr.message, tr.final_time(), tr.final_state());
    const double t_end = tr.final_time();
    if (tr.status == odeflow::Status::event_stop || t_end < opts.horizon * (1 - 1e-12)) {
      run.exited = true;
      run.exit_time = t_end;
    }

    // reduced flow y0' = g(x*(y0), y0)
    Vec guess = xs0.x;
    auto reduced = odeflow::make_field(1, [&](const Vec& y, double) {
      Vec gs = chart.covers(y[0]) ? chart.x_star(y[0]) : guess;
      const NewtonResult e = fast_equilibrium(sys, y, gs);
      guess = e.x;
      return sys.slow(e.x, y);
    });
    odeflow::Options ro;
    ro.rtol = opts.rtol;
    ro.atol = opts.atol;
    ro.dense = true;
    ro.record_steps = false;
    const auto red = odeflow::integrate(reduced, y0, 0.0, t_end, ro);

    Vec times;
    const int early = 200;
    for (int i = 0; i < early; ++i) times.push_back(std::min(run.settle_time, t_end) * i / early);
    for (int i = 0; i <= opts.samples; ++i) {
      const double t = t_end * i / opts.samples;
      if (t >= times.back()) times.push_back(t);
    }
    Vec xg = xs0.x;
    double red_err = 0;
    for (double t : times) {
      const Vec s = tr.at(t);
      const Vec x(s.begin(), s.begin() + nf), y(s.begin() + nf, s.end());
      const NewtonResult e = fast_equilibrium(sys, y, chart.covers(y[0]) ? chart.x_star(y[0]) : xg);
      if (!e.converged) {
        run.exited = true;
        run.exit_time = t;
        break;
      }
      xg = e.x;
      run.t.push_back(t);
      run.x.push_back(x);
      run.y.push_back(y);
      run.d.push_back((to_eigen(x) - to_eigen(e.x)).norm());
      if (red.ok()) red_err = std::max(red_err, std::abs(red.at(t)[0] - y[0]));
    }
    run.reduced_error = red_err;
    for (std::size_t i = 0; i < run.t.size(); ++i)
      if (run.t[i] >= run.settle_time) run.d_inf = std::max(run.d_inf, run.d[i]);
    Vec ft, fl;
    for (std::size_t i = 0; i < run.t.size(); ++i)
      if (run.t[i] <= run.settle_time && run.d[i] > 10 * run.d_inf && run.d[i] > 0) {
        ft.push_back(run.t[i]);
        fl.push_back(std::log(run.d[i]));
      }
    run.transient_rate = ft.size() >= 3 ? -fit_slope(ft, fl) : std::numeric_limits<double>::quiet_NaN();
    rep.runs[k] = std::move(run);
  });

  Vec e, d, re;
  bool exact_reduced = false;
  double rc = 0;
  int nrc = 0;
  for (const auto& r : rep.runs) {
    e.push_back(r.eps);
    d.push_back(r.d_inf);
    re.push_back(r.reduced_error);
    if (r.reduced_error < 1e-12) exact_reduced = true;
    if (std::isfinite(r.transient_rate)) {
      rc += r.transient_rate * r.eps;
      ++nrc;
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  rep.d_slope = e.size() >= 2 ? loglog_slope(e, d) : nan;
  rep.reduced_slope = e.size() >= 2 && !exact_reduced ? loglog_slope(e, re) : nan;
  rep.rate_constant = nrc ? rc / nrc : nan;
  return rep;
}

}  // namespace perturblab::slowfast
