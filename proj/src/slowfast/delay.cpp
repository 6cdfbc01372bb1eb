#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <queue>
#include <random>

#include "perturblab/odeflow.hpp"
#include "perturblab/slowfast.hpp"

namespace perturblab::slowfast {

namespace {

using mp = boost::multiprecision::mpfr_float;

double toms(const std::function<double(double)>& f, double a, double b) {
  boost::math::tools::eps_tolerance<double> tol(50);
  std::uintmax_t it = 200;
  const auto r = boost::math::tools::toms748_solve(f, a, b, tol, it);
  return 0.5 * (r.first + r.second);
}

double gk(const std::function<double(double)>& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-12);
}

// integral of phase(s) along the straight segment a -> b, phase = exp((alpha(t) - alpha(s) - peak) / eps)
cplx segment_integral(const std::function<cplx(cplx)>& expo, cplx a, cplx b) {
  const cplx d = b - a;
  auto re = [&](double u) { return (std::exp(expo(a + u * d)) * d).real(); };
  auto im = [&](double u) { return (std::exp(expo(a + u * d)) * d).imag(); };
  return {gk(re, 0, 1), gk(im, 0, 1)};
}

// first upward crossing of `level` by r on samples, after r has been below it
double first_up_crossing(const Vec& t, const Vec& r, double level) {
  bool below = false;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (r[i] < level) below = true;
    else if (below && i > 0) {
      const double s = (level - r[i - 1]) / (r[i] - r[i - 1]);
      return t[i - 1] + s * (t[i] - t[i - 1]);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

std::mutex mp_mutex;

}  // namespace

double level_line_exit(const std::function<double(cplx)>& re_alpha, double t0, double t_max, double h, double tau_lo,
                       double tau_hi) {
  if (!(h > 0) || !(t_max > t0)) throw ConfigError("level_line_exit needs h > 0 and t_max > t0");
  const int left = static_cast<int>(std::ceil(1.0 / h));
  const int nx = left + static_cast<int>(std::ceil((t_max - t0) / h)) + left + 1;
  const int j0 = static_cast<int>(std::ceil(-tau_lo / h));
  const int ny = j0 + static_cast<int>(std::ceil(tau_hi / h)) + 1;
  auto X = [&](int i) { return t0 + (i - left) * h; };
  auto T = [&](int j) { return (j - j0) * h; };
  std::vector<double> level(static_cast<std::size_t>(nx) * ny), best(level.size(), -1e300);
  auto id = [&](int i, int j) { return static_cast<std::size_t>(j) * nx + i; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) level[id(i, j)] = re_alpha({X(i), T(j)});

  // widest-path search: best = max over paths of the min level along the path
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item> pq;
  const std::size_t src = id(left, j0);
  best[src] = level[src];
  pq.push({best[src], src});
  while (!pq.empty()) {
    const auto [b, k] = pq.top();
    pq.pop();
    if (b < best[k]) continue;
    const int i = static_cast<int>(k % nx), j = static_cast<int>(k / nx);
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj) {
        if (!di && !dj) continue;
        const int a = i + di, c = j + dj;
        if (a < 0 || a >= nx || c < 0 || c >= ny) continue;
        const std::size_t q = id(a, c);
        const double nb = std::min(b, level[q]);
        if (nb > best[q]) {
          best[q] = nb;
          pq.push({nb, q});
        }
      }
  }
  const double slack = 1e-12;
  double prev_gap = 0;
  for (int i = left + 1; i < nx; ++i) {
    if (X(i) > t_max) break;
    const double gap = best[id(i, j0)] - level[id(i, j0)];
    if (gap < -slack) {
      const double s = prev_gap / (prev_gap - gap);
      return X(i - 1) + s * h;
    }
    prev_gap = gap;
  }
  return t_max;
}

cplx drifted_alpha(cplx s) { return cplx(0, 1) * s + 0.5 * s * s; }

PsiValue drifted_psi(double t, double t0, double eps) {
  const cplx at = drifted_alpha(t);
  auto gap = [&](cplx s) { return (at - drifted_alpha(s)).real(); };
  // rectangle t0 -> t0 + i tau -> t + i tau -> t; pick tau minimising the peak of the exponent
  auto peak_of = [&](double tau) {
    double p = -1e300;
    const int n = 200;
    for (int k = 0; k <= n; ++k) {
      const double u = static_cast<double>(k) / n;
      p = std::max({p, gap(cplx(t0, u * tau)), gap(cplx(t0 + u * (t - t0), tau)), gap(cplx(t, u * tau))});
    }
    return p;
  };
  double tau = 0, peak = peak_of(0);
  for (int k = 1; k <= 60; ++k) {
    const double c = -3.0 * k / 60;
    const double p = peak_of(c);
    if (p < peak) {
      peak = p;
      tau = c;
    }
  }
  auto expo = [&](cplx s) { return (at - drifted_alpha(s) - peak) / eps; };
  cplx sum = 0;
  if (tau == 0) {
    sum = segment_integral(expo, t0, t);
  } else {
    sum += segment_integral(expo, t0, cplx(t0, tau));
    sum += segment_integral(expo, cplx(t0, tau), cplx(t, tau));
    sum += segment_integral(expo, cplx(t, tau), t);
  }
  return {sum, peak / eps};
}

DelayAnalysis hopf_delay(const SlowFastSystem& sys, double y0, double eps, double r_threshold,
                         const HopfDelayOptions& opts) {
  sys.validate();
  if (sys.n_fast != 2 || sys.n_slow != 1) throw ConfigError("hopf_delay needs two fast and one slow variable");
  if (!(y0 < 0)) throw ConfigError("hopf_delay needs y0 < 0");
  if (!(eps > 0) || !(r_threshold > 0)) throw ConfigError("eps and threshold must be positive");
  if (!(opts.y_end > -y0)) throw ConfigError("y_end must lie beyond the expected exit");

  DelayAnalysis res;
  res.threshold = r_threshold;
  res.alt_threshold = r_threshold * opts.threshold_factor;

  // reduced flow with the accumulated growth rate of the fast equilibrium
  auto xstar_guess = std::make_shared<Vec>(Vec{0.0, 0.0});
  auto xstar = [&sys, xstar_guess](double y) {
    const NewtonResult e = fast_equilibrium(sys, {y}, *xstar_guess);
    if (!e.converged) throw ConvergenceError("lost the fast equilibrium at y = " + std::to_string(y));
    *xstar_guess = e.x;
    return e.x;
  };
  auto lead = [&](double y) {
    const Vec x = xstar(y);
    Eigen::EigenSolver<Mat> es(sys.fast_jacobian(x, {y}), false);
    cplx best = es.eigenvalues()(0);
    for (int i = 1; i < es.eigenvalues().size(); ++i)
      if (es.eigenvalues()(i).real() > best.real() ||
          (es.eigenvalues()(i).real() == best.real() && es.eigenvalues()(i).imag() > best.imag()))
        best = es.eigenvalues()(i);
    return best;
  };
  auto red = odeflow::make_field(3, [&](const Vec& s, double) {
    const Vec x = xstar(s[0]);
    const cplx l = lead(s[0]);
    return Vec{sys.slow(x, {s[0]})[0], l.real(), l.imag()};
  });
  odeflow::Options ro;
  ro.rtol = 1e-11;
  ro.atol = 1e-13;
  ro.dense = true;
  ro.record_steps = true;
  ro.stop_when = [&](const Vec& s, double) { return s[0] >= opts.y_end; };
  auto reduced = std::make_shared<odeflow::Trajectory>(odeflow::integrate(red, {y0, 0.0, 0.0}, 0.0, 1e4, ro));
  if (!reduced->ok()) throw NumericalError("reduced flow failed: " + reduced->message);
  const double T_end = reduced->final_time();
  res.alpha = [reduced, T_end](double t) {
    const Vec s = reduced->at(std::clamp(t, 0.0, T_end));
    return cplx(s[1], s[2]);
  };
  // zero of Re alpha after its minimum
  std::size_t imin = 0;
  for (std::size_t i = 0; i < reduced->times.size(); ++i)
    if (reduced->states[i][1] < reduced->states[imin][1]) imin = i;
  std::size_t iz = imin;
  while (iz < reduced->times.size() && reduced->states[iz][1] < 0) ++iz;
  if (iz == reduced->times.size()) throw NoExitError("the growth integral never returns to zero before y_end");
  const double tz = toms([&](double t) { return reduced->at(t)[1]; }, reduced->times[iz - 1], reduced->times[iz]);
  res.predicted_exit = reduced->at(tz)[0];

  res.psi = [reduced, T_end, eps](double t, double t0) {
    auto ra = [&](double s) { return reduced->at(std::clamp(s, 0.0, T_end)); };
    const Vec at = ra(t);
    double peak = -1e300;
    for (int k = 0; k <= 400; ++k) {
      const Vec as = ra(t0 + (t - t0) * k / 400.0);
      peak = std::max(peak, at[1] - as[1]);
    }
    auto expo = [&](double s) {
      const Vec as = ra(s);
      return cplx(at[1] - as[1] - peak, at[2] - as[2]) / eps;
    };
    const double re = gk([&](double s) { return std::exp(expo(s)).real(); }, t0, t);
    const double im = gk([&](double s) { return std::exp(expo(s)).imag(); }, t0, t);
    return PsiValue{cplx(re, im), peak / eps};
  };

  // full system
  auto field = odeflow::make_field(3, [&sys, eps](const Vec& s, double) {
    Vec r = sys.fast({s[0], s[1]}, {s[2]});
    return Vec{r[0] / eps, r[1] / eps, sys.slow({s[0], s[1]}, {s[2]})[0]};
  });
  *xstar_guess = {0.0, 0.0};
  const Vec x0 = xstar(y0);
  odeflow::Options o;
  o.rtol = opts.rtol;
  o.atol = 1e-300;  // relative accuracy only: the deviation becomes exponentially small
  o.h0 = 1e-3 * eps;
  o.dense = true;
  o.record_steps = false;
  odeflow::EventSpec end;
  end.g = [&](const Vec& s, double) { return s[2] - opts.y_end; };
  end.direction = +1;
  end.terminal = true;
  o.events = {end};
  const Vec s0{x0[0] + opts.r0 * std::cos(opts.phi0), x0[1] + opts.r0 * std::sin(opts.phi0), y0};
  const auto tr = odeflow::integrate(field, s0, 0.0, 1e4, o);
  if (!tr.ok()) throw NumericalError("integration failed: " + tr.message, tr.final_time(), tr.final_state());

  const double tf = tr.final_time();
  const int n = std::max(4000, static_cast<int>(8 * tf / eps));
  Vec ys;
  *xstar_guess = x0;
  for (int i = 0; i <= n; ++i) {
    const double t = tf * i / n;
    const Vec s = tr.at(t);
    const Vec xs = xstar(s[2]);
    res.t.push_back(t);
    ys.push_back(s[2]);
    res.r.push_back(std::hypot(s[0] - xs[0], s[1] - xs[1]));
  }
  const double te = first_up_crossing(res.t, res.r, r_threshold);
  if (!std::isfinite(te))
    throw NoExitError("deviation never crossed the threshold " + std::to_string(r_threshold) + " before y = " +
                          std::to_string(opts.y_end),
                      tf, tr.final_state());
  res.observed_exit = tr.at(te)[2];
  const double ta = first_up_crossing(res.t, res.r, res.alt_threshold);
  res.alt_exit = std::isfinite(ta) ? tr.at(ta)[2] : std::numeric_limits<double>::quiet_NaN();
  res.threshold_shift = std::abs(res.alt_exit - res.observed_exit);

  const Vec se = tr.final_state();
  const Vec xs = xstar(se[2]);
  res.check_y = se[2];
  res.check_radius = std::hypot(se[0] - xs[0], se[1] - xs[1]);
  const double cyc = opts.cycle_radius ? opts.cycle_radius(res.check_y) : std::sqrt(std::max(res.check_y, 0.0));
  res.cycle_error = std::abs(res.check_radius - cyc);
  res.t = ys;  // sampled against the slow variable
  return res;
}

namespace {

struct MpExit {
  double exit = std::numeric_limits<double>::quiet_NaN();
  double alt_exit = std::numeric_limits<double>::quiet_NaN();
  double abs_at_exit = 0;
  Vec t, r;
};

// Taylor integration of eps z' = (t + i) z - |z|^2 z + eps in `digits` decimal digits.
MpExit mp_drifted(double t0, double eps, double t_end, double level, double alt_level, int N, int digits) {
  std::lock_guard<std::mutex> lk(mp_mutex);
  const unsigned saved = mp::default_precision();
  mp::default_precision(digits);
  MpExit out;
  {
    std::vector<mp> X(N + 1), Y(N + 1), PX(N + 1), PY(N + 1), QX(N + 1), QY(N + 1);
    mp x = 0, y = 0, t = t0, e = eps;
    const mp tol = boost::multiprecision::pow(mp(10), -(digits - 8));
    const double hi_level = std::max(level, alt_level);
    auto eval = [&](const mp& H, mp& sx, mp& sy) {
      sx = X[N];
      sy = Y[N];
      for (int k = N - 1; k >= 0; --k) {
        sx = sx * H + X[k];
        sy = sy * H + Y[k];
      }
    };
    auto crossing = [&](double h, double lv) {
      double a = 0, b = h;
      mp sx, sy;
      for (int it = 0; it < 60; ++it) {
        const double m = 0.5 * (a + b);
        eval(mp(m), sx, sy);
        (boost::multiprecision::sqrt(sx * sx + sy * sy).convert_to<double>() < lv ? a : b) = m;
      }
      return 0.5 * (a + b);
    };
    out.t.push_back(t0);
    out.r.push_back(0);
    double r_prev = 0;
    long steps = 0;
    while (t < t_end) {
      X[0] = x;
      Y[0] = y;
      for (int k = 0; k < N; ++k) {
        PX[k] = 0;
        PY[k] = 0;
        for (int j = 0; j <= k; ++j) {
          PX[k] += X[j] * X[k - j] - Y[j] * Y[k - j];
          PY[k] += X[j] * Y[k - j] + Y[j] * X[k - j];
        }
        QX[k] = 0;
        QY[k] = 0;
        for (int j = 0; j <= k; ++j) {
          QX[k] += PX[j] * X[k - j] + PY[j] * Y[k - j];
          QY[k] += PY[j] * X[k - j] - PX[j] * Y[k - j];
        }
        mp rx = t * X[k] - Y[k] - QX[k];
        mp ry = X[k] + t * Y[k] - QY[k];
        if (k > 0) {
          rx += X[k - 1];
          ry += Y[k - 1];
        } else {
          rx += e;
        }
        X[k + 1] = rx / (e * (k + 1));
        Y[k + 1] = ry / (e * (k + 1));
      }
      const mp scale = e * 1e-3 + boost::multiprecision::sqrt(x * x + y * y);
      const mp cN = abs(X[N]) + abs(Y[N]), cN1 = abs(X[N - 1]) + abs(Y[N - 1]);
      double h = 0.1;
      if (cN > 0) h = std::min(h, boost::multiprecision::pow(tol * scale / cN, mp(1.0) / N).convert_to<double>());
      if (cN1 > 0)
        h = std::min(h, boost::multiprecision::pow(tol * scale / cN1, mp(1.0) / (N - 1)).convert_to<double>());
      h *= 0.7;
      mp sx, sy;
      eval(mp(h), sx, sy);
      const double r = boost::multiprecision::sqrt(sx * sx + sy * sy).convert_to<double>();
      const double tc = t.convert_to<double>();
      if (!std::isfinite(out.alt_exit) && r_prev < alt_level && r >= alt_level) out.alt_exit = tc + crossing(h, alt_level);
      if (!std::isfinite(out.exit) && r_prev < level && r >= level) {
        out.exit = tc + crossing(h, level);
        out.abs_at_exit = level;
      }
      x = sx;
      y = sy;
      t += h;
      out.t.push_back(t.convert_to<double>());
      out.r.push_back(r);
      r_prev = r;
      if (++steps > 2'000'000) break;
      if (r >= hi_level && std::isfinite(out.exit) && std::isfinite(out.alt_exit)) break;
    }
  }
  mp::default_precision(saved);
  return out;
}

}  // namespace

DelayAnalysis buffer_point(double t0, double eps, const BufferOptions& opts) {
  if (!(t0 < 0)) throw ConfigError("buffer_point needs t0 < 0");
  if (!(eps > 0) || eps > 0.1) throw ConfigError("buffer_point needs 0 < eps <= 0.1");
  DelayAnalysis res;
  res.threshold = opts.threshold > 0 ? opts.threshold : 10 * std::sqrt(eps);
  res.alt_threshold = res.threshold * opts.threshold_factor;
  res.alpha = [t0](double t) { return drifted_alpha(t) - drifted_alpha(t0); };
  res.psi = [eps](double t, double s0) { return drifted_psi(t, s0, eps); };

  auto re_alpha = [](cplx s) { return drifted_alpha(s).real(); };
  res.predicted_exit = level_line_exit(re_alpha, t0, opts.t_end, opts.grid_h);
  const double far = -(opts.t_end + 1);
  const double b = level_line_exit(re_alpha, far, opts.t_end, opts.grid_h);
  if (b < opts.t_end - opts.grid_h) res.buffer_point = b;

  // roundoff at the bottom of Re alpha is amplified by exp(L / eps)
  const double L = 0.5 * std::min(res.predicted_exit * res.predicted_exit, t0 * t0);
  res.precision_digits = static_cast<int>(std::ceil(L / (eps * std::log(10.0)))) + 25;
  const MpExit run =
      mp_drifted(t0, eps, opts.t_end, res.threshold, res.alt_threshold, opts.taylor_order, res.precision_digits);
  res.t = run.t;
  res.r = run.r;
  if (!std::isfinite(run.exit))
    throw NoExitError("|z| never crossed the threshold before t = " + std::to_string(opts.t_end), opts.t_end);
  res.observed_exit = run.exit;
  res.alt_exit = run.alt_exit;
  res.threshold_shift = std::abs(run.alt_exit - run.exit);

  double nm = 0;
  for (double t = t0; t <= run.exit; t += 1e-3) nm = std::max(nm, eps / std::abs(cplx(t, 1)));
  res.naive_max = nm;
  res.exit_discrepancy = std::abs(run.abs_at_exit - eps / std::abs(cplx(run.exit, 1)));

  if (opts.double_precision_check) {
    const SlowFastSystem sys = drifted_hopf(eps);
    auto field = odeflow::make_field(3, [&sys, eps](const Vec& s, double) {
      const Vec r = sys.fast({s[0], s[1]}, {s[2]});
      return Vec{r[0] / eps, r[1] / eps, 1.0};
    });
    odeflow::Options o;
    o.rtol = 1e-12;
    o.atol = 1e-15;
    o.record_steps = false;
    const double thr = res.threshold;
    o.stop_when = [thr](const Vec& s, double) { return std::hypot(s[0] + s[2], s[1]) > thr; };
    const auto tr = odeflow::integrate(field, {-t0, 0.0, t0}, t0, opts.t_end, o);
    if (tr.status == odeflow::Status::event_stop) res.double_precision_exit = tr.final_state()[2];
  }
  return res;
}

DelayAnalysis buffer_point(const SlowFastSystem& sys, double t0, double eps, const BufferOptions& opts) {
  sys.validate();
  if (sys.n_fast != 2 || sys.n_slow != 1) throw ConfigError("buffer_point needs two fast and one slow variable");
  const SlowFastSystem ref = drifted_hopf(eps);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-2, 2);
  for (int k = 0; k < 16; ++k) {
    const Vec x{U(rng), U(rng)}, y{U(rng)};
    const Vec a = sys.fast(x, y), b = ref.fast(x, y);
    const double ga = sys.slow(x, y)[0];
    if (std::abs(a[0] - b[0]) > 1e-10 * (1 + std::abs(b[0])) || std::abs(a[1] - b[1]) > 1e-10 * (1 + std::abs(b[1])) ||
        std::abs(ga - 1) > 1e-12)
      throw ConfigError("buffer_point is implemented for the drifted Hopf family only");
  }
  return buffer_point(t0, eps, opts);
}

}  // namespace perturblab::slowfast
