#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "perturblab/odeflow.hpp"

namespace perturblab::odeflow {

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

bool all_finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

Vec VectorField::operator()(const Vec& x, double t) const {
  Vec out = rhs(x, t, params);
  if (static_cast<int>(out.size()) != dimension)
    throw Error("vector field '" + name + "' returned wrong dimension");
  return out;
}

Mat VectorField::jacobian_at(const Vec& x, double t) const {
  if (jacobian) return jacobian(x, t, params);
  const int n = dimension;
  Mat J(n, n);
  const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  Vec xp = x, xm = x;
  for (int j = 0; j < n; ++j) {
    const double h = base * std::max(1.0, std::abs(x[j]));
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    Vec fp = (*this)(xp, t), fm = (*this)(xm, t);
    for (int i = 0; i < n; ++i) J(i, j) = (fp[i] - fm[i]) / (2 * h);
    xp[j] = xm[j] = x[j];
  }
  return J;
}

double VectorField::divergence(const Vec& x, double t) const {
  return jacobian_at(x, t).trace();
}

VectorField make_field(int dimension, std::function<Vec(const Vec&, double)> f, std::string name,
                       std::optional<double> period) {
  VectorField v;
  v.dimension = dimension;
  v.rhs = [f = std::move(f)](const Vec& x, double t, const Vec&) { return f(x, t); };
  v.name = std::move(name);
  v.period = period;
  return v;
}

std::string to_string(Status s) {
  switch (s) {
    case Status::ok: return "ok";
    case Status::step_underflow: return "step_underflow";
    case Status::nonfinite: return "nonfinite";
    case Status::max_steps: return "max_steps";
    case Status::escaped: return "escaped";
    case Status::event_stop: return "event_stop";
  }
  return "unknown";
}

Vec DenseSegment::eval(double t) const {
  const double th = (t - t0) / h;
  const double th1 = 1.0 - th;
  Vec y(r1.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
  return y;
}

Vec Trajectory::at(double t) const {
  if (dense.empty()) throw Error("trajectory has no dense output");
  const bool forward = dense.front().h > 0;
  auto it = std::lower_bound(dense.begin(), dense.end(), t, [forward](const DenseSegment& s, double v) {
    return forward ? s.t0 + s.h < v : s.t0 + s.h > v;
  });
  if (it == dense.end()) --it;
  return it->eval(t);
}

Trajectory integrate(const VectorField& field, const Vec& x0, double t0, double t1,
                     const Options& opts) {
  const int n = field.dimension;
  if (static_cast<int>(x0.size()) != n) throw Error("initial state has wrong dimension");
  if (!(opts.rtol > 0) || !(opts.atol >= 0)) throw Error("tolerances must be positive");

  Trajectory tr;
  tr.stats.rtol = opts.rtol;
  tr.stats.atol = opts.atol;
  tr.times.push_back(t0);
  tr.states.push_back(x0);
  if (t1 == t0) return tr;

  const double dir = t1 > t0 ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);
  auto f = [&](const Vec& x, double t) {
    ++tr.stats.evaluations;
    return field(x, t);
  };

  Vec y = x0;
  double t = t0;
  Vec k1 = f(y, t);
  if (!all_finite(k1)) {
    tr.status = Status::nonfinite;
    tr.message = "non-finite right-hand side at start";
    return tr;
  }

  auto scale = [&](double a, double b) {
    return opts.atol + opts.rtol * std::max(std::abs(a), std::abs(b));
  };

  double h = opts.h0;
  if (h <= 0) {
    double dn0 = 0, dn1 = 0;
    for (int i = 0; i < n; ++i) {
      double sk = scale(y[i], y[i]);
      dn0 += (y[i] / sk) * (y[i] / sk);
      dn1 += (k1[i] / sk) * (k1[i] / sk);
    }
    dn0 = std::sqrt(dn0 / n);
    dn1 = std::sqrt(dn1 / n);
    double h0 = (dn0 < 1e-10 || dn1 < 1e-10) ? 1e-6 : 0.01 * dn0 / dn1;
    h0 = std::min(h0, span);
    Vec y1(n);
    for (int i = 0; i < n; ++i) y1[i] = y[i] + dir * h0 * k1[i];
    Vec f1 = f(y1, t + dir * h0);
    double dn2 = 0;
    for (int i = 0; i < n; ++i) {
      double sk = scale(y[i], y[i]);
      dn2 += ((f1[i] - k1[i]) / sk) * ((f1[i] - k1[i]) / sk);
    }
    dn2 = std::sqrt(dn2 / n) / h0;
    double der = std::max(dn1, dn2);
    double h1 = der <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / der, 0.2);
    h = std::min(100 * h0, h1);
  }
  h = std::min({h, opts.hmax, span});

  std::vector<int> event_counts(opts.events.size(), 0);
  Vec g_prev(opts.events.size());
  for (std::size_t e = 0; e < opts.events.size(); ++e) g_prev[e] = opts.events[e].g(y, t);

  Vec k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ys(n), ynew(n), err(n);
  bool last = false;
  double fac_old = 1e-4;
  bool reject = false;

  while (true) {
    if (tr.stats.steps >= opts.max_steps) {
      tr.status = Status::max_steps;
      tr.message = "maximum number of steps reached";
      break;
    }
    const double remaining = std::abs(t1 - t);
    if (h >= remaining * (1 - 1e-12)) {
      h = remaining;
      last = true;
    }
    const double hmin = 16 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
    if (h < hmin) {
      tr.status = Status::step_underflow;
      std::ostringstream os;
      os << "step size underflow at t=" << t;
      tr.message = os.str();
      double fn = norm2(k1);
      if (fn > 0) tr.escape_time_estimate = t + dir * norm2(y) / fn;
      break;
    }
    const double hs = dir * h;

    for (int i = 0; i < n; ++i) ys[i] = y[i] + hs * a21 * k1[i];
    k2 = f(ys, t + c2 * hs);
    for (int i = 0; i < n; ++i) ys[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
    k3 = f(ys, t + c3 * hs);
    for (int i = 0; i < n; ++i) ys[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    k4 = f(ys, t + c4 * hs);
    for (int i = 0; i < n; ++i)
      ys[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    k5 = f(ys, t + c5 * hs);
    for (int i = 0; i < n; ++i)
      ys[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    k6 = f(ys, t + hs);
    for (int i = 0; i < n; ++i)
      ynew[i] = y[i] + hs * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    k7 = f(ynew, t + hs);

    double errn = 0;
    bool finite = all_finite(ynew) && all_finite(k7);
    if (finite) {
      for (int i = 0; i < n; ++i) {
        double e = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        double sk = scale(y[i], ynew[i]);
        errn += (e / sk) * (e / sk);
      }
      errn = std::sqrt(errn / n);
      finite = std::isfinite(errn);
    }
    if (!finite) {
      ++tr.stats.rejected;
      h *= 0.25;
      last = false;
      reject = true;
      if (h < hmin) {
        tr.status = Status::nonfinite;
        tr.message = "non-finite right-hand side";
        break;
      }
      continue;
    }

    // Lund-stabilized step control (Hairer's dopri5 defaults).
    const double expo = 0.2 - 0.04;
    double fac11 = std::pow(std::max(errn, 1e-300), expo);
    double fac = fac11 / std::pow(fac_old, 0.04);
    fac = std::max(1.0 / 10.0, std::min(1.0 / 0.2, fac / 0.9));
    double hnew = h / fac;

    if (errn <= 1.0) {
      fac_old = std::max(errn, 1e-4);
      ++tr.stats.steps;
      DenseSegment seg;
      if (opts.dense || !opts.events.empty()) {
        seg.t0 = t;
        seg.h = hs;
        seg.r1 = y;
        seg.r2.resize(n);
        seg.r3.resize(n);
        seg.r4.resize(n);
        seg.r5.resize(n);
        for (int i = 0; i < n; ++i) {
          seg.r2[i] = ynew[i] - y[i];
          seg.r3[i] = hs * k1[i] - seg.r2[i];
          seg.r4[i] = seg.r2[i] - hs * k7[i] - seg.r3[i];
          seg.r5[i] = hs * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] +
                            d7 * k7[i]);
        }
      }
      const double tnew = last ? t1 : t + hs;

      std::vector<SectionEvent> found;
      for (std::size_t e = 0; e < opts.events.size(); ++e) {
        const EventSpec& ev = opts.events[e];
        double gn = ev.g(ynew, tnew);
        double gp = g_prev[e];
        g_prev[e] = gn;
        bool crossed = (gp < 0 && gn >= 0) || (gp > 0 && gn <= 0);
        int edir = gn > gp ? +1 : -1;
        if (!crossed || !(ev.direction == 0 || ev.direction == edir)) continue;
        auto gfun = [&](double s) { return ev.g(seg.eval(s), s); };
        double ta = t, tb = tnew, fa = gp, fb = gn;
        double troot = tb;
        if (fb != 0) {
          std::uintmax_t it = 100;
          auto tolf = [&](double a, double b) { return std::abs(b - a) <= opts.event_time_tol; };
          if (ta > tb) {
            std::swap(ta, tb);
            std::swap(fa, fb);
          }
          auto r = boost::math::tools::toms748_solve(gfun, ta, tb, fa, fb, tolf, it);
          troot = 0.5 * (r.first + r.second);
        }
        SectionEvent se;
        se.time = troot;
        se.state = seg.eval(troot);
        se.direction = edir;
        se.event_id = static_cast<int>(e);
        if (ev.gradient) {
          Vec gr = ev.gradient(se.state, troot);
          Vec fv = field(se.state, troot);
          double dot = 0, gn2 = 0;
          for (int i = 0; i < n; ++i) {
            dot += gr[i] * fv[i];
            gn2 += gr[i] * gr[i];
          }
          se.transversal = std::abs(dot) >= opts.transversality_tol * norm2(fv) * std::sqrt(gn2);
        }
        found.push_back(std::move(se));
      }
      std::sort(found.begin(), found.end(), [dir](const SectionEvent& a, const SectionEvent& b) {
        return dir > 0 ? a.time < b.time : a.time > b.time;
      });
      bool stop = false;
      SectionEvent stop_event;
      for (auto& se : found) {
        const EventSpec& ev = opts.events[se.event_id];
        se.crossing_index = event_counts[se.event_id]++;
        tr.events.push_back(se);
        if (ev.terminal && event_counts[se.event_id] >= ev.max_count) {
          stop = true;
          stop_event = se;
          break;
        }
      }
      if (stop) {
        if (opts.dense) tr.dense.push_back(std::move(seg));
        tr.times.push_back(stop_event.time);
        tr.states.push_back(stop_event.state);
        tr.status = Status::event_stop;
        break;
      }
      if (opts.dense) tr.dense.push_back(std::move(seg));

      y = ynew;
      k1 = k7;
      t = tnew;
      if (opts.record_steps || last) {
        tr.times.push_back(t);
        tr.states.push_back(y);
      }
      if (norm_inf(y) > opts.blowup_norm) {
        tr.status = Status::escaped;
        double fn = norm2(k1);
        tr.escape_time_estimate = t + dir * (fn > 0 ? norm2(y) / fn : 0.0);
        tr.message = "solution exceeded blow-up norm";
        if (!opts.record_steps) {
          tr.times.push_back(t);
          tr.states.push_back(y);
        }
        break;
      }
      if (opts.stop_when && opts.stop_when(y, t)) {
        if (!opts.record_steps) {
          tr.times.push_back(t);
          tr.states.push_back(y);
        }
        tr.status = Status::event_stop;
        break;
      }
      if (last) break;
      if (std::abs(hnew) > opts.hmax) hnew = opts.hmax;
      if (reject) hnew = std::min(hnew, h);
      reject = false;
      h = hnew;
    } else {
      hnew = h / std::min(1.0 / 0.2, fac11 / 0.9);
      reject = true;
      last = false;
      ++tr.stats.rejected;
      h = hnew;
    }
  }
  return tr;
}

Trajectory integrate(const VectorField& field, const Vec& x0, std::pair<double, double> t_span,
                     double tol) {
  Options o;
  o.rtol = tol;
  o.atol = tol;
  return integrate(field, x0, t_span.first, t_span.second, o);
}

Vec flow(const VectorField& field, const Vec& x0, double t0, double t1, const Options& opts) {
  Options o = opts;
  o.record_steps = false;
  o.dense = false;
  Trajectory tr = integrate(field, x0, t0, t1, o);
  if (!tr.ok()) throw NumericalError("flow: " + tr.message, tr.final_time(), tr.final_state());
  return tr.final_state();
}

Trajectory integrate_implicit_midpoint(const VectorField& field, const Vec& x0, double t0,
                                       double t1, long n_steps, double newton_tol) {
  const int n = field.dimension;
  Trajectory tr;
  tr.times.push_back(t0);
  tr.states.push_back(x0);
  const double h = (t1 - t0) / n_steps;
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(x0.data(), n);
  for (long s = 0; s < n_steps; ++s) {
    const double t = t0 + s * h;
    const double tm = t + 0.5 * h;
    Vec fy = field(Vec(y.data(), y.data() + n), t);
    ++tr.stats.evaluations;
    Eigen::VectorXd z = y + h * Eigen::Map<Eigen::VectorXd>(fy.data(), n);
    bool converged = false;
    for (int it = 0; it < 50; ++it) {
      Eigen::VectorXd mid = 0.5 * (y + z);
      Vec m(mid.data(), mid.data() + n);
      Vec fm = field(m, tm);
      ++tr.stats.evaluations;
      Eigen::VectorXd F = z - y - h * Eigen::Map<Eigen::VectorXd>(fm.data(), n);
      Mat J = Mat::Identity(n, n) - 0.5 * h * field.jacobian_at(m, tm);
      Eigen::VectorXd dz = J.partialPivLu().solve(-F);
      z += dz;
      if (!z.allFinite()) break;
      if (dz.lpNorm<Eigen::Infinity>() <= newton_tol * std::max(1.0, z.lpNorm<Eigen::Infinity>())) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      tr.status = z.allFinite() ? Status::step_underflow : Status::nonfinite;
      tr.message = "implicit midpoint Newton iteration failed";
      break;
    }
    y = z;
    ++tr.stats.steps;
    tr.times.push_back(t0 + (s + 1) * h);
    tr.states.emplace_back(y.data(), y.data() + n);
  }
  return tr;
}

std::string trajectory_csv(const Trajectory& traj, bool with_events) {
  std::ostringstream os;
  os.precision(17);
  const std::size_t n = traj.states.empty() ? 0 : traj.states.front().size();
  os << "t";
  for (std::size_t i = 0; i < n; ++i) os << ",x" << (i + 1);
  if (with_events) os << ",event_index,direction";
  os << "\n";
  if (with_events) {
    for (const auto& e : traj.events) {
      os << e.time;
      for (double v : e.state) os << "," << v;
      os << "," << e.crossing_index << "," << e.direction << "\n";
    }
    return os.str();
  }
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    os << traj.times[k];
    for (double v : traj.states[k]) os << "," << v;
    os << "\n";
  }
  return os.str();
}

}  // namespace perturblab::odeflow
