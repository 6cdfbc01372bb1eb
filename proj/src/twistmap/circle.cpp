#include <unsupported/Eigen/FFT>

#include <cmath>
#include <limits>

#include "perturblab/twistmap.hpp"

namespace perturblab::twistmap {

namespace {

using CVec = std::vector<cplx>;

// Periodic functions on an N-point grid, band-limited to |k| <= K. Coefficients in FFT order.
class Spectral {
 public:
  Spectral(int K, int N) : K_(K), N_(N) {}
  int K() const { return K_; }
  int N() const { return N_; }
  int index(int k) const { return k >= 0 ? k : N_ + k; }

  CVec coeffs(const Vec& vals) {
    CVec in(vals.begin(), vals.end()), out;
    fft_.fwd(out, in);
    for (int i = 0; i < N_; ++i) {
      const int k = i <= N_ / 2 ? i : i - N_;
      out[i] = std::abs(k) <= K_ && 2 * std::abs(k) != N_ ? out[i] / static_cast<double>(N_) : cplx(0);
    }
    return out;
  }
  Vec values(const CVec& c) {
    CVec s(c.begin(), c.end()), out;
    for (auto& x : s) x *= static_cast<double>(N_);
    fft_.inv(out, s);
    Vec r(N_);
    for (int i = 0; i < N_; ++i) r[i] = out[i].real();
    return r;
  }
  CVec shift(const CVec& c, double a) const {
    CVec r(c);
    for (int k = -K_; k <= K_; ++k) r[index(k)] *= std::polar(1.0, k * a);
    return r;
  }
  CVec deriv(const CVec& c) const {
    CVec r(N_, 0.0);
    for (int k = -K_; k <= K_; ++k) r[index(k)] = cplx(0, k) * c[index(k)];
    return r;
  }
  CVec from_table(const std::vector<cplx>& t, int Kt) const {
    CVec r(N_, 0.0);
    const int Km = std::min(Kt, K_);
    for (int k = -Km; k <= Km; ++k) r[index(k)] = t[k + Kt];
    return r;
  }
  std::vector<cplx> to_table(const CVec& c) const {
    std::vector<cplx> t(2 * K_ + 1);
    for (int k = -K_; k <= K_; ++k) t[k + K_] = c[index(k)];
    return t;
  }

 private:
  int K_, N_;
  Eigen::FFT<double> fft_;
};

double eval_table(const std::vector<cplx>& t, int K, double psi) {
  double s = t.empty() ? 0.0 : t[K].real();
  for (int k = 1; k <= K; ++k) s += 2 * (t[k + K] * std::polar(1.0, k * psi)).real();
  return s;
}

double sup_on_grid(const std::vector<cplx>& t, int K) {
  double m = 0;
  const int n = std::max(512, 8 * K);
  for (int j = 0; j < n; ++j) m = std::max(m, std::abs(eval_table(t, K, kTwoPi * j / n)));
  return m;
}

double action_for(const TwistMap& m, double alpha) {
  if (!m.omega) return alpha;
  double I = alpha;
  for (int it = 0; it < 100; ++it) {
    const double d = (m.Omega(I) - alpha) / m.Omega_prime(I);
    I -= d;
    if (std::abs(d) < 1e-15 * (1 + std::abs(I))) return I;
  }
  throw ConvergenceError("could not invert the frequency profile");
}

}  // namespace

double InvariantCircle::u(double psi) const { return eval_table(u_coeffs, K, psi); }
double InvariantCircle::v(double psi) const { return eval_table(v_coeffs, K, psi); }
double InvariantCircle::sup_u() const { return sup_on_grid(u_coeffs, K); }
double InvariantCircle::sup_v() const { return sup_on_grid(v_coeffs, K); }

double InvariantCircle::conjugacy_defect(const TwistMap& m, int grid) const {
  const double alpha = kTwoPi * omega.to_double();
  double worst = 0;
  for (int j = 0; j < grid; ++j) {
    const double psi = kTwoPi * j / grid;
    const Point img = m(at(psi)), tgt = at(psi + alpha);
    worst = std::max({worst, std::abs(img.phi - tgt.phi), std::abs(img.I - tgt.I)});
  }
  return worst;
}

InvariantCircle invariant_circle(const TwistMap& m, const diophantine::DiophantineFrequency& omega, int K,
                                 double tol, const CircleOptions& opts) {
  if (K < 4) throw ConfigError("invariant_circle needs K >= 4");
  if (!(tol > 0)) throw ConfigError("invariant_circle needs tol > 0");
  if (!omega.C || !omega.nu) throw ConfigError("invariant_circle needs a certified Diophantine frequency");
  const double alpha = kTwoPi * omega.to_double();
  const int K_max = K << opts.max_doublings;

  InvariantCircle out;
  out.omega = omega;

  int Kc = K;
  if (opts.initial) Kc = std::clamp(opts.initial->K, K, K_max);
  auto sp = std::make_unique<Spectral>(Kc, opts.grid_factor * Kc);
  CVec den;
  auto setup_denominators = [&] {
    den.assign(sp->N(), cplx(0));
    for (int k = 1; k <= sp->K(); ++k) {
      try {
        diophantine::small_denominator_bound(omega, k);
      } catch (const Error& e) {
        throw DenominatorGuardError(e.what(), k);
      }
      den[sp->index(k)] = std::polar(1.0, k * alpha) - 1.0;
      den[sp->index(-k)] = std::conj(den[sp->index(k)]);
    }
  };
  setup_denominators();
  auto solve = [&](CVec h) {
    h[0] = 0;
    for (int k = 1; k <= sp->K(); ++k) {
      h[sp->index(k)] /= den[sp->index(k)];
      h[sp->index(-k)] /= den[sp->index(-k)];
    }
    return h;
  };

  CVec U, V;
  double Istar;
  if (opts.initial) {
    Istar = opts.initial->action;
    U = sp->from_table(opts.initial->u_coeffs, opts.initial->K);
    V = sp->from_table(opts.initial->v_coeffs, opts.initial->K);
  } else {
    // first iterate: v0 = L^{-1} g, u0 = L^{-1}(f + Omega' v0)
    Istar = action_for(m, alpha);
    const int N = sp->N();
    Vec f(N), g(N);
    for (int j = 0; j < N; ++j) {
      const double th = kTwoPi * j / N;
      const Point y = m({th, Istar});
      f[j] = y.phi - th - m.Omega(Istar);
      g[j] = y.I - Istar;
    }
    V = solve(sp->coeffs(g));
    CVec F = sp->coeffs(f);
    for (int i = 0; i < N; ++i) F[i] += m.Omega_prime(Istar) * V[i];
    U = solve(F);
    out.u0_coeffs = sp->to_table(U);
    out.v0_coeffs = sp->to_table(V);
  }

  auto normalize_phase = [&] {
    const double mu = U[0].real();
    if (mu == 0.0) return;
    U = sp->shift(U, -mu);
    V = sp->shift(V, -mu);
    U[0] = 0;
  };
  auto tail = [&] {
    double t = 0;
    for (int k = sp->K() / 2 + 1; k <= sp->K(); ++k)
      t += std::abs(U[sp->index(k)]) + std::abs(U[sp->index(-k)]) + std::abs(V[sp->index(k)]) +
           std::abs(V[sp->index(-k)]);
    return t;
  };
  auto regrid = [&](int Knew) {
    const auto tu = sp->to_table(U), tv = sp->to_table(V);
    const int Kold = sp->K();
    sp = std::make_unique<Spectral>(Knew, opts.grid_factor * Knew);
    U = sp->from_table(tu, Kold);
    V = sp->from_table(tv, Kold);
    setup_denominators();
  };

  double best = std::numeric_limits<double>::infinity();
  int stall = 0;
  for (int it = 0;; ++it) {
    const int N = sp->N();
    const Vec u = sp->values(U), v = sp->values(V);
    const Vec us = sp->values(sp->shift(U, alpha)), vs = sp->values(sp->shift(V, alpha));
    Vec E1(N), E2(N);
    double defect = 0;
    for (int j = 0; j < N; ++j) {
      const double th = kTwoPi * j / N;
      const Point y = m({th + u[j], Istar + v[j]});
      E1[j] = y.phi - (th + alpha + us[j]);
      E2[j] = y.I - (Istar + vs[j]);
      defect = std::max({defect, std::abs(E1[j]), std::abs(E2[j])});
    }
    if (!std::isfinite(defect)) defect = std::numeric_limits<double>::infinity();
    out.defect_history.push_back(defect);
    out.newton_iterations = it;

    if (defect < tol) {
      const double t = tail();
      if (t < tol / 10) break;
      if (sp->K() < K_max) {
        regrid(2 * sp->K());
        best = std::numeric_limits<double>::infinity();
        stall = 0;
        continue;
      }
      throw CircleDivergence("tail coefficients do not decay within K = " + std::to_string(K_max),
                             out.defect_history);
    }
    if (!std::isfinite(defect) || defect > 1.0 || defect > opts.divergence_factor * best)
      throw CircleDivergence("Newton iteration diverged", out.defect_history);
    if (defect < 0.5 * best) {
      best = defect;
      stall = 0;
    } else if (++stall >= 3) {
      if (sp->K() < K_max) {
        regrid(2 * sp->K());
        best = std::numeric_limits<double>::infinity();
        stall = 0;
        continue;
      }
      throw CircleDivergence("Newton iteration stalled at defect " + std::to_string(defect),
                             out.defect_history);
    }
    if (it >= opts.max_iterations)
      throw CircleDivergence("no convergence within the iteration limit", out.defect_history);

    // frame P = [L, N], N = rot(L)/|L|^2, so det P = 1
    const CVec dU = sp->deriv(U), dV = sp->deriv(V);
    const Vec l1 = sp->values(dU), l2 = sp->values(dV);
    const Vec l1s = sp->values(sp->shift(dU, alpha)), l2s = sp->values(sp->shift(dV, alpha));
    Vec eta1(N), eta2(N), S(N), L1(N), L2(N), N1(N), N2(N);
    for (int j = 0; j < N; ++j) {
      const double th = kTwoPi * j / N;
      L1[j] = 1 + l1[j];
      L2[j] = l2[j];
      const double nn = L1[j] * L1[j] + L2[j] * L2[j];
      N1[j] = -L2[j] / nn;
      N2[j] = L1[j] / nn;
      const double a1 = 1 + l1s[j], a2 = l2s[j], ns = a1 * a1 + a2 * a2;
      const double b1 = -a2 / ns, b2 = a1 / ns;
      // P(th+alpha)^{-1} = [[b2, -b1], [-a2, a1]]
      eta1[j] = b2 * E1[j] - b1 * E2[j];
      eta2[j] = -a2 * E1[j] + a1 * E2[j];
      const Eigen::Matrix2d J = m.jacobian_at({th + u[j], Istar + v[j]});
      const Eigen::Vector2d DN = J * Eigen::Vector2d(N1[j], N2[j]);
      S[j] = b2 * DN(0) - b1 * DN(1);
    }
    const CVec xi2t = solve(sp->coeffs(eta2));
    const Vec x2t = sp->values(xi2t);
    double mS = 0, mSx = 0, mE1 = 0;
    for (int j = 0; j < N; ++j) {
      mS += S[j];
      mSx += S[j] * x2t[j];
      mE1 += eta1[j];
    }
    if (std::abs(mS) < 1e-14 * N) throw CircleDivergence("twist average vanishes", out.defect_history);
    const double c = -(mE1 + mSx) / mS;
    Vec x2(N), rhs1(N);
    for (int j = 0; j < N; ++j) {
      x2[j] = x2t[j] + c;
      rhs1[j] = eta1[j] + S[j] * x2[j];
    }
    const Vec x1 = sp->values(solve(sp->coeffs(rhs1)));
    Vec du(N), dv(N);
    for (int j = 0; j < N; ++j) {
      du[j] = L1[j] * x1[j] + N1[j] * x2[j];
      dv[j] = L2[j] * x1[j] + N2[j] * x2[j];
    }
    const CVec cu = sp->coeffs(du), cv = sp->coeffs(dv);
    for (int i = 0; i < N; ++i) {
      U[i] += cu[i];
      V[i] += cv[i];
    }
    normalize_phase();
  }

  // fold the mean of v into the action so that v has zero average
  out.K = sp->K();
  Istar += V[0].real();
  V[0] = 0;
  out.action = Istar;
  out.u_coeffs = sp->to_table(U);
  out.v_coeffs = sp->to_table(V);
  out.tail_mass = tail();
  out.residual = std::max(out.defect_history.back(), out.conjugacy_defect(m, 512));
  return out;
}

namespace {

InvariantCircle extrapolate(const InvariantCircle& a, double ea, const InvariantCircle& b, double eb, double e) {
  const double s = (e - eb) / (eb - ea);
  InvariantCircle r = b;
  const int K = std::max(a.K, b.K);
  auto pad = [&](const std::vector<cplx>& t, int Kt) {
    std::vector<cplx> o(2 * K + 1, 0.0);
    for (int k = -Kt; k <= Kt; ++k) o[k + K] = t[k + Kt];
    return o;
  };
  const auto ua = pad(a.u_coeffs, a.K), ub = pad(b.u_coeffs, b.K);
  const auto va = pad(a.v_coeffs, a.K), vb = pad(b.v_coeffs, b.K);
  r.K = K;
  r.u_coeffs.resize(2 * K + 1);
  r.v_coeffs.resize(2 * K + 1);
  for (int i = 0; i < 2 * K + 1; ++i) {
    r.u_coeffs[i] = ub[i] + s * (ub[i] - ua[i]);
    r.v_coeffs[i] = vb[i] + s * (vb[i] - va[i]);
  }
  r.action = b.action + s * (b.action - a.action);
  return r;
}

}  // namespace

BreakupResult breakup_scan(const std::function<TwistMap(double)>& family,
                           const diophantine::DiophantineFrequency& omega, double eps_lo, double eps_hi,
                           double bisection_tol, const BreakupOptions& opts) {
  if (!(eps_hi > eps_lo) || !(bisection_tol > 0)) throw ConfigError("breakup_scan needs eps_lo < eps_hi, tol > 0");
  BreakupResult res;

  struct Known {
    double eps;
    InvariantCircle circle;
  };
  std::vector<Known> path;  // converged circles in increasing eps

  auto attempt = [&](double e, const InvariantCircle* guess) -> std::optional<InvariantCircle> {
    CircleOptions co = opts.circle;
    co.initial = guess;
    BreakupSample s{e, false, 0.0, 0};
    std::optional<InvariantCircle> c;
    try {
      c = invariant_circle(family(e), omega, opts.K, opts.tol, co);
      s.converged = true;
      s.defect = c->residual;
      s.K = c->K;
    } catch (const CircleDivergence& err) {
      s.defect = err.defect_history.empty() ? 0.0 : err.defect_history.back();
    }
    res.samples.push_back(s);
    return c;
  };
  // continue from the last known circle to e in steps of at most max_step
  auto reach = [&](double e) -> std::optional<InvariantCircle> {
    std::vector<Known> local{path.end()[-1]};
    if (path.size() >= 2) local.insert(local.begin(), path.end()[-2]);
    const double from = local.back().eps;
    const int steps = std::max(1, static_cast<int>(std::ceil((e - from) / opts.max_step - 1e-9)));
    for (int i = 1; i <= steps; ++i) {
      const double ei = from + (e - from) * i / steps;
      InvariantCircle guess = local.back().circle;
      if (local.size() >= 2)
        guess = extrapolate(local.end()[-2].circle, local.end()[-2].eps, local.back().circle, local.back().eps, ei);
      auto c = attempt(ei, &guess);
      if (!c) c = attempt(ei, &local.back().circle);
      if (!c) return std::nullopt;
      local.push_back({ei, *c});
    }
    return local.back().circle;
  };

  auto c0 = attempt(eps_lo, nullptr);
  if (!c0) throw Error("no transition: invariant circle fails already at eps = " + std::to_string(eps_lo));
  path.push_back({eps_lo, *c0});

  // march to the first failure
  double lo = eps_lo, hi = eps_hi;
  bool failed = false;
  while (lo < eps_hi) {
    const double e = std::min(eps_hi, lo + opts.max_step);
    auto c = reach(e);
    if (!c) {
      hi = e;
      failed = true;
      break;
    }
    path.push_back({e, *c});
    lo = e;
  }
  if (!failed) throw Error("no transition: invariant circle persists up to eps = " + std::to_string(eps_hi));

  while (hi - lo > bisection_tol) {
    const double mid = 0.5 * (lo + hi);
    if (auto c = reach(mid)) {
      path.push_back({mid, *c});
      lo = mid;
    } else {
      hi = mid;
    }
  }
  res.lo = lo;
  res.hi = hi;
  return res;
}

nlohmann::json to_json(const InvariantCircle& c) {
  nlohmann::json j;
  j["omega"] = c.omega.to_double();
  j["K"] = c.K;
  j["action"] = c.action;
  j["residual"] = c.residual;
  j["tail_mass"] = c.tail_mass;
  j["newton_iterations"] = c.newton_iterations;
  auto table = [](const std::vector<cplx>& t) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& z : t) a.push_back({z.real(), z.imag()});
    return a;
  };
  j["u_coeffs"] = table(c.u_coeffs);
  j["v_coeffs"] = table(c.v_coeffs);
  j["defect_history"] = c.defect_history;
  return j;
}

}  // namespace perturblab::twistmap
