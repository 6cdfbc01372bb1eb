#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>

#include "output.hpp"
#include "perturblab/bifurcation.hpp"
#include "perturblab/cli.hpp"
#include "perturblab/diophantine.hpp"
#include "perturblab/odeflow.hpp"
#include "perturblab/series.hpp"
#include "perturblab/slowfast.hpp"
#include "perturblab/twistmap.hpp"

namespace perturblab::cli {

using nlohmann::json;

namespace {

const json& param(const ExperimentConfig& c, const std::string& key) {
  if (!c.params.contains(key)) throw ConfigError("params." + key + ": missing in resolved config");
  return c.params.at(key);
}
double number(const ExperimentConfig& c, const std::string& key) { return param(c, key).get<double>(); }
long long integer(const ExperimentConfig& c, const std::string& key) { return param(c, key).get<long long>(); }
Vec numbers(const ExperimentConfig& c, const std::string& key) { return param(c, key).get<Vec>(); }
std::pair<double, double> range(const ExperimentConfig& c, const std::string& key) {
  const Vec v = numbers(c, key);
  if (!(v[1] > v[0])) throw ConfigError("params." + key + ": empty range");
  return {v[0], v[1]};
}
long long positive(const ExperimentConfig& c, const std::string& key) {
  const long long n = integer(c, key);
  if (n < 1) throw ConfigError("params." + key + ": must be at least 1");
  return n;
}

std::string short_num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

Vec linspace(double a, double b, int n) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return v;
}

class Emitter {
 public:
  Emitter(const ExperimentConfig& c, ExperimentOutput& o) : cfg_(c), out_(o) {}
  void csv(const std::string& stem, const Csv& t) { add(stem + ".csv", "csv", t.str()); }
  void svg(const std::string& stem, const SvgPlot& p) { add(stem + ".svg", "svg", p.str()); }
  void summary() { add(cfg_.experiment + ".json", "json", out_.summary.dump(2) + "\n"); }

 private:
  void add(const std::string& file, const std::string& fmt, std::string content) {
    if (cfg_.wants(fmt)) out_.artifacts.push_back({file, fmt, std::move(content)});
  }
  const ExperimentConfig& cfg_;
  ExperimentOutput& out_;
};

// Keeps at most n evenly spaced samples.
std::vector<std::size_t> thin(std::size_t size, std::size_t n) {
  std::vector<std::size_t> idx;
  if (size == 0) return idx;
  const std::size_t stride = std::max<std::size_t>(1, (size + n - 1) / n);
  for (std::size_t i = 0; i < size; i += stride) idx.push_back(i);
  if (idx.back() != size - 1) idx.push_back(size - 1);
  return idx;
}

// ---- twist maps ----

ExperimentOutput standard_map_portrait(const ExperimentConfig& cfg) {
  using namespace twistmap;
  ExperimentOutput out;
  Emitter em(cfg, out);
  const Vec eps = numbers(cfg, "eps");
  const int ns = static_cast<int>(positive(cfg, "seeds"));
  const int nit = static_cast<int>(positive(cfg, "iterations"));
  const auto ar = range(cfg, "action_range");

  std::mt19937_64 rng(cfg.rng_seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<Point> seeds;
  for (int i = 0; i < ns; ++i) {
    const double phi = kTwoPi * U(rng);
    seeds.push_back({phi, ar.first + (ar.second - ar.first) * U(rng)});
  }
  json seeds_json = json::array();
  for (const auto& s : seeds) seeds_json.push_back({s.phi, s.I});
  out.summary["seeds"] = seeds_json;
  out.summary["iterations"] = nit;
  json panels = json::array();
  for (double e : eps) {
    const auto por = phase_portrait(standard_map(e), seeds, nit);
    const std::string stem = cfg.experiment + "_eps" + short_num(e);
    Csv t({"seed", "phi", "I"});
    std::vector<Vec> px(ns), py(ns);
    for (const auto& p : por.points) {
      t.row({std::to_string(p.seed_index), num(p.phi), num(p.I)});
      px[p.seed_index].push_back(p.phi);
      py[p.seed_index].push_back(wrap_angle(p.I));
    }
    em.csv(stem, t);
    SvgPlot plot("standard map, eps = " + short_num(e), "phi", "I mod 2pi", {0, kTwoPi}, {0, kTwoPi});
    for (int s = 0; s < ns; ++s) plot.points(px[s], py[s], palette(s));
    em.svg(stem, plot);
    const auto escaped = std::count(por.escaped.begin(), por.escaped.end(), true);
    panels.push_back({{"eps", e}, {"stem", stem}, {"points", por.points.size()}, {"escaped", escaped}});
  }
  out.summary["panels"] = panels;
  em.summary();
  return out;
}

ExperimentOutput golden_breakup(const ExperimentConfig& cfg) {
  using namespace twistmap;
  using namespace diophantine;
  ExperimentOutput out;
  Emitter em(cfg, out);
  const auto g = make_frequency(golden_mean(), 0.38, 1.0, 10000);
  BreakupOptions o;
  o.K = static_cast<int>(positive(cfg, "K"));
  o.tol = number(cfg, "tol");
  o.max_step = number(cfg, "max_step");
  const auto er = range(cfg, "eps_range");
  const auto b = breakup_scan([](double e) { return standard_map(e); }, g, er.first, er.second,
                              number(cfg, "bisection_tol"), o);
  out.summary["eps_critical_bracket"] = {b.lo, b.hi};
  out.summary["width"] = b.hi - b.lo;
  out.summary["omega"] = g.to_double();
  out.summary["K"] = o.K;
  out.summary["method"] = b.method;
  json samples = json::array();
  Csv t({"eps", "converged", "defect", "K"});
  Vec xc, yc, xf, yf;
  for (const auto& s : b.samples) {
    samples.push_back({{"eps", s.eps}, {"converged", s.converged}, {"defect", finite_or_null(s.defect)}, {"K", s.K}});
    t.row({num(s.eps), s.converged ? "1" : "0", num(s.defect), std::to_string(s.K)});
    (s.converged ? xc : xf).push_back(s.eps);
    (s.converged ? yc : yf).push_back(std::isfinite(s.defect) && s.defect > 0 ? std::log10(s.defect) : 0.0);
  }
  out.summary["samples"] = samples;
  em.csv(cfg.experiment, t);
  SvgPlot plot("golden circle breakup scan", "eps", "log10 conjugacy defect", er, {-16, 2});
  plot.points(xc, yc, palette(0));
  plot.points(xf, yf, palette(1));
  plot.line({b.lo, b.lo}, {-16, 2}, palette(2), true);
  plot.line({b.hi, b.hi}, {-16, 2}, palette(2), true);
  plot.legend("converged", palette(0));
  plot.legend("failed", palette(1));
  em.svg(cfg.experiment, plot);
  em.summary();
  return out;
}

// ---- forced oscillator ----

ExperimentOutput forced_oscillator_portrait(const ExperimentConfig& cfg) {
  ExperimentOutput out;
  Emitter em(cfg, out);
  const Vec eps = numbers(cfg, "eps");
  const double w0 = number(cfg, "omega0"), w = number(cfg, "omega");
  if (!(w > 0)) throw ConfigError("params.omega: must be positive");
  const int ns = static_cast<int>(positive(cfg, "seeds"));
  const int nit = static_cast<int>(positive(cfg, "iterations"));
  const auto xr = range(cfg, "x_range");
  const double T = kTwoPi / w;

  std::mt19937_64 rng(cfg.rng_seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Vec seeds;
  for (int i = 0; i < ns; ++i) seeds.push_back(xr.first + (xr.second - xr.first) * U(rng));
  out.summary["seeds"] = seeds;
  out.summary["period"] = T;
  json panels = json::array();
  for (double e : eps) {
    auto field = odeflow::make_field(2, [w0, w, e](const Vec& x, double t) {
      return Vec{x[1], -w0 * w0 * x[0] + x[0] * x[0] - 0.5 * x[0] * x[0] * x[0] + e * std::sin(w * t)};
    }, "forced", T);
    odeflow::Options o;
    o.record_steps = false;
    o.blowup_norm = 1e3;
    std::vector<std::vector<Vec>> orbits(ns);
    parallel_for(ns, [&](std::size_t i) {
      Vec x{seeds[i], 0.0};
      orbits[i].push_back(x);
      for (int n = 0; n < nit; ++n) {
        try {
          x = odeflow::flow(field, x, n * T, (n + 1) * T, o);
        } catch (const NumericalError&) {
          break;
        }
        if (!std::isfinite(x[0]) || std::abs(x[0]) > 10) break;
        orbits[i].push_back(x);
      }
    });
    const std::string stem = cfg.experiment + "_eps" + short_num(e);
    Csv t({"seed", "n", "x", "y"});
    SvgPlot plot("stroboscopic map, eps = " + short_num(e), "x", "dx/dt", {-0.4, 0.8}, {-0.3, 0.3});
    std::size_t escaped = 0;
    for (int i = 0; i < ns; ++i) {
      Vec px, py;
      for (std::size_t n = 0; n < orbits[i].size(); ++n) {
        t.row({std::to_string(i), std::to_string(n), num(orbits[i][n][0]), num(orbits[i][n][1])});
        px.push_back(orbits[i][n][0]);
        py.push_back(orbits[i][n][1]);
      }
      if (static_cast<int>(orbits[i].size()) < nit + 1) ++escaped;
      plot.points(px, py, palette(i));
    }
    em.csv(stem, t);
    em.svg(stem, plot);
    panels.push_back({{"eps", e}, {"stem", stem}, {"escaped", escaped}});
  }
  out.summary["panels"] = panels;
  em.summary();
  return out;
}

// ---- averaging and series ----

ExperimentOutput averaging_demo(const ExperimentConfig& cfg) {
  ExperimentOutput out;
  Emitter em(cfg, out);
  const Vec eps = numbers(cfg, "eps");
  const double x0 = number(cfg, "x0");
  const int samples = static_cast<int>(positive(cfg, "samples"));
  for (double e : eps)
    if (!(e > 0)) throw ConfigError("params.eps: values must be positive");
  auto g = odeflow::make_field(1, [](const Vec& x, double t) {
    return Vec{(-x[0] + std::sin(t) * std::sin(t)) * x[0]};
  }, "g", kPi);
  const auto avg = series::averaged_field(g);
  Vec errs(eps.size());
  parallel_for(eps.size(), [&](std::size_t i) {
    const double e = eps[i];
    auto f = odeflow::make_field(1, [e](const Vec& x, double t) {
      return Vec{e * (-x[0] + std::sin(t) * std::sin(t)) * x[0]};
    }, "f", kPi);
    odeflow::Options o;
    o.dense = true;
    const auto tx = odeflow::integrate(f, {x0}, 0, 1 / e, o);
    const auto ty = odeflow::integrate(avg, {x0}, 0, 1.0, o);
    if (!tx.ok() || !ty.ok()) throw NumericalError("averaging run failed: " + tx.message + ty.message);
    double m = 0;
    for (int k = 0; k <= samples; ++k) {
      const double t = k / (samples * e);
      m = std::max(m, std::abs(tx.at(t)[0] - ty.at(t * e)[0]));
    }
    errs[i] = m;
  });
  const double slope = eps.size() >= 2 ? loglog_slope(eps, errs) : std::nan("");
  out.summary["eps"] = eps;
  out.summary["sup_error"] = errs;
  out.summary["slope"] = finite_or_null(slope);
  out.summary["x0"] = x0;
  Csv t({"eps", "sup_error"});
  Vec lx, ly;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    t.row(Vec{eps[i], errs[i]});
    lx.push_back(std::log10(eps[i]));
    ly.push_back(std::log10(errs[i]));
  }
  em.csv(cfg.experiment, t);
  const auto [xlo, xhi] = std::minmax_element(lx.begin(), lx.end());
  const auto [ylo, yhi] = std::minmax_element(ly.begin(), ly.end());
  SvgPlot plot("averaging error over t in [0, 1/eps]", "log10 eps", "log10 sup error",
               {*xlo - 0.5, *xhi + 0.5}, {*ylo - 0.5, *yhi + 0.5});
  plot.points(lx, ly, palette(0));
  plot.line(lx, ly, palette(0));
  em.svg(cfg.experiment, plot);
  em.summary();
  return out;
}

ExperimentOutput lie_triangle_demo(const ExperimentConfig& cfg) {
  using namespace series;
  ExperimentOutput out;
  Emitter em(cfg, out);
  auto q_cos = [](int k, int m, long long a) {
    return QSeries::cosine(1, 1, {k}, {m}, GaussRational(Rational(a)));
  };
  auto q_sin = [](int k, int m, long long a) {
    return QSeries::sine(1, 1, {k}, {m}, GaussRational(Rational(a)));
  };
  const QSeries I = QSeries::monomial(1, 1, {0}, {1}, GaussRational(1));
  // H = I + eps I cos(phi), W = I sin(phi), factorial-scaled
  std::vector<QSeries> H{I, q_cos(1, 1, 1), QSeries(1, 1)};
  std::vector<QSeries> W{q_sin(1, 1, 1), QSeries(1, 1)};
  const auto tri = lie_triangle_transform(H, W, 2);
  const auto plain = from_deprit(tri.output_row);
  json K = json::array();
  for (const auto& k : plain) K.push_back(to_json(k));
  out.summary["K_plain"] = K;
  out.summary["K1_vanishes"] = plain[1].empty();
  out.summary["K2_is_minus_half_I"] = series_equal(plain[2], GaussRational(Rational(-1, 2)) * I);

  // first and second order relations on random rational data
  const int trials = static_cast<int>(positive(cfg, "trials"));
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> kd(-2, 2), md(0, 2), ad(-3, 3);
  auto random_q = [&](int n) {
    QSeries s(n, n);
    for (int t = 0; t < 3; ++t) {
      MultiIndex k(n), m(n);
      for (int i = 0; i < n; ++i) {
        k[i] = kd(rng);
        m[i] = md(rng);
      }
      const GaussRational a(Rational(ad(rng)));
      s += t % 2 ? QSeries::sine(n, n, k, m, a) : QSeries::cosine(n, n, k, m, a);
    }
    return s;
  };
  bool first = true, second = true;
  for (int trial = 0; trial < trials; ++trial) {
    const int n = 1 + trial % 2;
    std::vector<QSeries> Hr{random_q(n), random_q(n), random_q(n)};
    std::vector<QSeries> Wr{random_q(n), random_q(n)};
    const auto tr = lie_triangle_transform(Hr, Wr, 2);
    first = first && series_equal(tr.output_row[1], Hr[1] + poisson_bracket(Hr[0], Wr[0]));
    const QSeries K2 = Hr[2] + GaussRational(2) * poisson_bracket(Hr[1], Wr[0]) + poisson_bracket(Hr[0], Wr[1]) +
                       poisson_bracket(poisson_bracket(Hr[0], Wr[0]), Wr[0]);
    second = second && series_equal(tr.output_row[2], K2);
  }
  out.summary["first_order_relation"] = first;
  out.summary["second_order_relation"] = second;
  out.summary["trials"] = trials;

  Csv t({"row", "n", "k", "m", "re", "im"});
  for (std::size_t r = 0; r < tri.table.size(); ++r)
    for (std::size_t n = 0; n < tri.table[r].size(); ++n)
      for (const auto& [key, c] : tri.table[r][n].terms())
        t.row({std::to_string(r), std::to_string(n), std::to_string(key.k[0]), std::to_string(key.m[0]),
               c.re.str(), c.im.str()});
  em.csv(cfg.experiment, t);
  em.summary();
  return out;
}

// ---- singular perturbation ----

ExperimentOutput tihonov(const ExperimentConfig& cfg) {
  using namespace slowfast;
  ExperimentOutput out;
  Emitter em(cfg, out);
  const Vec eps = numbers(cfg, "eps");
  const double x0 = number(cfg, "x0"), y0 = number(cfg, "y0"), horizon = number(cfg, "horizon");
  if (!(horizon > 0)) throw ConfigError("params.horizon: must be positive");
  const auto sys = ssm_model(eps.front());
  const auto chart = slow_manifold(sys, linspace(y0 - 0.5, y0 + horizon + 0.5, 401), {std::sin(y0 - 0.5)});
  TihonovOptions o;
  o.horizon = horizon;
  const auto rep = tihonov_verify(sys, chart, {x0}, {y0}, eps, o);

  json runs = json::array();
  Csv t({"eps", "t", "x", "x_bar", "d"});
  SvgPlot plot("fast variable against the slow-manifold rest state", "t", "x", {0, horizon}, {-1.2, 1.7});
  bool all_within = true;
  for (std::size_t r = 0; r < rep.runs.size(); ++r) {
    const auto& run = rep.runs[r];
    const double e = run.eps;
    auto xbar = [e, y0](double s) { return (std::sin(y0 + s) - e * std::cos(y0 + s)) / (1 + e * e); };
    const double t_settle = 5 * e * std::abs(std::log(e));
    double worst = 0;
    Vec px, py;
    for (std::size_t i = 0; i < run.t.size(); ++i) {
      if (run.t[i] >= t_settle) worst = std::max(worst, std::abs(run.x[i][0] - xbar(run.t[i])));
      px.push_back(run.t[i]);
      py.push_back(run.x[i][0]);
    }
    for (std::size_t i : thin(run.t.size(), 2000))
      t.row(Vec{e, run.t[i], run.x[i][0], xbar(run.t[i]), run.d[i]});
    const bool within = worst < 2 * e * e && !run.exited;
    all_within = all_within && within;
    runs.push_back({{"eps", e},
                    {"settle_time", t_settle},
                    {"sup_error_after_settle", worst},
                    {"bound", 2 * e * e},
                    {"within_bound", within},
                    {"d_inf", run.d_inf},
                    {"transient_rate", run.transient_rate},
                    {"exited", run.exited}});
    plot.line(px, py, palette(r));
    plot.legend("eps = " + short_num(e), palette(r));
  }
  out.summary["runs"] = runs;
  out.summary["all_within_bound"] = all_within;
  out.summary["d_slope"] = finite_or_null(rep.d_slope);
  out.summary["rate_constant"] = finite_or_null(rep.rate_constant);

  const int order = static_cast<int>(integer(cfg, "symbolic_order"));
  if (order < 0) throw ConfigError("params.symbolic_order: must be non-negative");
  const auto u = symbolic_expansion(TrigPoly::sin(), Rational(-1), order);
  const TrigPoly s = TrigPoly::sin(), c = TrigPoly::cos();
  const std::vector<TrigPoly> pattern{s, c * Rational(-1), s * Rational(-1), c};
  json terms = json::array();
  bool match = true;
  for (int j = 0; j <= order; ++j) {
    terms.push_back(u[j].to_string());
    match = match && u[j] == pattern[j % 4];
  }
  out.summary["symbolic_terms"] = terms;
  out.summary["symbolic_pattern_match"] = match;
  em.csv(cfg.experiment, t);
  em.svg(cfg.experiment, plot);
  em.summary();
  return out;
}

ExperimentOutput gevrey_truncation(const ExperimentConfig& cfg) {
  using namespace slowfast;
  ExperimentOutput out;
  Emitter em(cfg, out);
  const double eps = number(cfg, "eps");
  const int order = static_cast<int>(positive(cfg, "order"));
  const std::string source = param(cfg, "amplitudes").get<std::string>();
  Vec amps;
  if (source == "factorial") {
    for (int k = 0; k <= order; ++k) amps.push_back(std::tgamma(k + 1.0));
  } else {
    auto sys = scalar_drift_model(eps, [](const auto& y) { return 1.0 / (1.0 + y * y); });
    const auto chart = slow_manifold(sys, linspace(-2, 2, 81), {1.0});
    amps = asymptotic_expansion(sys, chart, order).amplitude_estimates;
  }
  const auto tr = optimal_truncation(amps, eps);
  const double target = std::exp(-1.0 / eps);
  out.summary["amplitudes_source"] = source;
  out.summary["eps"] = eps;
  out.summary["k_star"] = tr.k_star;
  out.summary["remainder"] = tr.remainder;
  out.summary["exp_minus_inverse_eps"] = target;
  out.summary["remainder_ratio"] = tr.remainder / target;
  out.summary["not_disordered"] = tr.not_disordered;
  out.summary["amplitudes"] = amps;
  out.summary["terms"] = tr.terms;
  Csv t({"k", "amplitude", "term"});
  Vec kx, ly;
  for (std::size_t k = 0; k < amps.size(); ++k) {
    t.row(Vec{static_cast<double>(k), amps[k], tr.terms[k]});
    kx.push_back(static_cast<double>(k));
    ly.push_back(std::log10(tr.terms[k]));
  }
  em.csv(cfg.experiment, t);
  const auto [lo, hi] = std::minmax_element(ly.begin(), ly.end());
  SvgPlot plot("terms of the divergent expansion, eps = " + short_num(eps), "k", "log10 |term|",
               {0, static_cast<double>(amps.size() - 1)}, {*lo - 1, *hi + 1});
  plot.points(kx, ly, palette(0));
  plot.line(kx, ly, palette(0));
  plot.line({static_cast<double>(tr.k_star), static_cast<double>(tr.k_star)}, {*lo - 1, *hi + 1}, palette(1), true);
  em.svg(cfg.experiment, plot);
  em.summary();
  return out;
}

json delay_json(const slowfast::DelayAnalysis& a) {
  json j{{"predicted_exit", a.predicted_exit},
         {"observed_exit", a.observed_exit},
         {"threshold", a.threshold},
         {"alt_threshold", a.alt_threshold},
         {"alt_exit", finite_or_null(a.alt_exit)},
         {"threshold_shift", finite_or_null(a.threshold_shift)},
         {"precision_digits", a.precision_digits}};
  if (a.buffer_point) j["buffer_point"] = *a.buffer_point;
  if (std::isfinite(a.double_precision_exit)) j["double_precision_exit"] = a.double_precision_exit;
  return j;
}

ExperimentOutput hopf_delay(const ExperimentConfig& cfg) {
  using namespace slowfast;
  ExperimentOutput out;
  Emitter em(cfg, out);
  const double y0 = number(cfg, "y0"), eps = number(cfg, "eps"), thr = number(cfg, "threshold");
  HopfDelayOptions o;
  o.y_end = number(cfg, "y_end");
  const auto a = slowfast::hopf_delay(delayed_hopf(eps), y0, eps, thr, o);
  out.summary = delay_json(a);
  out.summary["y0"] = y0;
  out.summary["eps"] = eps;
  out.summary["check_y"] = a.check_y;
  out.summary["cycle_error"] = a.cycle_error;
  Csv t({"y", "r"});
  Vec py, pr;
  for (std::size_t i : thin(a.t.size(), 4000)) {
    t.row(Vec{a.t[i], a.r[i]});
    py.push_back(a.t[i]);
    pr.push_back(a.r[i] > 0 ? std::log10(a.r[i]) : -300);
  }
  em.csv(cfg.experiment, t);
  double rmin = 0;
  for (double v : pr) rmin = std::min(rmin, v);
  SvgPlot plot("slow passage through a Hopf bifurcation", "y", "log10 r", {y0, o.y_end}, {std::max(rmin, -320.0) - 1, 1});
  plot.line(py, pr, palette(0));
  plot.line({a.observed_exit, a.observed_exit}, {std::max(rmin, -320.0) - 1, 1}, palette(1), true);
  plot.line({-y0, -y0}, {std::max(rmin, -320.0) - 1, 1}, palette(2), true);
  em.svg(cfg.experiment, plot);
  em.summary();
  return out;
}

ExperimentOutput buffer_point(const ExperimentConfig& cfg) {
  using namespace slowfast;
  ExperimentOutput out;
  Emitter em(cfg, out);
  const Vec t0s = numbers(cfg, "t0");
  const double eps = number(cfg, "eps");
  std::vector<DelayAnalysis> res(t0s.size());
  parallel_for(t0s.size(), [&](std::size_t i) { res[i] = slowfast::buffer_point(drifted_hopf(eps), t0s[i], eps); });
  json runs = json::array();
  Csv t({"t0", "t", "r"});
  double lo = t0s.front(), hi = 0;
  for (double v : t0s) lo = std::min(lo, v);
  for (const auto& a : res)
    if (!a.t.empty()) hi = std::max(hi, a.t.back());
  SvgPlot plot("drifted Hopf passage, eps = " + short_num(eps), "t", "log10 r", {lo, std::max(hi, lo + 1)}, {-60, 1});
  for (std::size_t i = 0; i < res.size(); ++i) {
    auto j = delay_json(res[i]);
    j["t0"] = t0s[i];
    runs.push_back(j);
    Vec px, py;
    for (std::size_t k : thin(res[i].t.size(), 4000)) {
      t.row(Vec{t0s[i], res[i].t[k], res[i].r[k]});
      px.push_back(res[i].t[k]);
      py.push_back(res[i].r[k] > 0 ? std::log10(res[i].r[k]) : -1e9);
    }
    plot.line(px, py, palette(i));
    plot.legend("t0 = " + short_num(t0s[i]), palette(i));
  }
  out.summary["eps"] = eps;
  out.summary["runs"] = runs;
  em.csv(cfg.experiment, t);
  em.svg(cfg.experiment, plot);
  em.summary();
  return out;
}

ExperimentOutput vdp_relaxation(const ExperimentConfig& cfg) {
  using namespace slowfast;
  ExperimentOutput out;
  Emitter em(cfg, out);
  const Vec eps = numbers(cfg, "eps");
  for (double e : eps)
    if (!(e > 0)) throw ConfigError("params.eps: values must be positive");
  const auto s = relaxation_scaling(eps);
  out.summary["delay_exponent"] = s.delay_exponent;
  out.summary["excursion_exponent"] = s.excursion_exponent;
  out.summary["limit_period"] = s.limit_period;
  out.summary["limit_period_closed_form"] = 3 - 2 * std::log(2.0);
  out.summary["delay_constant"] = s.delay_constant;
  out.summary["riccati_blowup"] = s.riccati_blowup;
  json cycles = json::array();
  Csv t({"eps", "period", "jump_delay", "excursion", "x_min", "x_max", "landing_x"});
  Vec le, ld, lx;
  for (const auto& c : s.cycles) {
    cycles.push_back({{"eps", c.eps},
                      {"period", c.period},
                      {"jump_delay", c.jump_delay},
                      {"excursion", c.excursion},
                      {"landing_x", c.landing_x},
                      {"return_residual", c.return_residual}});
    t.row(Vec{c.eps, c.period, c.jump_delay, c.excursion, c.x_min, c.x_max, c.landing_x});
    le.push_back(std::log10(c.eps));
    ld.push_back(std::log10(c.jump_delay));
    lx.push_back(std::log10(c.excursion));
  }
  out.summary["cycles"] = cycles;
  em.csv(cfg.experiment, t);
  const auto [elo, ehi] = std::minmax_element(le.begin(), le.end());
  double ylo = 0, yhi = -1e9;
  for (const Vec* v : {&ld, &lx})
    for (double x : *v) {
      ylo = std::min(ylo, x);
      yhi = std::max(yhi, x);
    }
  SvgPlot plot("relaxation cycle scaling", "log10 eps", "log10 metric", {*elo - 0.3, *ehi + 0.3}, {ylo - 0.5, yhi + 0.5});
  plot.points(le, ld, palette(0));
  plot.line(le, ld, palette(0));
  plot.points(le, lx, palette(1));
  plot.line(le, lx, palette(1));
  plot.legend("jump delay", palette(0));
  plot.legend("excursion", palette(1));
  em.svg(cfg.experiment, plot);
  em.summary();
  return out;
}

// ---- bifurcation diagrams ----

ExperimentOutput tb_diagram(const ExperimentConfig& cfg) {
  using namespace bifurcation;
  ExperimentOutput out;
  Emitter em(cfg, out);
  const auto r1 = range(cfg, "lambda1_range"), r2 = range(cfg, "lambda2_range");
  const auto grid = param(cfg, "grid").get<std::vector<long long>>();
  if (grid[0] < 2 || grid[1] < 2) throw ConfigError("params.grid: need at least 2 points per axis");
  const int nx = static_cast<int>(grid[0]), ny = static_cast<int>(grid[1]);
  const Vec l1s = linspace(r1.first, r1.second, nx), l2s = linspace(r2.first, r2.second, ny);
  const double tol = TBOptions{}.tol;

  Vec hom(nx, std::nan("")), hopf(nx, std::nan(""));
  parallel_for(nx, [&](std::size_t i) {
    if (l1s[i] < -tol) {
      hom[i] = tb_homoclinic_lambda2(l1s[i]);
      hopf[i] = tb_hopf_lambda2(l1s[i]);
    }
  });
  std::vector<TBDiagnosis> cells(static_cast<std::size_t>(nx) * ny);
  parallel_for(cells.size(), [&](std::size_t k) {
    const std::size_t i = k / ny, j = k % ny;
    TBOptions o;
    o.homoclinic_lambda2 = hom[i];
    cells[k] = takens_bogdanov_diagram(l1s[i], l2s[j], o);
  });

  Csv t({"lambda1", "lambda2", "region", "curve"});
  std::map<int, std::pair<Vec, Vec>> by_region;
  std::map<std::string, int> counts;
  for (const auto& c : cells) {
    const std::string curve = c.curve ? std::string(1, c.curve) : "";
    t.row({num(c.lambda1), num(c.lambda2), std::to_string(c.region), curve});
    by_region[c.region].first.push_back(c.lambda1);
    by_region[c.region].second.push_back(c.lambda2);
    ++counts[c.curve ? "curve " + curve : "region " + std::to_string(c.region)];
  }
  em.csv(cfg.experiment, t);

  const double l1c = number(cfg, "check_lambda1");
  json check{{"lambda1", l1c}};
  if (l1c < -tol) {
    const double s = std::sqrt(-l1c);
    const double hc = tb_homoclinic_lambda2(l1c), hp = tb_hopf_lambda2(l1c);
    const double pred = 5.0 / 7.0 * s, band = pred * std::pow(-l1c, 0.25);
    check["homoclinic_lambda2"] = hc;
    check["homoclinic_predicted"] = pred;
    check["band_halfwidth"] = band;
    check["within_band"] = std::abs(hc - pred) <= band;
    check["hopf_lambda2"] = hp;
    check["hopf_closed_form"] = s;
    check["hopf_error"] = std::abs(hp - s);
    const auto at_hopf = hopf_coefficient(takens_bogdanov_field(l1c, hp), Vec{-s, 0.0});
    check["hopf_re_c21"] = at_hopf.c21.real();
  }
  out.summary["check"] = check;
  out.summary["counts"] = counts;
  json curve = json::array();
  for (int i = 0; i < nx; ++i)
    if (std::isfinite(hom[i])) curve.push_back({{"lambda1", l1s[i]}, {"homoclinic", hom[i]}, {"hopf", hopf[i]}});
  out.summary["curves"] = curve;

  SvgPlot plot("Takens-Bogdanov unfolding", "lambda1", "lambda2", r1, r2);
  for (const auto& [region, pts] : by_region) {
    plot.points(pts.first, pts.second, palette(region));
    plot.legend(region ? "region " + std::to_string(region) : "curve", palette(region));
  }
  Vec cx, ch, cp, c57;
  for (int i = 0; i < nx; ++i)
    if (std::isfinite(hom[i])) {
      cx.push_back(l1s[i]);
      ch.push_back(hom[i]);
      cp.push_back(hopf[i]);
      c57.push_back(5.0 / 7.0 * std::sqrt(-l1s[i]));
    }
  plot.line(cx, cp, "black");
  plot.line(cx, ch, "black");
  plot.line(cx, c57, "#555555", true);
  plot.line({0, 0}, {r2.first, r2.second}, "black");
  em.svg(cfg.experiment, plot);
  em.summary();
  return out;
}

ExperimentOutput cusp_diagram(const ExperimentConfig& cfg) {
  using namespace bifurcation;
  ExperimentOutput out;
  Emitter em(cfg, out);
  const auto r1 = range(cfg, "lambda1_range"), r2 = range(cfg, "lambda2_range");
  const auto grid = param(cfg, "grid").get<std::vector<long long>>();
  if (grid[0] < 2 || grid[1] < 2) throw ConfigError("params.grid: need at least 2 points per axis");
  const int nx = static_cast<int>(grid[0]), ny = static_cast<int>(grid[1]);
  const Vec l1s = linspace(r1.first, r1.second, nx), l2s = linspace(r2.first, r2.second, ny);
  Csv t({"lambda1", "lambda2", "count", "critical", "equilibria"});
  std::map<int, std::pair<Vec, Vec>> by_count;
  std::map<std::string, int> counts;
  for (double a : l1s)
    for (double b : l2s) {
      const auto c = cusp_region(a, b);
      std::string eq;
      for (const auto& e : c.equilibria) eq += (eq.empty() ? "" : ";") + num(e.x);
      t.row({num(a), num(b), std::to_string(c.count), c.critical ? "1" : "0", eq});
      by_count[c.count].first.push_back(a);
      by_count[c.count].second.push_back(b);
      ++counts[std::to_string(c.count)];
    }
  em.csv(cfg.experiment, t);
  out.summary["equilibrium_counts"] = counts;
  SvgPlot plot("equilibria of x' = -x^3 + lambda1 x + lambda2", "lambda1", "lambda2", r1, r2);
  for (const auto& [n, pts] : by_count) {
    plot.points(pts.first, pts.second, palette(n));
    plot.legend(std::to_string(n) + " equilibria", palette(n));
  }
  Vec cx, up, dn;
  for (double a : linspace(0, std::max(r1.second, 0.0), 200)) {
    cx.push_back(a);
    up.push_back(2 * std::pow(a / 3, 1.5));
    dn.push_back(-2 * std::pow(a / 3, 1.5));
  }
  plot.line(cx, up, "black");
  plot.line(cx, dn, "black");
  em.svg(cfg.experiment, plot);
  em.summary();
  return out;
}

ExperimentOutput acceptance_suite(const ExperimentConfig& cfg) {
  ExperimentOutput out;
  Emitter em(cfg, out);
  std::vector<int> only;
  for (long long v : param(cfg, "criteria").get<std::vector<long long>>()) {
    if (v < 1 || v > acceptance_count())
      throw ConfigError("params.criteria: no criterion " + std::to_string(v));
    only.push_back(static_cast<int>(v));
  }
  const auto results = run_acceptance(only);
  json list = json::array();
  Csv t({"id", "name", "passed", "seconds", "detail"});
  bool all = true;
  for (const auto& r : results) {
    list.push_back({{"id", r.id},
                    {"name", r.name},
                    {"passed", r.passed},
                    {"detail", r.detail},
                    {"measured", r.measured}});
    std::string detail = r.detail;
    std::replace(detail.begin(), detail.end(), ',', ';');
    t.row({std::to_string(r.id), r.name, r.passed ? "pass" : "fail", num(r.seconds), detail});
    all = all && r.passed;
  }
  out.summary["criteria"] = list;
  out.summary["all_passed"] = all;
  out.acceptance_failed = !all;
  em.csv(cfg.experiment, t);
  em.summary();
  return out;
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentConfig& config) {
  using Fn = ExperimentOutput (*)(const ExperimentConfig&);
  static const std::map<std::string, Fn> table{
      {"standard-map-portrait", standard_map_portrait},
      {"golden-breakup", golden_breakup},
      {"forced-oscillator-portrait", forced_oscillator_portrait},
      {"averaging-demo", averaging_demo},
      {"lie-triangle-demo", lie_triangle_demo},
      {"tihonov", tihonov},
      {"gevrey-truncation", gevrey_truncation},
      {"hopf-delay", hopf_delay},
      {"buffer-point", buffer_point},
      {"vdp-relaxation", vdp_relaxation},
      {"tb-diagram", tb_diagram},
      {"cusp-diagram", cusp_diagram},
      {"acceptance-suite", acceptance_suite},
  };
  auto it = table.find(config.experiment);
  if (it == table.end())
    throw ConfigError("unknown experiment '" + config.experiment + "'; did you mean '" +
                      nearest_experiment(config.experiment) + "'?");
  auto out = it->second(config);
  std::sort(out.artifacts.begin(), out.artifacts.end(),
            [](const Artifact& a, const Artifact& b) { return a.file < b.file; });
  return out;
}

RunResult run(const ExperimentConfig& config) {
  RunResult res;
  ExperimentOutput out;
  std::string status = "ok";
  try {
    out = run_experiment(config);
    if (out.acceptance_failed) {
      res.exit_code = kAcceptanceFailure;
      status = "acceptance_failure";
      res.message = "one or more acceptance criteria failed";
    }
  } catch (const ConfigError& e) {
    res.exit_code = kConfigError;
    status = "config_error";
    res.message = e.what();
  } catch (const std::exception& e) {
    res.exit_code = kNumericalFailure;
    status = "numerical_failure";
    res.message = e.what();
  }
  const std::string dir = config.output_dir;
  try {
    for (const auto& a : out.artifacts) {
      write_atomic(dir + "/" + a.file, a.content);
      res.files.push_back(a.file);
    }
    json manifest{{"experiment", config.experiment},
                  {"config", to_json(config)},
                  {"status", status},
                  {"exit_code", res.exit_code},
                  {"files", res.files}};
    if (!res.message.empty()) manifest["message"] = res.message;
    write_atomic(dir + "/manifest.json", manifest.dump(2) + "\n");
    res.files.push_back("manifest.json");
  } catch (const std::exception& e) {
    if (res.exit_code == kOk) res.exit_code = kNumericalFailure;
    res.message += (res.message.empty() ? "" : "; ") + std::string(e.what());
  }
  res.summary = out.summary;
  return res;
}

}  // namespace perturblab::cli
