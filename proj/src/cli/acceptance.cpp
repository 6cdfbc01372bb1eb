#include <chrono>
#include <cmath>
#include <cstdio>

#include "perturblab/cli.hpp"
#include "perturblab/diophantine.hpp"
#include "perturblab/odeflow.hpp"
#include "perturblab/series.hpp"
#include "perturblab/twistmap.hpp"

namespace perturblab::cli {

using nlohmann::json;

namespace {

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

json summary_of(const std::string& experiment) {
  auto cfg = default_config(experiment);
  cfg.formats = {"json"};
  return run_experiment(cfg).summary;
}

void golden_breakup(CriterionResult& r) {
  const auto t0 = std::chrono::steady_clock::now();
  const json s = summary_of("golden-breakup");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double lo = s["eps_critical_bracket"][0], hi = s["eps_critical_bracket"][1];
  r.measured = {{"bracket", {lo, hi}}, {"seconds", secs}};
  r.passed = hi - lo <= 0.05 && hi >= 0.92 && lo <= 1.02 && secs <= 300;
  r.detail = fmt("bracket [%.4f, %.4f], width %.4f, %.1f s", lo, hi, hi - lo, secs);
}

void invariant_circle(CriterionResult& r) {
  using namespace twistmap;
  const auto g = diophantine::make_frequency(diophantine::golden_mean(), 0.38, 1.0, 10000);
  const auto m = standard_map(0.5);
  const auto c = twistmap::invariant_circle(m, g, 64, 1e-10);
  const double defect = c.conjugacy_defect(m, 512);
  const auto rot = rotation_number(m, c.at(0.0), 100000);
  const double drot = std::abs(rot.value - g.to_double());
  r.measured = {{"defect", defect}, {"residual", c.residual}, {"rotation_error", drot}, {"newton", c.newton_iterations}};
  r.passed = defect < 1e-10 && drot < 1e-6;
  r.detail = fmt("defect %.2e, |rho - omega| %.2e", defect, drot);
}

void averaging(CriterionResult& r) {
  const json s = summary_of("averaging-demo");
  const double slope = s["slope"];
  r.measured = {{"slope", slope}, {"sup_error", s["sup_error"]}};
  r.passed = std::abs(slope - 1.0) <= 0.2;
  r.detail = fmt("log-log slope %.3f", slope);
}

void lie_triangle(CriterionResult& r) {
  const json s = summary_of("lie-triangle-demo");
  const bool a = s["first_order_relation"], b = s["second_order_relation"], c = s["K1_vanishes"],
             d = s["K2_is_minus_half_I"];
  r.measured = {{"first_order", a}, {"second_order", b}, {"K1_zero", c}, {"K2_minus_half_I", d}};
  r.passed = a && b && c && d;
  r.detail = std::string("first order ") + (a ? "exact" : "mismatch") + ", second order " +
             (b ? "exact" : "mismatch") + ", worked example " + (c && d ? "K = I - eps^2 I/2" : "mismatch");
}

void birkhoff(CriterionResult& r) {
  using namespace series;
  const double w0 = 0.6;
  const int n = 3;
  const BiPoly z = BiPoly::z(n), zb = BiPoly::zbar(n);
  const JetState s0{(1.0 / (2 * w0)) * (z + zb), cplx(0, -0.5) * (z - zb)};
  auto rhs = [w0](const JetState& x, double) {
    return JetState{x[1], -w0 * w0 * x[0] + x[0] * x[0] - 0.5 * x[0] * x[0] * x[0]};
  };
  const JetState sT = jet_flow_rk4(rhs, s0, 0, kTwoPi, 4000);
  const BiPoly F = w0 * sT[0] + cplx(0, 1) * sT[1];
  const auto nf = birkhoff_normal_form(F, -w0, 3, true);
  r.measured = {{"area_defect", nf.area_defect}, {"C1", {nf.C[0].real(), nf.C[0].imag()}}};
  r.passed = std::abs(nf.area_defect) < 1e-6;
  r.detail = fmt("|Re(exp(-2 pi i theta) C1)| = %.2e, |C1| = %.3g", std::abs(nf.area_defect), std::abs(nf.C[0]));
}

void tihonov(CriterionResult& r) {
  const json s = summary_of("tihonov");
  bool ok = s["all_within_bound"];
  double worst_ratio = 0;
  for (const auto& run : s["runs"]) worst_ratio = std::max(worst_ratio, run["sup_error_after_settle"].get<double>() / run["bound"].get<double>());
  const bool pattern = s["symbolic_pattern_match"];
  r.measured = {{"worst_error_over_bound", worst_ratio}, {"pattern", pattern}};
  r.passed = ok && pattern;
  r.detail = fmt("max error / (2 eps^2) = %.3f, ", worst_ratio) + "symbolic pattern " + (pattern ? "exact" : "mismatch");
}

void gevrey(CriterionResult& r) {
  const json s = summary_of("gevrey-truncation");
  const int k = s["k_star"];
  const double ratio = s["remainder_ratio"];
  r.measured = {{"k_star", k}, {"remainder", s["remainder"]}, {"ratio", ratio}};
  r.passed = k >= 8 && k <= 12 && ratio <= 10 && ratio >= 0.1;
  r.detail = fmt("k* = %.0f, remainder / exp(-10) = %.3f", k, ratio);
}

void delay(CriterionResult& r) {
  const json h = summary_of("hopf-delay");
  const json b = summary_of("buffer-point");
  const double he = h["observed_exit"];
  double e1 = std::nan(""), e2 = std::nan("");
  for (const auto& run : b["runs"]) {
    if (run["t0"].get<double>() == -2.0) e1 = run["observed_exit"];
    if (run["t0"].get<double>() == -0.5) e2 = run["observed_exit"];
  }
  r.measured = {{"hopf_exit", he}, {"buffer_exit_t0_-2", e1}, {"buffer_exit_t0_-0.5", e2}};
  r.passed = std::abs(he - 0.5) <= 0.05 && std::abs(e1 - 1.0) <= 0.1 && std::abs(e2 - 0.5) <= 0.1;
  r.detail = fmt("Hopf exit y = %.4f; buffer exits t = %.4f (t0 = -2), %.4f (t0 = -0.5)", he, e1, e2);
}

void relaxation(CriterionResult& r) {
  const json s = summary_of("vdp-relaxation");
  const double a = s["delay_exponent"], b = s["excursion_exponent"], T = s["limit_period"];
  const double T0 = 3 - 2 * std::log(2.0);
  double landing = 0;
  for (const auto& c : s["cycles"]) landing = std::max(landing, std::abs(c["landing_x"].get<double>() + 2));
  r.measured = {{"delay_exponent", a}, {"excursion_exponent", b}, {"limit_period", T}, {"landing_error", landing}};
  r.passed = std::abs(a - 2.0 / 3) <= 0.05 && std::abs(b - 1.0 / 3) <= 0.05 && std::abs(T - T0) <= 0.02 &&
             landing < 1e-12;
  r.detail = fmt("exponents %.4f, %.4f; period limit %.4f (closed form %.4f)", a, b, T, T0);
}

void floquet(CriterionResult& r) {
  using namespace odeflow;
  auto radial = make_field(2, [](const Vec& x, double) {
    const double r2 = x[0] * x[0] + x[1] * x[1];
    return Vec{x[0] * (1 - r2) - x[1], x[1] * (1 - r2) + x[0]};
  }, "radial");
  auto vdp = [](double a) {
    return make_field(2, [a](const Vec& x, double) { return Vec{x[1], -x[0] + a * (1 - x[0] * x[0]) * x[1]}; },
                      "vdp");
  };
  struct Case {
    VectorField f;
    Vec guess;
    double T;
  };
  const std::vector<Case> cases{{radial, {1.1, 0.05}, 6.0}, {vdp(1.0), {2.0, 0.0}, 6.66}, {vdp(0.5), {2.0, 0.0}, 6.4}};
  double worst_zero = 0, worst_sum = 0, lambda = std::nan("");
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto po = find_periodic_orbit(cases[i].f, cases[i].guess, cases[i].T);
    const auto ce = characteristic_exponents(cases[i].f, po.orbit, po.period);
    const auto& ex = po.floquet.exponents;
    worst_zero = std::max(worst_zero, std::min(std::abs(ex[0]), std::abs(ex[1])));
    const double div = orbit_average(po.orbit, po.period,
                                     [&](const Vec& x, double t) { return cases[i].f.divergence(x, t); });
    worst_sum = std::max(worst_sum, std::abs((ex[0] + ex[1]).real() - div));
    if (i == 0) lambda = ce.lambda;
  }
  r.measured = {{"worst_zero_exponent", worst_zero}, {"worst_sum_defect", worst_sum}, {"radial_lambda", lambda}};
  r.passed = worst_zero < 1e-6 && worst_sum < 1e-6 && std::abs(lambda + 2) <= 1e-6;
  r.detail = fmt("zero exponent %.1e, sum vs mean divergence %.1e, lambda = %.8f", worst_zero, worst_sum, lambda);
}

void diophantine_suite(CriterionResult& r) {
  using namespace diophantine;
  const auto s2 = certify_type(sqrt2(), 0.29, 1.0, 10000);
  const auto gm = certify_type(golden_mean(), 0.38, 1.0, 10000);
  const auto rat = certify_type(Quad(1) / 3, 0.01, 1.0, 100);
  bool small_ok = true;
  long long checked = 0;
  for (const auto& w : {make_frequency(sqrt2(), 0.29, 1.0, 10000), make_frequency(golden_mean(), 0.38, 1.0, 10000)}) {
    if (!w.C) {
      small_ok = false;
      continue;
    }
    for (long long q = -1000; q <= 1000; ++q) {
      if (q == 0) continue;
      const auto sd = small_denominator_bound(w, q);
      small_ok = small_ok && sd.actual >= sd.bound;
      ++checked;
    }
  }
  r.measured = {{"sqrt2_margin", s2.worst_margin},
                {"golden_margin", gm.worst_margin},
                {"rational_margin", rat.worst_margin},
                {"small_denominators_checked", checked}};
  r.passed = s2.passed && gm.passed && !rat.passed && rat.worst_margin == 0.0 && small_ok;
  r.detail = fmt("sqrt2 margin %.4f, golden margin %.4f, rational margin %g, ", s2.worst_margin, gm.worst_margin,
                 rat.worst_margin) +
             std::to_string(checked) + " small denominators " + (small_ok ? "bounded" : "violated");
}

void takens_bogdanov(CriterionResult& r) {
  const json s = summary_of("tb-diagram");
  const json& c = s["check"];
  const double hc = c["homoclinic_lambda2"], pred = c["homoclinic_predicted"], band = c["band_halfwidth"];
  const double herr = c["hopf_error"];
  r.measured = c;
  r.passed = std::abs(hc - pred) <= band && herr <= 1e-3;
  r.detail = fmt("homoclinic lambda2 = %.5f vs %.5f +- %.5f; Hopf error %.1e", hc, pred, band, herr);
}

struct Criterion {
  const char* name;
  void (*fn)(CriterionResult&);
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> c{
      {"golden-breakup", golden_breakup},       {"invariant-circle", invariant_circle},
      {"averaging-order", averaging},           {"lie-triangle", lie_triangle},
      {"birkhoff-constraint", birkhoff},        {"tihonov", tihonov},
      {"gevrey-truncation", gevrey},            {"bifurcation-delay", delay},
      {"relaxation-scaling", relaxation},       {"floquet-identities", floquet},
      {"diophantine", diophantine_suite},       {"takens-bogdanov", takens_bogdanov},
  };
  return c;
}

}  // namespace

int acceptance_count() { return static_cast<int>(criteria().size()); }

std::vector<CriterionResult> run_acceptance(const std::vector<int>& only) {
  std::vector<int> ids = only;
  if (ids.empty())
    for (int i = 1; i <= acceptance_count(); ++i) ids.push_back(i);
  std::vector<CriterionResult> out;
  for (int id : ids) {
    if (id < 1 || id > acceptance_count()) throw ConfigError("no acceptance criterion " + std::to_string(id));
    const auto& c = criteria()[id - 1];
    CriterionResult r;
    r.id = id;
    r.name = c.name;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.fn(r);
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(r));
  }
  return out;
}

std::string format_line(const CriterionResult& r) {
  char head[64];
  std::snprintf(head, sizeof head, "%s %2d %-20s ", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str());
  char tail[32];
  std::snprintf(tail, sizeof tail, " (%.1f s)", r.seconds);
  return head + r.detail + tail;
}

}  // namespace perturblab::cli
