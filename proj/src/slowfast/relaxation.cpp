#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <limits>

#include "perturblab/odeflow.hpp"
#include "perturblab/slowfast.hpp"

namespace perturblab::slowfast {

namespace {

constexpr double kFoldY = 2.0 / 3.0;

odeflow::VectorField vdp_field(double eps) {
  return odeflow::make_field(
      2, [eps](const Vec& s, double) { return Vec{(s[1] + s[0] - s[0] * s[0] * s[0] / 3) / eps, -s[0]}; },
      "van_der_pol");
}

odeflow::EventSpec section_event() {
  odeflow::EventSpec e;
  e.g = [](const Vec& s, double) { return s[1]; };
  e.direction = -1;  // y decreasing through 0 happens on the x > 0 branch
  e.terminal = true;
  return e;
}

}  // namespace

CycleMetrics relaxation_cycle(double vdp_eps, const RelaxationOptions& opts) {
  if (!(vdp_eps > 0)) throw ConfigError("eps must be positive");
  const auto F = vdp_field(vdp_eps);
  odeflow::Options o;
  o.rtol = opts.rtol;
  o.atol = opts.atol;
  o.record_steps = false;
  o.events = {section_event()};

  // return map on y = 0, x > 0; the first pass also absorbs the transient
  const double horizon = 50.0;
  double x = 2.0;
  CycleMetrics m;
  m.eps = vdp_eps;
  bool converged = false;
  for (int it = 0; it < opts.max_returns; ++it) {
    const auto tr = odeflow::integrate(F, {x, 0.0}, 0.0, horizon, o);
    if (tr.events.empty()) throw ConvergenceError("no return to the section; no cycle formed");
    const double xn = tr.events.back().state[0];
    m.return_residual = std::abs(xn - x);
    m.return_iterations = it + 1;
    x = xn;
    if (it > 0 && m.return_residual < opts.return_tol * (1 + std::abs(x))) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw ConvergenceError("return map did not converge (residual " + std::to_string(m.return_residual) + ")");

  // one period from the fixed point with the metric events
  odeflow::Options c = o;
  odeflow::EventSpec ret = section_event();
  odeflow::EventSpec jump;  // x increasing through 0: top of the cycle
  jump.g = [](const Vec& s, double) { return s[0]; };
  jump.direction = +1;
  odeflow::EventSpec fold_level;  // y reaching the fold value on the left branch
  fold_level.g = [](const Vec& s, double) { return s[1] - kFoldY; };
  fold_level.direction = +1;
  c.events = {ret, jump, fold_level};
  c.record_steps = true;
  const auto tr = odeflow::integrate(F, {x, 0.0}, 0.0, horizon, c);
  bool have_ret = false, have_jump = false, have_fold = false;
  for (const auto& e : tr.events) {
    if (e.event_id == 0 && !have_ret) {
      m.period = e.time;
      have_ret = true;
    }
    if (e.event_id == 1 && !have_jump) {
      m.jump_delay = e.state[1] - kFoldY;
      have_jump = true;
    }
    if (e.event_id == 2 && !have_fold) {
      m.excursion = std::abs(e.state[0] + 1);
      have_fold = true;
    }
  }
  if (!have_ret || !have_jump || !have_fold) throw ConvergenceError("cycle metrics incomplete");
  m.x_min = std::numeric_limits<double>::infinity();
  m.x_max = -m.x_min;
  for (std::size_t i = 0; i < tr.times.size() && tr.times[i] <= m.period; ++i) {
    m.x_min = std::min(m.x_min, tr.states[i][0]);
    m.x_max = std::max(m.x_max, tr.states[i][0]);
  }
  // jump from the fold (1, -2/3) lands on the outer branch of y = x^3/3 - x
  boost::math::tools::eps_tolerance<double> tol(52);
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve([](double v) { return v * v * v / 3 - v + kFoldY; }, -3.0, -1.5,
                                                   tol, iters);
  m.landing_x = 0.5 * (r.first + r.second);
  return m;
}

RelaxationScaling relaxation_scaling(const Vec& eps_list, const RelaxationOptions& opts) {
  if (eps_list.size() < 2) throw ConfigError("relaxation_scaling needs at least two eps values");
  RelaxationScaling s;
  s.cycles.resize(eps_list.size());
  parallel_for(eps_list.size(), [&](std::size_t i) { s.cycles[i] = relaxation_cycle(eps_list[i], opts); });
  Vec e, dy, ex, T;
  for (const auto& c : s.cycles) {
    e.push_back(c.eps);
    dy.push_back(c.jump_delay);
    ex.push_back(c.excursion);
    T.push_back(c.period);
  }
  s.delay_exponent = loglog_slope(e, dy);
  s.excursion_exponent = loglog_slope(e, ex);
  // T = T0 + a eps^{2/3} (+ b eps log eps)
  const int cols = e.size() >= 3 ? 3 : 2;
  Mat A(e.size(), cols);
  Eigen::VectorXd b(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    A(i, 0) = 1;
    A(i, 1) = std::pow(e[i], 2.0 / 3);
    if (cols == 3) A(i, 2) = e[i] * std::log(e[i]);
    b(i) = T[i];
  }
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
  s.limit_period = c(0);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double p = std::pow(e[i], 2.0 / 3);
    num += p * dy[i];
    den += p * p;
  }
  s.delay_constant = num / den;
  s.riccati_blowup = riccati_inner().v_blowup;
  return s;
}

RiccatiResult riccati_inner(double level) {
  const double v0 = -8.0;
  const double u0 = std::sqrt(-v0) - 1.0 / (4 * v0);
  auto F = odeflow::make_field(1, [](const Vec& u, double v) { return Vec{-u[0] * u[0] - v}; });
  odeflow::Options o = odeflow::Options::tight(1e-13, 1e-13);
  o.record_steps = false;
  o.blowup_norm = 1e300;
  odeflow::EventSpec hit;
  hit.g = [level](const Vec& u, double) { return u[0] - level; };
  hit.direction = -1;
  o.events = {hit};
  o.stop_when = [](const Vec& u, double) { return u[0] < -1e7; };
  const auto tr = odeflow::integrate(F, {u0}, v0, 10.0, o);
  RiccatiResult r;
  if (tr.events.empty() || tr.status != odeflow::Status::event_stop)
    throw NumericalError("Riccati solution did not blow up", tr.final_time());
  r.v_level = tr.events.front().time;
  // near the pole u ~ 1 / (v - v*)
  r.v_blowup = tr.final_time() - 1.0 / tr.final_state()[0];
  return r;
}

}  // namespace perturblab::slowfast
