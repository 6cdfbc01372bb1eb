#include <cmath>

#include "perturblab/odeflow.hpp"

namespace perturblab::odeflow {

Section Section::hyperplane(Vec normal, double offset, int direction) {
  Section s;
  s.kind = Kind::hyperplane;
  s.normal = std::move(normal);
  s.offset = offset;
  s.direction = direction;
  return s;
}

Section Section::stroboscopic(double period, double phase) {
  if (!(period > 0)) throw Error("stroboscopic section needs a positive period");
  Section s;
  s.kind = Kind::stroboscopic;
  s.period = period;
  s.phase = phase;
  return s;
}

std::vector<SectionEvent> poincare_section(const VectorField& field, const Section& section,
                                           const Vec& x0, int n_crossings, const Options& opts,
                                           double t_max) {
  std::vector<SectionEvent> out;
  if (n_crossings <= 0) return out;

  if (section.kind == Section::Kind::stroboscopic) {
    Options o = opts;
    o.record_steps = false;
    o.dense = false;
    Vec x = x0;
    for (int k = 1; k <= n_crossings; ++k) {
      const double ta = section.phase + (k - 1) * section.period;
      const double tb = section.phase + k * section.period;
      Trajectory tr = integrate(field, x, ta, tb, o);
      if (!tr.ok())
        throw NumericalError("orbit left the domain after " + std::to_string(k - 1) +
                                 " stroboscopic crossings: " + tr.message,
                             tr.final_time(), tr.final_state());
      x = tr.final_state();
      SectionEvent e;
      e.time = tb;
      e.state = x;
      e.crossing_index = k - 1;
      e.direction = +1;
      out.push_back(std::move(e));
    }
    return out;
  }

  if (static_cast<int>(section.normal.size()) != field.dimension)
    throw Error("section normal has wrong dimension");
  Options o = opts;
  o.record_steps = false;
  EventSpec ev;
  const Vec nrm = section.normal;
  const double c = section.offset;
  ev.g = [nrm, c](const Vec& x, double) {
    double s = -c;
    for (std::size_t i = 0; i < x.size(); ++i) s += nrm[i] * x[i];
    return s;
  };
  ev.gradient = [nrm](const Vec&, double) { return nrm; };
  ev.direction = section.direction;
  ev.terminal = true;
  ev.max_count = n_crossings;
  o.events = {ev};
  Trajectory tr = integrate(field, x0, section.phase, section.phase + t_max, o);
  out = tr.events;
  if (static_cast<int>(out.size()) < n_crossings)
    throw NumericalError("found only " + std::to_string(out.size()) + " of " +
                             std::to_string(n_crossings) + " section crossings (" +
                             to_string(tr.status) + ")",
                         tr.final_time(), tr.final_state());
  return out;
}

}  // namespace perturblab::odeflow
