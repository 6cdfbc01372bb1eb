#include <boost/math/differentiation/finite_difference.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <memory>

#include "perturblab/bifurcation.hpp"
#include "perturblab/odeflow.hpp"

namespace perturblab::bifurcation {

// ---- heteroclinic splitting ----

SplittingResult heteroclinic_splitting(AxisFunction f1, AxisFunction a, AxisFunction g2, AxisFunction df1,
                                       const SplittingOptions& opts) {
  using boost::math::differentiation::finite_difference_derivative;
  if (!f1 || !a || !g2) throw ConfigError("heteroclinic_splitting needs f1, df2/dx2 and g2 on the axis");
  if (!df1) df1 = [f1](double x) { return finite_difference_derivative(f1, x); };
  const double off = opts.endpoint_offset;
  for (int i = 1; i < 20; ++i) {
    const double x = i / 20.0;
    if (!(f1(x) != 0.0)) throw ConfigError("f1 must not vanish inside (0, 1)");
  }
  auto quad = std::make_shared<boost::math::quadrature::tanh_sinh<double>>();
  auto err = std::make_shared<double>(0.0);
  const double tol = opts.tol;
  // P(z) = int_{1/2}^z k, in log variables so that 1/z and 1/(1-z) behaviour stays smooth
  auto prim = [](const AxisFunction& k, double z) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    if (z == 0.5) return 0.0;
    if (z < 0.5)
      return -GK::integrate([&](double s) { return k(std::exp(s)) * std::exp(s); }, std::log(z), std::log(0.5), 5,
                            1e-13);
    return GK::integrate([&](double s) { return k(1 - std::exp(s)) * std::exp(s); }, std::log1p(-z), std::log(0.5),
                         5, 1e-13);
  };
  const AxisFunction ka = [f1, a](double z) { return a(z) / f1(z); };
  const AxisFunction ksym = [f1, a, df1](double z) { return (df1(z) + a(z)) / f1(z); };
  auto h1 = [=](double x) {
    if (x <= off) return 0.0;
    double e = 0;
    const double px = prim(ka, x);
    const double v = quad->integrate(
        [&](double y) {
          const double gy = g2(y);
          if (gy == 0.0) return 0.0;
          return std::exp(px - prim(ka, y)) * gy / f1(y);
        },
        off, x, tol, &e);
    *err = std::max(*err, e);
    return v;
  };
  auto h1_sym = [=](double x) {
    if (x <= off) return 0.0;
    double e = 0;
    const double px = prim(ksym, x);
    const double v = quad->integrate(
        [&](double y) {
          const double gy = g2(y);
          if (gy == 0.0) return 0.0;
          return std::exp(px - prim(ksym, y)) * gy;
        },
        off, x, tol, &e);
    *err = std::max(*err, e);
    return v / f1(x);
  };

  SplittingResult r;
  // exponent of the integrand near the left saddle
  {
    auto integrand = [&](double y) {
      const double gy = g2(y);
      return gy == 0.0 ? 0.0 : std::exp(-prim(ka, y)) * gy / f1(y);
    };
    const double y1 = 1e-5, y2 = 1e-7;
    const double i1 = std::abs(integrand(y1)), i2 = std::abs(integrand(y2));
    r.singular_exponent = (i1 > 0 && i2 > 0) ? std::log(i1 / i2) / std::log(y1 / y2) : 0.0;
    if (r.singular_exponent <= -1 + 1e-3)
      throw NumericalError("non-integrable endpoint singularity in the splitting integral (exponent " +
                           std::to_string(r.singular_exponent) + ")");
  }
  r.h1 = h1;
  r.h1_sym = h1_sym;
  for (int i = 0; i < opts.grid; ++i) {
    const double x = double(i) / (opts.grid - 1);
    r.x.push_back(x);
    r.h1_samples.push_back(i + 1 == opts.grid ? std::numeric_limits<double>::quiet_NaN() : h1(x));
  }
  // h1 f1 exp(-int_{1/2}^x ksym) stays finite at the far saddle
  double e = 0;
  r.endpoint_value = quad->integrate(
      [&](double y) {
        const double gy = g2(y);
        return gy == 0.0 ? 0.0 : std::exp(-prim(ksym, y)) * gy;
      },
      off, 1 - off, tol, &e);
  r.quadrature_error = std::max(*err, e);
  return r;
}

// ---- homoclinic return map ----

HomoclinicProfile homoclinic_return_profile(double a1, double a2, double eps_box, const Vec& x2_samples) {
  if (!(a1 < 0) || !(a2 > 0)) throw ConfigError("saddle eigenvalues must satisfy a1 < 0 < a2");
  if (std::abs(a1 + a2) <= 1e-12 * (a2 - a1)) throw ConfigError("|a1| = a2 is excluded (non-elementary loop)");
  if (!(eps_box > 0)) throw ConfigError("eps_box must be positive");
  HomoclinicProfile p;
  p.a1 = a1;
  p.a2 = a2;
  p.eps = eps_box;
  p.exponent = 1 - std::abs(a1) / a2;
  for (double x2 : x2_samples) {
    if (!(x2 > 0 && x2 < eps_box)) throw ConfigError("x2 samples must lie in (0, eps_box)");
    p.x2.push_back(x2);
    p.ratio.push_back(std::pow(eps_box / x2, p.exponent));
  }
  p.limit = std::abs(a1) > a2 ? RatioLimit::zero : RatioLimit::infinity;
  p.periodic_orbit_sign = std::abs(a1) > a2 ? +1 : -1;
  return p;
}

double homoclinic_H(double splitting, double a1, double a2) {
  if (!(a1 < 0) || !(a2 > 0)) throw ConfigError("saddle eigenvalues must satisfy a1 < 0 < a2");
  return splitting * std::log(std::abs(a1) / a2);
}

// ---- Takens-Bogdanov ----

PlanarField takens_bogdanov_field(double l1, double l2) {
  return make_planar(
      [l1, l2](const auto& y) {
        using T = std::decay_t<decltype(y[0])>;
        return std::vector<T>{y[1], y[1] * l2 + y[0] * y[0] + y[0] * y[1] + l1};
      },
      "takens_bogdanov");
}

std::array<cplx, 2> tb_eigenvalues(double l1, double l2, int branch) {
  if (!(l1 < 0)) throw ConfigError("equilibria exist only for lambda1 < 0");
  const double s = std::sqrt(-l1);
  const double m = (l2 + branch * s) / 2;
  const cplx root = std::sqrt(cplx(m * m + branch * 2 * s));
  return {m + root, m - root};
}

namespace {

struct Crossing {
  bool found = false;
  double y1 = 0;
};

// first crossing of y2 = 0 from a point next to the saddle
Crossing separatrix_crossing(const odeflow::VectorField& F, const Vec& x0, double t_max, double escape) {
  odeflow::Options o = odeflow::Options::tight(1e-12, 1e-14);
  o.record_steps = false;
  odeflow::EventSpec e;
  e.g = [](const Vec& x, double) { return x[1]; };
  e.terminal = true;
  o.events = {e};
  o.stop_when = [escape](const Vec& x, double) { return std::hypot(x[0], x[1]) > escape; };
  const auto tr = odeflow::integrate(F, x0, 0.0, t_max, o);
  Crossing c;
  if (!tr.events.empty()) {
    c.found = true;
    c.y1 = tr.events.front().state[0];
  }
  return c;
}

}  // namespace

double tb_splitting(double l1, double l2, double delta) {
  if (!(l1 < 0)) throw ConfigError("the saddle exists only for lambda1 < 0");
  const double s = std::sqrt(-l1);
  const auto mu = tb_eigenvalues(l1, l2, +1);
  const double mu_u = mu[0].real(), mu_s = mu[1].real();
  auto seed = [&](double m) {
    const double n = std::hypot(1.0, m);
    return Vec{s - delta / n, -delta * m / n};
  };
  auto fwd = odeflow::make_field(2, [l1, l2](const Vec& y, double) {
    return Vec{y[1], l1 + l2 * y[1] + y[0] * y[0] + y[0] * y[1]};
  });
  auto bwd = odeflow::make_field(2, [l1, l2](const Vec& y, double) {
    return Vec{-y[1], -(l1 + l2 * y[1] + y[0] * y[0] + y[0] * y[1])};
  });
  const double t_max = (60 + 2 * std::log(s / delta)) / std::sqrt(s);
  const double escape = 20 * s + 1;
  const Crossing u = separatrix_crossing(fwd, seed(mu_u), t_max, escape);
  const Crossing st = separatrix_crossing(bwd, seed(mu_s), t_max, escape);
  if (!u.found || !st.found)
    throw NumericalError("separatrix did not return to the axis at lambda2 = " + std::to_string(l2));
  return (u.y1 - st.y1) / s;
}

double tb_homoclinic_lambda2(double l1, const TBOptions& opts) {
  if (!(l1 < 0)) throw ConfigError("the homoclinic curve lies in lambda1 < 0");
  const double s = std::sqrt(-l1);
  // scan k = lambda2 / sqrt(-lambda1) for a sign change, then refine
  const double k0 = 5.0 / 7.0;
  auto D = [&](double k) { return tb_splitting(l1, k * s, opts.seed_distance); };
  double lo = 0, hi = 0;
  bool found = false;
  const double dk = 0.02;
  for (int i = 0; i <= 40 && !found; ++i)
    for (int side : {+1, -1}) {
      const double ka = k0 + side * i * dk, kb = ka + side * dk;
      if (std::min(ka, kb) <= 0.0 || std::max(ka, kb) >= 1.0) continue;
      if (D(ka) * D(kb) <= 0) {
        lo = std::min(ka, kb);
        hi = std::max(ka, kb);
        found = true;
        break;
      }
    }
  if (!found) throw ConvergenceError("no homoclinic sign change found below the Hopf curve");
  boost::math::tools::eps_tolerance<double> tol(40);
  std::uintmax_t it = 100;
  const auto r = boost::math::tools::toms748_solve(D, lo, hi, tol, it);
  return 0.5 * (r.first + r.second) * s;
}

double tb_hopf_lambda2(double l1, double tol) {
  if (!(l1 < 0)) throw ConfigError("the Hopf curve lies in lambda1 < 0");
  const double s = std::sqrt(-l1);
  // trace of the numerical Jacobian at the equilibrium left of the saddle
  auto trace = [&](double l2) {
    const auto F = takens_bogdanov_field(l1, l2);
    Vec x{-s, 0};
    for (int it = 0; it < 20; ++it) {
      const Vec f = F(x);
      const Mat J = F.jacobian(x);
      const Eigen::Vector2d dx = J.fullPivLu().solve(Eigen::Vector2d(f[0], f[1]));
      x[0] -= dx(0);
      x[1] -= dx(1);
      if (dx.norm() < 1e-15) break;
    }
    return F.jacobian(x).trace();
  };
  double lo = 0, hi = 2 * s + 1;
  if (trace(lo) * trace(hi) > 0) throw ConvergenceError("Hopf curve not bracketed");
  while (hi - lo > tol) {
    const double m = 0.5 * (lo + hi);
    (trace(m) * trace(lo) <= 0 ? hi : lo) = m;
  }
  return 0.5 * (lo + hi);
}

TBDiagnosis takens_bogdanov_diagram(double l1, double l2, const TBOptions& opts) {
  TBDiagnosis d;
  d.lambda1 = l1;
  d.lambda2 = l2;
  const double tol = opts.tol;
  if (l1 > tol) {
    d.region = 1;
    return d;
  }
  if (std::abs(l1) <= tol) {
    d.curve = l2 > tol ? 'A' : l2 < -tol ? 'D' : 'O';
    d.equilibria = {{0.0, 0.0}};
    const auto F = takens_bogdanov_field(0.0, l2);
    d.classes = {classify_equilibrium(F, d.equilibria[0])};
    d.eigenvalues_at_equilibria = {d.classes[0].eigenvalues};
    return d;
  }
  const double s = std::sqrt(-l1);
  const auto F = takens_bogdanov_field(l1, l2);
  d.equilibria = {{s, 0.0}, {-s, 0.0}};
  d.eigenvalues_at_equilibria = {tb_eigenvalues(l1, l2, +1), tb_eigenvalues(l1, l2, -1)};
  for (const auto& x : d.equilibria) d.classes.push_back(classify_equilibrium(F, x));
  d.hopf_lambda2 = s;
  d.homoclinic_predicted = 5.0 / 7.0 * s;
  if (std::abs(l2 - s) <= tol) {
    d.curve = 'B';
    return d;
  }
  if (l2 > s) {
    d.region = 2;
    return d;
  }
  double hc = opts.homoclinic_lambda2;
  if (std::isnan(hc)) hc = opts.locate_homoclinic ? tb_homoclinic_lambda2(l1, opts) : d.homoclinic_predicted;
  d.homoclinic_lambda2 = hc;
  if (std::abs(l2 - hc) <= tol)
    d.curve = 'C';
  else
    d.region = l2 > hc ? 3 : 4;
  return d;
}

}  // namespace perturblab::bifurcation
