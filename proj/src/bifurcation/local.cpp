#include <boost/math/differentiation/finite_difference.hpp>

#include <cmath>

#include "perturblab/bifurcation.hpp"

namespace perturblab::bifurcation {

using series::BiPoly;

Mat PlanarField::jacobian(const Vec& x) const {
  Mat J(2, 2);
  if (f_jet) {
    const std::vector<Jet> v{Jet::eps(1) + x[0], Jet::delta(1) + x[1]};
    const auto r = f_jet(v);
    for (int i = 0; i < 2; ++i) {
      J(i, 0) = r[i](1, 0);
      J(i, 1) = r[i](0, 1);
    }
    return J;
  }
  for (int j = 0; j < 2; ++j) {
    const double h = 1e-6 * (1 + std::abs(x[j]));
    Vec p = x, m = x;
    p[j] += h;
    m[j] -= h;
    const Vec fp = f(p), fm = f(m);
    for (int i = 0; i < 2; ++i) J(i, j) = (fp[i] - fm[i]) / (2 * h);
  }
  return J;
}

std::array<Taylor2, 2> taylor_coefficients(const PlanarField& field, const Vec& at, const Mat& basis, int order) {
  if (order < 0) throw ConfigError("negative Taylor order");
  const Mat Binv = basis.inverse();
  std::array<Taylor2, 2> out;
  for (auto& c : out) {
    c.assign(order + 1, std::vector<double>(order + 1, 0.0));
  }
  if (field.has_jets()) {
    const Jet e1 = Jet::eps(order), e2 = Jet::delta(order);
    const std::vector<Jet> x{e1 * basis(0, 0) + e2 * basis(0, 1) + at[0], e1 * basis(1, 0) + e2 * basis(1, 1) + at[1]};
    const auto r = field.f_jet(x);
    for (int i = 0; i <= order; ++i)
      for (int j = 0; i + j <= order; ++j)
        for (int c = 0; c < 2; ++c) out[c][i][j] = Binv(c, 0) * r[0](i, j) + Binv(c, 1) * r[1](i, j);
    return out;
  }
  // least squares on a symmetric stencil with two spare degrees
  if (order > 4) throw ConfigError("finite-difference Taylor data limited to order 4; supply jets");
  const int deg = order + 2, half = 4;
  const double h = 2e-2;
  std::vector<std::pair<int, int>> mono;
  for (int d = 0; d <= deg; ++d)
    for (int i = d; i >= 0; --i) mono.emplace_back(i, d - i);
  const int n = 2 * half + 1;
  Mat A(n * n, mono.size());
  Mat b(n * n, 2);
  int row = 0;
  for (int p = -half; p <= half; ++p)
    for (int q = -half; q <= half; ++q, ++row) {
      const double u = p * h, v = q * h;
      for (std::size_t k = 0; k < mono.size(); ++k)
        A(row, k) = std::pow(u / h, mono[k].first) * std::pow(v / h, mono[k].second);
      const Vec x{at[0] + basis(0, 0) * u + basis(0, 1) * v, at[1] + basis(1, 0) * u + basis(1, 1) * v};
      const Vec fx = field.f(x);
      b(row, 0) = Binv(0, 0) * fx[0] + Binv(0, 1) * fx[1];
      b(row, 1) = Binv(1, 0) * fx[0] + Binv(1, 1) * fx[1];
    }
  const Mat sol = A.colPivHouseholderQr().solve(b);
  for (std::size_t k = 0; k < mono.size(); ++k) {
    const auto [i, j] = mono[k];
    if (i + j > order) continue;
    for (int c = 0; c < 2; ++c) out[c][i][j] = sol(k, c) / std::pow(h, i + j);
  }
  return out;
}

// ---- classification ----

std::string to_string(EquilibriumLabel l) {
  switch (l) {
    case EquilibriumLabel::node: return "node";
    case EquilibriumLabel::saddle: return "saddle";
    case EquilibriumLabel::focus: return "focus";
    case EquilibriumLabel::center: return "center";
    case EquilibriumLabel::degenerate_node: return "degenerate node";
    case EquilibriumLabel::improper_node: return "improper node";
    case EquilibriumLabel::saddle_node_candidate: return "elementary saddle-node candidate";
    case EquilibriumLabel::elliptic: return "elliptic";
  }
  return "?";
}

EquilibriumClass classify_equilibrium(const Mat& J, const ClassifyOptions& opts) {
  if (J.rows() != 2 || J.cols() != 2) throw ConfigError("classify_equilibrium expects a 2x2 matrix");
  EquilibriumClass r;
  const double s = J.norm();
  const double tr = J.trace(), det = J.determinant();
  const double disc = tr * tr - 4 * det;
  auto sgn = [](double v) { return v > 0 ? 1 : v < 0 ? -1 : 0; };
  if (s == 0.0 || std::abs(disc) <= opts.equal_tol * s * s) {
    const double a = tr / 2;
    r.eigenvalues = {cplx(a), cplx(a)};
    const double rank_gap = (J - a * Mat::Identity(2, 2)).norm();
    r.independent_eigenvectors = rank_gap <= opts.vector_tol * std::max(s, 1e-300) || s == 0.0 ? 2 : 1;
    if (std::abs(a) <= opts.zero_tol * s || s == 0.0) {
      r.label = EquilibriumLabel::elliptic;
      r.hyperbolic = false;
      r.elliptic = true;
      r.stability = 0;
    } else {
      r.label = r.independent_eigenvectors == 2 ? EquilibriumLabel::degenerate_node : EquilibriumLabel::improper_node;
      r.stability = sgn(a);
    }
    return r;
  }
  if (disc < 0) {
    const double re = tr / 2, im = std::sqrt(-disc) / 2;
    r.eigenvalues = {cplx(re, im), cplx(re, -im)};
    if (std::abs(re) <= opts.zero_tol * s) {
      r.label = EquilibriumLabel::center;
      r.hyperbolic = false;
      r.elliptic = true;
      r.stability = 0;
    } else {
      r.label = EquilibriumLabel::focus;
      r.stability = sgn(re);
    }
    return r;
  }
  const double q = std::sqrt(disc);
  const double big = tr >= 0 ? (tr + q) / 2 : (tr - q) / 2;
  const double small = big != 0.0 ? det / big : 0.0;
  r.eigenvalues = {cplx(std::min(big, small)), cplx(std::max(big, small))};
  if (std::abs(det) <= opts.zero_tol * s * s) {
    r.label = EquilibriumLabel::saddle_node_candidate;
    r.hyperbolic = false;
    r.eigenvalues = {cplx(0.0), cplx(tr)};
    r.stability = 0;
  } else if (det < 0) {
    r.label = EquilibriumLabel::saddle;
    r.stability = 0;
  } else {
    r.label = EquilibriumLabel::node;
    r.stability = sgn(tr);
  }
  return r;
}

EquilibriumClass classify_equilibrium(const PlanarField& field, const Vec& x_star, const ClassifyOptions& opts) {
  auto r = classify_equilibrium(field.jacobian(x_star), opts);
  r.location = x_star;
  return r;
}

// ---- cusp ----

CuspSummary cusp_region(double l1, double l2, double rel_tol) {
  CuspSummary s;
  s.lambda1 = l1;
  s.lambda2 = l2;
  s.discriminant = 4 * l1 * l1 * l1 - 27 * l2 * l2;
  const double scale = std::max(4 * std::abs(l1 * l1 * l1), 27 * l2 * l2);
  auto F = [&](double x) { return -x * x * x + l1 * x + l2; };
  auto polish = [&](double x) {
    for (int it = 0; it < 3; ++it) {
      const double d = -3 * x * x + l1;
      if (d == 0.0) break;
      x -= F(x) / d;
    }
    return x;
  };
  if (scale == 0.0) {
    s.critical = true;
    s.count = 1;
    s.equilibria = {{0.0, -1, 3}};
    return s;
  }
  if (std::abs(s.discriminant) <= rel_tol * scale) {
    s.critical = true;
    const double r = std::sqrt(l1 / 3);
    const double sg = l2 >= 0 ? 1.0 : -1.0;
    const CuspEquilibrium dbl{-sg * r, 0, 2}, simple{2 * sg * r, -1, 1};
    s.equilibria = sg > 0 ? std::vector<CuspEquilibrium>{dbl, simple} : std::vector<CuspEquilibrium>{simple, dbl};
    s.count = 2;
    return s;
  }
  if (s.discriminant > 0) {
    // three real roots of x^3 - l1 x - l2
    const double m = 2 * std::sqrt(l1 / 3);
    const double th = std::acos(std::clamp(3 * std::sqrt(3.0) * l2 / (2 * l1 * std::sqrt(l1)), -1.0, 1.0));
    Vec x(3);
    for (int k = 0; k < 3; ++k) x[k] = polish(m * std::cos(th / 3 - kTwoPi * k / 3));
    std::sort(x.begin(), x.end());
    s.equilibria = {{x[0], -1, 1}, {x[1], +1, 1}, {x[2], -1, 1}};
    s.count = 3;
    return s;
  }
  const double d = std::sqrt(l2 * l2 / 4 - l1 * l1 * l1 / 27);
  const double x = polish(std::cbrt(l2 / 2 + d) + std::cbrt(l2 / 2 - d));
  s.equilibria = {{x, -1, 1}};
  s.count = 1;
  return s;
}

// ---- center manifold ----

CenterManifold center_manifold_coeffs(const CenterManifoldSystem& sys, int order) {
  if (sys.a == 0.0) throw ConfigError("center manifold needs a nonzero transverse eigenvalue a");
  if (!sys.g1 || !sys.g2) throw ConfigError("center manifold system needs g1 and g2");
  if (order < 2) throw ConfigError("center manifold order must be at least 2");
  if (order > sys.smoothness) throw ConfigError("order exceeds available smoothness of the nonlinear terms");
  {
    const Jet u = Jet::eps(1), v = Jet::delta(1);
    const Jet a = sys.g1(u, v), b = sys.g2(u, v);
    const double lin = std::abs(a(0, 0)) + std::abs(a(1, 0)) + std::abs(a(0, 1)) + std::abs(b(0, 0)) +
                       std::abs(b(1, 0)) + std::abs(b(0, 1));
    if (lin > 1e-12) throw ConfigError("g1, g2 must vanish with their first derivatives at the origin");
  }
  const int N = order;
  const Jet x = Jet::eps(N);
  CenterManifold cm;
  cm.order = N;
  cm.h.assign(N + 1, 0.0);
  auto h_jet = [&] {
    Jet h(N);
    for (int k = 2; k <= N; ++k) h(k, 0) = cm.h[k];
    return h;
  };
  for (int k = 2; k <= N; ++k) {
    const Jet h = h_jet();
    Jet dh(N);
    for (int j = 1; j <= N; ++j) dh(j - 1, 0) = j * h(j, 0);
    const Jet R = sys.a * h + sys.g2(x, h) - dh * sys.g1(x, h);
    cm.h[k] = -R(k, 0) / sys.a;
  }
  const Jet h = h_jet();
  Jet dh(N);
  for (int j = 1; j <= N; ++j) dh(j - 1, 0) = j * h(j, 0);
  const Jet R = sys.a * h + sys.g2(x, h) - dh * sys.g1(x, h);
  const Jet g = sys.g1(x, h);
  cm.residual.resize(N + 1);
  cm.reduced.resize(N + 1);
  for (int k = 0; k <= N; ++k) {
    cm.residual[k] = R(k, 0);
    cm.reduced[k] = g(k, 0);
  }
  cm.c = cm.reduced[2];
  cm.elementary_saddle_node = std::abs(cm.c) > 1e-12;
  return cm;
}

namespace {

using RVec = std::vector<Rational>;

RVec rmul(const RVec& a, const RVec& b, int N) {
  RVec r(N + 1, Rational(0));
  for (int i = 0; i <= N; ++i) {
    if (a[i] == 0) continue;
    for (int j = 0; i + j <= N; ++j) r[i + j] += a[i] * b[j];
  }
  return r;
}

// g(x, h(x)) truncated at degree N
RVec rsubstitute(const RationalPoly& g, const RVec& h, int N) {
  RVec r(N + 1, Rational(0));
  int maxj = 0;
  for (const auto& [ij, c] : g) maxj = std::max(maxj, ij.second);
  std::vector<RVec> hp{RVec(N + 1, Rational(0))};
  hp[0][0] = 1;
  for (int j = 1; j <= maxj; ++j) hp.push_back(rmul(hp.back(), h, N));
  for (const auto& [ij, c] : g) {
    const auto [i, j] = ij;
    for (int k = 0; k + i <= N; ++k) r[k + i] += c * hp[j][k];
  }
  return r;
}

}  // namespace

RationalCenterManifold center_manifold_coeffs(const Rational& a, const RationalPoly& g1, const RationalPoly& g2,
                                              int order) {
  if (a == 0) throw ConfigError("center manifold needs a nonzero transverse eigenvalue a");
  if (order < 2) throw ConfigError("center manifold order must be at least 2");
  for (const auto* g : {&g1, &g2})
    for (const auto& [ij, c] : *g)
      if (ij.first + ij.second < 2 && c != 0)
        throw ConfigError("g1, g2 must vanish with their first derivatives at the origin");
  const int N = order;
  RationalCenterManifold cm;
  cm.order = N;
  cm.h.assign(N + 1, Rational(0));
  auto resid = [&](const RVec& h) {
    RVec dh(N + 1, Rational(0));
    for (int j = 1; j <= N; ++j) dh[j - 1] = j * h[j];
    RVec r = rsubstitute(g2, h, N);
    const RVec p = rmul(dh, rsubstitute(g1, h, N), N);
    for (int k = 0; k <= N; ++k) r[k] += a * h[k] - p[k];
    return r;
  };
  for (int k = 2; k <= N; ++k) cm.h[k] = -resid(cm.h)[k] / a;
  cm.residual = resid(cm.h);
  cm.reduced = rsubstitute(g1, cm.h, N);
  cm.c = cm.reduced[2];
  cm.elementary_saddle_node = cm.c != 0;
  return cm;
}

// ---- saddle-node function ----

std::string to_string(NodeBifurcationKind k) {
  switch (k) {
    case NodeBifurcationKind::saddle_node: return "saddle-node";
    case NodeBifurcationKind::transcritical: return "transcritical";
    case NodeBifurcationKind::isolated: return "isolated";
    case NodeBifurcationKind::none: return "none";
  }
  return "?";
}

SaddleNodeReport saddle_node_H(const std::function<double(double, double)>& F, std::pair<double, double> bracket,
                               int samples, double degeneracy_tol) {
  using boost::math::differentiation::finite_difference_derivative;
  if (!(bracket.first < 0 && bracket.second > 0)) throw ConfigError("the lambda bracket must contain 0");
  if (samples < 3) throw ConfigError("saddle_node_H needs at least 3 samples");
  auto Fx = [&](double x, double l) { return finite_difference_derivative([&](double u) { return F(u, l); }, x); };
  auto Fxx = [&](double x, double l) { return finite_difference_derivative([&](double u) { return Fx(u, l); }, x); };
  SaddleNodeReport r;
  if (std::abs(F(0, 0)) > 1e-10) throw ConfigError("F(0, 0) must vanish");
  if (std::abs(Fx(0, 0)) > 1e-7) throw ConfigError("dF/dx(0, 0) must vanish");
  r.c = Fxx(0, 0) / 2;
  if (std::abs(r.c) < degeneracy_tol) throw NumericalError("degenerate second derivative at the origin");

  Vec lam(samples);
  for (int i = 0; i < samples; ++i) lam[i] = bracket.first + (bracket.second - bracket.first) * i / (samples - 1);
  lam.push_back(0.0);
  std::sort(lam.begin(), lam.end());
  lam.erase(std::unique(lam.begin(), lam.end(), [](double a, double b) { return std::abs(a - b) < 1e-15; }),
            lam.end());
  const std::size_t i0 = std::find(lam.begin(), lam.end(), 0.0) - lam.begin();
  Vec phi(lam.size(), 0.0);
  auto newton = [&](double x, double l) {
    for (int it = 0; it < 50; ++it) {
      const double dx = Fx(x, l) / Fxx(x, l);
      x -= dx;
      if (std::abs(dx) < 1e-13 * (1 + std::abs(x))) return x;
    }
    throw ConvergenceError("extremum path lost at lambda = " + std::to_string(l));
  };
  for (std::size_t i = i0 + 1; i < lam.size(); ++i) phi[i] = newton(phi[i - 1], lam[i]);
  for (std::size_t i = i0; i-- > 0;) phi[i] = newton(phi[i + 1], lam[i]);
  r.lambda = lam;
  r.phi = phi;
  int neg = 0, pos = 0;  // majority signs on each side
  for (std::size_t i = 0; i < lam.size(); ++i) {
    const double H = F(phi[i], lam[i]) / r.c;
    r.H.push_back(H);
    const double tol = 1e-13;
    r.equilibria.push_back(H < -tol ? 2 : H > tol ? 0 : 1);
    const int s = H < -tol ? -1 : H > tol ? 1 : 0;
    if (lam[i] < 0) neg += s;
    if (lam[i] > 0) pos += s;
  }
  const int sn = neg > 0 ? 1 : neg < 0 ? -1 : 0, sp = pos > 0 ? 1 : pos < 0 ? -1 : 0;
  if (sn * sp < 0)
    r.kind = NodeBifurcationKind::saddle_node;
  else if (sn < 0 && sp < 0)
    r.kind = NodeBifurcationKind::transcritical;
  else if (sn > 0 && sp > 0)
    r.kind = NodeBifurcationKind::isolated;
  return r;
}

// ---- Hopf ----

HopfReport hopf_coefficient(const BiPoly& Gin, double omega0) {
  if (omega0 == 0.0) throw ConfigError("Hopf coefficient needs omega0 != 0");
  const int n = 3;
  const BiPoly G = Gin.with_degree(n);
  if (std::abs(G(0, 0)) + std::abs(G(1, 0)) + std::abs(G(0, 1)) > 1e-12)
    throw ConfigError("G must start at degree 2");
  const cplx iw(0, omega0);
  BiPoly h(n);
  for (int j = 0; j <= 2; ++j) h.at(j, 2 - j) = G(j, 2 - j) / (iw * double(1 - j + (2 - j)));
  const BiPoly z = BiPoly::z(n), zb = BiPoly::zbar(n);
  const BiPoly zdot = iw * z + G;
  const BiPoly zbdot = (-iw) * zb + G.conj_swap();
  const BiPoly P = zdot + h.d_dz() * zdot + h.d_dzbar() * zbdot;
  const BiPoly psi = inverse_map(z + h);
  HopfReport r;
  r.omega0 = omega0;
  r.G = G;
  r.h = h;
  r.normal_form = P.compose_map(psi);
  r.c21 = r.normal_form(2, 1);
  r.supercritical = r.c21.real() < 0;
  return r;
}

HopfReport hopf_coefficient(const PlanarField& field, const Vec& x_star) {
  const Mat J = field.jacobian(x_star);
  const double tr = J.trace(), det = J.determinant();
  if (!(det > 0) || std::abs(tr) > 1e-8 * (1 + J.norm()))
    throw ConfigError("linearization does not have imaginary eigenvalues");
  const double w = std::sqrt(det);
  // eigenvector (1, v2) of i w; x = x* + [Re v, -Im v] xi gives xi' = [[0,-w],[w,0]] xi + ...
  const cplx v2 = (cplx(0, w) - J(0, 0)) / J(0, 1);
  Mat P(2, 2);
  P << 1, 0, v2.real(), -v2.imag();
  const auto T = taylor_coefficients(field, x_star, P, 3);
  const BiPoly z = BiPoly::z(3), zb = BiPoly::zbar(3);
  const BiPoly X1 = 0.5 * (z + zb), X2 = cplx(0, -0.5) * (z - zb);
  BiPoly G(3);
  for (int i = 0; i <= 3; ++i)
    for (int j = 0; i + j <= 3; ++j) {
      if (i + j < 2) continue;
      const cplx c(T[0][i][j], T[1][i][j]);
      if (c == 0.0) continue;
      BiPoly m = BiPoly::constant(1.0, 3);
      for (int k = 0; k < i; ++k) m = m * X1;
      for (int k = 0; k < j; ++k) m = m * X2;
      G += c * m;
    }
  return hopf_coefficient(G, w);
}

}  // namespace perturblab::bifurcation
