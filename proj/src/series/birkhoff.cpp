#include "perturblab/series/birkhoff.hpp"

#include <cmath>

namespace perturblab::series {

MapNormalForm birkhoff_normal_form(const BiPoly& F, double theta, int order, bool area_preserving,
                                   const BirkhoffOptions& opts) {
  if (order < 1) throw Error("normal form order must be at least 1");
  if (order > opts.max_order)
    throw Error("normal form order " + std::to_string(order) + " exceeds the cap " + std::to_string(opts.max_order));
  if (F.degree() < order) throw Error("map series is truncated below the requested order");
  const cplx lam = std::polar(1.0, kTwoPi * theta);
  if (std::abs(F(1, 0) - lam) > 1e-8 || std::abs(F(0, 1)) > 1e-8 || std::abs(F(0, 0)) > 1e-12)
    throw Error("linear part of the map is not the rotation e^{2 pi i theta} z");
  if (order >= 3)
    for (int q = 1; q <= 4; ++q)
      if (std::abs(std::pow(lam, q) - 1.0) < 1e-10)
        throw StrongResonanceError("strong resonance q = " + std::to_string(q) + " blocks the normal form at order " +
                                       std::to_string(order),
                                   q);

  MapNormalForm nf;
  nf.theta = theta;
  nf.order = order;
  BiPoly G = F.with_degree(order);
  BiPoly H = BiPoly::z(order);
  for (int d = 2; d <= order; ++d) {
    BiPoly h = BiPoly::z(order);
    bool any = false;
    for (int j = d; j >= 0; --j) {
      const int k = d - j;
      const cplx g = G(j, k);
      const cplx den = std::pow(lam, j - 1) * std::pow(std::conj(lam), k) - 1.0;
      if (std::abs(den) < 1e-12) {
        nf.resonant_terms.emplace_back(j, k);
        continue;
      }
      if (std::abs(den) < opts.denominator_floor) {
        nf.near_resonant_terms.emplace_back(j, k);
        continue;
      }
      if (std::abs(g) == 0.0) continue;
      h.at(j, k) = g * std::conj(lam) / den;
      nf.eliminated_terms.emplace_back(j, k);
      any = true;
    }
    if (!any) continue;
    G = inverse_map(h).compose_map(G.compose_map(h));
    H = H.compose_map(h);
  }

  nf.transformation = H;
  nf.normal_form = G;
  for (int m = 1; 2 * m + 1 <= order; ++m) nf.C.push_back(G(m + 1, m));
  nf.area_defect = nf.C.empty() ? 0.0 : (std::conj(lam) * nf.C[0]).real();

  // Omega(I) = 2 pi theta + Im log(1 + sum_m conj(lam) C_m I^{2m}), as a series in I
  const int M = static_cast<int>(nf.C.size());
  std::vector<cplx> w(M + 1, 0.0), logs(M + 1, 0.0), power(M + 1, 0.0);
  for (int m = 1; m <= M; ++m) w[m] = std::conj(lam) * nf.C[m - 1];
  power[0] = 1.0;
  for (int n = 1; n <= M; ++n) {
    std::vector<cplx> next(M + 1, 0.0);
    for (int a = 0; a <= M; ++a)
      for (int b = 1; a + b <= M; ++b) next[a + b] += power[a] * w[b];
    power = next;
    const double sgn = (n % 2 == 1) ? 1.0 : -1.0;
    for (int m = 0; m <= M; ++m) logs[m] += sgn / n * power[m];
  }
  nf.omega_poly.assign(2 * M + 1, 0.0);
  nf.omega_poly[0] = kTwoPi * theta;
  for (int m = 1; m <= M; ++m) nf.omega_poly[2 * m] = logs[m].imag();

  if (area_preserving && std::abs(nf.area_defect) > opts.area_tol)
    throw NumericalError("map flagged area-preserving but Re(e^{-2 pi i theta} C_1) = " +
                         std::to_string(nf.area_defect));
  return nf;
}

}  // namespace perturblab::series
