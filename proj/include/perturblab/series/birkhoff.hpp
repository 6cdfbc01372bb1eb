#pragma once

#include <utility>
#include <vector>

#include "perturblab/series/bipoly.hpp"

namespace perturblab::series {

struct BirkhoffOptions {
  double denominator_floor = 1e-6;  // |e^{2 pi i q theta} - 1| below this: reported, not divided
  double area_tol = 1e-8;
  int max_order = 10;
};

struct MapNormalForm {
  double theta = 0.0;
  int order = 0;
  std::vector<cplx> C;  // C[m-1] multiplies |zeta|^{2m} zeta
  std::vector<std::pair<int, int>> resonant_terms;
  std::vector<std::pair<int, int>> near_resonant_terms;
  std::vector<std::pair<int, int>> eliminated_terms;
  BiPoly transformation;  // z = H(zeta)
  BiPoly normal_form;     // zeta -> N(zeta)
  Vec omega_poly;         // Omega(I) = sum omega_poly[n] I^n
  double area_defect = 0.0;  // Re(e^{-2 pi i theta} C_1)
};

// F is the full map z -> e^{2 pi i theta} z + sum g_jk z^j zbar^k.
MapNormalForm birkhoff_normal_form(const BiPoly& F, double theta, int order, bool area_preserving,
                                   const BirkhoffOptions& opts = {});

class StrongResonanceError : public Error {
 public:
  StrongResonanceError(const std::string& what, int q_) : Error(what), q(q_) {}
  int q;
};

}  // namespace perturblab::series
