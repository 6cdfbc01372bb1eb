#include "perturblab/series/lie.hpp"

namespace perturblab::series {

HomologicalResult solve_homological(const Vec& Omega, const CSeries& H1, double resonance_tol) {
  if (static_cast<int>(Omega.size()) != H1.n_angles())
    throw Error("frequency vector length does not match the number of angles");
  double norm = 0;
  for (double w : Omega) norm += w * w;
  norm = std::sqrt(norm);
  const double thresh = resonance_tol * norm;

  HomologicalResult r{CSeries(H1.n_angles(), H1.n_actions(), H1.truncation()),
                      CSeries(H1.n_angles(), H1.n_actions(), H1.truncation()),
                      {}};
  for (const auto& [key, c] : H1.terms()) {
    double kw = 0;
    for (std::size_t i = 0; i < Omega.size(); ++i) kw += key.k[i] * Omega[i];
    if (std::abs(kw) < thresh || norm == 0) {
      r.resonant_part.add_term(key.k, key.m, c);
      if (std::find(r.resonant_harmonics.begin(), r.resonant_harmonics.end(), key.k) == r.resonant_harmonics.end())
        r.resonant_harmonics.push_back(key.k);
    } else {
      r.W0.add_term(key.k, key.m, c / cplx(0.0, kw));
    }
  }
  return r;
}

}  // namespace perturblab::series
