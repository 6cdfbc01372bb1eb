#pragma once

#include <vector>

#include "perturblab/series/fourier_taylor.hpp"

namespace perturblab::series {

// table[k][n] = f^k_n; output_row[n] = f^n_0. All sequences use the factorial-scaled
// convention f = sum eps^n/n! f_n.
template <class C>
struct LieTriangle {
  std::vector<FourierTaylorSeries<C>> input_column;
  std::vector<FourierTaylorSeries<C>> generators;
  std::vector<std::vector<FourierTaylorSeries<C>>> table;
  std::vector<FourierTaylorSeries<C>> output_row;
};

template <class C>
LieTriangle<C> lie_triangle_transform(const std::vector<FourierTaylorSeries<C>>& H,
                                      const std::vector<FourierTaylorSeries<C>>& W, int order) {
  using Traits = CoeffTraits<C>;
  if (order < 0) throw Error("negative order");
  if (static_cast<int>(H.size()) < order + 1)
    throw Error("order " + std::to_string(order) + " needs H_0..H_" + std::to_string(order) +
                " but only " + std::to_string(H.size()) + " terms were given");
  if (order > 0 && static_cast<int>(W.size()) < order)
    throw Error("order " + std::to_string(order) + " needs W_0..W_" + std::to_string(order - 1) +
                " but only " + std::to_string(W.size()) + " generators were given");
  for (const auto& h : H) h.check_same_variables(H.front());
  for (const auto& w : W) w.check_same_variables(H.front());

  // binom[n][m]
  std::vector<std::vector<long long>> binom(order + 1);
  for (int n = 0; n <= order; ++n) {
    binom[n].assign(n + 1, 1);
    for (int m = 1; m < n; ++m) binom[n][m] = binom[n - 1][m - 1] + binom[n - 1][m];
  }

  LieTriangle<C> tri;
  tri.input_column.assign(H.begin(), H.begin() + order + 1);
  tri.generators.assign(W.begin(), W.begin() + std::min<std::size_t>(W.size(), order));
  tri.table.resize(order + 1);
  tri.table[0] = tri.input_column;
  for (int k = 1; k <= order; ++k) {
    const auto& prev = tri.table[k - 1];
    auto& row = tri.table[k];
    row.reserve(order - k + 1);
    for (int n = 0; n <= order - k; ++n) {
      FourierTaylorSeries<C> f = prev[n + 1];
      for (int m = 0; m <= n; ++m)
        f += Traits::from_int(binom[n][m]) * poisson_bracket(prev[n - m], tri.generators[m]);
      row.push_back(std::move(f));
    }
  }
  for (int n = 0; n <= order; ++n) tri.output_row.push_back(tri.table[n][0]);
  return tri;
}

// Plain coefficients h_n of sum eps^n h_n to the scaled form H_n = n! h_n, and back.
template <class C>
std::vector<FourierTaylorSeries<C>> to_deprit(const std::vector<FourierTaylorSeries<C>>& plain) {
  std::vector<FourierTaylorSeries<C>> out;
  long long f = 1;
  for (std::size_t n = 0; n < plain.size(); ++n) {
    if (n > 0) f *= static_cast<long long>(n);
    out.push_back(CoeffTraits<C>::from_int(f) * plain[n]);
  }
  return out;
}

template <class C>
std::vector<FourierTaylorSeries<C>> from_deprit(const std::vector<FourierTaylorSeries<C>>& scaled) {
  std::vector<FourierTaylorSeries<C>> out;
  long long f = 1;
  for (std::size_t n = 0; n < scaled.size(); ++n) {
    if (n > 0) f *= static_cast<long long>(n);
    out.push_back((CoeffTraits<C>::from_int(1) / CoeffTraits<C>::from_int(f)) * scaled[n]);
  }
  return out;
}

struct HomologicalResult {
  CSeries W0;
  CSeries resonant_part;
  std::vector<MultiIndex> resonant_harmonics;
};

// W0_k = H1_k / (i k.Omega) where |k.Omega| >= resonance_tol * |Omega|; other harmonics
// (the mean included) go to resonant_part untouched.
HomologicalResult solve_homological(const Vec& Omega, const CSeries& H1, double resonance_tol = 1e-8);

}  // namespace perturblab::series
