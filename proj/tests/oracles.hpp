// Copyright (c) 2026 The bubbletx authors
// SPDX-License-Identifier: Apache-2.0

// Test-side oracles: independent evaluations of the defining integrals and
// small reference meshes. Deliberately written against the public pointwise
// evaluators only, so they share no code with the coefficient-building paths
// they are used to check.

#ifndef BUBBLETX_TESTS_ORACLES_HPP
#define BUBBLETX_TESTS_ORACLES_HPP

#include <random>

#include "bubbletx/transform.hpp"

namespace bubbletx::oracles {

inline SimplicialComplex two_triangles()
{
  std::vector<Vec> v(4, Vec(2));
  v[0] << 0.0, 0.0;
  v[1] << 1.0, 0.0;
  v[2] << 0.0, 1.0;
  v[3] << 1.0, 1.0;
  return SimplicialComplex(2, std::move(v), {{0, 1, 2}, {1, 2, 3}});
}

inline double uniform(std::mt19937_64& rng)
{
  return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
}

/// Random point of the open coordinate simplex in `nv` variables with all
/// barycentric coordinates (including the slack) at least `margin`.
inline Vec random_lambda(int nv, std::mt19937_64& rng, double margin = 0.08)
{
  Vec lambda(nv);
  while (true) {
    double sum = 0.0;
    for (int i = 0; i < nv; ++i) {
      lambda(i) = 0.5 + 0.5 * uniform(rng);
      sum += lambda(i);
    }
    const double total = 0.2 + 0.6 * (0.5 + 0.5 * uniform(rng));
    lambda *= total / sum;
    double minc = 1.0 - lambda.sum();
    for (int i = 0; i < nv; ++i)
      minc = std::min(minc, lambda(i));
    if (nv == 0 || minc >= margin)
      return lambda;
  }
}

/// Direct high-order quadrature of the defining integral of the average
/// (e empty) or the rescaled order reduction, at one lambda, through the
/// generic split-pullback evaluator.
inline AltTensor reduced_at(const SimplicialComplex& mesh, const IndexSet& e,
                            const IndexSet& f, int k, const PiecewiseForm& u,
                            const WeightFamily& weights, const Vec& lambda,
                            int quad_degree = 12)
{
  const int n = mesh.dim();
  const int j = e.empty() ? 0 : static_cast<int>(e.size()) - 1;
  const IndexSet base = e.empty() ? f : difference(f, e);
  const int nv = static_cast<int>(base.size());
  const auto& comp_masks = AltTensor::masks(nv, k - j);
  AltTensor out(nv, k - j);
  double b = 1.0;
  for (int i = 0; i < lambda.size(); ++i)
    b -= lambda(i);

  const MacroRegion region = e.empty() ? macroelement(mesh, f) : omega_ef(mesh, e, f);
  double measure = 0.0;
  for (int c : region.cells)
    measure += mesh.frame(c).volume;

  const QuadRule& rule = simplex_rule(n, quad_degree);
  std::vector<Vec> basis(n, Vec::Zero(n));
  for (int i = 0; i < n; ++i)
    basis[i](i) = 1.0;
  const AltMask full = (AltMask{1} << n) - 1;

  for (int cell : region.cells) {
    const auto& frame = mesh.frame(cell);
    for (int q = 0; q < rule.weights.size(); ++q) {
      const Vec y = frame.point(rule.barycentric.row(q).transpose());
      const double wq = frame.volume * rule.weights(q);
      for (std::size_t ci = 0; ci < comp_masks.size(); ++ci) {
        std::vector<Vec> lambda_tangents;
        for (int p : mask_to_positions(comp_masks[ci])) {
          Vec t = Vec::Zero(nv);
          t(p) = 1.0;
          lambda_tangents.push_back(t);
        }
        double value = 0.0;
        if (e.empty()) {
          value =
              pi_j_value(mesh, u, base, 0, cell, y, lambda, {}, lambda_tangents) / measure;
        } else {
          const AltTensor zt = weights.z_tensor(e, f, cell, y);
          for (AltMask jm : AltTensor::masks(n, j)) {
            const double zc = zt.comp[zt.index_of(full & ~jm)];
            if (zc == 0.0)
              continue;
            std::vector<Vec> tangents;
            for (int p : mask_to_positions(jm))
              tangents.push_back(basis[p]);
            value += complement_sign(jm, n) * zc *
                     pi_j_value(mesh, u, base, j, cell, y, lambda, tangents,
                                lambda_tangents) /
                     std::pow(b, j);
          }
        }
        out.comp[ci] += wq * value;
      }
    }
  }
  return out;
}

}  // namespace bubbletx::oracles

#endif
