// Copyright (c) 2026 The bubbletx authors
// SPDX-License-Identifier: Apache-2.0

#ifndef BUBBLETX_WEIGHTS_HPP
#define BUBBLETX_WEIGHTS_HPP

#include <memory>

#include "bubbletx/forms.hpp"

namespace bubbletx {

/// Element of a lowest-order (Whitney) space, stored as coefficients over
/// the d-simplices of the mesh. Basis elements carrying a zero-trace
/// constraint on a region's interface simply never receive a coefficient.
struct WhitneyCochain {
  int order = 0;
  std::map<int, double> coef;  // simplex id within simplices(order) -> value

  WhitneyCochain() = default;
  explicit WhitneyCochain(int order_) : order(order_) {}

  WhitneyCochain& axpy(double a, const WhitneyCochain& other);
  WhitneyCochain& operator*=(double s);
  double inf_norm() const;
  double l2_norm() const;
  friend double coef_distance(const WhitneyCochain& a, const WhitneyCochain& b);
};

/// Global coboundary: coefficients of d(u) in the Whitney basis one order up.
WhitneyCochain coboundary(const SimplicialComplex& mesh, const WhitneyCochain& u);

/// Value of the cochain's form at a point of a cell.
AltTensor cochain_tensor(const WhitneyCache& cache, const WhitneyCochain& u, int cell,
                         const Vec& x);

/// Normalized volume form of Omega_f: the n-form equal to 1/|Omega_f| times
/// the Euclidean volume form on Omega_f and zero elsewhere; integrates to 1.
WhitneyCochain volume_form(const SimplicialComplex& mesh, const IndexSet& f);

/// Index expansion of the difference operators: (sign, e', f') triples such
/// that (delta z)_{e,f} = sum sign * z_{e', f'}; `plus` selects the variant
/// that keeps the second index fixed.
std::vector<std::tuple<int, IndexSet, IndexSet>> delta_terms(const IndexSet& e,
                                                             const IndexSet& f, bool plus);

/// Per-pair diagnostics of one weight solve.
struct WeightSolveRecord {
  IndexSet e, f;
  int level = 0;                 // |e| - 1
  double solve_residual = 0.0;   // |D w - rhs| / max(1, |rhs|)
  double rhs_support_leak = 0.0; // rhs mass outside the admissible set
  double orth_residual = 0.0;
};

/// Identity residuals of a built family.
struct WeightIdentityReport {
  struct Entry {
    IndexSet e, f;
    double dz_residual = 0.0;       // d z = (-1)^{j+1} (delta z)
    double dplus_residual = 0.0;    // (delta^+ z) = 0
    double support_leak = 0.0;      // z coefficients outside Omega_{e,f}
    double zbound_constant = 0.0;   // |z|_inf * h_{e,f}^{n-j}
  };
  std::vector<Entry> entries;
  double max_dz = 0.0, max_dplus = 0.0, max_support = 0.0, max_zbound = 0.0;
  bool pass(double dz_tol = 1e-10, double dplus_tol = 1e-12) const
  {
    return max_dz <= dz_tol && max_dplus <= dplus_tol;
  }
};

/// The weight cochains w_{e,f} and z_{e,f}, built once per mesh by recursive
/// exactness solves in the zero-trace lowest-order complexes.
class WeightFamily {
public:
  /// Builds the full family. Throws if a solve is inconsistent, which
  /// signals a violated contractibility assumption.
  static WeightFamily build(const SimplicialComplex& mesh, bool keep_systems = false);

  const SimplicialComplex& mesh() const { return *mesh_; }
  const std::shared_ptr<WhitneyCache>& cache() const { return cache_; }

  bool has_w(const IndexSet& e, const IndexSet& f) const;
  const WhitneyCochain& w(const IndexSet& e, const IndexSet& f) const;
  const WhitneyCochain& z(const IndexSet& e, const IndexSet& f) const;

  /// Value of z_{e,f} at a point.
  AltTensor z_tensor(const IndexSet& e, const IndexSet& f, int cell, const Vec& x) const;

  const std::vector<WeightSolveRecord>& solve_records() const { return records_; }

  /// Retained stacked systems (least-squares matrix, right-hand side,
  /// solution) when built with keep_systems; for oracle comparisons.
  struct KeptSystem {
    IndexSet e, f;
    Mat A;
    Vec b;
    Vec solution;
  };
  const std::vector<KeptSystem>& kept_systems() const { return kept_; }

  WeightIdentityReport verify_identities() const;

private:
  const SimplicialComplex* mesh_ = nullptr;
  std::shared_ptr<WhitneyCache> cache_;
  std::map<std::pair<IndexSet, IndexSet>, WhitneyCochain> w_;
  std::map<std::pair<IndexSet, IndexSet>, WhitneyCochain> z_;
  std::vector<WeightSolveRecord> records_;
  std::vector<KeptSystem> kept_;
};

}  // namespace bubbletx

#endif
