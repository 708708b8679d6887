// Copyright (c) 2026 The bubbletx authors
// SPDX-License-Identifier: Apache-2.0

#ifndef BUBBLETX_TRANSFORM_HPP
#define BUBBLETX_TRANSFORM_HPP

#include "bubbletx/weights.hpp"

namespace bubbletx {

/// G(y, lambda) = sum_i lambda_i x_i + b(lambda) y, with lambda indexed by
/// the vertices of `anchor`.
Vec g_point(const SimplicialComplex& mesh, const IndexSet& anchor, const Vec& y,
            const Vec& lambda);

/// Evaluation context for the averaged pullbacks over a macroelement
/// region: for every y in a region cell and lambda in the anchor's
/// coordinate simplex, G(y, lambda) stays inside that same cell.
struct GContext {
  const SimplicialComplex* mesh = nullptr;
  MacroRegion region;
  IndexSet anchor;
  int quad_degree = 4;

  /// Verifies the convex-combination fact above on the context's own
  /// quadrature-by-lattice node pairs; throws if violated.
  void assert_convexity(int lattice_degree) const;
};

/// Value of the split pullback (Pi_j G^* u) at (y, lambda), applied to j
/// ambient tangent vectors and k-j lambda-space tangent vectors (the latter
/// indexed by the anchor's vertices).
double pi_j_value(const SimplicialComplex& mesh, const PiecewiseForm& u,
                  const IndexSet& anchor, int j, int cell, const Vec& y, const Vec& lambda,
                  const std::vector<Vec>& tangents, const std::vector<Vec>& lambda_tangents);

/// A smooth form on a coordinate simplex of the lambda space: either exact
/// polynomial coefficients, or a pointwise evaluator (for piecewise smooth
/// inputs given by callbacks).
struct ReducedForm {
  IndexSet e, f;
  IndexSet base;  // f for averages, f minus e for order reductions
  int order = 0;  // k - j
  bool polynomial = true;
  LambdaForm coefficients;
  std::function<AltTensor(const Vec& lambda)> evaluator;

  AltTensor tensor_at(const Vec& lambda) const;
};

/// Average operator: maps piecewise smooth k-forms on Omega_f to smooth
/// k-forms on the coordinate simplex of f. Exact for polynomial inputs.
ReducedForm average(const SimplicialComplex& mesh, const IndexSet& f, int k,
                    const PiecewiseForm& u, int quad_degree = -1);

/// Rescaled order reduction: the polynomial form b^{-j} R_{e,f}^k u on the
/// coordinate simplex of f minus e, computed against the weight z_{e,f}.
/// Identically zero for j > k. For vertices e this equals minus the trace
/// of the average.
ReducedForm order_reduction(const SimplicialComplex& mesh, const IndexSet& e,
                            const IndexSet& f, int k, const PiecewiseForm& u,
                            const WeightFamily& weights, int quad_degree = -1);

struct RIdentityResiduals {
  double d_residual = 0.0;      // R^{k+1} du = (-1)^j d R^k u - (delta R^k u)
  double dplus_residual = 0.0;  // (delta^+ R^k u) = 0
};

/// Coefficient-norm residuals of the two order-reduction identities for the
/// pair (e, f), rescaled by the common positive power of b.
RIdentityResiduals r_identity_check(const SimplicialComplex& mesh, const IndexSet& e,
                                    const IndexSet& f, int k, const PiecewiseForm& u,
                                    const WeightFamily& weights);

/// One rational term of a local bubble.
struct BubbleTerm {
  double factor = 1.0;
  IndexSet g;              // pullback subset; may be empty
  bool ratio = true;       // true: (rho_f / rho_g) * L_g^* W; false: (phi_e / rho_g) ^ L_g^* W
  IndexSet e;              // wedge terms only
  std::shared_ptr<const ReducedForm> w;
};

/// The local cut-off bubble C_{m,f}^k u: a term list evaluated pointwise,
/// supported on Omega_f and singular only on the skeleton.
struct LocalBubble {
  const SimplicialComplex* mesh = nullptr;
  std::shared_ptr<WhitneyCache> cache;
  int m = 0;
  int k = 0;
  IndexSet f;
  std::vector<BubbleTerm> terms;

  AltTensor value(int cell, const Vec& x) const;

  /// L2 norm over the support, by fixed-order quadrature.
  double l2_norm(int quad_degree = 12) const;
};

/// Builds the local cut-off operator C_{m,f}^k applied to u, for
/// f of dimension m + j with 0 <= j <= k.
LocalBubble cutoff_local(const SimplicialComplex& mesh, int m, const IndexSet& f, int k,
                         const PiecewiseForm& u, const WeightFamily& weights);

using BubbleMap = std::map<IndexSet, std::shared_ptr<LocalBubble>>;

/// All local bubbles of stage m: one per f in Delta_{m+j}, 0 <= j <= k.
BubbleMap stage_bubbles(const SimplicialComplex& mesh, int m, int k, const PiecewiseForm& u,
                        const WeightFamily& weights);

struct ReconstructionResult {
  PiecewiseForm form;
  double residual = 0.0;  // max relative mismatch at independent check points
};

/// Global cut-off C_m^k u. For polynomial input the bubble sum is
/// reconstructed per cell as a degree-r polynomial and validated at
/// independent interior points; a residual beyond `tol` throws, since it
/// falsifies the polynomial-invariance property the reconstruction relies
/// on. For callback input the result is a pointwise evaluator.
ReconstructionResult cutoff_global(const SimplicialComplex& mesh, int m, int k,
                                   const PiecewiseForm& u, const WeightFamily& weights,
                                   double tol = 1e-8, const BubbleMap* prebuilt = nullptr);

/// Full decomposition u = sum_m B_m^k u by the cut-off recursion.
struct BubbleDecomposition {
  int k = 0;
  const SimplicialComplex* mesh = nullptr;
  std::vector<PiecewiseForm> stages;                       // B_m^k u
  std::map<int, BubbleMap> bubbles;                        // per stage m
  std::vector<double> reconstruction_residuals;            // per stage
  PiecewiseForm stage_sum() const;
};

BubbleDecomposition bubble_transform(const SimplicialComplex& mesh, int k,
                                     const PiecewiseForm& u, const WeightFamily& weights,
                                     double tol = 1e-8);

/// Both sides of the commutator identity of the primal cut-off operator at
/// one point: d C_{m,f}^k u - C_{m,f}^{k+1} du computed by central finite
/// differences on the left, and the explicit Whitney-edge expansion on the
/// right.
std::pair<AltTensor, AltTensor> commutator_probe_at(const SimplicialComplex& mesh, int m,
                                                    const IndexSet& f, int k,
                                                    const PiecewiseForm& u,
                                                    const WeightFamily& weights, int cell,
                                                    const Vec& x, double fd_step = 1e-5);

/// Central-difference exterior derivative of a pointwise k-form evaluator.
AltTensor fd_exterior_derivative(const std::function<AltTensor(const Vec&)>& eval,
                                 const Vec& x, int ambient, int order, double step = 1e-5);

}  // namespace bubbletx

#endif
