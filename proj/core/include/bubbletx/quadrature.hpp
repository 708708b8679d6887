// Copyright (c) 2026 The bubbletx authors
// SPDX-License-Identifier: Apache-2.0

#ifndef BUBBLETX_QUADRATURE_HPP
#define BUBBLETX_QUADRATURE_HPP

#include <vector>

#include "bubbletx/geometry.hpp"

namespace bubbletx {

/// Quadrature nodes on the reference d-simplex in barycentric coordinates.
/// Weights are normalized to sum to one, so an integral over a physical
/// simplex T is  |T| * sum_i w_i f(x_i).
struct QuadRule {
  Mat barycentric;  // npts x (d+1)
  Vec weights;      // npts, sums to 1
  int degree = 0;
};

/// Conical-product rule on the d-simplex, exact for polynomials of total
/// degree <= `degree`. Rules are cached per (dim, degree).
const QuadRule& simplex_rule(int dim, int degree);

/// Gauss-Jacobi nodes/weights for  int_0^1 (1-t)^alpha f(t) dt.
void gauss_jacobi01(int npoints, double alpha, std::vector<double>& nodes,
                    std::vector<double>& weights);

/// Principal lattice of the d-simplex at degree r, as barycentric rows
/// (alpha/r including the slack coordinate first); unisolvent for P_r.
/// For r == 0 the single node is the barycenter.
Mat principal_lattice(int dim, int degree);

/// Lattice shifted into the interior: all barycentric coordinates of every
/// node are >= shift/(r + (d+1) shift). Used where evaluation must avoid the
/// skeleton.
Mat interior_lattice(int dim, int degree, double shift = 0.3);

}  // namespace bubbletx

#endif
