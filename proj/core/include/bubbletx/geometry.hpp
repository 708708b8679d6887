// Copyright (c) 2026 The bubbletx authors
// SPDX-License-Identifier: Apache-2.0

#ifndef BUBBLETX_GEOMETRY_HPP
#define BUBBLETX_GEOMETRY_HPP

#include <Eigen/Dense>
#include <vector>

namespace bubbletx {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// d-dimensional Lebesgue measure of the simplex spanned by `vertices`
/// (columns, points in R^n with d+1 columns), via the Gram determinant.
double simplex_measure(const Mat& vertices);

/// Largest pairwise vertex distance.
double simplex_diameter(const Mat& vertices);

/// Diameter of the inscribed ball of a full-dimensional simplex in R^n,
/// computed as 2 n |T| / (sum of the (n-1)-face measures).
double insphere_diameter(const Mat& vertices);

/// Affine data of one n-simplex: barycentric evaluation and gradients.
struct CellFrame {
  Mat vertices;        // n x (n+1)
  Mat barycentric_op;  // (n+1) x (n+1); lambda = op * [x;1]
  Mat gradients;       // (n+1) x n; row i = grad lambda_i
  double volume = 0.0;
  double diameter = 0.0;
  int orientation = 1;  // sign of det[x1-x0, ..., xn-x0]

  /// All n+1 barycentric coordinates of `x`.
  Vec barycentric(const Vec& x) const;
  /// Point with the given barycentric coordinates.
  Vec point(const Vec& lambda) const;
};

CellFrame make_cell_frame(const Mat& vertices);

}  // namespace bubbletx

#endif
