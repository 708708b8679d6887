// Copyright (c) 2026 The bubbletx authors
// SPDX-License-Identifier: Apache-2.0

#include "bubbletx/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace bubbletx {

double simplex_measure(const Mat& vertices)
{
  const int d = static_cast<int>(vertices.cols()) - 1;
  if (d < 0)
    throw std::invalid_argument("simplex_measure: no vertices");
  if (d == 0)
    return 1.0;
  Mat edges(vertices.rows(), d);
  for (int i = 0; i < d; ++i)
    edges.col(i) = vertices.col(i + 1) - vertices.col(0);
  const Mat gram = edges.transpose() * edges;
  double det = gram.determinant();
  if (det < 0.0)
    det = 0.0;
  double fact = 1.0;
  for (int i = 2; i <= d; ++i)
    fact *= i;
  return std::sqrt(det) / fact;
}

double simplex_diameter(const Mat& vertices)
{
  double h = 0.0;
  for (int i = 0; i < vertices.cols(); ++i)
    for (int j = i + 1; j < vertices.cols(); ++j)
      h = std::max(h, (vertices.col(i) - vertices.col(j)).norm());
  return h;
}

double insphere_diameter(const Mat& vertices)
{
  const int n = static_cast<int>(vertices.rows());
  if (vertices.cols() != n + 1)
    throw std::invalid_argument("insphere_diameter: simplex is not full-dimensional");
  const double vol = simplex_measure(vertices);
  double faces = 0.0;
  for (int skip = 0; skip <= n; ++skip) {
    Mat face(n, n);
    int c = 0;
    for (int i = 0; i <= n; ++i)
      if (i != skip)
        face.col(c++) = vertices.col(i);
    faces += simplex_measure(face);
  }
  return 2.0 * n * vol / faces;
}

Vec CellFrame::barycentric(const Vec& x) const
{
  const int n = static_cast<int>(vertices.rows());
  Vec xh(n + 1);
  xh.head(n) = x;
  xh(n) = 1.0;
  return barycentric_op * xh;
}

Vec CellFrame::point(const Vec& lambda) const
{
  return vertices * lambda;
}

CellFrame make_cell_frame(const Mat& vertices)
{
  const int n = static_cast<int>(vertices.rows());
  if (vertices.cols() != n + 1)
    throw std::invalid_argument("make_cell_frame: expected n+1 vertices in R^n");
  CellFrame frame;
  frame.vertices = vertices;
  Mat A(n + 1, n + 1);
  A.topRows(n) = vertices;
  A.bottomRows(1).setOnes();
  Eigen::FullPivLU<Mat> lu(A);
  if (!lu.isInvertible())
    throw std::invalid_argument("make_cell_frame: degenerate simplex");
  frame.barycentric_op = lu.inverse();
  frame.gradients = frame.barycentric_op.leftCols(n);
  frame.volume = simplex_measure(vertices);
  frame.diameter = simplex_diameter(vertices);
  Mat edges(n, n);
  for (int i = 0; i < n; ++i)
    edges.col(i) = vertices.col(i + 1) - vertices.col(0);
  frame.orientation = edges.determinant() >= 0.0 ? 1 : -1;
  return frame;
}

}  // namespace bubbletx
