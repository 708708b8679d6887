// Copyright (c) 2026 The bubbletx authors
// SPDX-License-Identifier: Apache-2.0

#include "bubbletx/quadrature.hpp"

#include "bubbletx/combinatorics.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace bubbletx {

void gauss_jacobi01(int npoints, double alpha, std::vector<double>& nodes,
                    std::vector<double>& weights)
{
  if (npoints < 1)
    throw std::invalid_argument("gauss_jacobi01: need at least one point");
  const double beta = 0.0;
  // Monic Jacobi recurrence coefficients on [-1,1] with weight (1-x)^alpha.
  Vec a(npoints), b(npoints);
  a(0) = (beta - alpha) / (alpha + beta + 2.0);
  for (int k = 1; k < npoints; ++k) {
    const double s = 2.0 * k + alpha + beta;
    a(k) = (beta * beta - alpha * alpha) / (s * (s + 2.0));
    b(k) = 4.0 * k * (k + alpha) * (k + beta) * (k + alpha + beta) /
           (s * s * (s + 1.0) * (s - 1.0));
  }
  const double mu0 = std::pow(2.0, alpha + beta + 1.0) *
                     std::exp(std::lgamma(alpha + 1.0) + std::lgamma(beta + 1.0) -
                              std::lgamma(alpha + beta + 2.0));
  Mat jacobi = Mat::Zero(npoints, npoints);
  for (int k = 0; k < npoints; ++k) {
    jacobi(k, k) = a(k);
    if (k + 1 < npoints) {
      const double off = std::sqrt(b(k + 1));
      jacobi(k, k + 1) = off;
      jacobi(k + 1, k) = off;
    }
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(jacobi);
  nodes.resize(npoints);
  weights.resize(npoints);
  for (int k = 0; k < npoints; ++k) {
    const double x = es.eigenvalues()(k);
    const double w = mu0 * es.eigenvectors()(0, k) * es.eigenvectors()(0, k);
    // Map [-1,1] -> [0,1] with weight (1-t)^alpha dt.
    nodes[k] = 0.5 * (1.0 + x);
    weights[k] = w / std::pow(2.0, alpha + 1.0);
  }
}

namespace {

QuadRule build_rule(int dim, int degree)
{
  QuadRule rule;
  rule.degree = degree;
  if (dim == 0) {
    rule.barycentric = Mat::Ones(1, 1);
    rule.weights = Vec::Ones(1);
    return rule;
  }
  const int q = (degree + 2) / 2;  // ceil((degree+1)/2)
  std::vector<std::vector<double>> tn(dim), tw(dim);
  for (int i = 0; i < dim; ++i)
    gauss_jacobi01(q, static_cast<double>(dim - 1 - i), tn[i], tw[i]);

  const int npts = static_cast<int>(std::pow(q, dim));
  rule.barycentric = Mat::Zero(npts, dim + 1);
  rule.weights = Vec::Zero(npts);
  std::vector<int> idx(dim, 0);
  for (int p = 0; p < npts; ++p) {
    double rem = 1.0;
    double w = 1.0;
    for (int i = 0; i < dim; ++i) {
      const double t = tn[i][idx[i]];
      rule.barycentric(p, i + 1) = t * rem;
      rem *= (1.0 - t);
      w *= tw[i][idx[i]];
    }
    rule.barycentric(p, 0) = rem;
    rule.weights(p) = w;
    for (int i = dim - 1; i >= 0; --i) {
      if (++idx[i] < q)
        break;
      idx[i] = 0;
    }
  }
  // Jacobi weights integrate the conical Jacobian; total mass is 1/d!.
  rule.weights /= rule.weights.sum();
  return rule;
}

}  // namespace

const QuadRule& simplex_rule(int dim, int degree)
{
  static std::mutex mutex;
  static std::map<std::pair<int, int>, QuadRule> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto key = std::make_pair(dim, std::max(degree, 1));
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, build_rule(dim, key.second)).first;
  return it->second;
}

Mat principal_lattice(int dim, int degree)
{
  if (degree == 0) {
    Mat nodes = Mat::Constant(1, dim + 1, 1.0 / (dim + 1));
    return nodes;
  }
  const auto exps = exponents_up_to_degree(dim, degree);
  // Keep only |alpha| == anything <= degree: nodes are alpha/r over the d
  // free coordinates with slack first.
  std::vector<Exponents> keep;
  for (const auto& e : exps)
    keep.push_back(e);
  Mat nodes(static_cast<int>(keep.size()), dim + 1);
  for (int i = 0; i < nodes.rows(); ++i) {
    double s = 0.0;
    for (int v = 0; v < dim; ++v) {
      nodes(i, v + 1) = static_cast<double>(keep[i][v]) / degree;
      s += nodes(i, v + 1);
    }
    nodes(i, 0) = 1.0 - s;
  }
  return nodes;
}

Mat interior_lattice(int dim, int degree, double shift)
{
  Mat nodes = principal_lattice(dim, degree);
  if (degree == 0)
    return nodes;
  const double denom = degree + (dim + 1) * shift;
  for (int i = 0; i < nodes.rows(); ++i)
    for (int c = 0; c <= dim; ++c)
      nodes(i, c) = (nodes(i, c) * degree + shift) / denom;
  return nodes;
}

}  // namespace bubbletx
