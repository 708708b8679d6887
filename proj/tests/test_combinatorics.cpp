// Copyright (c) 2026 The bubbletx authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "bubbletx/combinatorics.hpp"
#include "bubbletx/quadrature.hpp"

#include <random>

using namespace bubbletx;

TEST_CASE("internal index matches ascending position")
{
  IndexSet f{3, 7, 9};
  CHECK(internal_index(f, 3) == 0);
  CHECK(internal_index(f, 7) == 1);
  CHECK(internal_index(f, 9) == 2);
  CHECK(internal_index(IndexSet{3}, 3) == 0);
  CHECK_THROWS(internal_index(f, 4));
}

TEST_CASE("double removal sign identity")
{
  // (-1)^{s_e(p) + s_{e\p}(i)} = -(-1)^{s_e(i) + s_{e\i}(p)} for |e| >= 2.
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int size = 2 + static_cast<int>(rng() % 4);
    IndexSet e;
    int v = static_cast<int>(rng() % 5);
    for (int i = 0; i < size; ++i) {
      e.push_back(v);
      v += 1 + static_cast<int>(rng() % 4);
    }
    for (int a = 0; a < size; ++a)
      for (int b = 0; b < size; ++b) {
        if (a == b)
          continue;
        const int p = e[a], i = e[b];
        const int left = internal_index(e, p) + internal_index(remove_vertex(e, p), i);
        const int right = internal_index(e, i) + internal_index(remove_vertex(e, i), p);
        CHECK((left + right) % 2 == 1);
      }
  }
}

TEST_CASE("subset enumeration")
{
  IndexSet f{0, 2, 5, 6};
  CHECK(subsets_of_size(f, 2).size() == 6);
  CHECK(subsets_of_size(f, 0).size() == 1);
  CHECK(all_subsets(f).size() == 15);
  CHECK(subsets_of_size(f, 2).front() == IndexSet{0, 2});
  CHECK(subsets_of_size(f, 2).back() == IndexSet{5, 6});
}

TEST_CASE("wedge signs count inversions")
{
  CHECK(shuffle_sign(0b001, 0b010) == 1);
  CHECK(shuffle_sign(0b010, 0b001) == -1);
  CHECK(shuffle_sign(0b101, 0b010) == -1);  // (0,2) then (1): one inversion
  CHECK(shuffle_sign(0b1, 0b1) == 0);
  // Composition with complement covers the full permutation.
  CHECK(complement_sign(0b011, 3) == 1);
  CHECK(complement_sign(0b010, 2) == -1);
}

TEST_CASE("exponent enumeration covers the simplex lattice")
{
  const auto exps = exponents_up_to_degree(3, 2);
  CHECK(exps.size() == 10);  // C(3+2,2)
  for (const auto& e : exps)
    CHECK(total_degree(e) <= 2);
  CHECK(exponents_of_degree(0, 0).size() == 1);
  CHECK(exponents_of_degree(0, 1).empty());
}

TEST_CASE("simplex quadrature integrates monomials exactly")
{
  // Oracle: int over the unit d-simplex of prod lambda_i^{a_i} equals
  // prod(a_i!) / (|a| + d)! including the slack coordinate.
  auto factorial = [](int m) {
    double f = 1.0;
    for (int i = 2; i <= m; ++i)
      f *= i;
    return f;
  };
  for (int dim = 1; dim <= 3; ++dim) {
    for (int degree = 1; degree <= 8; ++degree) {
      const QuadRule& rule = simplex_rule(dim, degree);
      double volume = 1.0;
      for (int i = 2; i <= dim; ++i)
        volume /= i;
      for (const auto& alpha : exponents_up_to_degree(dim + 1, degree)) {
        double exact = 1.0;
        int total = 0;
        for (auto a : alpha) {
          exact *= factorial(a);
          total += a;
        }
        exact /= factorial(total + dim);
        double approx = 0.0;
        for (int q = 0; q < rule.weights.size(); ++q) {
          double term = 1.0;
          for (std::size_t c = 0; c < alpha.size(); ++c)
            for (int p = 0; p < alpha[c]; ++p)
              term *= rule.barycentric(q, static_cast<int>(c));
          approx += rule.weights(q) * term;
        }
        approx *= volume;  // weights are normalized to the simplex volume 1/d!
        CHECK(std::abs(approx - exact) <= 1e-14 * std::max(1.0, std::abs(exact)));
      }
    }
  }
}

TEST_CASE("principal lattice sizes and interior shifts")
{
  CHECK(principal_lattice(2, 3).rows() == 10);
  CHECK(principal_lattice(3, 2).rows() == 10);
  const Mat interior = interior_lattice(2, 2, 0.3);
  for (int i = 0; i < interior.rows(); ++i)
    CHECK(interior.row(i).minCoeff() >= 0.3 / (2 + 3 * 0.3) - 1e-15);
}
