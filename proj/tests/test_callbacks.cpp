// Copyright (c) 2026 The bubbletx authors
// SPDX-License-Identifier: Apache-2.0

// Piecewise smooth (non-polynomial) inputs: the operators run through
// pointwise evaluators with fixed high-order quadrature. The decomposition
// identity is exact by construction even then, the trace property holds to
// round-off, and the averaging integrals match their polynomial limits.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bubbletx/harness.hpp"
#include "oracles.hpp"

using namespace bubbletx;

namespace {

PiecewiseForm trig_scalar(const SimplicialComplex& mesh)
{
  PiecewiseForm u;
  u.mesh = &mesh;
  u.order = 0;
  u.degree = -1;
  u.callback = [](int, const Vec& x) {
    AltTensor t(static_cast<int>(x.size()), 0);
    double s = 0.0;
    for (int i = 0; i < x.size(); ++i)
      s += (i + 1.0) * x(i);
    t.comp[0] = std::sin(2.0 * s) + 0.3 * std::cos(3.0 * x(0));
    return t;
  };
  return u;
}

PiecewiseForm trig_one_form(const SimplicialComplex& mesh)
{
  PiecewiseForm u;
  u.mesh = &mesh;
  u.order = 1;
  u.degree = -1;
  u.callback = [](int, const Vec& x) {
    AltTensor t(static_cast<int>(x.size()), 1);
    t.comp[0] = std::sin(1.7 * x(0) + 0.4 * x(1));
    t.comp[1] = std::cos(0.9 * x(0) - 1.3 * x(1));
    return t;
  };
  return u;
}

}  // namespace

TEST_CASE("callback inputs: full recursion on an interval mesh")
{
  const auto mesh = make_interval_mesh(2);
  const auto weights = WeightFamily::build(mesh);

  PiecewiseForm u;
  u.mesh = &mesh;
  u.order = 0;
  u.degree = -1;
  u.callback = [](int, const Vec& x) {
    AltTensor t(1, 0);
    t.comp[0] = std::sin(3.0 * x(0)) + 0.25 * std::exp(x(0));
    return t;
  };

  const auto decomp = bubble_transform(mesh, 0, u, weights);
  const auto sum = decomp.stage_sum();
  const auto points = interior_points(mesh, 6, 3);

  // The recursion telescopes, so the stage sum reproduces the input exactly
  // regardless of quadrature error.
  for (const auto& [cell, x] : points) {
    AltTensor diff = sum.value(cell, x);
    diff -= u.value(cell, x);
    CHECK(diff.norm() <= 1e-11);
  }

  // Vertex traces after stage 0: exact up to round-off, because the
  // averaged pullback is trace preserving for any normalized quadrature.
  for (const auto& f : mesh.simplices(0)) {
    const Vec x = mesh.vertex(f[0]);
    const int cell = mesh.cells_containing(f).front();
    CHECK(decomp.stages[0].value(cell, x).comp[0] ==
          Catch::Approx(u.value(cell, x).comp[0]).margin(1e-11));
  }

  // Stage-0 bubbles remain local.
  for (const auto& [f, bubble] : decomp.bubbles.at(0)) {
    const MacroRegion region = macroelement(mesh, f);
    for (const auto& [cell, x] : points)
      if (!region.contains_cell(cell))
        CHECK(bubble->value(cell, x).norm() <= 1e-11);
  }
}

TEST_CASE("callback inputs: averages and reductions on a triangle pair")
{
  const auto mesh = oracles::two_triangles();
  const auto weights = WeightFamily::build(mesh);
  std::mt19937_64 rng(7);

  const auto u0 = trig_scalar(mesh);
  const auto u1 = trig_one_form(mesh);

  // The callback-path average agrees with the direct integral oracle.
  for (const auto& f : mesh.simplices(1)) {
    const auto a = average(mesh, f, 1, u1);
    for (int trial = 0; trial < 3; ++trial) {
      const Vec lambda = oracles::random_lambda(2, rng);
      AltTensor direct = a.tensor_at(lambda);
      const AltTensor oracle =
          oracles::reduced_at(mesh, IndexSet{}, f, 1, u1, weights, lambda);
      direct -= oracle;
      CHECK(direct.norm() <= 1e-9);
    }
  }
  // Same for a vertex-pair order reduction.
  const IndexSet f{1, 2};
  const auto red = order_reduction(mesh, IndexSet{1}, f, 1, u1, weights);
  for (int trial = 0; trial < 3; ++trial) {
    const Vec lambda = oracles::random_lambda(1, rng);
    AltTensor direct = red.tensor_at(lambda);
    const AltTensor oracle = oracles::reduced_at(mesh, IndexSet{1}, f, 1, u1, weights, lambda);
    direct -= oracle;
    CHECK(direct.norm() <= 1e-9);
  }

  // Stage-0 cut-off of a smooth scalar: supported on the macroelement and
  // trace preserving at the anchor vertex.
  for (const auto& v : mesh.simplices(0)) {
    const auto bubble = cutoff_local(mesh, 0, v, 0, u0, weights);
    const MacroRegion region = macroelement(mesh, v);
    for (const auto& [cell, x] : interior_points(mesh, 4, 11))
      if (!region.contains_cell(cell))
        CHECK(bubble.value(cell, x).norm() <= 1e-11);
    const int cell = region.cells.front();
    CHECK(bubble.value(cell, mesh.vertex(v[0])).comp[0] ==
          Catch::Approx(u0.value(cell, mesh.vertex(v[0])).comp[0]).margin(1e-11));
  }
}
