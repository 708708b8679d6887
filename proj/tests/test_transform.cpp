// Copyright (c) 2026 The bubbletx authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "bubbletx/harness.hpp"
#include "bubbletx/transform.hpp"

#include <random>

using namespace bubbletx;

namespace {

SimplicialComplex two_triangles()
{
  std::vector<Vec> v(4, Vec(2));
  v[0] << 0.0, 0.0;
  v[1] << 1.0, 0.0;
  v[2] << 0.0, 1.0;
  v[3] << 1.0, 1.0;
  return SimplicialComplex(2, std::move(v), {{0, 1, 2}, {1, 2, 3}});
}

double uniform(std::mt19937_64& rng)
{
  return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
}

/// Independent evaluation of the rescaled order reduction at one point of
/// the coordinate simplex, by fixed high-order quadrature through the
/// generic split-pullback evaluator.
AltTensor oracle_reduced_at(const SimplicialComplex& mesh, const IndexSet& e,
                            const IndexSet& f, int k, const PiecewiseForm& u,
                            const WeightFamily& weights, const Vec& lambda)
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

  const MacroRegion region =
      e.empty() ? macroelement(mesh, f) : omega_ef(mesh, e, f);
  double measure = 0.0;
  for (int c : region.cells)
    measure += mesh.frame(c).volume;

  const QuadRule& rule = simplex_rule(n, 12);
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
          value = pi_j_value(mesh, u, base, 0, cell, y, lambda, {}, lambda_tangents) /
                  measure;
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

}  // namespace

TEST_CASE("the averaging map geometry")
{
  const auto mesh = two_triangles();
  const IndexSet f{1, 2};
  std::mt19937_64 rng(3);

  // G at the origin of the coordinate simplex is the identity in y; at a
  // coordinate vertex it collapses to the mesh vertex.
  Vec y(2);
  y << 0.4, 0.3;
  Vec zero = Vec::Zero(2);
  CHECK((g_point(mesh, f, y, zero) - y).norm() <= 1e-15);
  Vec e1(2);
  e1 << 1.0, 0.0;
  CHECK((g_point(mesh, f, y, e1) - mesh.vertex(1)).norm() <= 1e-15);

  // Points of f are fixed under G(y, L_f x).
  for (double t : {0.2, 0.5, 0.9}) {
    const Vec x = (1.0 - t) * mesh.vertex(1) + t * mesh.vertex(2);
    Vec lf(2);
    lf << 1.0 - t, t;
    CHECK((g_point(mesh, f, y, lf) - x).norm() <= 1e-13);
  }

  // The convexity fact underlying every evaluation.
  GContext ctx;
  ctx.mesh = &mesh;
  ctx.region = macroelement(mesh, f);
  ctx.anchor = f;
  ctx.quad_degree = 6;
  CHECK_NOTHROW(ctx.assert_convexity(3));
}

TEST_CASE("split pullback satisfies the d-identity by finite differences")
{
  const auto mesh = two_triangles();
  const IndexSet f{1, 2};
  const auto u = random_form(mesh, 1, 2, FormClass::Pr, 11);
  const auto du = exterior_derivative(u);
  std::mt19937_64 rng(13);

  const int cell = 0;
  Vec y(2);
  y << 0.35, 0.25;
  Vec lambda(2);
  lambda << 0.3, 0.25;
  const double h = 1e-5;
  const int k = 1;

  for (int j = 1; j <= k + 1; ++j) {
    // Components of both sides on ambient/lambda tangent tuples.
    std::vector<Vec> tangents, ltangents;
    for (int p = 0; p < j; ++p) {
      Vec t(2);
      t << uniform(rng), uniform(rng);
      tangents.push_back(t);
    }
    for (int p = 0; p < k + 1 - j; ++p) {
      Vec t(2);
      t << uniform(rng), uniform(rng);
      ltangents.push_back(t);
    }

    // d_Omega Pi_{j-1} G^* u: finite differences in y on the first slot.
    double d_omega = 0.0;
    for (int a = 0; a < j; ++a) {
      std::vector<Vec> rest;
      for (int p = 0; p < j; ++p)
        if (p != a)
          rest.push_back(tangents[p]);
      Vec yp = y + h * tangents[a], ym = y - h * tangents[a];
      const double plus = pi_j_value(mesh, u, f, j - 1, cell, yp, lambda, rest, ltangents);
      const double minus = pi_j_value(mesh, u, f, j - 1, cell, ym, lambda, rest, ltangents);
      d_omega += (a % 2 == 0 ? 1.0 : -1.0) * (plus - minus) / (2.0 * h);
    }

    // d_S Pi_j G^* u: finite differences in lambda on the first lambda slot.
    double d_lambda = 0.0;
    for (int a = 0; a < k + 1 - j; ++a) {
      std::vector<Vec> rest;
      for (int p = 0; p < k + 1 - j; ++p)
        if (p != a)
          rest.push_back(ltangents[p]);
      Vec lp = lambda + h * ltangents[a], lm = lambda - h * ltangents[a];
      const double plus = pi_j_value(mesh, u, f, j, cell, y, lp, tangents, rest);
      const double minus = pi_j_value(mesh, u, f, j, cell, y, lm, tangents, rest);
      d_lambda += (a % 2 == 0 ? 1.0 : -1.0) * (plus - minus) / (2.0 * h);
    }

    std::vector<Vec> all_tangents = tangents;
    const double rhs =
        pi_j_value(mesh, du, f, j, cell, y, lambda, all_tangents, ltangents);
    const double lhs = d_omega + ((j % 2 == 0) ? 1.0 : -1.0) * d_lambda;
    CHECK(lhs == Catch::Approx(rhs).margin(1e-6));
  }
}

TEST_CASE("averages: constants, trace preservation, commutation")
{
  const auto mesh = make_fan_mesh(6);

  // A constant 0-form averages to itself.
  PiecewiseForm c(mesh, 0, 0);
  for (int cell = 0; cell < mesh.num_cells(); ++cell)
    c.cell_forms[cell] = PolyForm::constant(2, 3.25);
  const IndexSet f{0, 1};
  const auto ac = average(mesh, f, 0, c);
  Vec lambda(2);
  lambda << 0.3, 0.4;
  CHECK(ac.tensor_at(lambda).comp[0] == Catch::Approx(3.25).epsilon(1e-13));

  // Trace preservation: tr_f L_f^* A u = tr_f u at lattice nodes of f.
  const auto u = random_form(mesh, 1, 2, FormClass::Pr, 17);
  const auto a = average(mesh, f, 1, u);
  const auto pulled = lambda_pullback(mesh, f, a.coefficients);
  const double residual = [&] {
    const int cell = mesh.cells_containing(f).front();
    const Vec tangent = mesh.vertex(f[1]) - mesh.vertex(f[0]);
    double worst = 0.0;
    for (double t : {0.1, 0.35, 0.6, 0.85}) {
      const Vec x = (1.0 - t) * mesh.vertex(f[0]) + t * mesh.vertex(f[1]);
      worst = std::max(worst, std::abs(pulled.apply(cell, x, {tangent}) -
                                       u.apply(cell, x, {tangent})));
    }
    return worst;
  }();
  CHECK(residual <= 1e-12);

  // d A u = A du coefficientwise.
  const auto da = a.coefficients.d();
  const auto ad = average(mesh, f, 2, exterior_derivative(u));
  CHECK(coef_distance(da.poly, ad.coefficients.poly) <= 1e-12);

  // Trimmed inputs keep the contraction property on the coordinate simplex.
  const auto trimmed = random_form(mesh, 1, 2, FormClass::PrMinus, 19);
  const auto at = average(mesh, f, 1, trimmed);
  std::vector<PolyForm> pairings;
  for (int v = 0; v < at.coefficients.nvars(); ++v)
    pairings.push_back(PolyForm::variable(at.coefficients.nvars(), v));
  CHECK(at.coefficients.poly.contract(pairings).degree(1e-12) <= 2);
}

TEST_CASE("order reductions: vertex case, vanishing, oracle")
{
  const auto mesh = two_triangles();
  const auto weights = WeightFamily::build(mesh);
  const auto u = random_form(mesh, 1, 2, FormClass::Pr, 23);
  const IndexSet f{1, 2};

  // Vertex pairs reduce to minus the trace of the average.
  const auto red = order_reduction(mesh, IndexSet{1}, f, 1, u, weights);
  const auto avg = average(mesh, f, 1, u);
  LambdaForm traced = avg.coefficients.trace_to(IndexSet{2});
  traced.poly *= -1.0;
  CHECK(coef_distance(red.coefficients.poly, traced.poly) <= 1e-12);

  // Reductions of order beyond the form vanish.
  const auto zero = order_reduction(mesh, f, f, 0, u, weights);
  CHECK(zero.coefficients.poly.is_zero());

  // Coefficients match the direct high-order quadrature of the defining
  // integral at random interior lambda points.
  std::mt19937_64 rng(29);
  for (int m = 1; m <= 2; ++m)
    for (const auto& ff : mesh.simplices(m))
      for (int es = 1; es <= std::min(2, m + 1); ++es)
        for (const auto& ee : subsets_of_size(ff, es)) {
          const auto r = order_reduction(mesh, ee, ff, 1, u, weights);
          const int nv = static_cast<int>(r.base.size());
          for (int trial = 0; trial < 2; ++trial) {
            Vec lambda(nv);
            double rest = 1.0;
            for (int i = 0; i < nv; ++i) {
              lambda(i) = 0.1 + 0.8 * (0.5 + 0.5 * uniform(rng)) * rest / nv;
              rest -= lambda(i);
            }
            AltTensor direct = r.tensor_at(lambda);
            const AltTensor oracle =
                oracle_reduced_at(mesh, ee, ff, 1, u, weights, lambda);
            direct -= oracle;
            CHECK(direct.norm() <= 1e-6 * std::max(1.0, oracle.norm()));
          }
        }
}

TEST_CASE("order-reduction identities across a mesh")
{
  const auto mesh = make_fan_mesh(6);
  const auto weights = WeightFamily::build(mesh);
  for (int k = 0; k <= 2; ++k) {
    const auto u = random_form(mesh, k, 2, FormClass::Pr, 31 + k);
    for (int m = 0; m <= 2; ++m)
      for (const auto& f : mesh.simplices(m))
        for (int es = 1; es <= std::min(k + 2, m + 1); ++es)
          for (const auto& e : subsets_of_size(f, es)) {
            const auto res = r_identity_check(mesh, e, f, k, u, weights);
            CHECK(res.d_residual <= 1e-9);
            CHECK(res.dplus_residual <= 1e-9);
          }
  }

  // For constant scalars the alternating average sum vanishes: stage-0
  // commutation content of the scalar theory.
  PiecewiseForm c(mesh, 0, 0);
  for (int cell = 0; cell < mesh.num_cells(); ++cell)
    c.cell_forms[cell] = PolyForm::constant(2, 1.0);
  for (const auto& f : mesh.simplices(1)) {
    LambdaForm sum(difference(f, f), 0);
    bool any = false;
    for (const auto& [sign, e2, f2] : delta_terms(f, f, false)) {
      const auto a = average(mesh, f2, 0, c);
      LambdaForm t = a.coefficients.trace_to(IndexSet{});
      t.poly *= sign;
      sum = any ? sum + t : t;
      any = true;
    }
    CHECK(sum.poly.coef_norm() <= 1e-13);
  }
}

TEST_CASE("local cut-off bubbles: trace and support")
{
  const auto mesh = make_fan_mesh(6);
  const auto weights = WeightFamily::build(mesh);
  const auto u = random_form(mesh, 1, 2, FormClass::Pr, 37);
  const auto points = interior_points(mesh, 6, 41);

  std::mt19937_64 rng(43);
  for (int m = 1; m <= 2; ++m) {
    for (const auto& f : mesh.simplices(m)) {
      const auto bubble = cutoff_local(mesh, m, f, 1, u, weights);
      const MacroRegion region = macroelement(mesh, f);
      // Zero outside the macroelement.
      for (const auto& [cell, x] : points)
        if (!region.contains_cell(cell))
          CHECK(bubble.value(cell, x).norm() <= 1e-10);
      // Trace preservation at relative-interior points of f (the bubble is
      // singular on the boundary of f).
      const int cell = region.cells.front();
      for (int trial = 0; trial < 3; ++trial) {
        Vec bary(m + 1);
        double sum = 0.0;
        for (int i = 0; i <= m; ++i) {
          bary(i) = 0.15 + 0.7 * (0.5 + 0.5 * uniform(rng));
          sum += bary(i);
        }
        bary /= sum;
        Vec x = Vec::Zero(2);
        for (int i = 0; i <= m; ++i)
          x += bary(i) * mesh.vertex(f[i]);
        for (int i = 1; i <= m; ++i) {
          const Vec tangent = mesh.vertex(f[i]) - mesh.vertex(f[0]);
          CHECK(bubble.value(cell, x).apply({tangent}) ==
                Catch::Approx(u.apply(cell, x, {tangent})).margin(1e-10));
        }
      }
    }
  }
  CHECK_THROWS(cutoff_local(mesh, 0, mesh.simplices(2).front(), 1, u, weights));
}

TEST_CASE("global cut-offs: identity stage, invariance, commutation")
{
  const auto mesh = two_triangles();
  const auto weights = WeightFamily::build(mesh);
  const auto u = random_form(mesh, 1, 2, FormClass::Pr, 43);

  // m = n is the identity, coefficient for coefficient.
  const auto top = cutoff_global(mesh, 2, 1, u, weights);
  for (int c = 0; c < mesh.num_cells(); ++c)
    CHECK(coef_distance(top.form.cell_forms[c], u.cell_forms[c]) == 0.0);

  const auto points = interior_points(mesh, 10, 47);
  const auto du = exterior_derivative(u);
  for (int m = 0; m <= 1; ++m) {
    const auto cu = cutoff_global(mesh, m, 1, u, weights);
    CHECK(cu.residual <= 1e-10);
    CHECK(membership_Pr(cu.form, 2).pass);
    const auto cdu = cutoff_global(mesh, m, 2, du, weights);
    const auto dcu = exterior_derivative(cu.form);
    for (const auto& [cell, x] : points) {
      AltTensor diff = dcu.value(cell, x);
      diff -= cdu.form.value(cell, x);
      CHECK(diff.norm() <= 1e-10);
    }
  }
}

TEST_CASE("bubble transform: decomposition, traces, trimmed invariance")
{
  const auto mesh = make_lshape_mesh();
  const auto weights = WeightFamily::build(mesh);
  const auto points = interior_points(mesh, 9, 53);

  for (int k = 0; k <= 2; ++k) {
    const auto u = random_form(mesh, k, 2, FormClass::Pr, 59 + k);
    const auto decomp = bubble_transform(mesh, k, u, weights);
    const auto sum = decomp.stage_sum();
    for (const auto& [cell, x] : points) {
      AltTensor diff = sum.value(cell, x);
      diff -= u.value(cell, x);
      CHECK(diff.norm() <= 1e-8);
    }
    // Partial sums preserve traces for m >= k.
    PiecewiseForm partial = decomp.stages[0];
    for (int m = 0; m <= 2; ++m) {
      if (m > 0)
        partial += decomp.stages[m];
      if (m < k)
        continue;
      for (const auto& f : mesh.simplices(m)) {
        const FaceForm tp = trace_to(partial, f);
        const FaceForm tu = trace_to(u, f);
        CHECK(coef_distance(tp.poly, tu.poly) <= 1e-9);
      }
    }
  }

  // Trimmed inputs yield trimmed stages.
  const auto trimmed = random_form(mesh, 1, 1, FormClass::PrMinus, 61);
  const auto decomp = bubble_transform(mesh, 1, trimmed, weights);
  for (const auto& stage : decomp.stages)
    CHECK(membership_Pr_minus(stage, 1).pass);
}

TEST_CASE("commutator expansion of the primal operator")
{
  const auto mesh = two_triangles();
  const auto weights = WeightFamily::build(mesh);
  const auto points = interior_points(mesh, 5, 67);

  // For constant scalars both sides reduce to the variation of the rational
  // factors alone: c d(lambda_v) at a vertex. Check the expansion matches
  // and reproduces that closed form.
  PiecewiseForm c(mesh, 0, 0);
  for (int cell = 0; cell < mesh.num_cells(); ++cell)
    c.cell_forms[cell] = PolyForm::constant(2, 2.0);
  for (const auto& f : mesh.simplices(0))
    for (const auto& [cell, x] : points) {
      const auto [lhs, rhs] = commutator_probe_at(mesh, 0, f, 0, c, weights, cell, x);
      AltTensor diff = lhs;
      diff -= rhs;
      CHECK(diff.norm() <= 1e-7);
      const int pos = mesh.local_position(cell, f[0]);
      Vec grad = pos >= 0 ? Vec(mesh.frame(cell).gradients.row(pos).transpose())
                          : Vec(Vec::Zero(2));
      AltTensor expect(2, 1);
      expect.comp[0] = 2.0 * grad(0);
      expect.comp[1] = 2.0 * grad(1);
      expect -= rhs;
      CHECK(expect.norm() <= 1e-12);
    }

  // Both sides agree at random interior points, inside and outside the
  // macroelement.
  const auto u = random_form(mesh, 0, 2, FormClass::Pr, 71);
  for (int m = 0; m <= 1; ++m)
    for (const auto& f : mesh.simplices(m))
      for (const auto& [cell, x] : points) {
        const auto [lhs, rhs] = commutator_probe_at(mesh, m, f, 0, u, weights, cell, x);
        AltTensor diff = lhs;
        diff -= rhs;
        CHECK(diff.norm() <= 1e-7 * std::max(1.0, rhs.norm()));
        if (!macroelement(mesh, f).contains_cell(cell)) {
          CHECK(lhs.norm() <= 1e-8);
          CHECK(rhs.norm() <= 1e-10);
        }
      }
}

TEST_CASE("irregular geometry: jittered and skewed mesh")
{
  // Nothing in the construction may rely on symmetry or axis alignment.
  auto base = refine_uniform(make_square_mesh());
  std::mt19937_64 rng(99);
  auto u01 = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  std::vector<Vec> verts;
  for (int v = 0; v < base.num_vertices(); ++v) {
    Vec x = base.vertex(v);
    const bool boundary = x(0) < 1e-12 || x(0) > 1 - 1e-12 || x(1) < 1e-12 ||
                          x(1) > 1 - 1e-12;
    if (!boundary) {
      x(0) += 0.06 * (u01() - 0.5);
      x(1) += 0.06 * (u01() - 0.5);
    }
    Mat skew(2, 2);
    skew << 1.0, 0.35, 0.0, 0.8;
    verts.push_back(skew * x);
  }
  std::vector<IndexSet> cells;
  for (int c = 0; c < base.num_cells(); ++c)
    cells.push_back(base.cell(c));
  const SimplicialComplex mesh(2, std::move(verts), std::move(cells));

  CHECK(check_assumptions(mesh).exactness_ok);
  const auto weights = WeightFamily::build(mesh);
  CHECK(weights.verify_identities().max_dz <= 1e-12);
  const auto points = interior_points(mesh, 3, 5);
  for (int k = 0; k <= 2; ++k) {
    const auto u = random_form(mesh, k, 3, FormClass::Pr, 300 + k);
    const auto decomp = bubble_transform(mesh, k, u, weights, 1e-9);
    const auto sum = decomp.stage_sum();
    for (const auto& [cell, x] : points) {
      AltTensor diff = sum.value(cell, x);
      diff -= u.value(cell, x);
      CHECK(diff.norm() <= 1e-10);
    }
  }
}

TEST_CASE("rational factors are pinched between rho_f and one")
{
  const auto mesh = make_fan_mesh(6);
  const auto points = interior_points(mesh, 8, 83);
  for (int m = 0; m <= 2; ++m)
    for (const auto& f : mesh.simplices(m)) {
      const MacroRegion region = macroelement(mesh, f);
      const auto rf = rho(mesh, f);
      for (const auto& g : all_subsets(f)) {
        const auto rg = rho(mesh, g);
        for (const auto& [cell, x] : points) {
          if (!region.contains_cell(cell))
            continue;
          const double num = rf.value(cell, x).comp[0];
          const double den = rg.value(cell, x).comp[0];
          const double ratio = g == f ? 1.0 : num / den;
          CHECK(ratio >= num - 1e-13);
          CHECK(ratio <= 1.0 + 1e-13);
        }
      }
    }
}

TEST_CASE("bounds study plumbing")
{
  const auto study = estimate_bounds(make_square_mesh(), 2, 1, 1, 2, 5);
  REQUIRE(study.levels.size() == 2);
  CHECK(study.levels[0].cells == 8);
  CHECK(study.levels[1].cells == 32);
  CHECK(study.levels[0].shape_constant ==
        Catch::Approx(study.levels[1].shape_constant).epsilon(1e-12));
  for (const auto& level : study.levels)
    for (const auto& stage : level.stages) {
      CHECK(stage.l2_ratio >= 0.0);
      CHECK(std::isfinite(stage.square_sum_ratio));
    }

  // Decomposing a constant scalar: the stage sums reproduce its norm.
  const auto mesh = make_square_mesh();
  const auto weights = WeightFamily::build(mesh);
  PiecewiseForm c(mesh, 0, 1);
  for (int cell = 0; cell < mesh.num_cells(); ++cell)
    c.cell_forms[cell] = PolyForm::constant(2, 1.5);
  const auto decomp = bubble_transform(mesh, 0, c, weights);
  CHECK(l2_norm(decomp.stage_sum()) == Catch::Approx(l2_norm(c)).epsilon(1e-12));

  // Fixed coarse polynomials transfer exactly to refinements.
  const auto fine = refine_uniform(mesh);
  const auto u = random_form(mesh, 1, 2, FormClass::Pr, 73);
  const auto transferred = transfer_to_refinement(u, fine);
  for (const auto& [cell, x] : interior_points(fine, 2, 79)) {
    const auto coarse_cell = mesh.locate(x);
    REQUIRE(coarse_cell.has_value());
    AltTensor diff = transferred.value(cell, x);
    diff -= u.value(*coarse_cell, x);
    CHECK(diff.norm() <= 1e-12);
  }
}
