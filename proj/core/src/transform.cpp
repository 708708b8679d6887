// Copyright (c) 2026 The bubbletx authors
// SPDX-License-Identifier: Apache-2.0

#include "bubbletx/transform.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bubbletx {

namespace {

double uniform01(std::mt19937_64& rng)
{
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Pullback of a tensor along the linear map whose matrix rows are the
/// images of the source coordinate covectors: out_I = sum_J T_J det P[J, I].
AltTensor pullback_linear(const AltTensor& t, const Mat& p)
{
  const int ambient = static_cast<int>(p.cols());
  AltTensor out(ambient, t.k);
  const auto& src = AltTensor::masks(t.n, t.k);
  const auto& dst = AltTensor::masks(ambient, t.k);
  Mat sel(t.k, t.k);
  for (std::size_t si = 0; si < src.size(); ++si) {
    if (t.comp[si] == 0.0)
      continue;
    const auto rows = mask_to_positions(src[si]);
    for (std::size_t di = 0; di < dst.size(); ++di) {
      const auto cols = mask_to_positions(dst[di]);
      for (int a = 0; a < t.k; ++a)
        for (int b = 0; b < t.k; ++b)
          sel(a, b) = p(rows[a], cols[b]);
      double det = 1.0;
      switch (t.k) {
        case 0:
          det = 1.0;
          break;
        case 1:
          det = sel(0, 0);
          break;
        case 2:
          det = sel(0, 0) * sel(1, 1) - sel(0, 1) * sel(1, 0);
          break;
        default:
          det = sel.determinant();
      }
      out.comp[di] += t.comp[si] * det;
    }
  }
  return out;
}

/// Coordinates of L_g(x) on the coordinate simplex of `on`: the barycentric
/// values of the vertices in `active` (a subset of `on`, possibly empty),
/// zero elsewhere.
Vec lambda_point(const SimplicialComplex& mesh, int cell, const Vec& x, const IndexSet& on,
                 const IndexSet& active)
{
  const Vec full = mesh.frame(cell).barycentric(x);
  Vec out = Vec::Zero(on.size());
  for (std::size_t i = 0; i < on.size(); ++i) {
    if (!contains(active, on[i]))
      continue;
    const int pos = mesh.local_position(cell, on[i]);
    if (pos >= 0)
      out(static_cast<int>(i)) = full(pos);
  }
  return out;
}

/// Rows: the differentials of the active barycentric functions on the cell.
Mat lambda_gradients(const SimplicialComplex& mesh, int cell, const IndexSet& on,
                     const IndexSet& active)
{
  Mat out = Mat::Zero(on.size(), mesh.dim());
  for (std::size_t i = 0; i < on.size(); ++i) {
    if (!contains(active, on[i]))
      continue;
    const int pos = mesh.local_position(cell, on[i]);
    if (pos >= 0)
      out.row(static_cast<int>(i)) = mesh.frame(cell).gradients.row(pos);
  }
  return out;
}

double rho_value(const SimplicialComplex& mesh, int cell, const Vec& lambda_full,
                 const IndexSet& g)
{
  double r = 1.0;
  for (int vid : g) {
    const int pos = mesh.local_position(cell, vid);
    if (pos >= 0)
      r -= lambda_full(pos);
  }
  return r;
}

struct LambdaFit {
  Mat nodes;  // lattice rows, slack coordinate first
  std::vector<Exponents> monos;
  Eigen::PartialPivLU<Mat> lu;

  LambdaFit(int nvars, int degree)
  {
    nodes = principal_lattice(nvars, degree);
    monos = exponents_up_to_degree(nvars, degree);
    Mat v(nodes.rows(), monos.size());
    for (int i = 0; i < nodes.rows(); ++i) {
      const Vec tail = nodes.row(i).tail(nvars).transpose();
      for (std::size_t j = 0; j < monos.size(); ++j) {
        double mono = 1.0;
        for (std::size_t vv = 0; vv < monos[j].size(); ++vv)
          for (int p = 0; p < monos[j][vv]; ++p)
            mono *= tail(static_cast<int>(vv));
        v(i, static_cast<int>(j)) = mono;
      }
    }
    lu.compute(v);
  }
};

LambdaForm fit_lambda_form(const IndexSet& base, int order, int degree, const Mat& values,
                           const LambdaFit& fit)
{
  LambdaForm out(base, order);
  const auto& masks = AltTensor::masks(static_cast<int>(base.size()), order);
  const Mat coefs = fit.lu.solve(values);
  for (std::size_t mi = 0; mi < masks.size(); ++mi)
    for (std::size_t j = 0; j < fit.monos.size(); ++j) {
      const double c = coefs(static_cast<int>(j), static_cast<int>(mi));
      if (std::abs(c) > 1e-13)
        out.poly.add_term(fit.monos[j], masks[mi], c);
    }
  (void)degree;
  return out;
}

}  // namespace

Vec g_point(const SimplicialComplex& mesh, const IndexSet& anchor, const Vec& y,
            const Vec& lambda)
{
  double b = 1.0;
  Vec x = Vec::Zero(mesh.dim());
  for (std::size_t i = 0; i < anchor.size(); ++i) {
    x += lambda(static_cast<int>(i)) * mesh.vertex(anchor[i]);
    b -= lambda(static_cast<int>(i));
  }
  return x + b * y;
}

void GContext::assert_convexity(int lattice_degree) const
{
  const Mat nodes = principal_lattice(static_cast<int>(anchor.size()),
                                      std::max(lattice_degree, 1));
  const QuadRule& rule = simplex_rule(mesh->dim(), quad_degree);
  for (int cell : region.cells) {
    const auto& frame = mesh->frame(cell);
    for (int q = 0; q < rule.weights.size(); ++q) {
      const Vec y = frame.point(rule.barycentric.row(q).transpose());
      for (int i = 0; i < nodes.rows(); ++i) {
        const Vec x = g_point(*mesh, anchor, y, nodes.row(i).tail(anchor.size()).transpose());
        if (frame.barycentric(x).minCoeff() < -1e-9)
          throw std::logic_error("GContext: G(y, lambda) escaped its cell");
      }
    }
  }
}

double pi_j_value(const SimplicialComplex& mesh, const PiecewiseForm& u,
                  const IndexSet& anchor, int j, int cell, const Vec& y, const Vec& lambda,
                  const std::vector<Vec>& tangents, const std::vector<Vec>& lambda_tangents)
{
  const int k = u.order;
  if (j > k || j < 0)
    return 0.0;
  double b = 1.0;
  for (int i = 0; i < lambda.size(); ++i)
    b -= lambda(i);
  const Vec x = g_point(mesh, anchor, y, lambda);
  std::vector<Vec> args;
  args.reserve(k);
  for (const auto& t : tangents)
    args.push_back(t);
  for (const auto& v : lambda_tangents) {
    Vec w = Vec::Zero(mesh.dim());
    for (std::size_t i = 0; i < anchor.size(); ++i)
      w += v(static_cast<int>(i)) * (mesh.vertex(anchor[i]) - y);
    args.push_back(w);
  }
  return std::pow(b, j) * u.value(cell, x).apply(args);
}

AltTensor ReducedForm::tensor_at(const Vec& lambda) const
{
  if (polynomial)
    return coefficients.tensor_at(lambda);
  return evaluator(lambda);
}

namespace {

/// Shared assembly of averages (j = 0, z = -vol_f scaled away) and order
/// reductions. Computes lambda-space component values at the lattice nodes
/// (polynomial inputs) or at one requested lambda (callback inputs).
struct IntegralSpec {
  const SimplicialComplex* mesh;
  IndexSet base;            // lambda variables
  int k;                    // input order
  int j;                    // ambient legs
  MacroRegion region;
  const WhitneyCochain* z;  // nullptr for averages (uniform density / |region|)
  const WhitneyCache* cache;
  double scale = 1.0;       // +1 for reductions, 1/|Omega_f| for averages
};

void accumulate_components(const IntegralSpec& spec, const PiecewiseForm& u, int quad_degree,
                           const Mat& lambda_nodes, Mat& values)
{
  const auto& mesh = *spec.mesh;
  const int n = mesh.dim();
  const int nv = static_cast<int>(spec.base.size());
  const auto& comp_masks = AltTensor::masks(nv, spec.k - spec.j);
  const auto& leg_masks = AltTensor::masks(n, spec.j);
  std::vector<int> leg_sign(leg_masks.size());
  std::vector<AltMask> leg_comp(leg_masks.size());
  for (std::size_t a = 0; a < leg_masks.size(); ++a) {
    leg_sign[a] = complement_sign(leg_masks[a], n);
    leg_comp[a] = ((n >= 32 ? ~AltMask{0} : ((AltMask{1} << n) - 1)) & ~leg_masks[a]);
  }
  std::vector<Vec> basis(n, Vec::Zero(n));
  for (int i = 0; i < n; ++i)
    basis[i](i) = 1.0;

  const QuadRule& rule = simplex_rule(n, quad_degree);
  for (int cell : spec.region.cells) {
    const auto& frame = mesh.frame(cell);
    for (int q = 0; q < rule.weights.size(); ++q) {
      const Vec y = frame.point(rule.barycentric.row(q).transpose());
      const double wq = frame.volume * rule.weights(q) * spec.scale;
      AltTensor zt;
      if (spec.z)
        zt = cochain_tensor(*spec.cache, *spec.z, cell, y);
      std::vector<Vec> span(nv);
      for (int i = 0; i < nv; ++i)
        span[i] = mesh.vertex(spec.base[i]) - y;
      for (int li = 0; li < lambda_nodes.rows(); ++li) {
        const Vec lambda = lambda_nodes.row(li).tail(nv).transpose();
        const Vec x = g_point(mesh, spec.base, y, lambda);
        const Vec lambda_full = frame.barycentric(x);
        if (lambda_full.minCoeff() < -1e-9)
          throw std::logic_error("average/order_reduction: G(y, lambda) escaped its cell");
        AltTensor ut;
        if (u.is_polynomial())
          ut = u.cell_forms[cell].tensor(lambda_full.tail(n), frame.gradients.bottomRows(n));
        else
          ut = u.value(cell, x);
        for (std::size_t ci = 0; ci < comp_masks.size(); ++ci) {
          std::vector<Vec> args;
          args.reserve(spec.k);
          double contribution = 0.0;
          for (std::size_t a = 0; a < leg_masks.size(); ++a) {
            double zc = 1.0;
            if (spec.z) {
              zc = zt.comp[zt.index_of(leg_comp[a])];
              if (zc == 0.0)
                continue;
            }
            args.clear();
            for (int p : mask_to_positions(leg_masks[a]))
              args.push_back(basis[p]);
            for (int p : mask_to_positions(comp_masks[ci]))
              args.push_back(span[p]);
            contribution += leg_sign[a] * zc * ut.apply(args);
          }
          values(li, static_cast<int>(ci)) += wq * contribution;
        }
      }
    }
  }
}

ReducedForm build_reduced(const SimplicialComplex& mesh, const IndexSet& e, const IndexSet& f,
                          int k, const PiecewiseForm& u, const WeightFamily* weights,
                          int quad_degree)
{
  ReducedForm out;
  out.e = e;
  out.f = f;
  const int j = static_cast<int>(e.size()) - 1;
  out.base = e.empty() ? f : difference(f, e);
  out.order = std::max(k - std::max(j, 0), 0);

  IntegralSpec spec;
  spec.mesh = &mesh;
  spec.base = out.base;
  spec.k = k;
  spec.j = std::max(j, 0);
  if (e.empty()) {
    spec.region = macroelement(mesh, f);
    spec.z = nullptr;
    double measure = 0.0;
    for (int c : spec.region.cells)
      measure += mesh.frame(c).volume;
    spec.scale = 1.0 / measure;
    spec.cache = nullptr;
  } else {
    if (!weights)
      throw std::invalid_argument("order_reduction: weight family required");
    spec.region = omega_ef(mesh, e, f);
    spec.z = &weights->z(e, f);
    spec.scale = 1.0;
    spec.cache = weights->cache().get();
  }

  if (j > k) {  // identically zero
    out.polynomial = true;
    out.coefficients = LambdaForm(out.base, 0);
    out.order = 0;
    return out;
  }

  if (u.is_polynomial()) {
    const int r = std::max(u.degree, 0);
    const int qdeg = quad_degree > 0 ? quad_degree : r + k + 1;
    const int nv = static_cast<int>(out.base.size());
    LambdaFit fit(nv, r);
    Mat values = Mat::Zero(fit.nodes.rows(), AltTensor::masks(nv, out.order).size());
    accumulate_components(spec, u, qdeg, fit.nodes, values);
    out.polynomial = true;
    out.coefficients = fit_lambda_form(out.base, out.order, r, values, fit);
    return out;
  }

  const int qdeg = quad_degree > 0 ? quad_degree : 12;
  out.polynomial = false;
  const int nv = static_cast<int>(out.base.size());
  const int order = out.order;
  PiecewiseForm uc = u;
  out.evaluator = [spec, uc, qdeg, nv, order](const Vec& lambda) {
    Mat nodes(1, nv + 1);
    nodes(0, 0) = 1.0 - lambda.sum();
    nodes.row(0).tail(nv) = lambda.transpose();
    Mat values = Mat::Zero(1, AltTensor::masks(nv, order).size());
    accumulate_components(spec, uc, qdeg, nodes, values);
    AltTensor t(nv, order);
    for (std::size_t i = 0; i < t.comp.size(); ++i)
      t.comp[i] = values(0, static_cast<int>(i));
    return t;
  };
  return out;
}

}  // namespace

ReducedForm average(const SimplicialComplex& mesh, const IndexSet& f, int k,
                    const PiecewiseForm& u, int quad_degree)
{
  return build_reduced(mesh, IndexSet{}, f, k, u, nullptr, quad_degree);
}

ReducedForm order_reduction(const SimplicialComplex& mesh, const IndexSet& e,
                            const IndexSet& f, int k, const PiecewiseForm& u,
                            const WeightFamily& weights, int quad_degree)
{
  if (e.empty())
    throw std::invalid_argument("order_reduction: e must be nonempty");
  ReducedForm out = build_reduced(mesh, e, f, k, u, &weights, quad_degree);
  // For vertex pairs the reduction is minus the trace of the average.
  return out;
}

RIdentityResiduals r_identity_check(const SimplicialComplex& mesh, const IndexSet& e,
                                    const IndexSet& f, int k, const PiecewiseForm& u,
                                    const WeightFamily& weights)
{
  RIdentityResiduals res;
  const int j = static_cast<int>(e.size()) - 1;
  const IndexSet base = difference(f, e);
  const int nv = static_cast<int>(base.size());

  const PiecewiseForm du = exterior_derivative(u);
  const ReducedForm w = order_reduction(mesh, e, f, k, u, weights);
  const ReducedForm wd = order_reduction(mesh, e, f, k + 1, du, weights);

  double scale = std::max(1.0, std::max(w.coefficients.poly.coef_norm(),
                                        wd.coefficients.poly.coef_norm()));

  if (j == 0) {
    // Commutation of the average with d: R^{k+1} du = d R^k u.
    PolyForm diff = wd.coefficients.poly;
    diff -= w.coefficients.poly.d();
    res.d_residual = diff.coef_norm() / scale;
    res.dplus_residual = 0.0;
    return res;
  }

  // Rescaled identity: b W' = (-1)^j (j db ^ W + b dW) - sum sign W_{e',f'}.
  const PolyForm b = PolyForm::affine(nv, 1.0, Vec::Constant(nv, -1.0));
  PolyForm db(nv, 1);
  for (int v = 0; v < nv; ++v)
    db -= PolyForm::dvariable(nv, v);

  PolyForm lhs = wedge(b, wd.coefficients.poly);
  PolyForm rhs = wedge(b, w.coefficients.poly.d());
  {
    PolyForm t = wedge(db, w.coefficients.poly);
    t *= static_cast<double>(j);
    rhs += t;
  }
  if (j % 2 != 0)
    rhs *= -1.0;
  for (const auto& [sign, e2, f2] : delta_terms(e, f, false)) {
    if (e2.empty())
      continue;
    const ReducedForm wi = order_reduction(mesh, e2, f2, k, u, weights);
    scale = std::max(scale, wi.coefficients.poly.coef_norm());
    PolyForm t = wi.coefficients.poly;
    t *= -static_cast<double>(sign);
    rhs += t;
  }
  PolyForm diff = lhs;
  diff -= rhs;
  res.d_residual = diff.coef_norm() / scale;

  // (delta^+ R^k u)_{e,f} = 0, rescaled by b^{j-1}.
  PolyForm acc(nv, std::max(k - j + 1, 0));
  for (const auto& [sign, e2, f2] : delta_terms(e, f, true)) {
    if (e2.empty())
      continue;
    const ReducedForm wi = order_reduction(mesh, e2, f2, k, u, weights);
    scale = std::max(scale, wi.coefficients.poly.coef_norm());
    LambdaForm traced = wi.coefficients.trace_to(base);
    PolyForm t = traced.poly;
    t *= static_cast<double>(sign);
    acc += t;
  }
  res.dplus_residual = acc.coef_norm() / scale;
  return res;
}

AltTensor LocalBubble::value(int cell, const Vec& x) const
{
  const auto& m_ = *mesh;
  const int n = m_.dim();
  const auto& frame = m_.frame(cell);
  const Vec lambda_full = frame.barycentric(x);
  AltTensor out(n, k);

  const double rho_f = rho_value(m_, cell, lambda_full, f);
  for (const auto& term : terms) {
    const double rho_g = rho_value(m_, cell, lambda_full, term.g);
    const Vec lambda = lambda_point(m_, cell, x, term.w->base, term.g);
    const Mat p = lambda_gradients(m_, cell, term.w->base, term.g);
    const AltTensor pulled = pullback_linear(term.w->tensor_at(lambda), p);
    if (term.ratio) {
      double ratio = 1.0;
      if (term.g != f) {
        if (std::abs(rho_g) < 1e-14)
          throw std::domain_error("LocalBubble: evaluation on the singular skeleton");
        ratio = rho_f / rho_g;
      }
      AltTensor t = pulled;
      t *= term.factor * ratio;
      out += t;
    } else {
      const PolyForm& phi = cache->on_cell(cell, term.e);
      if (phi.terms.empty())
        continue;
      if (std::abs(rho_g) < 1e-14)
        throw std::domain_error("LocalBubble: evaluation on the singular skeleton");
      const AltTensor phit =
          phi.tensor(lambda_full.tail(n), frame.gradients.bottomRows(n));
      AltTensor t = wedge(phit, pulled);
      t *= term.factor / rho_g;
      out += t;
    }
  }
  return out;
}

double LocalBubble::l2_norm(int quad_degree) const
{
  const auto& m_ = *mesh;
  const MacroRegion region = macroelement(m_, f);
  const QuadRule& rule = simplex_rule(m_.dim(), quad_degree);
  double s = 0.0;
  for (int cell : region.cells) {
    const auto& frame = m_.frame(cell);
    double cs = 0.0;
    for (int q = 0; q < rule.weights.size(); ++q) {
      const AltTensor t = value(cell, frame.point(rule.barycentric.row(q).transpose()));
      cs += rule.weights(q) * t.dot(t);
    }
    s += frame.volume * cs;
  }
  return std::sqrt(s);
}

LocalBubble cutoff_local(const SimplicialComplex& mesh, int m, const IndexSet& f, int k,
                         const PiecewiseForm& u, const WeightFamily& weights)
{
  const int j = static_cast<int>(f.size()) - 1 - m;
  if (j < 0 || j > k)
    throw std::invalid_argument("cutoff_local: need f of dimension m + j with 0 <= j <= k");
  LocalBubble bubble;
  bubble.mesh = &mesh;
  bubble.cache = weights.cache();
  bubble.m = m;
  bubble.k = k;
  bubble.f = f;

  if (j == 0) {
    auto a = std::make_shared<ReducedForm>(average(mesh, f, k, u));
    // g runs over all subsimplices of f and the empty set.
    std::vector<IndexSet> gs = all_subsets(f);
    gs.push_back(IndexSet{});
    for (const auto& g : gs) {
      BubbleTerm term;
      term.factor = ((f.size() - g.size()) % 2 == 0) ? 1.0 : -1.0;
      term.g = g;
      term.ratio = true;
      term.w = a;
      bubble.terms.push_back(std::move(term));
    }
    return bubble;
  }

  double jfact = 1.0;
  for (int i = 2; i <= j; ++i)
    jfact *= i;
  for (const auto& e : subsets_of_size(f, j + 1)) {
    auto w = std::make_shared<ReducedForm>(order_reduction(mesh, e, f, k, u, weights));
    std::vector<IndexSet> gs = all_subsets(difference(f, e));
    gs.push_back(IndexSet{});
    for (const auto& g : gs) {
      BubbleTerm term;
      term.factor = jfact * (((f.size() - g.size()) % 2 == 0) ? 1.0 : -1.0);
      term.g = g;
      term.ratio = false;
      term.e = e;
      term.w = w;
      bubble.terms.push_back(std::move(term));
    }
  }
  return bubble;
}

BubbleMap stage_bubbles(const SimplicialComplex& mesh, int m, int k, const PiecewiseForm& u,
                        const WeightFamily& weights)
{
  BubbleMap map;
  const int n = mesh.dim();
  for (int j = 0; j <= std::min(k, n - m); ++j)
    for (const auto& f : mesh.simplices(m + j))
      map.emplace(f, std::make_shared<LocalBubble>(cutoff_local(mesh, m, f, k, u, weights)));
  return map;
}

namespace {

/// Sum of the stage's bubbles at a point of a cell; bubbles anchored outside
/// the cell vanish there and are skipped.
AltTensor bubble_sum(const SimplicialComplex& mesh, const BubbleMap& bubbles, int m, int k,
                     int cell, const Vec& x)
{
  const int n = mesh.dim();
  AltTensor out(n, k);
  for (int dim = m; dim <= std::min(m + k, n); ++dim)
    for (const auto& f : subsets_of_size(mesh.cell(cell), dim + 1)) {
      auto it = bubbles.find(f);
      if (it != bubbles.end())
        out += it->second->value(cell, x);
    }
  return out;
}

}  // namespace

ReconstructionResult cutoff_global(const SimplicialComplex& mesh, int m, int k,
                                   const PiecewiseForm& u, const WeightFamily& weights,
                                   double tol, const BubbleMap* prebuilt)
{
  const int n = mesh.dim();
  ReconstructionResult result;
  if (m == n) {  // identity stage
    result.form = u;
    return result;
  }

  BubbleMap local;
  if (!prebuilt) {
    local = stage_bubbles(mesh, m, k, u, weights);
    prebuilt = &local;
  }
  const BubbleMap& bubbles = *prebuilt;

  if (!u.is_polynomial()) {
    PiecewiseForm out;
    out.mesh = &mesh;
    out.order = k;
    out.degree = -1;
    BubbleMap copy = bubbles;
    out.callback = [&mesh, copy, m, k](int cell, const Vec& x) {
      return bubble_sum(mesh, copy, m, k, cell, x);
    };
    result.form = std::move(out);
    return result;
  }

  const int r = std::max(u.degree, 0);
  const Mat nodes = interior_lattice(n, r, 0.3);
  const auto monos = exponents_up_to_degree(n, r);
  Mat vand(nodes.rows(), monos.size());
  for (int i = 0; i < nodes.rows(); ++i) {
    const Vec tail = nodes.row(i).tail(n).transpose();
    for (std::size_t jj = 0; jj < monos.size(); ++jj) {
      double mono = 1.0;
      for (std::size_t vv = 0; vv < monos[jj].size(); ++vv)
        for (int p = 0; p < monos[jj][vv]; ++p)
          mono *= tail(static_cast<int>(vv));
      vand(i, static_cast<int>(jj)) = mono;
    }
  }
  Eigen::PartialPivLU<Mat> vand_lu(vand);
  const auto& masks = AltTensor::masks(n, k);

  PiecewiseForm out(mesh, k, r);
  std::mt19937_64 rng(0xb0bb1eu + 977u * m + 31u * k);
  double scale = 1.0;
  for (int cell = 0; cell < mesh.num_cells(); ++cell) {
    const auto& frame = mesh.frame(cell);
    Mat values(nodes.rows(), masks.size());
    for (int i = 0; i < nodes.rows(); ++i) {
      const AltTensor t =
          bubble_sum(mesh, bubbles, m, k, cell, frame.point(nodes.row(i).transpose()));
      for (std::size_t mi = 0; mi < masks.size(); ++mi)
        values(i, static_cast<int>(mi)) = t.comp[mi];
      scale = std::max(scale, t.norm());
    }
    const Mat cart_coefs = vand_lu.solve(values);  // per monomial, Cartesian comps

    // Convert Cartesian components to d-lambda alternator coefficients.
    Mat basis(masks.size(), masks.size());  // basis(I, M) = (dlambda_M)(e_I)
    const Mat grads = frame.gradients.bottomRows(n);
    for (std::size_t ii = 0; ii < masks.size(); ++ii) {
      const auto cols = mask_to_positions(masks[ii]);
      for (std::size_t mm = 0; mm < masks.size(); ++mm) {
        const auto rows = mask_to_positions(masks[mm]);
        Mat sel(k, k);
        for (int a = 0; a < k; ++a)
          for (int b = 0; b < k; ++b)
            sel(a, b) = grads(rows[a], cols[b]);
        basis(static_cast<int>(ii), static_cast<int>(mm)) =
            k == 0 ? 1.0 : sel.determinant();
      }
    }
    Eigen::PartialPivLU<Mat> basis_lu(basis);
    PolyForm cellform(n, k);
    for (std::size_t jj = 0; jj < monos.size(); ++jj) {
      const Vec lambda_coefs = basis_lu.solve(cart_coefs.row(static_cast<int>(jj)).transpose());
      for (std::size_t mm = 0; mm < masks.size(); ++mm)
        if (std::abs(lambda_coefs(static_cast<int>(mm))) > 1e-12 * scale)
          cellform.add_term(monos[jj], masks[mm], lambda_coefs(static_cast<int>(mm)));
    }
    out.cell_forms[cell] = std::move(cellform);

    // Independent interior check points validate that the bubble sum really
    // is a degree-r polynomial on this cell.
    const int checks = static_cast<int>(monos.size()) + 3;
    for (int i = 0; i < checks; ++i) {
      Vec lambda(n + 1);
      double sum = 0.0;
      for (int c = 0; c <= n; ++c) {
        lambda(c) = 0.05 + 0.95 * uniform01(rng);
        sum += lambda(c);
      }
      lambda /= sum;
      const Vec x = frame.point(lambda);
      AltTensor direct = bubble_sum(mesh, bubbles, m, k, cell, x);
      direct -= out.value(cell, x);
      result.residual = std::max(result.residual, direct.norm());
    }
  }
  result.residual /= scale;
  if (result.residual > tol)
    throw std::runtime_error(
        "cutoff_global: reconstruction residual exceeds tolerance; the bubble sum is not a "
        "polynomial of the expected degree");
  result.form = std::move(out);
  return result;
}

PiecewiseForm BubbleDecomposition::stage_sum() const
{
  PiecewiseForm sum = stages.front();
  for (std::size_t m = 1; m < stages.size(); ++m)
    sum += stages[m];
  return sum;
}

BubbleDecomposition bubble_transform(const SimplicialComplex& mesh, int k,
                                     const PiecewiseForm& u, const WeightFamily& weights,
                                     double tol)
{
  BubbleDecomposition decomp;
  decomp.k = k;
  decomp.mesh = &mesh;
  PiecewiseForm residual = u;
  for (int m = 0; m <= mesh.dim(); ++m) {
    BubbleMap bubbles = stage_bubbles(mesh, m, k, residual, weights);
    ReconstructionResult rec = cutoff_global(mesh, m, k, residual, weights, tol, &bubbles);
    residual -= rec.form;
    decomp.stages.push_back(std::move(rec.form));
    decomp.bubbles.emplace(m, std::move(bubbles));
    decomp.reconstruction_residuals.push_back(rec.residual);
  }
  return decomp;
}

AltTensor fd_exterior_derivative(const std::function<AltTensor(const Vec&)>& eval,
                                 const Vec& x, int ambient, int order, double step)
{
  std::vector<AltTensor> plus(ambient), minus(ambient);
  for (int q = 0; q < ambient; ++q) {
    Vec xp = x, xm = x;
    xp(q) += step;
    xm(q) -= step;
    plus[q] = eval(xp);
    minus[q] = eval(xm);
  }
  AltTensor out(ambient, order + 1);
  const auto& ms = AltTensor::masks(ambient, order + 1);
  for (std::size_t mi = 0; mi < ms.size(); ++mi) {
    const auto pos = mask_to_positions(ms[mi]);
    double v = 0.0;
    for (std::size_t a = 0; a < pos.size(); ++a) {
      const AltMask rest = ms[mi] & ~(AltMask{1} << pos[a]);
      const int ci = plus[pos[a]].index_of(rest);
      const double der =
          (plus[pos[a]].comp[ci] - minus[pos[a]].comp[ci]) / (2.0 * step);
      v += (a % 2 == 0 ? 1.0 : -1.0) * der;
    }
    out.comp[mi] = v;
  }
  return out;
}

std::pair<AltTensor, AltTensor> commutator_probe_at(const SimplicialComplex& mesh, int m,
                                                    const IndexSet& f, int k,
                                                    const PiecewiseForm& u,
                                                    const WeightFamily& weights, int cell,
                                                    const Vec& x, double fd_step)
{
  if (static_cast<int>(f.size()) - 1 != m)
    throw std::invalid_argument("commutator_probe_at: primal operator needs f of dimension m");
  const int n = mesh.dim();
  const PiecewiseForm du = exterior_derivative(u);
  const LocalBubble bk = cutoff_local(mesh, m, f, k, u, weights);
  const LocalBubble bk1 = cutoff_local(mesh, m, f, k + 1, du, weights);

  AltTensor lhs = fd_exterior_derivative(
      [&](const Vec& p) { return bk.value(cell, p); }, x, n, k, fd_step);
  lhs -= bk1.value(cell, x);

  // Right side: the Whitney-edge expansion of the commutator.
  const auto a = average(mesh, f, k, u);
  const auto& frame = mesh.frame(cell);
  const Vec lambda_full = frame.barycentric(x);
  auto lambda_of = [&](int vid) {
    const int pos = mesh.local_position(cell, vid);
    return pos >= 0 ? lambda_full(pos) : 0.0;
  };
  auto grad_of = [&](int vid) -> Vec {
    const int pos = mesh.local_position(cell, vid);
    return pos >= 0 ? Vec(frame.gradients.row(pos).transpose()) : Vec(Vec::Zero(n));
  };
  const IndexSet dual = dual_vertices(mesh, f);

  AltTensor rhs(n, k + 1);
  std::vector<IndexSet> gs = all_subsets(f);
  gs.push_back(IndexSet{});
  for (const auto& g : gs) {
    const double sign = ((f.size() - g.size()) % 2 == 0) ? 1.0 : -1.0;
    const double rho_g = rho_value(mesh, cell, lambda_full, g);
    if (std::abs(rho_g) < 1e-14)
      throw std::domain_error("commutator_probe_at: point on the singular skeleton");
    const Vec lambda = lambda_point(mesh, cell, x, f, g);
    const Mat p = lambda_gradients(mesh, cell, f, g);
    const AltTensor pulled = pullback_linear(a.tensor_at(lambda), p);
    for (int pv : difference(f, g))
      for (int qv : dual) {
        // Whitney edge form of [x_p, x_q] at x.
        AltTensor phi(n, 1);
        const Vec w = lambda_of(pv) * grad_of(qv) - lambda_of(qv) * grad_of(pv);
        for (int i = 0; i < n; ++i)
          phi.comp[i] = w(i);
        AltTensor t = wedge(phi, pulled);
        t *= sign / (rho_g * rho_g);
        rhs += t;
      }
  }
  return {lhs, rhs};
}

}  // namespace bubbletx
