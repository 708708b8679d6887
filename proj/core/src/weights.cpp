// Copyright (c) 2026 The bubbletx authors
// SPDX-License-Identifier: Apache-2.0

#include "bubbletx/weights.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace bubbletx {

WhitneyCochain& WhitneyCochain::axpy(double a, const WhitneyCochain& other)
{
  for (const auto& [id, c] : other.coef) {
    auto [it, inserted] = coef.emplace(id, a * c);
    if (!inserted)
      it->second += a * c;
  }
  return *this;
}

WhitneyCochain& WhitneyCochain::operator*=(double s)
{
  for (auto& [id, c] : coef)
    c *= s;
  return *this;
}

double WhitneyCochain::inf_norm() const
{
  double m = 0.0;
  for (const auto& [id, c] : coef)
    m = std::max(m, std::abs(c));
  return m;
}

double WhitneyCochain::l2_norm() const
{
  double s = 0.0;
  for (const auto& [id, c] : coef)
    s += c * c;
  return std::sqrt(s);
}

double coef_distance(const WhitneyCochain& a, const WhitneyCochain& b)
{
  WhitneyCochain diff = a;
  diff.axpy(-1.0, b);
  return diff.inf_norm();
}

WhitneyCochain coboundary(const SimplicialComplex& mesh, const WhitneyCochain& u)
{
  // As forms, d phi_sigma = |sigma| * sum over tau of [tau : sigma] phi_tau.
  WhitneyCochain out(u.order + 1);
  const auto& sigmas = mesh.simplices(u.order);
  for (const auto& [id, c] : u.coef) {
    const IndexSet& sigma = sigmas[id];
    const double scale = static_cast<double>(sigma.size());
    std::set<IndexSet> taus;
    for (int cell : mesh.cells_containing(sigma))
      for (int v : difference(mesh.cell(cell), sigma))
        taus.insert(merge(sigma, IndexSet{v}));
    for (const auto& tau : taus) {
      const double entry = scale * incidence_sign(sigma, tau) * c;
      auto [it, inserted] = out.coef.emplace(mesh.simplex_id(tau), entry);
      if (!inserted)
        it->second += entry;
    }
  }
  return out;
}

AltTensor cochain_tensor(const WhitneyCache& cache, const WhitneyCochain& u, int cell,
                         const Vec& x)
{
  const auto& mesh = cache.mesh();
  const int n = mesh.dim();
  const auto& frame = mesh.frame(cell);
  const Vec lambda_tail = frame.barycentric(x).tail(n);
  const Mat grads = frame.gradients.bottomRows(n);
  AltTensor out(n, u.order);
  for (const auto& sigma : subsets_of_size(mesh.cell(cell), u.order + 1)) {
    auto it = u.coef.find(mesh.simplex_id(sigma));
    if (it == u.coef.end() || it->second == 0.0)
      continue;
    AltTensor t = cache.on_cell(cell, sigma).tensor(lambda_tail, grads);
    t *= it->second;
    out += t;
  }
  return out;
}

WhitneyCochain volume_form(const SimplicialComplex& mesh, const IndexSet& f)
{
  const int n = mesh.dim();
  const auto& cells = mesh.cells_containing(f);
  double measure = 0.0;
  for (int c : cells)
    measure += mesh.frame(c).volume;
  double factorial = 1.0;
  for (int i = 2; i <= n; ++i)
    factorial *= i;
  WhitneyCochain out(n);
  for (int c : cells) {
    const auto& frame = mesh.frame(c);
    out.coef[mesh.simplex_id(mesh.cell(c))] =
        factorial * frame.volume * frame.orientation / measure;
  }
  return out;
}

std::vector<std::tuple<int, IndexSet, IndexSet>> delta_terms(const IndexSet& e,
                                                             const IndexSet& f, bool plus)
{
  if (e.empty())
    throw std::invalid_argument("delta_terms: e must be nonempty");
  if (!is_subsimplex(e, f))
    throw std::invalid_argument("delta_terms: e is not a subsimplex of f");
  std::vector<std::tuple<int, IndexSet, IndexSet>> out;
  for (int v : e) {
    const int sign = internal_index(e, v) % 2 == 0 ? 1 : -1;
    out.emplace_back(sign, remove_vertex(e, v), plus ? f : remove_vertex(f, v));
  }
  return out;
}

namespace {

struct RegionSpace {
  std::vector<IndexSet> basis;  // admissible simplices
  std::map<IndexSet, int> index;
};

RegionSpace make_space(const SimplicialComplex& mesh, const MacroRegion& region, int d)
{
  RegionSpace s;
  if (d < 0)
    return s;
  s.basis = zero_trace_simplices(mesh, region, d);
  for (int i = 0; i < static_cast<int>(s.basis.size()); ++i)
    s.index[s.basis[i]] = i;
  return s;
}

/// Coboundary matrix between admissible bases (rows: all region simplices of
/// order d+1 given in `rows`); entries carry the Whitney-form factor |sigma|.
Mat coboundary_matrix(const std::vector<IndexSet>& rows, const RegionSpace& cols)
{
  std::map<IndexSet, int> row_of;
  for (int i = 0; i < static_cast<int>(rows.size()); ++i)
    row_of[rows[i]] = i;
  Mat m = Mat::Zero(rows.size(), cols.basis.size());
  for (int ci = 0; ci < static_cast<int>(cols.basis.size()); ++ci) {
    const IndexSet& sigma = cols.basis[ci];
    for (const auto& [tau, ri] : row_of)
      if (is_subsimplex(sigma, tau) && tau.size() == sigma.size() + 1)
        m(ri, ci) += static_cast<double>(sigma.size()) * incidence_sign(sigma, tau);
  }
  return m;
}

/// Mass matrix of the admissible basis over the region in the Euclidean
/// pointwise inner product.
Mat mass_matrix(const WhitneyCache& cache, const MacroRegion& region, const RegionSpace& sp,
                int order)
{
  const auto& mesh = cache.mesh();
  const int n = mesh.dim();
  Mat m = Mat::Zero(sp.basis.size(), sp.basis.size());
  const QuadRule& rule = simplex_rule(n, 2);
  for (int cell : region.cells) {
    std::vector<int> local;
    for (const auto& sigma : subsets_of_size(mesh.cell(cell), order + 1)) {
      auto it = sp.index.find(sigma);
      if (it != sp.index.end())
        local.push_back(it->second);
    }
    const auto& frame = mesh.frame(cell);
    const Mat grads = frame.gradients.bottomRows(n);
    for (int q = 0; q < rule.weights.size(); ++q) {
      const Vec lambda_tail = rule.barycentric.row(q).tail(n).transpose();
      std::vector<AltTensor> vals(local.size());
      for (std::size_t a = 0; a < local.size(); ++a)
        vals[a] = cache.on_cell(cell, sp.basis[local[a]]).tensor(lambda_tail, grads);
      for (std::size_t a = 0; a < local.size(); ++a)
        for (std::size_t b = a; b < local.size(); ++b) {
          const double v = frame.volume * rule.weights(q) * vals[a].dot(vals[b]);
          m(local[a], local[b]) += v;
          if (a != b)
            m(local[b], local[a]) += v;
        }
    }
  }
  return m;
}

}  // namespace

WeightFamily WeightFamily::build(const SimplicialComplex& mesh, bool keep_systems)
{
  WeightFamily family;
  family.mesh_ = &mesh;
  family.cache_ = std::make_shared<WhitneyCache>(mesh);
  const int n = mesh.dim();

  // Initial level: w_{empty,f} = -vol_f.
  for (int m = 0; m <= n; ++m)
    for (const auto& f : mesh.simplices(m)) {
      WhitneyCochain v = volume_form(mesh, f);
      v *= -1.0;
      family.w_.emplace(std::make_pair(IndexSet{}, f), std::move(v));
    }

  // Levels by increasing |e|, then lexicographic (e, f).
  for (int esize = 1; esize <= n; ++esize) {
    const int j = esize - 1;
    const int worder = n - j - 1;
    std::vector<std::pair<IndexSet, IndexSet>> pairs;
    for (int m = 0; m <= n; ++m) {
      if (m + 1 <= esize)
        continue;  // need |e| <= |f| - 1
      for (const auto& f : mesh.simplices(m))
        for (const auto& e : subsets_of_size(f, esize))
          pairs.emplace_back(e, f);
    }
    std::sort(pairs.begin(), pairs.end());

    for (const auto& [e, f] : pairs) {
      // Right hand side (-1)^{j+1} ((delta - delta^+) w)_{e,f}; this exponent
      // is what makes d z_{e,f} = (-1)^{j+1} (delta z)_{e,f} come out.
      WhitneyCochain rhs(n - j);
      for (const auto& [sign, e2, f2] : delta_terms(e, f, false))
        rhs.axpy(j % 2 == 0 ? -sign : sign, family.w_.at({e2, f2}));
      for (const auto& [sign, e2, f2] : delta_terms(e, f, true))
        rhs.axpy(j % 2 == 0 ? sign : -sign, family.w_.at({e2, f2}));

      // The solve region is the macroelement of f minus e: the smallest
      // region containing the supports of every term on the right.
      const MacroRegion region = macroelement(mesh, difference(f, e));

      const auto rows = region_simplices(mesh, region, n - j);
      std::map<IndexSet, int> row_of;
      for (int i = 0; i < static_cast<int>(rows.size()); ++i)
        row_of[rows[i]] = i;
      const RegionSpace cols = make_space(mesh, region, worder);
      const RegionSpace qspace = make_space(mesh, region, worder - 1);

      Vec b = Vec::Zero(rows.size());
      const double rhs_scale = std::max(1.0, rhs.inf_norm());
      double leak = 0.0;
      const auto& rhs_simplices = mesh.simplices(n - j);
      for (const auto& [id, c] : rhs.coef) {
        auto it = row_of.find(rhs_simplices[id]);
        if (it == row_of.end())
          leak = std::max(leak, std::abs(c));
        else
          b(it->second) = c;
      }
      if (leak > 1e-8 * rhs_scale)
        throw std::runtime_error("build_weights: right hand side escapes its region");

      if (cols.basis.empty()) {
        // Fully constrained space: only the zero solution exists, which is
        // consistent exactly when the right hand side vanishes.
        const double res = rhs.inf_norm() / rhs_scale;
        if (res > 1e-10)
          throw std::runtime_error(
              "build_weights: inconsistent solve (empty zero-trace space with a nonzero "
              "right hand side)");
        family.w_.emplace(std::make_pair(e, f), WhitneyCochain(worder));
        WeightSolveRecord rec;
        rec.e = e;
        rec.f = f;
        rec.level = j;
        rec.solve_residual = res;
        rec.rhs_support_leak = leak / rhs_scale;
        family.records_.push_back(std::move(rec));
        continue;
      }

      const Mat D = coboundary_matrix(rows, cols);
      Mat A;
      if (!qspace.basis.empty()) {
        const Mat M = mass_matrix(*family.cache_, region, cols, worder);
        const Mat Dq = coboundary_matrix(cols.basis, qspace);
        const Mat C = (M * Dq).transpose();
        A.resize(D.rows() + C.rows(), D.cols());
        A.topRows(D.rows()) = D;
        A.bottomRows(C.rows()) = C;
      } else {
        A = D;
      }
      Vec bfull = Vec::Zero(A.rows());
      bfull.head(b.size()) = b;

      Eigen::CompleteOrthogonalDecomposition<Mat> cod(A);
      cod.setThreshold(1e-10);
      const Vec x = cod.solve(bfull);

      const double solve_residual = (D * x - b).lpNorm<Eigen::Infinity>() / rhs_scale;
      if (solve_residual > 1e-10)
        throw std::runtime_error(
            "build_weights: inconsistent solve (the zero-trace complex on a weight region "
            "is not exact)");
      double orth_residual = 0.0;
      if (!qspace.basis.empty())
        orth_residual = (A.bottomRows(A.rows() - D.rows()) * x).lpNorm<Eigen::Infinity>();

      WhitneyCochain w(worder);
      for (int i = 0; i < static_cast<int>(cols.basis.size()); ++i)
        if (x(i) != 0.0)
          w.coef[mesh.simplex_id(cols.basis[i])] = x(i);
      family.w_.emplace(std::make_pair(e, f), std::move(w));

      WeightSolveRecord rec;
      rec.e = e;
      rec.f = f;
      rec.level = j;
      rec.solve_residual = solve_residual;
      rec.rhs_support_leak = leak / rhs_scale;
      rec.orth_residual = orth_residual;
      family.records_.push_back(std::move(rec));

      if (keep_systems)
        family.kept_.push_back({e, f, A, bfull, x});
    }
  }

  // z_{e,f} = (delta^+ w)_{e,f} for all pairs e in Delta(f).
  for (int m = 0; m <= n; ++m)
    for (const auto& f : mesh.simplices(m))
      for (int esize = 1; esize <= m + 1; ++esize)
        for (const auto& e : subsets_of_size(f, esize)) {
          WhitneyCochain zc(n - (esize - 1));
          for (const auto& [sign, e2, f2] : delta_terms(e, f, true))
            zc.axpy(sign, family.w_.at({e2, f2}));
          family.z_.emplace(std::make_pair(e, f), std::move(zc));
        }

  return family;
}

bool WeightFamily::has_w(const IndexSet& e, const IndexSet& f) const
{
  return w_.count({e, f}) > 0;
}

const WhitneyCochain& WeightFamily::w(const IndexSet& e, const IndexSet& f) const
{
  auto it = w_.find({e, f});
  if (it == w_.end())
    throw std::invalid_argument("WeightFamily: no w for this pair");
  return it->second;
}

const WhitneyCochain& WeightFamily::z(const IndexSet& e, const IndexSet& f) const
{
  auto it = z_.find({e, f});
  if (it == z_.end())
    throw std::invalid_argument("WeightFamily: no z for this pair");
  return it->second;
}

AltTensor WeightFamily::z_tensor(const IndexSet& e, const IndexSet& f, int cell,
                                 const Vec& x) const
{
  return cochain_tensor(*cache_, z(e, f), cell, x);
}

WeightIdentityReport WeightFamily::verify_identities() const
{
  WeightIdentityReport report;
  const auto& mesh = *mesh_;
  const int n = mesh.dim();
  for (const auto& [key, zc] : z_) {
    const auto& [e, f] = key;
    const int j = static_cast<int>(e.size()) - 1;
    WeightIdentityReport::Entry entry;
    entry.e = e;
    entry.f = f;

    const double scale = std::max(1.0, zc.inf_norm());

    // d z_{e,f} = (-1)^{j+1} (delta z)_{e,f}; the delta sum only exists for
    // j >= 1 since z is indexed by nonempty e.
    if (j >= 1) {
      WhitneyCochain dz = coboundary(mesh, zc);
      for (const auto& [sign, e2, f2] : delta_terms(e, f, false))
        dz.axpy(j % 2 == 0 ? sign : -sign, z(e2, f2));
      entry.dz_residual = dz.inf_norm() / scale;
    }

    // (delta^+ z)_{e,f} = 0 for |e| >= 2.
    if (j >= 1) {
      WhitneyCochain dplus(zc.order);
      for (const auto& [sign, e2, f2] : delta_terms(e, f, true))
        dplus.axpy(sign, z(e2, f2));
      entry.dplus_residual = dplus.inf_norm() / scale;
    }

    // Support: coefficients must sit inside Omega_{e,f}.
    const MacroRegion region = omega_ef(mesh, e, f);
    std::set<IndexSet> allowed;
    for (const auto& s : region_simplices(mesh, region, zc.order))
      allowed.insert(s);
    double hmax = 0.0;
    for (int c : region.cells)
      hmax = std::max(hmax, mesh.cell_diameter(c));
    for (const auto& [id, c] : zc.coef)
      if (!allowed.count(mesh.simplices(zc.order)[id]))
        entry.support_leak = std::max(entry.support_leak, std::abs(c) / scale);

    // Empirical constant of the sup-norm bound |z| <= c h^{j-n}.
    double sup = 0.0;
    const QuadRule& rule = simplex_rule(n, 3);
    for (int c : region.cells) {
      for (int q = 0; q < rule.weights.size(); ++q) {
        const Vec x = mesh.frame(c).point(rule.barycentric.row(q).transpose());
        sup = std::max(sup, cochain_tensor(*cache_, zc, c, x).norm());
      }
    }
    entry.zbound_constant = sup * std::pow(hmax, n - j);

    report.max_dz = std::max(report.max_dz, entry.dz_residual);
    report.max_dplus = std::max(report.max_dplus, entry.dplus_residual);
    report.max_support = std::max(report.max_support, entry.support_leak);
    report.max_zbound = std::max(report.max_zbound, entry.zbound_constant);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace bubbletx
