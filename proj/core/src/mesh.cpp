// Copyright (c) 2026 The bubbletx authors
// SPDX-License-Identifier: Apache-2.0

#include "bubbletx/mesh.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace bubbletx {

namespace {

Mat vertex_matrix(const std::vector<Vec>& vertices, const IndexSet& f)
{
  Mat m(vertices.empty() ? 0 : vertices.front().size(), f.size());
  for (std::size_t i = 0; i < f.size(); ++i)
    m.col(static_cast<int>(i)) = vertices[f[i]];
  return m;
}

std::vector<int> sorted_union(const std::vector<int>& a, const std::vector<int>& b)
{
  std::vector<int> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::vector<int> sorted_intersection(const std::vector<int>& a, const std::vector<int>& b)
{
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

SimplicialComplex::SimplicialComplex(int dim, std::vector<Vec> vertices,
                                     std::vector<IndexSet> cells)
    : dim_(dim), vertices_(std::move(vertices)), cells_(std::move(cells))
{
  if (dim_ < 1)
    throw std::invalid_argument("mesh: dimension must be positive");
  for (const auto& v : vertices_)
    if (v.size() != dim_)
      throw std::invalid_argument("mesh: vertex coordinate length does not match dim");

  lattice_.resize(dim_ + 1);
  lattice_index_.resize(dim_ + 1);
  frames_.reserve(cells_.size());

  std::vector<std::set<IndexSet>> seen(dim_ + 1);
  for (const auto& c : cells_) {
    if (static_cast<int>(c.size()) != dim_ + 1)
      throw std::invalid_argument("mesh: cell must list dim+1 vertices");
    for (std::size_t i = 0; i + 1 < c.size(); ++i)
      if (c[i] >= c[i + 1])
        throw std::invalid_argument("mesh: cell vertex ids must be strictly ascending");
    for (int v : c)
      if (v < 0 || v >= num_vertices())
        throw std::invalid_argument("mesh: cell references unknown vertex");
  }

  for (int ci = 0; ci < num_cells(); ++ci) {
    const auto& c = cells_[ci];
    frames_.push_back(make_cell_frame(vertex_matrix(vertices_, c)));
    if (frames_.back().volume <= 1e-14 * std::pow(frames_.back().diameter, dim_))
      throw std::invalid_argument("mesh: degenerate (zero volume) cell");
    total_volume_ += frames_.back().volume;
    for (int m = 0; m <= dim_; ++m) {
      for (auto& f : subsets_of_size(c, m + 1)) {
        star_[f].push_back(ci);
        if (seen[m].insert(f).second)
          lattice_[m].push_back(f);
      }
    }
    all_cells_.push_back(ci);
  }
  for (int m = 0; m <= dim_; ++m) {
    std::sort(lattice_[m].begin(), lattice_[m].end());
    for (int i = 0; i < static_cast<int>(lattice_[m].size()); ++i)
      lattice_index_[m][lattice_[m][i]] = i;
  }
  for (auto& [f, cs] : star_)
    std::sort(cs.begin(), cs.end());

  // Conformity: an interior (n-1)-face must be shared by exactly two cells,
  // and no vertex may sit inside a cell it does not belong to.
  for (const auto& face : lattice_[dim_ - 1])
    if (cells_containing(face).size() > 2)
      throw std::invalid_argument("mesh: face shared by more than two cells");
  for (int v = 0; v < num_vertices(); ++v) {
    for (int ci = 0; ci < num_cells(); ++ci) {
      if (contains(cells_[ci], v))
        continue;
      Vec lambda = frames_[ci].barycentric(vertices_[v]);
      if (lambda.minCoeff() > 1e-9)
        throw std::invalid_argument("mesh: non-conforming mesh (vertex inside foreign cell)");
    }
  }
}

const std::vector<IndexSet>& SimplicialComplex::simplices(int m) const
{
  if (m < 0 || m > dim_)
    throw std::out_of_range("simplices: dimension out of range");
  return lattice_[m];
}

int SimplicialComplex::simplex_id(const IndexSet& f) const
{
  const int m = static_cast<int>(f.size()) - 1;
  if (m < 0 || m > dim_)
    throw std::out_of_range("simplex_id: dimension out of range");
  auto it = lattice_index_[m].find(f);
  if (it == lattice_index_[m].end())
    throw std::invalid_argument("simplex_id: unknown simplex");
  return it->second;
}

bool SimplicialComplex::has_simplex(const IndexSet& f) const
{
  const int m = static_cast<int>(f.size()) - 1;
  if (m < 0 || m > dim_)
    return false;
  return lattice_index_[m].count(f) > 0;
}

const std::vector<int>& SimplicialComplex::cells_containing(const IndexSet& f) const
{
  if (f.empty())
    return all_cells_;
  auto it = star_.find(f);
  if (it == star_.end())
    throw std::invalid_argument("cells_containing: unknown simplex");
  return it->second;
}

bool SimplicialComplex::cell_has(int c, const IndexSet& f) const
{
  return is_subsimplex(f, cells_[c]);
}

int SimplicialComplex::local_position(int c, int v) const
{
  const auto& cell = cells_[c];
  auto it = std::lower_bound(cell.begin(), cell.end(), v);
  if (it == cell.end() || *it != v)
    return -1;
  return static_cast<int>(it - cell.begin());
}

std::optional<int> SimplicialComplex::locate(const Vec& x, double tol) const
{
  for (int c = 0; c < num_cells(); ++c) {
    Vec lambda = frames_[c].barycentric(x);
    if (lambda.minCoeff() >= -tol)
      return c;
  }
  return std::nullopt;
}

bool MacroRegion::contains_cell(int c) const
{
  return std::binary_search(cells.begin(), cells.end(), c);
}

SimplicialComplex load_mesh(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("load_mesh: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_mesh: parse failure in " + path + ": " + e.what());
  }
  if (!j.contains("dim") || !j.contains("vertices") || !j.contains("cells"))
    throw std::runtime_error("load_mesh: missing dim/vertices/cells in " + path);
  const int dim = j.at("dim").get<int>();
  std::vector<Vec> vertices;
  for (const auto& row : j.at("vertices")) {
    Vec v(dim);
    if (static_cast<int>(row.size()) != dim)
      throw std::runtime_error("load_mesh: vertex coordinate length mismatch");
    for (int i = 0; i < dim; ++i)
      v(i) = row.at(i).get<double>();
    vertices.push_back(std::move(v));
  }
  std::vector<IndexSet> cells;
  for (const auto& row : j.at("cells")) {
    IndexSet c;
    for (const auto& v : row)
      c.push_back(v.get<int>());
    cells.push_back(std::move(c));
  }
  return SimplicialComplex(dim, std::move(vertices), std::move(cells));
}

MacroRegion macroelement(const SimplicialComplex& mesh, const IndexSet& f)
{
  MacroRegion r;
  r.kind = MacroRegion::Kind::Macroelement;
  r.anchor_f = f;
  r.cells = mesh.cells_containing(f);
  return r;
}

MacroRegion extended_macroelement(const SimplicialComplex& mesh, const IndexSet& f)
{
  MacroRegion r;
  r.kind = MacroRegion::Kind::Extended;
  r.anchor_f = f;
  if (f.empty()) {
    r.cells = mesh.cells_containing(f);
    return r;
  }
  for (int v : f)
    r.cells = sorted_union(r.cells, mesh.cells_containing(IndexSet{v}));
  return r;
}

MacroRegion omega_ef(const SimplicialComplex& mesh, const IndexSet& e, const IndexSet& f)
{
  if (!e.empty() && !is_subsimplex(e, f))
    throw std::invalid_argument("omega_ef: e is not a subsimplex of f");
  MacroRegion r;
  r.kind = MacroRegion::Kind::Mixed;
  r.anchor_e = e;
  r.anchor_f = f;
  if (e.size() <= 1) {
    r.cells = mesh.cells_containing(f);
    return r;
  }
  for (int v : e) {
    MacroRegion part = omega_ef(mesh, remove_vertex(e, v), remove_vertex(f, v));
    r.cells = sorted_union(r.cells, part.cells);
  }
  return r;
}

MacroRegion omega_ef_closed_form(const SimplicialComplex& mesh, const IndexSet& e,
                                 const IndexSet& f)
{
  if (!e.empty() && !is_subsimplex(e, f))
    throw std::invalid_argument("omega_ef: e is not a subsimplex of f");
  MacroRegion r;
  r.kind = MacroRegion::Kind::Mixed;
  r.anchor_e = e;
  r.anchor_f = f;
  if (e.empty()) {
    r.cells = mesh.cells_containing(f);
    return r;
  }
  const IndexSet rest = difference(f, e);
  r.cells = mesh.cells_containing(rest);  // Omega_{f \cap e^*}; empty rest = all
  r.cells = sorted_intersection(r.cells, extended_macroelement(mesh, e).cells);
  return r;
}

std::vector<IndexSet> dual_manifold(const SimplicialComplex& mesh, const IndexSet& f)
{
  if (static_cast<int>(f.size()) == mesh.dim() + 1)
    throw std::invalid_argument("dual_manifold: the dual of an n-cell is empty");
  std::vector<IndexSet> out;
  for (int c : mesh.cells_containing(f))
    out.push_back(difference(mesh.cell(c), f));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

IndexSet dual_vertices(const SimplicialComplex& mesh, const IndexSet& f)
{
  IndexSet out;
  for (int c : mesh.cells_containing(f))
    out = merge(out, difference(mesh.cell(c), f));
  return out;
}

double shape_constant(const SimplicialComplex& mesh)
{
  double c = 0.0;
  for (int ci = 0; ci < mesh.num_cells(); ++ci) {
    const auto& fr = mesh.frame(ci);
    c = std::max(c, fr.diameter / insphere_diameter(fr.vertices));
  }
  return c;
}

int overlap_constant(const SimplicialComplex& mesh, const std::vector<MacroRegion>& regions)
{
  int best = 0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    int count = 0;
    for (const auto& r : regions)
      if (r.contains_cell(c))
        ++count;
    best = std::max(best, count);
  }
  return best;
}

double quasi_uniformity_ratio(const SimplicialComplex& mesh, const IndexSet& e,
                              const IndexSet& f)
{
  MacroRegion region = omega_ef(mesh, e, f);
  if (region.cells.empty())
    throw std::invalid_argument("quasi_uniformity_ratio: empty region");
  double hmax = 0.0, hmin = std::numeric_limits<double>::max();
  for (int c : region.cells) {
    hmax = std::max(hmax, mesh.cell_diameter(c));
    hmin = std::min(hmin, mesh.cell_diameter(c));
  }
  return hmax / hmin;
}

std::vector<IndexSet> region_simplices(const SimplicialComplex& mesh,
                                       const MacroRegion& region, int d)
{
  std::set<IndexSet> out;
  for (int c : region.cells)
    for (auto& s : subsets_of_size(mesh.cell(c), d + 1))
      out.insert(std::move(s));
  return {out.begin(), out.end()};
}

std::vector<IndexSet> region_interface_faces(const SimplicialComplex& mesh,
                                             const MacroRegion& region)
{
  std::vector<IndexSet> out;
  for (const auto& face : region_simplices(mesh, region, mesh.dim() - 1)) {
    int inside = 0;
    for (int c : mesh.cells_containing(face))
      if (region.contains_cell(c))
        ++inside;
    const int total = static_cast<int>(mesh.cells_containing(face).size());
    if (inside == 1 && total == 2)
      out.push_back(face);
  }
  return out;
}

std::vector<IndexSet> region_boundary_faces(const SimplicialComplex& mesh,
                                            const MacroRegion& region)
{
  std::vector<IndexSet> out;
  for (const auto& face : region_simplices(mesh, region, mesh.dim() - 1)) {
    int inside = 0;
    for (int c : mesh.cells_containing(face))
      if (region.contains_cell(c))
        ++inside;
    if (inside == 1)
      out.push_back(face);
  }
  return out;
}

std::vector<IndexSet> zero_trace_simplices(const SimplicialComplex& mesh,
                                           const MacroRegion& region, int d,
                                           bool whole_boundary)
{
  const auto constrained_faces = whole_boundary ? region_boundary_faces(mesh, region)
                                                : region_interface_faces(mesh, region);
  std::vector<IndexSet> out;
  for (const auto& s : region_simplices(mesh, region, d)) {
    bool constrained = false;
    for (const auto& face : constrained_faces)
      if (is_subsimplex(s, face)) {
        constrained = true;
        break;
      }
    if (!constrained)
      out.push_back(s);
  }
  return out;
}

int incidence_sign(const IndexSet& sigma, const IndexSet& tau)
{
  const IndexSet extra = difference(tau, sigma);
  if (extra.size() != 1 || tau.size() != sigma.size() + 1)
    throw std::invalid_argument("incidence_sign: not a codimension-one pair");
  return internal_index(tau, extra[0]) % 2 == 0 ? 1 : -1;
}

Mat zero_trace_coboundary(const SimplicialComplex& mesh, const MacroRegion& region, int d)
{
  const auto rows = zero_trace_simplices(mesh, region, d + 1);
  const auto cols = zero_trace_simplices(mesh, region, d);
  std::map<IndexSet, int> row_of, col_of;
  for (int i = 0; i < static_cast<int>(rows.size()); ++i)
    row_of[rows[i]] = i;
  for (int i = 0; i < static_cast<int>(cols.size()); ++i)
    col_of[cols[i]] = i;
  Mat m = Mat::Zero(rows.size(), cols.size());
  for (int ri = 0; ri < static_cast<int>(rows.size()); ++ri) {
    for (int v : rows[ri]) {
      auto it = col_of.find(remove_vertex(rows[ri], v));
      if (it != col_of.end())
        m(ri, it->second) += incidence_sign(it->first, rows[ri]);
    }
  }
  return m;
}

namespace {

int rank_of(const Mat& m)
{
  if (m.rows() == 0 || m.cols() == 0)
    return 0;
  Eigen::ColPivHouseholderQR<Mat> qr(m);
  qr.setThreshold(1e-9);
  return static_cast<int>(qr.rank());
}

/// Betti numbers of the zero-trace cochain complex on a region.
std::vector<int> whitney_betti(const SimplicialComplex& mesh, const MacroRegion& region)
{
  const int n = mesh.dim();
  std::vector<int> dims(n + 1), ranks(n + 1, 0);
  for (int d = 0; d <= n; ++d)
    dims[d] = static_cast<int>(zero_trace_simplices(mesh, region, d).size());
  for (int d = 0; d < n; ++d)
    ranks[d] = rank_of(zero_trace_coboundary(mesh, region, d));
  std::vector<int> betti(n + 1);
  for (int d = 0; d <= n; ++d) {
    const int kernel = dims[d] - (d < n ? ranks[d] : 0);
    const int image = d > 0 ? ranks[d - 1] : 0;
    betti[d] = kernel - image;
  }
  return betti;
}

/// Relative simplicial homology of (region, interface closure), via boundary
/// matrices of the quotient chain complex.
std::vector<int> simplicial_relative_betti(const SimplicialComplex& mesh,
                                           const MacroRegion& region)
{
  const int n = mesh.dim();
  // Chains of the region modulo chains supported on the interface closure:
  // a basis is exactly the zero-trace simplices.
  std::vector<std::vector<IndexSet>> basis(n + 1);
  for (int d = 0; d <= n; ++d)
    basis[d] = zero_trace_simplices(mesh, region, d);
  std::vector<Mat> boundary(n + 1);
  for (int d = 1; d <= n; ++d) {
    std::map<IndexSet, int> row_of;
    for (int i = 0; i < static_cast<int>(basis[d - 1].size()); ++i)
      row_of[basis[d - 1][i]] = i;
    Mat b = Mat::Zero(basis[d - 1].size(), basis[d].size());
    for (int ci = 0; ci < static_cast<int>(basis[d].size()); ++ci)
      for (int v : basis[d][ci]) {
        auto it = row_of.find(remove_vertex(basis[d][ci], v));
        if (it != row_of.end())
          b(it->second, ci) += incidence_sign(it->first, basis[d][ci]);
      }
    boundary[d] = std::move(b);
  }
  std::vector<int> betti(n + 1);
  for (int d = 0; d <= n; ++d) {
    const int dim_d = static_cast<int>(basis[d].size());
    const int rank_in = d < n ? rank_of(boundary[d + 1]) : 0;
    const int rank_out = d > 0 ? rank_of(boundary[d]) : 0;
    betti[d] = dim_d - rank_out - rank_in;
  }
  return betti;
}

}  // namespace

AssumptionReport check_assumptions(const SimplicialComplex& mesh)
{
  AssumptionReport report;
  const int n = mesh.dim();

  // (a) connectivity of the link manifold x^* of every vertex: the opposite
  // faces, glued along shared (n-2)-subsimplices.
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    const auto faces = dual_manifold(mesh, IndexSet{v});
    const int count = static_cast<int>(faces.size());
    std::vector<int> comp(count);
    for (int i = 0; i < count; ++i)
      comp[i] = i;
    std::function<int(int)> find = [&](int i) {
      while (comp[i] != i)
        i = comp[i] = comp[comp[i]];
      return i;
    };
    for (int i = 0; i < count; ++i)
      for (int j = i + 1; j < count; ++j) {
        const IndexSet shared = intersection(faces[i], faces[j]);
        if (static_cast<int>(shared.size()) == n - 1)
          comp[find(i)] = find(j);
      }
    std::set<int> roots;
    for (int i = 0; i < count; ++i)
      roots.insert(find(i));
    const bool connected = roots.size() <= 1;
    report.links.push_back({v, connected});
    report.links_ok = report.links_ok && connected;
  }

  // (b) exactness of the zero-trace complexes on every weight region.
  // Regions with identical cell sets are checked once.
  std::set<std::vector<int>> done;
  auto check_region = [&](const IndexSet& e, const IndexSet& f, const MacroRegion& region) {
    if (!done.insert(region.cells).second)
      return;
    AssumptionReport::ExactnessRecord rec;
    rec.e = e;
    rec.f = f;
    rec.whitney_betti = whitney_betti(mesh, region);
    rec.simplicial_betti = simplicial_relative_betti(mesh, region);
    rec.match = rec.whitney_betti == rec.simplicial_betti;
    // The weight solves live in the complex with zero trace on the whole
    // region boundary; a contractible region has exactly one relative class,
    // in the top dimension.
    rec.solvable = rec.whitney_betti[n] == 1;
    for (int d = 0; d < n; ++d)
      rec.solvable = rec.solvable && rec.whitney_betti[d] == 0;
    report.exactness_ok = report.exactness_ok && rec.match && rec.solvable;
    report.regions.push_back(std::move(rec));
  };

  // The solve for w_{e,f} lives on the macroelement of f minus e; every such
  // region is the macroelement of a nonempty simplex.
  for (int m = 0; m <= n; ++m)
    for (const auto& g : mesh.simplices(m))
      check_region(IndexSet{}, g, macroelement(mesh, g));
  return report;
}

SimplicialComplex refine_uniform(const SimplicialComplex& mesh)
{
  if (mesh.dim() != 2)
    throw std::invalid_argument("refine_uniform: only 2D meshes are supported");
  std::vector<Vec> vertices;
  for (int v = 0; v < mesh.num_vertices(); ++v)
    vertices.push_back(mesh.vertex(v));
  std::map<IndexSet, int> midpoint;
  for (const auto& edge : mesh.simplices(1)) {
    midpoint[edge] = static_cast<int>(vertices.size());
    vertices.push_back(0.5 * (mesh.vertex(edge[0]) + mesh.vertex(edge[1])));
  }
  std::vector<IndexSet> cells;
  auto add = [&](std::initializer_list<int> vs) {
    IndexSet c(vs);
    std::sort(c.begin(), c.end());
    cells.push_back(std::move(c));
  };
  for (int ci = 0; ci < mesh.num_cells(); ++ci) {
    const auto& c = mesh.cell(ci);
    const int a = c[0], b = c[1], d = c[2];
    const int mab = midpoint.at(IndexSet{a, b});
    const int mad = midpoint.at(IndexSet{a, d});
    const int mbd = midpoint.at(IndexSet{b, d});
    add({a, mab, mad});
    add({b, mab, mbd});
    add({d, mad, mbd});
    add({mab, mad, mbd});
  }
  std::sort(cells.begin(), cells.end());
  return SimplicialComplex(2, std::move(vertices), std::move(cells));
}

}  // namespace bubbletx
