// Copyright (c) 2026 The bubbletx authors
// SPDX-License-Identifier: Apache-2.0

#ifndef BUBBLETX_MESH_HPP
#define BUBBLETX_MESH_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bubbletx/combinatorics.hpp"
#include "bubbletx/geometry.hpp"

namespace bubbletx {

/// Conforming simplicial triangulation of a polyhedral domain in R^n.
///
/// Vertices are globally numbered and every simplex is stored as the
/// ascending list of its vertex ids; all orientations and internal
/// numberings derive from that order. The full subsimplex lattice and the
/// simplex -> containing-cells adjacency are built at construction, after
/// which the complex is immutable and safe for concurrent reads.
class SimplicialComplex {
public:
  SimplicialComplex(int dim, std::vector<Vec> vertices, std::vector<IndexSet> cells);

  int dim() const { return dim_; }
  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_cells() const { return static_cast<int>(cells_.size()); }
  const Vec& vertex(int i) const { return vertices_[i]; }
  const IndexSet& cell(int c) const { return cells_[c]; }
  const CellFrame& frame(int c) const { return frames_[c]; }

  /// Simplices of dimension m, ascending lexicographic order.
  const std::vector<IndexSet>& simplices(int m) const;
  int num_simplices(int m) const { return static_cast<int>(simplices(m).size()); }

  /// Index of `f` within simplices(dim f); throws if absent.
  int simplex_id(const IndexSet& f) const;
  bool has_simplex(const IndexSet& f) const;

  /// Ids of the n-cells containing `f`; for the empty simplex, all cells.
  const std::vector<int>& cells_containing(const IndexSet& f) const;

  /// True if every vertex of `f` belongs to cell `c`.
  bool cell_has(int c, const IndexSet& f) const;

  /// Local position of global vertex `v` in cell `c`, or -1.
  int local_position(int c, int v) const;

  double total_volume() const { return total_volume_; }
  double cell_diameter(int c) const { return frames_[c].diameter; }

  /// Cell containing `x` (barycentric coordinates >= -tol), if any.
  std::optional<int> locate(const Vec& x, double tol = 1e-12) const;

private:
  int dim_;
  std::vector<Vec> vertices_;
  std::vector<IndexSet> cells_;
  std::vector<CellFrame> frames_;
  std::vector<std::vector<IndexSet>> lattice_;          // by dimension
  std::vector<std::map<IndexSet, int>> lattice_index_;  // by dimension
  std::map<IndexSet, std::vector<int>> star_;           // simplex -> cells
  std::vector<int> all_cells_;
  double total_volume_ = 0.0;
};

/// Union of n-cells forming one of the macroelement domains.
struct MacroRegion {
  enum class Kind { Macroelement, Extended, Mixed };
  Kind kind = Kind::Macroelement;
  IndexSet anchor_f;        // f for Omega_f and Omega_f^E; f for Omega_{e,f}
  IndexSet anchor_e;        // e for Omega_{e,f}, empty otherwise
  std::vector<int> cells;   // sorted cell ids

  bool contains_cell(int c) const;
};

/// Report of the structural assumptions a mesh must satisfy.
struct AssumptionReport {
  struct LinkRecord {
    int vertex;
    bool connected;
  };
  struct ExactnessRecord {
    IndexSet e, f;               // region identifier (e may be empty)
    std::vector<int> whitney_betti;   // cohomology dims of the zero-trace complex
    std::vector<int> simplicial_betti; // relative simplicial homology dims (oracle)
    bool match;
    bool solvable;               // exact where the weight solves need it
  };
  std::vector<LinkRecord> links;
  std::vector<ExactnessRecord> regions;
  bool links_ok = true;
  bool exactness_ok = true;
};

SimplicialComplex load_mesh(const std::string& path);

/// Macroelement Omega_f: union of all n-cells containing f.
MacroRegion macroelement(const SimplicialComplex& mesh, const IndexSet& f);

/// Extended macroelement Omega_f^E: union of the vertex stars of f.
MacroRegion extended_macroelement(const SimplicialComplex& mesh, const IndexSet& f);

/// Mixed region Omega_{e,f} (recursive definition). `e` may be empty.
MacroRegion omega_ef(const SimplicialComplex& mesh, const IndexSet& e, const IndexSet& f);

/// Same region by the closed-form characterization
/// Omega_{e,f} = Omega_{f \cap e^*} intersect Omega_e^E.
MacroRegion omega_ef_closed_form(const SimplicialComplex& mesh, const IndexSet& e,
                                 const IndexSet& f);

/// The opposite faces f^*(T) over all cells T containing f. For the empty
/// simplex this is the list of all cells; throws for an n-cell.
std::vector<IndexSet> dual_manifold(const SimplicialComplex& mesh, const IndexSet& f);

/// Vertex ids appearing in the dual manifold f^*.
IndexSet dual_vertices(const SimplicialComplex& mesh, const IndexSet& f);

/// Shape-regularity constant: max over cells of diameter / insphere diameter.
double shape_constant(const SimplicialComplex& mesh);

/// Max over cells of the number of regions containing that cell.
int overlap_constant(const SimplicialComplex& mesh, const std::vector<MacroRegion>& regions);

/// Local quasi-uniformity ratio max h_T / min h_T over the cells of
/// Omega_{e,f}.
double quasi_uniformity_ratio(const SimplicialComplex& mesh, const IndexSet& e,
                              const IndexSet& f);

/// Verifies (a) connectivity of every vertex link manifold x_i^* and
/// (b) exactness of the zero-trace lowest-order complex on every weight
/// region, cross-checked against brute-force relative simplicial homology.
AssumptionReport check_assumptions(const SimplicialComplex& mesh);

/// Uniform refinement of a 2D mesh: each triangle split into four by the
/// edge midpoints.
SimplicialComplex refine_uniform(const SimplicialComplex& mesh);

/// d-simplices contained in some cell of the region.
std::vector<IndexSet> region_simplices(const SimplicialComplex& mesh,
                                       const MacroRegion& region, int d);

/// (n-1)-faces of the region boundary that are interior to the domain.
std::vector<IndexSet> region_interface_faces(const SimplicialComplex& mesh,
                                             const MacroRegion& region);

/// All (n-1)-faces of the region boundary.
std::vector<IndexSet> region_boundary_faces(const SimplicialComplex& mesh,
                                            const MacroRegion& region);

/// Basis simplices of the zero-trace lowest-order space on the region:
/// d-simplices of the region not contained in any constrained boundary face.
/// The weight complexes constrain the entire region boundary.
std::vector<IndexSet> zero_trace_simplices(const SimplicialComplex& mesh,
                                           const MacroRegion& region, int d,
                                           bool whole_boundary = true);

/// Coboundary matrix of the zero-trace complex on the region, mapping
/// coefficients on zero_trace_simplices(d) to zero_trace_simplices(d+1).
Mat zero_trace_coboundary(const SimplicialComplex& mesh, const MacroRegion& region,
                          int d);

/// Incidence sign of sigma inside tau, |tau| = |sigma| + 1:
/// (-1)^(position of the extra vertex of tau).
int incidence_sign(const IndexSet& sigma, const IndexSet& tau);

}  // namespace bubbletx

#endif
