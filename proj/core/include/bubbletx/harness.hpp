// Copyright (c) 2026 The bubbletx authors
// SPDX-License-Identifier: Apache-2.0

#ifndef BUBBLETX_HARNESS_HPP
#define BUBBLETX_HARNESS_HPP

#include "bubbletx/io.hpp"

namespace bubbletx {

struct SuiteRecord {
  std::string name;      // instance (mesh, orders, pair)
  std::string property;  // identity being checked
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct SuiteReport {
  std::string suite;
  std::string mesh_name;
  unsigned seed = 0;
  double timing_ms = 0.0;
  std::vector<SuiteRecord> records;
  bool aborted = false;
  std::string abort_reason;

  bool pass() const;
  Json to_json() const;
};

struct SuiteConfig {
  unsigned seed = 1;
  std::vector<int> orders;   // k values; empty = all 0..n
  std::vector<int> degrees;  // r values; empty = {1, 2}
  int samples = 1;           // random draws per (k, r)
  double identity_tol = 1e-8;
  double solve_tol = 1e-10;
  double algebra_tol = 1e-12;
};

/// Known suite names: mesh, weights, r-ops, commuting, trace, support,
/// decomposition, preservation, scalar-k0.
SuiteReport run_suite(const std::string& suite, const SimplicialComplex& mesh,
                      const SuiteConfig& config = {}, const std::string& mesh_name = "mesh");

const std::vector<std::string>& suite_names();

void emit_report(const SuiteReport& report, const std::string& path);

/// Minimal schema validation: required fields and primitive types, per the
/// in-repo schema document.
bool validate_report_json(const Json& report, const Json& schema, std::string* error = nullptr);

// -- reference corpus --------------------------------------------------------

SimplicialComplex make_interval_mesh(int cells);
SimplicialComplex make_graded_interval_mesh(int cells, double ratio);
SimplicialComplex make_fan_mesh(int triangles);
SimplicialComplex make_square_mesh();
SimplicialComplex make_lshape_mesh();
SimplicialComplex make_cube_mesh();

struct CorpusEntry {
  std::string name;
  SimplicialComplex mesh;
};

/// The default verification corpus: interval meshes, 2D fans, an L-shaped
/// mesh, a refined square, and the six-tetrahedra cube.
std::vector<CorpusEntry> reference_corpus();

// -- refinement studies -------------------------------------------------------

struct RefinementStudy {
  struct StageEstimate {
    double l2_ratio = 0.0;        // sup |B_m u| / |u|
    double square_sum_ratio = 0.0;  // sup sqrt(sum_f |B_{m,f} u|^2) / |u|
    double graph_ratio = 0.0;     // sup over samples in the graph norm
  };
  struct Level {
    int cells = 0;
    double shape_constant = 0.0;
    int extended_overlap = 0;
    double weight_constant = 0.0;  // max empirical sup-norm constant of z
    std::vector<StageEstimate> stages;  // index m
  };
  int k = 0, r = 0, samples = 0;
  std::vector<Level> levels;

  /// max over levels / min over levels of the stage-m L2 estimate.
  double uniformity(int m) const;
  /// Same indicator for the square-sum bubble norm estimate.
  double uniformity_square_sum(int m) const;
  Json to_json() const;
};

/// Exact re-expression of a piecewise polynomial form on a refinement of its
/// mesh (every coarse polynomial restricts to a child-cell polynomial).
PiecewiseForm transfer_to_refinement(const PiecewiseForm& u, const SimplicialComplex& fine);

/// Norm estimates across `levels` uniform refinements of a 2D mesh. The
/// sample forms are drawn once on the coarsest mesh and transferred to every
/// level, so each level's estimate probes the operators at the same inputs.
RefinementStudy estimate_bounds(const SimplicialComplex& mesh, int levels, int k, int r,
                                int samples, unsigned seed = 1);

}  // namespace bubbletx

#endif
