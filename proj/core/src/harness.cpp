// Copyright (c) 2026 The bubbletx authors
// SPDX-License-Identifier: Apache-2.0

#include "bubbletx/harness.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <set>

namespace bubbletx {

namespace {

void add_record(SuiteReport& rep, std::string name, std::string property, double residual,
                double tol)
{
  SuiteRecord rec;
  rec.name = std::move(name);
  rec.property = std::move(property);
  rec.residual = residual;
  rec.tolerance = tol;
  rec.pass = residual <= tol;
  rep.records.push_back(std::move(rec));
}

std::string tag(const std::string& base, int k, int r, unsigned seed)
{
  return base + " k=" + std::to_string(k) + " r=" + std::to_string(r) +
         " seed=" + std::to_string(seed);
}

std::vector<int> order_list(const SimplicialComplex& mesh, const SuiteConfig& config,
                            int max_shift = 0)
{
  if (!config.orders.empty())
    return config.orders;
  std::vector<int> ks;
  for (int k = 0; k <= mesh.dim() - max_shift; ++k)
    ks.push_back(k);
  return ks;
}

std::vector<int> degree_list(const SuiteConfig& config)
{
  if (!config.degrees.empty())
    return config.degrees;
  return {1, 2};
}

/// Max mismatch of the traces of a and b on f, at the degree-r lattice nodes
/// of f, over all ascending tangent tuples.
double trace_residual(const SimplicialComplex& mesh, const PiecewiseForm& a,
                      const PiecewiseForm& b, const IndexSet& f, int r)
{
  const int m = static_cast<int>(f.size()) - 1;
  const int k = a.order;
  if (m < k)
    return 0.0;
  const int cell = mesh.cells_containing(f).front();
  std::vector<Vec> tangents;
  for (int i = 1; i <= m; ++i)
    tangents.push_back(mesh.vertex(f[i]) - mesh.vertex(f[0]));
  const auto& masks = AltTensor::masks(m, k);
  const Mat nodes = principal_lattice(m, std::max(r, 1));
  double residual = 0.0, scale = 1.0;
  for (int i = 0; i < nodes.rows(); ++i) {
    Vec x = Vec::Zero(mesh.dim());
    for (int c = 0; c <= m; ++c)
      x += nodes(i, c) * mesh.vertex(f[c]);
    const AltTensor ta = a.value(cell, x);
    const AltTensor tb = b.value(cell, x);
    for (AltMask mask : masks) {
      std::vector<Vec> args;
      for (int p : mask_to_positions(mask))
        args.push_back(tangents[p]);
      const double va = ta.apply(args);
      const double vb = tb.apply(args);
      residual = std::max(residual, std::abs(va - vb));
      scale = std::max(scale, std::abs(vb));
    }
  }
  return residual / scale;
}

double point_residual(const PiecewiseForm& a, const PiecewiseForm& b,
                      const std::vector<std::pair<int, Vec>>& points)
{
  double residual = 0.0, scale = 1.0;
  for (const auto& [cell, x] : points) {
    AltTensor ta = a.value(cell, x);
    const AltTensor tb = b.value(cell, x);
    scale = std::max(scale, std::max(ta.norm(), tb.norm()));
    ta -= tb;
    residual = std::max(residual, ta.norm());
  }
  return residual / scale;
}

// -- individual suites -------------------------------------------------------

void suite_mesh(const SimplicialComplex& mesh, const SuiteConfig& config, SuiteReport& rep)
{
  const int n = mesh.dim();

  // Recursive and closed-form characterizations of Omega_{e,f} agree.
  int region_mismatches = 0;
  int nesting_violations = 0;
  for (int m = 0; m <= n; ++m)
    for (const auto& f : mesh.simplices(m)) {
      for (const auto& e : all_subsets(f)) {
        if (omega_ef(mesh, e, f).cells != omega_ef_closed_form(mesh, e, f).cells)
          ++region_mismatches;
      }
      // Nesting chain for e subset g subset f.
      const auto subs = all_subsets(f);
      for (const auto& g : subs)
        for (const auto& e : all_subsets(g)) {
          const auto of = macroelement(mesh, f).cells;
          const auto oef = omega_ef(mesh, e, f).cells;
          const auto oge = extended_macroelement(mesh, g).cells;
          const auto ofe = extended_macroelement(mesh, f).cells;
          if (!std::includes(oef.begin(), oef.end(), of.begin(), of.end()) ||
              !std::includes(oge.begin(), oge.end(), oef.begin(), oef.end()) ||
              !std::includes(ofe.begin(), ofe.end(), oge.begin(), oge.end()))
            ++nesting_violations;
        }
    }
  add_record(rep, "region characterizations", "mixed-region-equivalence",
             region_mismatches, 0.0);
  add_record(rep, "region nesting chain", "region-nesting", nesting_violations, 0.0);

  // Overlap counts of the two canonical families.
  std::vector<MacroRegion> vertex_stars, cell_regions;
  for (const auto& v : mesh.simplices(0))
    vertex_stars.push_back(macroelement(mesh, v));
  for (const auto& c : mesh.simplices(n))
    cell_regions.push_back(macroelement(mesh, c));
  add_record(rep, "vertex star overlap", "overlap-count",
             std::abs(overlap_constant(mesh, vertex_stars) - (n + 1)), 0.0);
  add_record(rep, "cell overlap", "overlap-count",
             std::abs(overlap_constant(mesh, cell_regions) - 1), 0.0);

  // Shape constant invariance under rigid motion and scaling.
  {
    Mat seedm = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        seedm(i, j) = std::sin(1.0 + 3.0 * i + 7.0 * j) + (i == j ? 2.0 : 0.0);
    const Mat q = Eigen::HouseholderQR<Mat>(seedm).householderQ();
    const double scale = 2.375;
    const Vec shift = Vec::Constant(n, 0.8125);
    std::vector<Vec> verts;
    for (int v = 0; v < mesh.num_vertices(); ++v)
      verts.push_back(scale * (q * mesh.vertex(v)) + shift);
    std::vector<IndexSet> cells;
    for (int c = 0; c < mesh.num_cells(); ++c)
      cells.push_back(mesh.cell(c));
    SimplicialComplex moved(n, std::move(verts), std::move(cells));
    const double c0 = shape_constant(mesh);
    const double c1 = shape_constant(moved);
    add_record(rep, "shape constant invariance", "similarity-invariance",
               std::abs(c0 - c1) / c0, config.algebra_tol);
  }

  // Structural assumptions.
  const AssumptionReport assumptions = check_assumptions(mesh);
  add_record(rep, "zero-trace complex exactness", "local-exactness",
             assumptions.exactness_ok ? 0.0 : 1.0, 0.0);
  int disconnected = 0;
  for (const auto& l : assumptions.links)
    if (!l.connected)
      ++disconnected;
  // The link of an interior vertex of a 1D mesh is a point pair; the
  // connectivity requirement only backs the n >= 2 stability estimates.
  add_record(rep, "vertex link connectivity", "link-connectivity",
             n == 1 ? 0.0 : disconnected, 0.0);
}

void suite_weights(const SimplicialComplex& mesh, const SuiteConfig& config, SuiteReport& rep)
{
  const WeightFamily weights = WeightFamily::build(mesh);
  double solve_res = 0.0, leak = 0.0, orth = 0.0;
  for (const auto& rec : weights.solve_records()) {
    solve_res = std::max(solve_res, rec.solve_residual);
    leak = std::max(leak, rec.rhs_support_leak);
    orth = std::max(orth, rec.orth_residual);
  }
  add_record(rep, "exactness solves", "coboundary-solve-residual", solve_res,
             config.solve_tol);
  add_record(rep, "right-hand side locality", "rhs-support", leak, config.solve_tol);
  add_record(rep, "orthogonality constraints", "gauge-orthogonality", orth,
             config.solve_tol);

  const WeightIdentityReport report = weights.verify_identities();
  add_record(rep, "weight cochain identity", "coboundary-vs-alternating-sum",
             report.max_dz, 1e-10);
  add_record(rep, "weight alternating sum", "alternating-sum-vanishes",
             report.max_dplus, config.algebra_tol);
  add_record(rep, "weight support", "weight-locality", report.max_support, 1e-10);

  // Determinism: a rebuild reproduces the family bit for bit.
  const WeightFamily again = WeightFamily::build(mesh);
  double rebuild = 0.0;
  for (int m = 0; m <= mesh.dim(); ++m)
    for (const auto& f : mesh.simplices(m))
      for (const auto& e : all_subsets(f))
        rebuild = std::max(rebuild, coef_distance(weights.z(e, f), again.z(e, f)));
  add_record(rep, "rebuild determinism", "bitwise-reproducibility", rebuild, 0.0);
}

void suite_r_ops(const SimplicialComplex& mesh, const SuiteConfig& config, SuiteReport& rep)
{
  const WeightFamily weights = WeightFamily::build(mesh);
  for (int k : order_list(mesh, config))
    for (int r : degree_list(config))
      for (int s = 0; s < config.samples; ++s) {
        const unsigned seed = config.seed + 101u * s;
        const PiecewiseForm u = random_form(mesh, k, r, FormClass::Pr, seed);
        double dres = 0.0, pres = 0.0;
        for (int m = 0; m <= mesh.dim(); ++m)
          for (const auto& f : mesh.simplices(m))
            for (int esize = 1; esize <= std::min<int>(k + 2, m + 1); ++esize)
              for (const auto& e : subsets_of_size(f, esize)) {
                const RIdentityResiduals res = r_identity_check(mesh, e, f, k, u, weights);
                dres = std::max(dres, res.d_residual);
                pres = std::max(pres, res.dplus_residual);
              }
        add_record(rep, tag("reduction derivative identity", k, r, seed),
                   "order-reduction-d-identity", dres, 1e-9);
        add_record(rep, tag("reduction alternating identity", k, r, seed),
                   "order-reduction-alternating-sum", pres, 1e-9);
      }
}

void suite_commuting(const SimplicialComplex& mesh, const SuiteConfig& config,
                     SuiteReport& rep)
{
  const WeightFamily weights = WeightFamily::build(mesh);
  const auto points = interior_points(mesh, 20, config.seed + 17);
  for (int k : order_list(mesh, config, 1))
    for (int r : degree_list(config)) {
      const unsigned seed = config.seed + 13u * k + r;
      const PiecewiseForm u = random_form(mesh, k, r, FormClass::Pr, seed);
      const PiecewiseForm du = exterior_derivative(u);
      double cutoff_res = 0.0, bubble_res = 0.0;
      for (int m = 0; m <= mesh.dim(); ++m) {
        const PiecewiseForm cu = cutoff_global(mesh, m, k, u, weights).form;
        const PiecewiseForm cdu = cutoff_global(mesh, m, k + 1, du, weights).form;
        cutoff_res = std::max(cutoff_res,
                              point_residual(exterior_derivative(cu), cdu, points));
      }
      const BubbleDecomposition bu = bubble_transform(mesh, k, u, weights);
      const BubbleDecomposition bdu = bubble_transform(mesh, k + 1, du, weights);
      for (int m = 0; m <= mesh.dim(); ++m)
        bubble_res = std::max(
            bubble_res,
            point_residual(exterior_derivative(bu.stages[m]), bdu.stages[m], points));
      add_record(rep, tag("cut-off commutation", k, r, seed), "cutoff-commutes-with-d",
                 cutoff_res, config.identity_tol);
      add_record(rep, tag("bubble commutation", k, r, seed), "bubble-commutes-with-d",
                 bubble_res, config.identity_tol);
    }
}

void suite_trace(const SimplicialComplex& mesh, const SuiteConfig& config, SuiteReport& rep)
{
  const WeightFamily weights = WeightFamily::build(mesh);
  for (int k : order_list(mesh, config))
    for (int r : degree_list(config)) {
      const unsigned seed = config.seed + 29u * k + r;
      const PiecewiseForm u = random_form(mesh, k, r, FormClass::Pr, seed);
      const BubbleDecomposition decomp = bubble_transform(mesh, k, u, weights);
      double residual = 0.0;
      PiecewiseForm partial = decomp.stages[0];
      for (int m = 0; m <= mesh.dim(); ++m) {
        if (m > 0)
          partial += decomp.stages[m];
        if (m < k)
          continue;
        for (const auto& f : mesh.simplices(m))
          residual = std::max(residual, trace_residual(mesh, partial, u, f, r));
      }
      add_record(rep, tag("partial sums preserve traces", k, r, seed),
                 "trace-preservation", residual, config.identity_tol);
    }
}

double bubble_support_leak(const SimplicialComplex& mesh, const BubbleMap& bubbles,
                           unsigned seed)
{
  double leak = 0.0;
  const auto points = interior_points(mesh, 4, seed);
  for (const auto& [f, bubble] : bubbles) {
    const MacroRegion region = macroelement(mesh, f);
    if (static_cast<int>(region.cells.size()) == mesh.num_cells())
      continue;
    int used = 0;
    for (const auto& [cell, x] : points) {
      if (region.contains_cell(cell))
        continue;
      leak = std::max(leak, bubble->value(cell, x).norm());
      if (++used >= 50)
        break;
    }
  }
  return leak;
}

void suite_support(const SimplicialComplex& mesh, const SuiteConfig& config,
                   SuiteReport& rep)
{
  const WeightFamily weights = WeightFamily::build(mesh);
  for (int k : order_list(mesh, config))
    for (int r : degree_list(config)) {
      const unsigned seed = config.seed + 41u * k + r;
      const PiecewiseForm u = random_form(mesh, k, r, FormClass::Pr, seed);
      double leak = 0.0;
      // Cut-off bubbles applied to u itself...
      for (int m = 0; m <= mesh.dim(); ++m)
        leak = std::max(leak,
                        bubble_support_leak(mesh, stage_bubbles(mesh, m, k, u, weights),
                                            seed + m));
      // ...and the recursion's bubbles.
      const BubbleDecomposition decomp = bubble_transform(mesh, k, u, weights);
      for (const auto& [m, bubbles] : decomp.bubbles)
        leak = std::max(leak, bubble_support_leak(mesh, bubbles, seed + 100 + m));
      add_record(rep, tag("bubble locality", k, r, seed), "bubble-support", leak, 1e-10);
    }
}

void suite_decomposition(const SimplicialComplex& mesh, const SuiteConfig& config,
                         SuiteReport& rep)
{
  const WeightFamily weights = WeightFamily::build(mesh);
  const int per_cell = std::max(1, 100 / std::max(1, mesh.num_cells()));
  const auto points = interior_points(mesh, per_cell, config.seed + 3);
  for (int k : order_list(mesh, config))
    for (int r : degree_list(config))
      for (int s = 0; s < config.samples; ++s) {
        const unsigned seed = config.seed + 59u * k + 7u * r + s;
        const PiecewiseForm u = random_form(mesh, k, r, FormClass::Pr, seed);
        const BubbleDecomposition decomp = bubble_transform(mesh, k, u, weights);
        add_record(rep, tag("stage sums reproduce the input", k, r, seed),
                   "decomposition-identity",
                   point_residual(decomp.stage_sum(), u, points), config.identity_tol);
      }
}

void suite_preservation(const SimplicialComplex& mesh, const SuiteConfig& config,
                        SuiteReport& rep)
{
  const WeightFamily weights = WeightFamily::build(mesh);
  for (int k : order_list(mesh, config))
    for (int r : degree_list(config)) {
      const unsigned seed = config.seed + 71u * k + r;
      {
        const PiecewiseForm u = random_form(mesh, k, r, FormClass::Pr, seed);
        const BubbleDecomposition decomp = bubble_transform(mesh, k, u, weights, 1e-9);
        double rec_res = 0.0, member_res = 0.0;
        for (double res : decomp.reconstruction_residuals)
          rec_res = std::max(rec_res, res);
        for (const auto& stage : decomp.stages)
          member_res = std::max(member_res, membership_Pr(stage, r).residual);
        add_record(rep, tag("full space reconstruction", k, r, seed),
                   "polynomial-reconstruction", rec_res, 1e-9);
        add_record(rep, tag("full space membership", k, r, seed),
                   "full-space-invariance", member_res, 1e-9);
      }
      {
        const PiecewiseForm u = random_form(mesh, k, r, FormClass::PrMinus, seed + 1);
        const BubbleDecomposition decomp = bubble_transform(mesh, k, u, weights, 1e-9);
        double member_res = 0.0;
        for (const auto& stage : decomp.stages)
          member_res = std::max(member_res, membership_Pr_minus(stage, r).residual);
        add_record(rep, tag("trimmed space membership", k, r, seed),
                   "trimmed-space-invariance", member_res, 1e-9);
      }
    }
}

void suite_scalar_k0(const SimplicialComplex& mesh, const SuiteConfig& config,
                     SuiteReport& rep)
{
  const WeightFamily weights = WeightFamily::build(mesh);
  const auto points = interior_points(mesh, 6, config.seed + 5);
  for (int r : degree_list(config)) {
    const unsigned seed = config.seed + r;
    const PiecewiseForm u = random_form(mesh, 0, r, FormClass::Pr, seed);
    double residual = 0.0;

    for (const auto& f : mesh.simplices(0)) {
      const LocalBubble bubble = cutoff_local(mesh, 0, f, 0, u, weights);
      const ReducedForm a = average(mesh, f, 0, u);
      for (const auto& [cell, x] : points) {
        const double general = bubble.value(cell, x).comp[0];
        const int pos = mesh.local_position(cell, f[0]);
        const double lv = pos >= 0 ? mesh.frame(cell).barycentric(x)(pos) : 0.0;
        Vec l1(1), l0(1);
        l1 << lv;
        l0 << 0.0;
        const double closed =
            a.tensor_at(l1).comp[0] - (1.0 - lv) * a.tensor_at(l0).comp[0];
        residual = std::max(residual, std::abs(general - closed));
      }
    }

    for (const auto& f : mesh.simplices(1)) {
      const LocalBubble bubble = cutoff_local(mesh, 1, f, 0, u, weights);
      const ReducedForm a = average(mesh, f, 0, u);
      for (const auto& [cell, x] : points) {
        const double general = bubble.value(cell, x).comp[0];
        auto lambda_of = [&](int vid) {
          const int pos = mesh.local_position(cell, vid);
          return pos >= 0 ? mesh.frame(cell).barycentric(x)(pos) : 0.0;
        };
        const double la = lambda_of(f[0]);
        const double lb = lambda_of(f[1]);
        Vec lab(2), la0(2), l0b(2), l00(2);
        lab << la, lb;
        la0 << la, 0.0;
        l0b << 0.0, lb;
        l00 << 0.0, 0.0;
        const double closed = a.tensor_at(lab).comp[0] -
                              (1.0 - la - lb) / (1.0 - la) * a.tensor_at(la0).comp[0] -
                              (1.0 - la - lb) / (1.0 - lb) * a.tensor_at(l0b).comp[0] +
                              (1.0 - la - lb) * a.tensor_at(l00).comp[0];
        residual = std::max(residual, std::abs(general - closed));
      }
    }
    add_record(rep, tag("scalar cut-off closed forms", 0, r, seed),
               "scalar-specialization", residual, config.algebra_tol);
  }
}

}  // namespace

bool SuiteReport::pass() const
{
  if (aborted)
    return false;
  for (const auto& r : records)
    if (!r.pass)
      return false;
  return true;
}

Json SuiteReport::to_json() const
{
  Json j;
  j["suite"] = suite;
  j["mesh"] = mesh_name;
  j["seed"] = seed;
  j["pass"] = pass();
  j["aborted"] = aborted;
  if (aborted)
    j["abort_reason"] = abort_reason;
  j["timing_ms"] = timing_ms;
  Json records = Json::array();
  for (const auto& r : this->records)
    records.push_back({{"name", r.name},
                       {"property", r.property},
                       {"residual", r.residual},
                       {"tolerance", r.tolerance},
                       {"pass", r.pass}});
  j["records"] = std::move(records);
  return j;
}

const std::vector<std::string>& suite_names()
{
  static const std::vector<std::string> names = {
      "mesh",    "weights", "r-ops",        "commuting",    "trace",
      "support", "decomposition", "preservation", "scalar-k0"};
  return names;
}

SuiteReport run_suite(const std::string& suite, const SimplicialComplex& mesh,
                      const SuiteConfig& config, const std::string& mesh_name)
{
  SuiteReport rep;
  rep.suite = suite;
  rep.mesh_name = mesh_name;
  rep.seed = config.seed;
  const auto start = std::chrono::steady_clock::now();

  // Every suite other than the mesh checks themselves requires the local
  // exactness assumption; a violation aborts the run.
  if (suite != "mesh") {
    const AssumptionReport assumptions = check_assumptions(mesh);
    if (!assumptions.exactness_ok) {
      rep.aborted = true;
      rep.abort_reason = "zero-trace complexes on the weight regions are not exact";
      return rep;
    }
  }

  if (suite == "mesh")
    suite_mesh(mesh, config, rep);
  else if (suite == "weights")
    suite_weights(mesh, config, rep);
  else if (suite == "r-ops")
    suite_r_ops(mesh, config, rep);
  else if (suite == "commuting")
    suite_commuting(mesh, config, rep);
  else if (suite == "trace")
    suite_trace(mesh, config, rep);
  else if (suite == "support")
    suite_support(mesh, config, rep);
  else if (suite == "decomposition")
    suite_decomposition(mesh, config, rep);
  else if (suite == "preservation")
    suite_preservation(mesh, config, rep);
  else if (suite == "scalar-k0")
    suite_scalar_k0(mesh, config, rep);
  else
    throw std::invalid_argument("run_suite: unknown suite " + suite);

  rep.timing_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - start)
                      .count();
  return rep;
}

void emit_report(const SuiteReport& report, const std::string& path)
{
  write_json(report.to_json(), path);
}

bool validate_report_json(const Json& report, const Json& schema, std::string* error)
{
  std::function<bool(const Json&, const Json&, std::string)> check =
      [&](const Json& value, const Json& node, std::string where) -> bool {
    const std::string type = node.value("type", "");
    auto fail = [&](const std::string& msg) {
      if (error)
        *error = where + ": " + msg;
      return false;
    };
    if (type == "object") {
      if (!value.is_object())
        return fail("expected object");
      if (node.contains("required"))
        for (const auto& req : node.at("required"))
          if (!value.contains(req.get<std::string>()))
            return fail("missing required field " + req.get<std::string>());
      if (node.contains("properties"))
        for (const auto& [name, sub] : node.at("properties").items())
          if (value.contains(name) && !check(value.at(name), sub, where + "/" + name))
            return false;
      return true;
    }
    if (type == "array") {
      if (!value.is_array())
        return fail("expected array");
      if (node.contains("items"))
        for (std::size_t i = 0; i < value.size(); ++i)
          if (!check(value[i], node.at("items"), where + "[" + std::to_string(i) + "]"))
            return false;
      return true;
    }
    if (type == "string")
      return value.is_string() ? true : fail("expected string");
    if (type == "number")
      return value.is_number() ? true : fail("expected number");
    if (type == "integer")
      return value.is_number_integer() ? true : fail("expected integer");
    if (type == "boolean")
      return value.is_boolean() ? true : fail("expected boolean");
    return true;
  };
  return check(report, schema, "");
}

// -- reference corpus --------------------------------------------------------

SimplicialComplex make_interval_mesh(int cells)
{
  std::vector<Vec> vertices;
  for (int i = 0; i <= cells; ++i) {
    Vec v(1);
    v << static_cast<double>(i) / cells;
    vertices.push_back(v);
  }
  std::vector<IndexSet> mesh_cells;
  for (int i = 0; i < cells; ++i)
    mesh_cells.push_back({i, i + 1});
  return SimplicialComplex(1, std::move(vertices), std::move(mesh_cells));
}

SimplicialComplex make_graded_interval_mesh(int cells, double ratio)
{
  std::vector<Vec> vertices;
  double x = 0.0, h = 1.0;
  Vec v(1);
  v << 0.0;
  vertices.push_back(v);
  for (int i = 0; i < cells; ++i) {
    x += h;
    h *= ratio;
    Vec w(1);
    w << x;
    vertices.push_back(w);
  }
  for (auto& vert : vertices)
    vert /= x;
  std::vector<IndexSet> mesh_cells;
  for (int i = 0; i < cells; ++i)
    mesh_cells.push_back({i, i + 1});
  return SimplicialComplex(1, std::move(vertices), std::move(mesh_cells));
}

SimplicialComplex make_fan_mesh(int triangles)
{
  std::vector<Vec> vertices;
  Vec center(2);
  center << 0.0, 0.0;
  vertices.push_back(center);
  for (int i = 0; i < triangles; ++i) {
    Vec v(2);
    const double angle = 2.0 * M_PI * i / triangles;
    v << std::cos(angle), std::sin(angle);
    vertices.push_back(v);
  }
  std::vector<IndexSet> cells;
  for (int i = 1; i <= triangles; ++i) {
    IndexSet c{0, i, i == triangles ? 1 : i + 1};
    std::sort(c.begin(), c.end());
    cells.push_back(c);
  }
  std::sort(cells.begin(), cells.end());
  return SimplicialComplex(2, std::move(vertices), std::move(cells));
}

SimplicialComplex make_square_mesh()
{
  std::vector<Vec> vertices;
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) {
      Vec v(2);
      v << 0.5 * i, 0.5 * j;
      vertices.push_back(v);
    }
  std::vector<IndexSet> cells;
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 2; ++i) {
      const int a = 3 * j + i;
      const int b = a + 1;
      const int c = a + 3;
      const int d = a + 4;
      cells.push_back({a, b, d});
      cells.push_back({a, c, d});
    }
  std::sort(cells.begin(), cells.end());
  return SimplicialComplex(2, std::move(vertices), std::move(cells));
}

SimplicialComplex make_lshape_mesh()
{
  // 3x3 vertex grid on [-1,1]^2 with the (+,+) quadrant removed.
  std::vector<Vec> vertices;
  std::map<std::pair<int, int>, int> id;
  auto add_vertex = [&](int i, int j) {
    auto key = std::make_pair(i, j);
    auto it = id.find(key);
    if (it != id.end())
      return it->second;
    Vec v(2);
    v << i - 1.0, j - 1.0;
    id[key] = static_cast<int>(vertices.size());
    vertices.push_back(v);
    return id[key];
  };
  std::vector<std::pair<int, int>> squares = {{0, 0}, {1, 0}, {0, 1}};
  std::vector<IndexSet> cells;
  for (auto [i, j] : squares) {
    const int a = add_vertex(i, j);
    const int b = add_vertex(i + 1, j);
    const int c = add_vertex(i, j + 1);
    const int d = add_vertex(i + 1, j + 1);
    IndexSet t1{a, b, d}, t2{a, c, d};
    std::sort(t1.begin(), t1.end());
    std::sort(t2.begin(), t2.end());
    cells.push_back(t1);
    cells.push_back(t2);
  }
  std::sort(cells.begin(), cells.end());
  return SimplicialComplex(2, std::move(vertices), std::move(cells));
}

SimplicialComplex make_cube_mesh()
{
  std::vector<Vec> vertices;
  for (int c = 0; c < 8; ++c) {
    Vec v(3);
    v << ((c & 1) ? 1.0 : 0.0), ((c & 2) ? 1.0 : 0.0), ((c & 4) ? 1.0 : 0.0);
    vertices.push_back(v);
  }
  std::vector<IndexSet> cells = {{0, 1, 3, 7}, {0, 1, 5, 7}, {0, 2, 3, 7},
                                 {0, 2, 6, 7}, {0, 4, 5, 7}, {0, 4, 6, 7}};
  return SimplicialComplex(3, std::move(vertices), std::move(cells));
}

std::vector<CorpusEntry> reference_corpus()
{
  std::vector<CorpusEntry> corpus;
  corpus.push_back({"interval2", make_interval_mesh(2)});
  corpus.push_back({"interval4", make_interval_mesh(4)});
  corpus.push_back({"interval8", make_interval_mesh(8)});
  corpus.push_back({"fan6", make_fan_mesh(6)});
  corpus.push_back({"square8", make_square_mesh()});
  corpus.push_back({"lshape6", make_lshape_mesh()});
  corpus.push_back({"square32", refine_uniform(make_square_mesh())});
  corpus.push_back({"cube6", make_cube_mesh()});
  return corpus;
}

// -- refinement studies --------------------------------------------------------

double RefinementStudy::uniformity(int m) const
{
  double lo = std::numeric_limits<double>::max(), hi = 0.0;
  for (const auto& level : levels) {
    hi = std::max(hi, level.stages[m].l2_ratio);
    lo = std::min(lo, level.stages[m].l2_ratio);
  }
  // A stage that vanishes identically (up to round-off) is stable.
  if (hi <= 1e-9)
    return 1.0;
  return lo > 0.0 ? hi / lo : 1.0;
}

double RefinementStudy::uniformity_square_sum(int m) const
{
  double lo = std::numeric_limits<double>::max(), hi = 0.0;
  for (const auto& level : levels) {
    hi = std::max(hi, level.stages[m].square_sum_ratio);
    lo = std::min(lo, level.stages[m].square_sum_ratio);
  }
  if (hi <= 1e-9)
    return 1.0;
  return lo > 0.0 ? hi / lo : 1.0;
}

Json RefinementStudy::to_json() const
{
  Json j;
  j["k"] = k;
  j["r"] = r;
  j["samples"] = samples;
  Json lv = Json::array();
  for (const auto& level : levels) {
    Json stages = Json::array();
    for (const auto& s : level.stages)
      stages.push_back({{"l2_ratio", s.l2_ratio},
                        {"square_sum_ratio", s.square_sum_ratio},
                        {"graph_ratio", s.graph_ratio}});
    lv.push_back({{"cells", level.cells},
                  {"shape_constant", level.shape_constant},
                  {"extended_overlap", level.extended_overlap},
                  {"weight_constant", level.weight_constant},
                  {"stages", std::move(stages)}});
  }
  j["levels"] = std::move(lv);
  Json uni = Json::array();
  for (std::size_t m = 0; m < levels.front().stages.size(); ++m)
    uni.push_back(uniformity(static_cast<int>(m)));
  j["uniformity"] = std::move(uni);
  return j;
}

PiecewiseForm transfer_to_refinement(const PiecewiseForm& u, const SimplicialComplex& fine)
{
  if (!u.is_polynomial())
    throw std::invalid_argument("transfer_to_refinement: needs per-cell coefficients");
  const auto& coarse = *u.mesh;
  const int n = coarse.dim();
  PiecewiseForm out(fine, u.order, u.degree);
  for (int fc = 0; fc < fine.num_cells(); ++fc) {
    const auto& frame = fine.frame(fc);
    Vec centroid = Vec::Zero(n);
    for (int i = 0; i <= n; ++i)
      centroid += frame.vertices.col(i);
    centroid /= n + 1;
    const auto parent = coarse.locate(centroid, 1e-9);
    if (!parent)
      throw std::invalid_argument("transfer_to_refinement: meshes are not nested");
    const auto& pframe = coarse.frame(*parent);
    // Images of the parent's tail barycentric functions and differentials in
    // the child's coordinates.
    std::vector<PolyForm> vars, dvars;
    const Mat child_grads = frame.gradients.bottomRows(n);
    for (int i = 1; i <= n; ++i) {
      Vec values(n + 1);
      for (int q = 0; q <= n; ++q) {
        Vec lp = pframe.barycentric(frame.vertices.col(q));
        values(q) = lp(i);
      }
      Vec linear(n);
      for (int q = 1; q <= n; ++q)
        linear(q - 1) = values(q) - values(0);
      vars.push_back(PolyForm::affine(n, values(0), linear));
      const Vec a = child_grads.transpose().fullPivLu().solve(
          Vec(pframe.gradients.row(i).transpose()));
      PolyForm dv(n, 1);
      for (int q = 0; q < n; ++q) {
        PolyForm t = PolyForm::dvariable(n, q);
        t *= a(q);
        dv += t;
      }
      dvars.push_back(dv);
    }
    out.cell_forms[fc] = u.cell_forms[*parent].substitute(n, vars, dvars);
    out.cell_forms[fc].order = u.order;
  }
  return out;
}

RefinementStudy estimate_bounds(const SimplicialComplex& mesh, int levels, int k, int r,
                                int samples, unsigned seed)
{
  if (mesh.dim() != 2 && levels > 1)
    throw std::invalid_argument("estimate_bounds: the refinement path needs a 2D mesh");
  RefinementStudy study;
  study.k = k;
  study.r = r;
  study.samples = samples;

  SimplicialComplex current = mesh;
  for (int level = 0; level < levels; ++level) {
    if (level > 0)
      current = refine_uniform(current);
    const WeightFamily weights = WeightFamily::build(current);
    RefinementStudy::Level lv;
    lv.cells = current.num_cells();
    lv.shape_constant = shape_constant(current);
    std::vector<MacroRegion> extended;
    for (int m = 0; m <= current.dim(); ++m)
      for (const auto& f : current.simplices(m))
        extended.push_back(extended_macroelement(current, f));
    lv.extended_overlap = overlap_constant(current, extended);
    lv.weight_constant = weights.verify_identities().max_zbound;
    lv.stages.assign(current.dim() + 1, {});

    for (int s = 0; s < samples; ++s) {
      // Dense draws (random weight on every k-simplex) probe the operator at
      // mesh scale, so the per-level suprema are comparable across levels;
      // sparse draws would make the lower bound fluctuate with the level.
      const PiecewiseForm u =
          random_form(current, k, r, FormClass::PrMinus, seed + 977u * s + 31u * level);
      const double unorm = l2_norm(u);
      const double dunorm = k < current.dim() ? l2_norm(exterior_derivative(u)) : 0.0;
      const double ugraph = std::sqrt(unorm * unorm + dunorm * dunorm);
      const BubbleDecomposition decomp = bubble_transform(current, k, u, weights);
      for (int m = 0; m <= current.dim(); ++m) {
        auto& est = lv.stages[m];
        const double bnorm = l2_norm(decomp.stages[m]);
        est.l2_ratio = std::max(est.l2_ratio, bnorm / unorm);
        double sq = 0.0;
        for (const auto& [f, bubble] : decomp.bubbles.at(m)) {
          const double bn = bubble->l2_norm(std::max(8, 2 * r + 2));
          sq += bn * bn;
        }
        est.square_sum_ratio = std::max(est.square_sum_ratio, std::sqrt(sq) / unorm);
        const double dbnorm =
            k < current.dim() ? l2_norm(exterior_derivative(decomp.stages[m])) : 0.0;
        est.graph_ratio = std::max(
            est.graph_ratio, std::sqrt(bnorm * bnorm + dbnorm * dbnorm) / ugraph);
      }
    }
    study.levels.push_back(std::move(lv));
  }
  return study;
}

}  // namespace bubbletx
