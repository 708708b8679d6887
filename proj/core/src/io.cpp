// Copyright (c) 2026 The bubbletx authors
// SPDX-License-Identifier: Apache-2.0

#include "bubbletx/io.hpp"

#include <fstream>
#include <sstream>

namespace bubbletx {

std::string simplex_key(const IndexSet& f)
{
  std::ostringstream out;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (i)
      out << ",";
    out << f[i];
  }
  return out.str();
}

IndexSet parse_simplex_key(const std::string& key)
{
  IndexSet out;
  if (key.empty())
    return out;
  std::istringstream in(key);
  std::string tok;
  while (std::getline(in, tok, ','))
    out.push_back(std::stoi(tok));
  return out;
}

Json mesh_to_json(const SimplicialComplex& mesh)
{
  Json j;
  j["dim"] = mesh.dim();
  Json verts = Json::array();
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    Json row = Json::array();
    for (int c = 0; c < mesh.dim(); ++c)
      row.push_back(mesh.vertex(v)(c));
    verts.push_back(std::move(row));
  }
  j["vertices"] = std::move(verts);
  Json cells = Json::array();
  for (int c = 0; c < mesh.num_cells(); ++c)
    cells.push_back(mesh.cell(c));
  j["cells"] = std::move(cells);
  return j;
}

namespace {

std::pair<Exponents, AltMask> parse_term_key(const std::string& key, int n)
{
  const auto bar = key.find('|');
  const std::string mono = key.substr(0, bar);
  const std::string alt = bar == std::string::npos ? "" : key.substr(bar + 1);
  std::vector<int> exps;
  {
    std::istringstream in(mono);
    std::string tok;
    while (std::getline(in, tok, ','))
      exps.push_back(std::stoi(tok));
  }
  if (static_cast<int>(exps.size()) != n + 1)
    throw std::runtime_error("form: monomial key must list n+1 exponents");
  Exponents e(exps.begin(), exps.end());
  AltMask mask = 0;
  if (!alt.empty()) {
    std::istringstream in(alt);
    std::string tok;
    while (std::getline(in, tok, ',')) {
      const int pos = std::stoi(tok);
      if (pos < 0 || pos > n)
        throw std::runtime_error("form: alternator position out of range");
      mask |= AltMask{1} << pos;
    }
  }
  return {e, mask};
}

}  // namespace

PiecewiseForm form_from_json(const SimplicialComplex& mesh, const Json& j)
{
  const std::string cls = j.at("class").get<std::string>();
  if (cls == "named") {
    const std::string name = j.at("name").get<std::string>();
    if (name == "whitney")
      return whitney(mesh, j.at("simplex").get<IndexSet>());
    if (name == "rho") {
      IndexSet f = j.contains("simplex") ? j.at("simplex").get<IndexSet>() : IndexSet{};
      return rho(mesh, f);
    }
    throw std::runtime_error("form: unknown named form " + name);
  }
  if (cls == "random") {
    const std::string space = j.at("space").get<std::string>();
    FormClass fc;
    if (space == "Pr")
      fc = FormClass::Pr;
    else if (space == "Pr-")
      fc = FormClass::PrMinus;
    else if (space == "whitney-span")
      fc = FormClass::WhitneySpan;
    else
      throw std::runtime_error("form: unknown space " + space);
    return random_form(mesh, j.at("k").get<int>(), j.at("r").get<int>(), fc,
                       j.value("seed", 1u));
  }
  if (cls == "coefficients") {
    const int n = mesh.dim();
    const int k = j.at("k").get<int>();
    PiecewiseForm out(mesh, k, j.at("r").get<int>());
    for (const auto& [cell_key, table] : j.at("cells").items()) {
      const int cell = std::stoi(cell_key);
      if (cell < 0 || cell >= mesh.num_cells())
        throw std::runtime_error("form: cell id out of range");
      PolyForm full(n + 1, k);
      for (const auto& [term_key, value] : table.items()) {
        const auto [exp, mask] = parse_term_key(term_key, n);
        full.add_term(exp, mask, value.get<double>());
      }
      PolyForm canon = canonicalize_full(full);
      canon.order = k;
      out.cell_forms[cell] = std::move(canon);
    }
    return out;
  }
  throw std::runtime_error("form: unknown class " + cls);
}

PiecewiseForm load_form(const SimplicialComplex& mesh, const std::string& path)
{
  return form_from_json(mesh, read_json(path));
}

Json form_to_json(const PiecewiseForm& u)
{
  if (!u.is_polynomial())
    throw std::invalid_argument("form_to_json: callback forms have no coefficients");
  const int n = u.mesh->dim();
  Json j;
  j["class"] = "coefficients";
  j["k"] = u.order;
  j["r"] = u.degree;
  Json cells = Json::object();
  for (int c = 0; c < u.mesh->num_cells(); ++c) {
    const PolyForm& form = u.cell_forms[c];
    if (form.terms.empty())
      continue;
    Json table = Json::object();
    for (const auto& [key, coef] : form.terms) {
      // Canonical coefficients use the tail coordinates: positions shift by
      // one and the leading exponent is zero.
      std::ostringstream name;
      name << 0;
      for (int v = 0; v < n; ++v)
        name << "," << static_cast<int>(key.exp[v]);
      name << "|";
      bool first = true;
      for (int pos : mask_to_positions(key.alt)) {
        if (!first)
          name << ",";
        name << (pos + 1);
        first = false;
      }
      table[name.str()] = coef;
    }
    cells[std::to_string(c)] = std::move(table);
  }
  j["cells"] = std::move(cells);
  return j;
}

Json weights_to_json(const WeightFamily& weights)
{
  const auto& mesh = weights.mesh();
  Json j;
  j["mesh"] = {{"dim", mesh.dim()},
               {"vertices", mesh.num_vertices()},
               {"cells", mesh.num_cells()}};
  Json pairs = Json::object();
  for (int m = 0; m <= mesh.dim(); ++m)
    for (const auto& f : mesh.simplices(m))
      for (int esize = 1; esize <= m + 1; ++esize)
        for (const auto& e : subsets_of_size(f, esize)) {
          const WhitneyCochain& z = weights.z(e, f);
          Json table = Json::object();
          for (const auto& [id, c] : z.coef)
            table[simplex_key(mesh.simplices(z.order)[id])] = c;
          pairs[simplex_key(e) + "|" + simplex_key(f)] = std::move(table);
        }
  j["z"] = std::move(pairs);

  const WeightIdentityReport report = weights.verify_identities();
  j["residuals"] = {{"max_cochain_identity", report.max_dz},
                    {"max_alternating_sum", report.max_dplus},
                    {"max_support_leak", report.max_support},
                    {"max_supnorm_constant", report.max_zbound}};
  Json solves = Json::array();
  for (const auto& rec : weights.solve_records())
    solves.push_back({{"e", simplex_key(rec.e)},
                      {"f", simplex_key(rec.f)},
                      {"level", rec.level},
                      {"solve_residual", rec.solve_residual},
                      {"orthogonality_residual", rec.orth_residual}});
  j["solves"] = std::move(solves);
  return j;
}

Json decomposition_to_json(const BubbleDecomposition& decomp)
{
  Json j;
  j["k"] = decomp.k;
  Json stages = Json::array();
  for (const auto& stage : decomp.stages)
    stages.push_back(stage.is_polynomial() ? form_to_json(stage) : Json{{"class", "callback"}});
  j["stages"] = std::move(stages);
  j["reconstruction_residuals"] = decomp.reconstruction_residuals;
  Json bubbles = Json::object();
  for (const auto& [m, map] : decomp.bubbles) {
    Json stage = Json::object();
    for (const auto& [f, bubble] : map) {
      Json terms = Json::array();
      for (const auto& term : bubble->terms) {
        Json t;
        t["factor"] = term.factor;
        t["g"] = simplex_key(term.g);
        t["kind"] = term.ratio ? "rho_ratio" : "whitney_over_rho";
        if (!term.ratio)
          t["e"] = simplex_key(term.e);
        t["lambda_form"] = {{"base", simplex_key(term.w->base)},
                            {"order", term.w->order},
                            {"polynomial", term.w->polynomial}};
        terms.push_back(std::move(t));
      }
      stage[simplex_key(f)] = std::move(terms);
    }
    bubbles[std::to_string(m)] = std::move(stage);
  }
  j["bubbles"] = std::move(bubbles);
  return j;
}

Json assumption_report_to_json(const AssumptionReport& report)
{
  Json j;
  j["links_connected"] = report.links_ok;
  j["exactness"] = report.exactness_ok;
  Json links = Json::array();
  for (const auto& l : report.links)
    if (!l.connected)
      links.push_back(l.vertex);
  j["disconnected_links"] = std::move(links);
  Json regions = Json::array();
  for (const auto& r : report.regions) {
    if (r.match && r.solvable)
      continue;
    regions.push_back({{"e", simplex_key(r.e)},
                       {"f", simplex_key(r.f)},
                       {"whitney_betti", r.whitney_betti},
                       {"simplicial_betti", r.simplicial_betti},
                       {"match", r.match},
                       {"solvable", r.solvable}});
  }
  j["failed_regions"] = std::move(regions);
  return j;
}

void write_json(const Json& j, const std::string& path)
{
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("write_json: cannot open " + path);
  out << j.dump(2) << "\n";
}

Json read_json(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("read_json: cannot open " + path);
  Json j;
  in >> j;
  return j;
}

}  // namespace bubbletx
