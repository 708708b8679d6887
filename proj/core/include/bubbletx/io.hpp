// Copyright (c) 2026 The bubbletx authors
// SPDX-License-Identifier: Apache-2.0

#ifndef BUBBLETX_IO_HPP
#define BUBBLETX_IO_HPP

#include <nlohmann/json.hpp>

#include "bubbletx/transform.hpp"

namespace bubbletx {

using Json = nlohmann::ordered_json;

Json mesh_to_json(const SimplicialComplex& mesh);

/// Parses a form description: {"class":"coefficients",...},
/// {"class":"named","name":"whitney","simplex":[...]} or
/// {"class":"random","space":"Pr"|"Pr-","k":..,"r":..,"seed":..}.
PiecewiseForm form_from_json(const SimplicialComplex& mesh, const Json& j);
PiecewiseForm load_form(const SimplicialComplex& mesh, const std::string& path);

/// Emits per-cell coefficients keyed "a0,...,an|i1,...,ik" (barycentric
/// multi-index and ascending alternator positions).
Json form_to_json(const PiecewiseForm& u);

Json weights_to_json(const WeightFamily& weights);

Json decomposition_to_json(const BubbleDecomposition& decomp);

Json assumption_report_to_json(const AssumptionReport& report);

void write_json(const Json& j, const std::string& path);
Json read_json(const std::string& path);

std::string simplex_key(const IndexSet& f);
IndexSet parse_simplex_key(const std::string& key);

}  // namespace bubbletx

#endif
