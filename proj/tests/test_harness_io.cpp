// Copyright (c) 2026 The bubbletx authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "bubbletx/harness.hpp"

using namespace bubbletx;

#ifndef BUBBLETX_SOURCE_DIR
#define BUBBLETX_SOURCE_DIR "."
#endif

TEST_CASE("suite reports validate against the published schema")
{
  const Json schema = read_json(std::string(BUBBLETX_SOURCE_DIR) + "/docs/report-schema.json");
  SuiteConfig config;
  config.degrees = {1};
  for (const auto& suite : suite_names()) {
    const SuiteReport report = run_suite(suite, make_interval_mesh(4), config, "interval4");
    std::string error;
    const bool valid = validate_report_json(report.to_json(), schema, &error);
    INFO(suite << ": " << error);
    CHECK(valid);
  }
  // An empty skeleton is still schema-valid.
  SuiteReport empty;
  empty.suite = "empty";
  empty.mesh_name = "none";
  std::string error;
  CHECK(validate_report_json(empty.to_json(), schema, &error));
  // A mutilated report is not.
  Json bad = empty.to_json();
  bad.erase("records");
  CHECK_FALSE(validate_report_json(bad, schema, &error));
}

TEST_CASE("reports are deterministic modulo timing")
{
  SuiteConfig config;
  config.degrees = {1, 2};
  auto strip = [](Json j) {
    j.erase("timing_ms");
    return j.dump();
  };
  const auto mesh = make_fan_mesh(6);
  const auto a = run_suite("decomposition", mesh, config, "fan6");
  const auto b = run_suite("decomposition", mesh, config, "fan6");
  CHECK(strip(a.to_json()) == strip(b.to_json()));
}

TEST_CASE("round trips: mesh and forms")
{
  const auto mesh = make_lshape_mesh();
  const Json mj = mesh_to_json(mesh);
  write_json(mj, "io_roundtrip_mesh.json");
  const auto back = load_mesh("io_roundtrip_mesh.json");
  std::remove("io_roundtrip_mesh.json");
  CHECK(back.num_vertices() == mesh.num_vertices());
  CHECK(back.num_cells() == mesh.num_cells());
  CHECK(mesh_to_json(back) == mj);

  const auto u = random_form(mesh, 1, 2, FormClass::Pr, 5);
  const Json fj = form_to_json(u);
  const auto uf = form_from_json(mesh, fj);
  const auto points = interior_points(mesh, 3, 7);
  for (const auto& [cell, x] : points) {
    AltTensor diff = uf.value(cell, x);
    diff -= u.value(cell, x);
    CHECK(diff.norm() <= 1e-13);
  }

  // Named and random descriptors.
  const Json named = {{"class", "named"}, {"name", "whitney"}, {"simplex", {0, 1}}};
  const auto phi = form_from_json(mesh, named);
  CHECK(phi.order == 1);
  const Json rnd = {{"class", "random"}, {"space", "Pr-"}, {"k", 1}, {"r", 2}, {"seed", 9}};
  const auto drawn = form_from_json(mesh, rnd);
  CHECK(membership_Pr_minus(drawn, 2).pass);
  CHECK_THROWS(form_from_json(mesh, Json{{"class", "unknown"}}));
}

TEST_CASE("weight and decomposition emission")
{
  const auto mesh = make_interval_mesh(4);
  const auto weights = WeightFamily::build(mesh);
  const Json wj = weights_to_json(weights);
  CHECK(wj.contains("z"));
  CHECK(wj.contains("residuals"));
  CHECK(wj.at("residuals").at("max_cochain_identity").get<double>() <= 1e-10);
  // Keys parse back to simplex pairs.
  for (const auto& [key, table] : wj.at("z").items()) {
    const auto bar = key.find('|');
    REQUIRE(bar != std::string::npos);
    const IndexSet e = parse_simplex_key(key.substr(0, bar));
    const IndexSet f = parse_simplex_key(key.substr(bar + 1));
    CHECK(is_subsimplex(e, f));
  }

  const auto u = random_form(mesh, 0, 2, FormClass::Pr, 11);
  const auto decomp = bubble_transform(mesh, 0, u, weights);
  const Json dj = decomposition_to_json(decomp);
  CHECK(dj.at("stages").size() == 2);
  CHECK(dj.at("bubbles").size() == 2);
  // Stage forms parse back and evaluate identically.
  const auto stage0 = form_from_json(mesh, dj.at("stages").at(0));
  for (const auto& [cell, x] : interior_points(mesh, 4, 13)) {
    AltTensor diff = stage0.value(cell, x);
    diff -= decomp.stages[0].value(cell, x);
    CHECK(diff.norm() <= 1e-13);
  }
}

TEST_CASE("reference corpus is valid and serialized copies match")
{
  for (const auto& entry : reference_corpus()) {
    CHECK(entry.mesh.num_cells() >= 2);
    const std::string path =
        std::string(BUBBLETX_SOURCE_DIR) + "/data/meshes/" + entry.name + ".json";
    const auto loaded = load_mesh(path);
    CHECK(mesh_to_json(loaded) == mesh_to_json(entry.mesh));
  }
}

TEST_CASE("bound estimates are monotone in the sample count")
{
  const auto mesh = make_square_mesh();
  const auto one = estimate_bounds(mesh, 1, 1, 1, 1, 5);
  const auto three = estimate_bounds(mesh, 1, 1, 1, 3, 5);
  for (int m = 0; m <= 2; ++m) {
    CHECK(three.levels[0].stages[m].l2_ratio >=
          one.levels[0].stages[m].l2_ratio - 1e-15);
    CHECK(three.levels[0].stages[m].square_sum_ratio >=
          one.levels[0].stages[m].square_sum_ratio - 1e-15);
  }
}

TEST_CASE("suites abort cleanly on invalid meshes")
{
  std::vector<Vec> v(5, Vec(2));
  v[0] << 0.0, 0.0;
  v[1] << 1.0, 0.0;
  v[2] << 0.0, 1.0;
  v[3] << -1.0, 0.0;
  v[4] << 0.0, -1.0;
  SimplicialComplex pinched(2, std::move(v), {{0, 1, 2}, {0, 3, 4}});
  const auto report = run_suite("decomposition", pinched, {}, "pinched");
  CHECK(report.aborted);
  CHECK_FALSE(report.pass());
  // The mesh suite itself still runs and reports the failure.
  const auto mesh_report = run_suite("mesh", pinched, {}, "pinched");
  CHECK_FALSE(mesh_report.pass());
}
