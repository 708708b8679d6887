// Copyright (c) 2026 The bubbletx authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "bubbletx/harness.hpp"
#include "bubbletx/mesh.hpp"

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

SimplicialComplex pinched_pair()
{
  std::vector<Vec> v(5, Vec(2));
  v[0] << 0.0, 0.0;
  v[1] << 1.0, 0.0;
  v[2] << 0.0, 1.0;
  v[3] << -1.0, 0.0;
  v[4] << 0.0, -1.0;
  return SimplicialComplex(2, std::move(v), {{0, 1, 2}, {0, 3, 4}});
}

std::string write_temp(const std::string& text)
{
  static int counter = 0;
  std::string path = "mesh_io_test_" + std::to_string(counter++) + ".json";
  std::ofstream out(path);
  out << text;
  return path;
}

}  // namespace

TEST_CASE("single triangle lattice counts")
{
  std::vector<Vec> v(3, Vec(2));
  v[0] << 0.0, 0.0;
  v[1] << 1.0, 0.0;
  v[2] << 0.0, 1.0;
  SimplicialComplex mesh(2, std::move(v), {{0, 1, 2}});
  CHECK(mesh.num_simplices(0) == 3);
  CHECK(mesh.num_simplices(1) == 3);
  CHECK(mesh.num_simplices(2) == 1);
}

TEST_CASE("two triangles share five edges")
{
  const auto mesh = two_triangles();
  CHECK(mesh.num_simplices(1) == 5);
  CHECK(mesh.cells_containing(IndexSet{1, 2}).size() == 2);
}

TEST_CASE("mesh loading validates its input")
{
  const std::string good = write_temp(
      R"({"dim":2,"vertices":[[0,0],[1,0],[0,1]],"cells":[[0,1,2]]})");
  CHECK(load_mesh(good).num_cells() == 1);
  std::remove(good.c_str());

  const std::string nonascending = write_temp(
      R"({"dim":2,"vertices":[[0,0],[1,0],[0,1]],"cells":[[2,0,1]]})");
  CHECK_THROWS_WITH(load_mesh(nonascending),
                    Catch::Matchers::ContainsSubstring("ascending"));
  std::remove(nonascending.c_str());

  const std::string degenerate = write_temp(
      R"({"dim":2,"vertices":[[0,0],[1,0],[2,0]],"cells":[[0,1,2]]})");
  CHECK_THROWS(load_mesh(degenerate));
  std::remove(degenerate.c_str());

  const std::string garbage = write_temp("{not json");
  CHECK_THROWS_WITH(load_mesh(garbage), Catch::Matchers::ContainsSubstring("parse"));
  std::remove(garbage.c_str());

  // Hanging node: vertex 4 sits on the interior of the edge between cells.
  const std::string hanging = write_temp(
      R"({"dim":2,"vertices":[[0,0],[1,0],[0,1],[1,1],[0.5,0.5]],
          "cells":[[0,1,4],[0,2,4],[1,3,4],[2,3,4],[1,2,4]]})");
  CHECK_THROWS(load_mesh(hanging));
  std::remove(hanging.c_str());
}

TEST_CASE("macroelements and their extensions")
{
  const auto fan = make_fan_mesh(6);
  // Interior vertex of the fan: all six triangles.
  CHECK(macroelement(fan, IndexSet{0}).cells.size() == 6);
  // An n-cell's macroelement is the cell alone.
  const auto cell = fan.cell(0);
  CHECK(macroelement(fan, cell).cells == std::vector<int>{0});
  // An interior edge belongs to exactly two cells.
  for (const auto& edge : fan.simplices(1))
    if (fan.cells_containing(edge).size() == 2)
      CHECK(macroelement(fan, edge).cells.size() == 2);

  // Vertex: the extension equals the star.
  CHECK(extended_macroelement(fan, IndexSet{0}).cells ==
        macroelement(fan, IndexSet{0}).cells);
  // Edge: union of the vertex stars.
  const IndexSet edge{0, 1};
  auto expected = macroelement(fan, IndexSet{0}).cells;
  for (int c : macroelement(fan, IndexSet{1}).cells)
    if (!std::binary_search(expected.begin(), expected.end(), c))
      expected.push_back(c);
  std::sort(expected.begin(), expected.end());
  CHECK(extended_macroelement(fan, edge).cells == expected);
}

TEST_CASE("region nesting on random pairs")
{
  const auto mesh = refine_uniform(make_square_mesh());
  for (int m = 0; m <= 2; ++m)
    for (const auto& f : mesh.simplices(m)) {
      const auto mac = macroelement(mesh, f).cells;
      const auto ext = extended_macroelement(mesh, f).cells;
      CHECK(std::includes(ext.begin(), ext.end(), mac.begin(), mac.end()));
    }
}

TEST_CASE("mixed regions: recursive equals closed form")
{
  const auto mesh = refine_uniform(make_square_mesh());
  for (int m = 0; m <= 2; ++m)
    for (const auto& f : mesh.simplices(m))
      for (const auto& e : all_subsets(f)) {
        CHECK(omega_ef(mesh, e, f).cells == omega_ef_closed_form(mesh, e, f).cells);
      }
  // Named special cases.
  const IndexSet f = mesh.simplices(2).front();
  CHECK(omega_ef(mesh, IndexSet{}, f).cells == macroelement(mesh, f).cells);
  CHECK(omega_ef(mesh, f, f).cells == extended_macroelement(mesh, f).cells);
  CHECK_THROWS(omega_ef(mesh, IndexSet{99}, f));
}

TEST_CASE("dual manifolds")
{
  const auto mesh = two_triangles();
  // Interior edge: the two opposite vertices.
  const auto dual = dual_manifold(mesh, IndexSet{1, 2});
  REQUIRE(dual.size() == 2);
  CHECK(dual[0] == IndexSet{0});
  CHECK(dual[1] == IndexSet{3});
  // Empty simplex: all of the domain.
  CHECK(dual_manifold(mesh, IndexSet{}).size() == 2);
  CHECK_THROWS(dual_manifold(mesh, IndexSet{0, 1, 2}));

  // Vertex in a fan: the opposite edges form the link polyline.
  const auto fan = make_fan_mesh(6);
  CHECK(dual_manifold(fan, IndexSet{0}).size() == 6);
}

TEST_CASE("shape constants of reference triangles")
{
  // Equilateral: diameter s, insphere diameter s/sqrt(3).
  std::vector<Vec> v(3, Vec(2));
  v[0] << 0.0, 0.0;
  v[1] << 1.0, 0.0;
  v[2] << 0.5, std::sqrt(3.0) / 2.0;
  SimplicialComplex equilateral(2, std::move(v), {{0, 1, 2}});
  CHECK(shape_constant(equilateral) == Catch::Approx(std::sqrt(3.0)).epsilon(1e-12));

  // Right isoceles: hypotenuse sqrt(2), inradius (2 - sqrt(2))/2.
  std::vector<Vec> w(3, Vec(2));
  w[0] << 0.0, 0.0;
  w[1] << 1.0, 0.0;
  w[2] << 0.0, 1.0;
  SimplicialComplex right(2, std::move(w), {{0, 1, 2}});
  CHECK(shape_constant(right) == Catch::Approx(std::sqrt(2.0) + 1.0).epsilon(1e-12));

  // Refinement by similarity leaves the constant unchanged.
  const auto square = make_square_mesh();
  CHECK(shape_constant(refine_uniform(square)) ==
        Catch::Approx(shape_constant(square)).epsilon(1e-12));
}

TEST_CASE("overlap constants")
{
  const auto mesh = make_square_mesh();
  std::vector<MacroRegion> cells, stars, extended;
  for (const auto& c : mesh.simplices(2))
    cells.push_back(macroelement(mesh, c));
  for (const auto& v : mesh.simplices(0))
    stars.push_back(macroelement(mesh, v));
  CHECK(overlap_constant(mesh, cells) == 1);
  CHECK(overlap_constant(mesh, stars) == 3);  // n + 1

  // Extended macroelements: value equals the exhaustive per-cell count.
  for (int m = 0; m <= 2; ++m)
    for (const auto& f : mesh.simplices(m))
      extended.push_back(extended_macroelement(mesh, f));
  int brute = 0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    int count = 0;
    for (const auto& r : extended)
      if (r.contains_cell(c))
        ++count;
    brute = std::max(brute, count);
  }
  CHECK(overlap_constant(mesh, extended) == brute);
}

TEST_CASE("quasi-uniformity ratios")
{
  const auto uniform = make_interval_mesh(4);
  CHECK(quasi_uniformity_ratio(uniform, IndexSet{2}, IndexSet{2}) ==
        Catch::Approx(1.0).epsilon(1e-12));
  const auto graded = make_graded_interval_mesh(4, 2.0);
  CHECK(quasi_uniformity_ratio(graded, IndexSet{2}, IndexSet{2}) ==
        Catch::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS(quasi_uniformity_ratio(uniform, IndexSet{0}, IndexSet{1}));
}

TEST_CASE("assumption checks")
{
  for (const auto& mesh :
       {make_fan_mesh(6), make_square_mesh(), make_lshape_mesh()}) {
    const auto report = check_assumptions(mesh);
    CHECK(report.links_ok);
    CHECK(report.exactness_ok);
    for (const auto& r : report.regions)
      CHECK(r.whitney_betti == r.simplicial_betti);
  }

  const auto pinched = check_assumptions(pinched_pair());
  CHECK_FALSE(pinched.links_ok);

  // 3D cube: everything regular.
  const auto cube = check_assumptions(make_cube_mesh());
  CHECK(cube.links_ok);
  CHECK(cube.exactness_ok);
}

TEST_CASE("uniform refinement")
{
  const auto one = SimplicialComplex(
      2,
      [] {
        std::vector<Vec> v(3, Vec(2));
        v[0] << 0.0, 0.0;
        v[1] << 1.0, 0.0;
        v[2] << 0.0, 1.0;
        return v;
      }(),
      {{0, 1, 2}});
  const auto refined = refine_uniform(one);
  CHECK(refined.num_cells() == 4);
  CHECK(refined.num_vertices() == 6);
  CHECK(refined.num_simplices(1) == 9);
  // Euler characteristic of a disk: V - E + F = 1.
  CHECK(refined.num_vertices() - refined.num_simplices(1) + refined.num_cells() == 1);
  CHECK_THROWS(refine_uniform(make_interval_mesh(2)));
}
