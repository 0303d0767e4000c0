#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <hystokes/mesh.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

using namespace hystokes;

namespace {

double total_area(const Mesh& mesh) {
  MeshGeometry g = geometry(mesh);
  double a = 0.;
  for (const auto& c : g.cell) a += c.area;
  return a;
}

}  // namespace

TEST_CASE("cartesian grid counts and geometry") {
  Mesh mesh = build_cartesian(10);
  CHECK(mesh.n_cells() == 100);
  CHECK(mesh.n_vertices() == 121);
  CHECK(mesh.n_faces() == 220);
  CHECK(mesh.n_boundary_faces() == 40);
  CHECK(mesh.n_internal_faces() == 180);
  CHECK(mesh.is_rectangular());
  CHECK(!mesh.is_simplicial());
  mesh.validate();

  MeshGeometry g = geometry(mesh);
  for (const auto& c : g.cell) {
    CHECK(c.area == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(c.diameter == doctest::Approx(0.1 * std::sqrt(2.)).epsilon(1e-12));
  }
  for (const auto& f : g.face) {
    CHECK(f.length == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(f.normal.norm() == doctest::Approx(1.).epsilon(1e-14));
    CHECK(std::abs(f.normal.dot(f.tangent)) < 1e-14);
  }
  CHECK(total_area(mesh) == doctest::Approx(1.).epsilon(1e-13));
}

TEST_CASE("structured triangular grid counts") {
  Mesh mesh = build_triangular(4);
  CHECK(mesh.n_cells() == 32);
  CHECK(mesh.n_faces() == 56);
  CHECK(mesh.n_boundary_faces() == 16);
  CHECK(mesh.is_simplicial());
  CHECK(!mesh.is_rectangular());
  mesh.validate();
  CHECK(total_area(mesh) == doctest::Approx(1.).epsilon(1e-13));

  // every cell is a right triangle with legs 1/4: area (1/4)^2/2
  MeshGeometry g = geometry(mesh);
  for (const auto& c : g.cell) CHECK(c.area == doctest::Approx(1. / 32.).epsilon(1e-12));
}

TEST_CASE("hexagonal and locally refined families are valid tilings") {
  for (int n : {2, 4}) {
    Mesh hexa = build_hexagonal(n);
    hexa.validate();
    CHECK(total_area(hexa) == doctest::Approx(1.).epsilon(1e-12));
    CHECK(!hexa.is_simplicial());

    Mesh locref = build_locref(2 * n);
    locref.validate();
    CHECK(total_area(locref) == doctest::Approx(1.).epsilon(1e-12));
    // the refined quadrant makes some coarse cells pentagons (split edges)
    bool has_pentagon = false;
    for (const auto& loop : locref.cells) has_pentagon |= loop.size() == 5;
    CHECK(has_pentagon);
  }
  CHECK_THROWS(build_locref(3));
  CHECK_THROWS(build_locref(0));
}

TEST_CASE("outward normals and owner signs are consistent") {
  Mesh mesh = build_triangular(2);
  MeshGeometry g = geometry(mesh);
  for (std::size_t c = 0; c < mesh.n_cells(); c++) {
    for (std::size_t i = 0; i < mesh.cell_faces[c].size(); i++) {
      std::size_t f = mesh.cell_faces[c][i];
      Vec2 out = g.sign[c][i] * g.face[f].normal;
      // outward: points away from the cell centroid
      CHECK(out.dot(g.face[f].midpoint - g.cell[c].centroid) > 0.);
      // sign is +1 exactly when this cell owns the face
      CHECK((g.sign[c][i] == 1) == (mesh.faces[f].owner == static_cast<int>(c)));
    }
  }
}

TEST_CASE("face incidence: internal faces have two cells, boundary one") {
  Mesh mesh = build_cartesian(3);
  std::set<std::size_t> seen;
  for (std::size_t c = 0; c < mesh.n_cells(); c++)
    for (std::size_t f : mesh.cell_faces[c]) seen.insert(f);
  CHECK(seen.size() == mesh.n_faces());
  for (const Face& f : mesh.faces) {
    CHECK(f.owner >= 0);
    if (f.is_boundary())
      CHECK(f.neighbour == -1);
    else
      CHECK(f.neighbour != f.owner);
  }
}

TEST_CASE("from_cells rejects broken input") {
  std::vector<Vec2> v = {{0., 0.}, {1., 0.}, {1., 1.}, {0., 1.}};
  // clockwise loop: negative area
  CHECK_THROWS(Mesh::from_cells(v, {{0, 3, 2, 1}}));
  // duplicated vertex in the loop
  CHECK_THROWS(Mesh::from_cells(v, {{0, 1, 1, 2}}));
}

TEST_CASE("mesh JSON round trip") {
  Mesh mesh = build_hexagonal(3);
  auto path = (std::filesystem::temp_directory_path() / "hystokes_mesh_rt.json").string();
  write_mesh(mesh, path);
  Mesh back = read_mesh(path);
  std::remove(path.c_str());

  REQUIRE(back.n_vertices() == mesh.n_vertices());
  REQUIRE(back.n_cells() == mesh.n_cells());
  REQUIRE(back.n_faces() == mesh.n_faces());
  for (std::size_t i = 0; i < mesh.n_vertices(); i++)
    CHECK((back.vertices[i] - mesh.vertices[i]).norm() == 0.);
  for (std::size_t c = 0; c < mesh.n_cells(); c++) CHECK(back.cells[c] == mesh.cells[c]);
  back.validate();
}
