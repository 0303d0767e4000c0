#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <hystokes/mesh.hpp>
#include <hystokes/quadrature.hpp>

#include <cmath>

using namespace hystokes;

namespace {

// exact integral of x^a y^b over the triangle (0,0),(1,0),(0,1):
// a! b! / (a+b+2)!
double ref_tri_moment(int a, int b) {
  double num = 1., den = 1.;
  for (int i = 2; i <= a; i++) num *= i;
  for (int i = 2; i <= b; i++) num *= i;
  for (int i = 2; i <= a + b + 2; i++) den *= i;
  return num / den;
}

double integrate_monomial(const QuadRule& rule, int a, int b) {
  double s = 0.;
  for (Eigen::Index q = 0; q < rule.size(); q++)
    s += rule.weights[q] * std::pow(rule.nodes(q, 0), a) * std::pow(rule.nodes(q, 1), b);
  return s;
}

}  // namespace

TEST_CASE("Gauss-Legendre on [0,1] is exact to degree 2n-1") {
  for (int n = 1; n <= 8; n++) {
    Eigen::VectorXd x, w;
    gauss_legendre(n, x, w);
    REQUIRE(x.size() == n);
    CHECK(w.sum() == doctest::Approx(1.).epsilon(1e-14));
    for (int d = 0; d <= 2 * n - 1; d++) {
      double s = 0.;
      for (int q = 0; q < n; q++) s += w[q] * std::pow(x[q], d);
      CHECK(s == doctest::Approx(1. / (d + 1)).epsilon(1e-13));
    }
  }
}

TEST_CASE("segment rule integrates polynomials along a slanted edge") {
  Vec2 a(0.2, -0.1), b(0.9, 0.6);
  for (int deg : {0, 3, 7, 12}) {
    QuadRule rule = segment_rule(a, b, deg);
    CHECK(rule.exactness >= deg);
    CHECK(rule.weights.minCoeff() > 0.);
    CHECK(rule.weights.sum() == doctest::Approx((b - a).norm()).epsilon(1e-14));
    // integrate x^deg exactly: parametrize x(t) = (1-t) ax + t bx
    double s = integrate_monomial(rule, deg, 0);
    // reference by 1D Gauss on the parameter
    Eigen::VectorXd t, w;
    gauss_legendre(deg / 2 + 2, t, w);
    double ref = 0.;
    for (int q = 0; q < t.size(); q++)
      ref += w[q] * std::pow((1 - t[q]) * a.x() + t[q] * b.x(), deg) * (b - a).norm();
    CHECK(s == doctest::Approx(ref).epsilon(1e-13));
  }
}

TEST_CASE("triangle rule matches factorial moments on the reference triangle") {
  Vec2 A(0., 0.), B(1., 0.), C(0., 1.);
  for (int deg : {1, 4, 9, 14}) {
    QuadRule rule = triangle_rule(A, B, C, deg);
    CHECK(rule.weights.minCoeff() > 0.);
    CHECK(rule.weights.sum() == doctest::Approx(0.5).epsilon(1e-14));
    for (int a = 0; a + 0 <= deg; a++)
      for (int b = 0; a + b <= deg; b++)
        CHECK(integrate_monomial(rule, a, b) ==
              doctest::Approx(ref_tri_moment(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("triangle rule is affine-covariant (skewed triangle)") {
  // map reference by x -> F x + t with F = [[2,1],[0,3]]/4, det F = 6/16
  Vec2 A(0.1, 0.2), B(0.6, 0.2), C(0.35, 0.95);
  QuadRule rule = triangle_rule(A, B, C, 6);
  double area = 0.5 * std::abs((B - A).x() * (C - A).y() - (B - A).y() * (C - A).x());
  CHECK(rule.weights.sum() == doctest::Approx(area).epsilon(1e-13));
  // integral of 1, x, y against centroid identity
  double sx = integrate_monomial(rule, 1, 0), sy = integrate_monomial(rule, 0, 1);
  Vec2 centroid = (A + B + C) / 3.;
  CHECK(sx == doctest::Approx(area * centroid.x()).epsilon(1e-13));
  CHECK(sy == doctest::Approx(area * centroid.y()).epsilon(1e-13));
}

TEST_CASE("cell rule on polygonal cells: positivity, measure, centroid") {
  Mesh mesh = build_hexagonal(3);
  MeshGeometry g = geometry(mesh);
  for (std::size_t c = 0; c < mesh.n_cells(); c++) {
    QuadRule rule = cell_rule(mesh, g, c, 5);
    CHECK(rule.weights.minCoeff() > 0.);
    CHECK(rule.weights.sum() == doctest::Approx(g.cell[c].area).epsilon(1e-13));
    double sx = integrate_monomial(rule, 1, 0);
    CHECK(sx == doctest::Approx(g.cell[c].area * g.cell[c].centroid.x()).epsilon(1e-12));
  }
}

TEST_CASE("face rule agrees with the face length and midpoint") {
  Mesh mesh = build_triangular(3);
  MeshGeometry g = geometry(mesh);
  for (std::size_t f = 0; f < mesh.n_faces(); f++) {
    QuadRule rule = face_rule(mesh, f, 3);
    CHECK(rule.weights.sum() == doctest::Approx(g.face[f].length).epsilon(1e-14));
    double sx = integrate_monomial(rule, 1, 0);
    CHECK(sx == doctest::Approx(g.face[f].length * g.face[f].midpoint.x()).epsilon(1e-13));
  }
}
