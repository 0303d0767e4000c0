#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <hystokes/localops.hpp>
#include <hystokes/mesh.hpp>
#include <hystokes/method.hpp>
#include <hystokes/polyspaces.hpp>
#include <hystokes/quadrature.hpp>

#include <cmath>

using namespace hystokes;

namespace {

// single skewed triangle, not a tiling of the square (validate() is not used)
Mesh one_triangle(Vec2 a, Vec2 b, Vec2 c) {
  return Mesh::from_cells({a, b, c}, {{0, 1, 2}});
}

Eigen::MatrixXd monomial_mass(const Mesh& mesh, const MeshGeometry& g, std::size_t cell,
                              const MonoFrame& frame) {
  QuadRule rule = cell_rule(mesh, g, cell, 2 * frame.deg);
  Eigen::MatrixXd mv = frame.eval(rule.nodes);
  return mv.transpose() * rule.weights.asDiagonal() * mv;
}

}  // namespace

TEST_CASE("polynomial dimensions and monomial ordering") {
  CHECK(poly_dim(-1) == 0);
  CHECK(poly_dim(0) == 1);
  CHECK(poly_dim(1) == 3);
  CHECK(poly_dim(2) == 6);
  CHECK(poly_dim(3) == 10);
  CHECK(mono_index(0, 0) == 0);
  // degree-major: within a degree the x exponent drops
  CHECK(mono_index(1, 0) == 1);
  CHECK(mono_index(0, 1) == 2);
  CHECK(mono_index(2, 0) == 3);
  CHECK(mono_index(1, 1) == 4);
  CHECK(mono_index(0, 2) == 5);
}

TEST_CASE("frame derivative maps are exact") {
  MonoFrame frame{Vec2(0.3, 0.7), 0.6, 3};
  Eigen::Matrix<double, Eigen::Dynamic, 2> pts(4, 2);
  pts << 0.1, 0.2, 0.45, 0.9, 0.31, 0.70, 0.8, 0.05;
  Eigen::MatrixXd mv = frame.eval(pts);
  Eigen::MatrixXd dx = frame.dx_map(), dy = frame.dy_map();
  // d/dx of m_(a,b) = (a/hT) m_(a-1,b); check on x^2 y: index (2,1)
  Eigen::VectorXd e = Eigen::VectorXd::Zero(frame.dim());
  e[mono_index(2, 1)] = 1.;
  Eigen::VectorXd vx = mv * (dx.transpose() * e), vy = mv * (dy.transpose() * e);
  for (int q = 0; q < pts.rows(); q++) {
    double X = (pts(q, 0) - frame.xT.x()) / frame.hT, Y = (pts(q, 1) - frame.xT.y()) / frame.hT;
    CHECK(vx[q] == doctest::Approx(2. * X * Y / frame.hT).epsilon(1e-13));
    CHECK(vy[q] == doctest::Approx(X * X / frame.hT).epsilon(1e-13));
  }
}

TEST_CASE("cell bases are orthonormal on a skewed triangle") {
  Mesh mesh = one_triangle({0.1, 0.05}, {0.9, 0.25}, {0.35, 0.8});
  MeshGeometry g = geometry(mesh);
  MonoFrame frame{g.cell[0].centroid, g.cell[0].diameter, 3};
  Eigen::MatrixXd mass = monomial_mass(mesh, g, 0, frame);

  CellBasis s = scalar_cell_basis(frame, 2, mass);
  CellBasis v = vector_cell_basis(frame, 2, mass);
  CellBasis m22 = matrix_cell_basis(frame, 1, mass);
  CellBasis gs = gradient_space_basis(frame, 1, mass);
  CHECK(s.dim() == 6);
  CHECK(v.dim() == 12);
  CHECK(m22.dim() == 12);
  CHECK(gs.dim() == 10);  // grad P^2(T)^2: two components, constants drop out

  for (const CellBasis* b : {&s, &v, &m22, &gs}) {
    Eigen::MatrixXd G = basis_gram(*b, mass);
    CHECK((G - Eigen::MatrixXd::Identity(b->dim(), b->dim())).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("gradient and divergence wiring") {
  Mesh mesh = one_triangle({0., 0.}, {1., 0.}, {0., 1.});
  MeshGeometry g = geometry(mesh);
  MonoFrame frame{g.cell[0].centroid, g.cell[0].diameter, 2};
  Eigen::MatrixXd mass = monomial_mass(mesh, g, 0, frame);
  CellBasis s = scalar_cell_basis(frame, 2, mass);
  CellBasis grad = s.gradient();
  CHECK(grad.kind == BasisKind::Vector);

  Eigen::Matrix<double, Eigen::Dynamic, 2> pts(3, 2);
  pts << 0.2, 0.3, 0.5, 0.1, 0.25, 0.6;
  Eigen::MatrixXd mv = frame.eval(pts);
  double h = 1e-6;
  for (int q = 0; q < pts.rows(); q++) {
    for (int comp = 0; comp < 2; comp++) {
      Eigen::Matrix<double, Eigen::Dynamic, 2> pp = pts, pm = pts;
      pp(q, comp) += h;
      pm(q, comp) -= h;
      Eigen::MatrixXd vp = s.values(0, frame.eval(pp)), vm = s.values(0, frame.eval(pm));
      Eigen::MatrixXd gd = grad.values(comp, mv);
      for (int i = 0; i < s.dim(); i++)
        CHECK(gd(q, i) == doctest::Approx((vp(q, i) - vm(q, i)) / (2 * h)).epsilon(1e-6));
    }
  }

  // divergence of the gradient basis of a vector basis: matrix -> vector rows
  CellBasis v = vector_cell_basis(frame, 2, mass);
  CellBasis dv = v.divergence();
  CHECK(dv.kind == BasisKind::Scalar);
  // div of (x^2-ish member) consistency: project v onto field (x^2, x y),
  // divergence must evaluate to 2x + x = 3x
  QuadRule rule = cell_rule(mesh, g, 0, 6);
  Eigen::VectorXd coef = project_vector(
      [](const Vec2& x) { return Vec2(x.x() * x.x(), x.x() * x.y()); }, v, rule);
  Eigen::MatrixXd dvals = dv.values(0, mv);
  for (int q = 0; q < pts.rows(); q++)
    CHECK((dvals * coef)(q) == doctest::Approx(3. * pts(q, 0)).epsilon(1e-12));
}

TEST_CASE("special space dimensions: Nedelec, RTN, BDFM") {
  Mesh mesh = one_triangle({0., 0.}, {1., 0.}, {0., 1.});
  MeshGeometry g = geometry(mesh);
  MonoFrame frame{g.cell[0].centroid, g.cell[0].diameter, 3};
  Eigen::MatrixXd mass = monomial_mass(mesh, g, 0, frame);

  CHECK(nedelec_basis(frame, 0, mass).dim() == 0);
  CHECK(nedelec_basis(frame, 1, mass).dim() == 3);
  CHECK(nedelec_basis(frame, 2, mass).dim() == 8);
  CHECK(rtn_basis(frame, 1, mass).dim() == 3);
  CHECK(rtn_basis(frame, 2, mass).dim() == 8);

  Mesh rect = Mesh::from_cells({{0., 0.}, {0.5, 0.}, {0.5, 0.25}, {0., 0.25}}, {{0, 1, 2, 3}});
  MeshGeometry gr = geometry(rect);
  MonoFrame fr{gr.cell[0].centroid, gr.cell[0].diameter, 3};
  Eigen::MatrixXd massr = monomial_mass(rect, gr, 0, fr);
  CHECK(bdfm_basis(fr, 1, massr).dim() == 4);
  CHECK(bdfm_basis(fr, 2, massr).dim() == 10);
}

TEST_CASE("RTN members have face-degree <= ell-1 normal traces and P^{ell-1} divergence") {
  Mesh mesh = one_triangle({0.05, 0.1}, {0.95, 0.3}, {0.2, 0.85});
  MeshGeometry g = geometry(mesh);
  MonoFrame frame{g.cell[0].centroid, g.cell[0].diameter, 3};
  Eigen::MatrixXd mass = monomial_mass(mesh, g, 0, frame);
  for (int ell : {1, 2}) {
    CellBasis rtn = rtn_basis(frame, ell, mass);
    // divergence stays in P^{ell-1}: coefficients of higher frame monomials vanish
    CellBasis div = rtn.divergence();
    for (int i = 0; i < div.dim(); i++)
      for (int j = poly_dim(ell - 1); j < frame.dim(); j++)
        CHECK(std::abs(div.component(0)(i, j)) < 1e-12);
    // normal trace on each face is a 1D polynomial of degree <= ell-1
    for (int f = 0; f < 3; f++) {
      FaceBasis fb = scalar_face_basis(g.face[f], ell);
      QuadRule rule = face_rule(mesh, f, 2 * ell + 2);
      Eigen::MatrixXd mono = fb.mono_values(rule.nodes);
      Eigen::MatrixXd mv = frame.eval(rule.nodes);
      for (int i = 0; i < rtn.dim(); i++) {
        Eigen::VectorXd tr = g.face[f].normal.x() * (rtn.values(0, mv).col(i)) +
                             g.face[f].normal.y() * (rtn.values(1, mv).col(i));
        // residual after projecting on P^{ell-1}(F) (orthonormal face basis)
        Eigen::VectorXd proj = Eigen::VectorXd::Zero(rule.size());
        for (int m = 0; m < ell; m++) {
          Eigen::VectorXd phi = fb.values(0, mono).col(m);
          proj += phi * (rule.weights.asDiagonal() * phi).dot(tr);
        }
        CHECK((tr - proj).cwiseAbs().maxCoeff() < 1e-11);
      }
    }
  }
}

TEST_CASE("face bases are orthonormal") {
  Mesh mesh = one_triangle({0.05, 0.1}, {0.95, 0.3}, {0.2, 0.85});
  MeshGeometry g = geometry(mesh);
  for (int f = 0; f < 3; f++) {
    FaceBasis fb = vector_face_basis(g.face[f], 2);
    CHECK(fb.dim() == 6);
    QuadRule rule = face_rule(mesh, f, 6);
    Eigen::MatrixXd mono = fb.mono_values(rule.nodes);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(fb.dim(), fb.dim());
    for (int comp = 0; comp < 2; comp++) {
      Eigen::MatrixXd vals = fb.values(comp, mono);
      G += vals.transpose() * rule.weights.asDiagonal() * vals;
    }
    CHECK((G - Eigen::MatrixXd::Identity(fb.dim(), fb.dim())).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("projections reproduce members of the space") {
  Mesh mesh = one_triangle({0., 0.}, {1., 0.}, {0., 1.});
  MeshGeometry g = geometry(mesh);
  MonoFrame frame{g.cell[0].centroid, g.cell[0].diameter, 2};
  Eigen::MatrixXd mass = monomial_mass(mesh, g, 0, frame);
  CellBasis s = scalar_cell_basis(frame, 2, mass);
  QuadRule rule = cell_rule(mesh, g, 0, 6);
  auto f = [](const Vec2& x) { return 1.5 - x.x() + 2. * x.x() * x.y(); };
  Eigen::VectorXd coef = project_scalar(f, s, rule);
  Eigen::Matrix<double, Eigen::Dynamic, 2> pts(3, 2);
  pts << 0.2, 0.3, 0.5, 0.1, 0.25, 0.6;
  Eigen::MatrixXd vals = s.values(0, frame.eval(pts)) * coef;
  for (int q = 0; q < 3; q++)
    CHECK(vals(q) == doctest::Approx(f(pts.row(q).transpose())).epsilon(1e-12));
}

TEST_CASE("interpolators restrict to the identity on their target space") {
  Mesh tri = one_triangle({0.05, 0.1}, {0.95, 0.3}, {0.2, 0.85});
  for (auto [method, k] : {std::pair{Method::BottiMassa, 1}, {Method::RtnNew, 0},
                           {Method::RtnNew, 1}, {Method::RhebergenWells, 1}}) {
    MethodConfig cfg = make_config(method, k);
    LocalSpaces ls = make_local_spaces(tri, geometry(tri), 0, cfg);
    Eigen::MatrixXd M = ls.interp->apply_to_basis(ls.IT, ls.form_degree + 4);
    CHECK((M - Eigen::MatrixXd::Identity(M.rows(), M.cols())).cwiseAbs().maxCoeff() < 1e-11);
  }
  Mesh rect = Mesh::from_cells({{0., 0.}, {1., 0.}, {1., 1.}, {0., 1.}}, {{0, 1, 2, 3}});
  for (int k : {0, 1}) {
    MethodConfig cfg = make_config(Method::BdfmNew, k);
    LocalSpaces ls = make_local_spaces(rect, geometry(rect), 0, cfg);
    Eigen::MatrixXd M = ls.interp->apply_to_basis(ls.IT, ls.form_degree + 4);
    CHECK((M - Eigen::MatrixXd::Identity(M.rows(), M.cols())).cwiseAbs().maxCoeff() < 1e-11);
  }
}

TEST_CASE("frozen counterexample: first-order BDM moments change a cell average") {
  // On the reference triangle, the degree-1 moment interpolant of v = (x^2, 0)
  // is (5x/6, -y/6): the x-average moves from 1/12 to 5/36 (defect 1/18).
  Mesh mesh = one_triangle({0., 0.}, {1., 0.}, {0., 1.});
  MeshGeometry g = geometry(mesh);
  MethodConfig cfg = make_config(Method::BottiMassa, 0);  // BDM moments at order 1
  LocalSpaces ls = make_local_spaces(mesh, g, 0, cfg);
  auto v = [](const Vec2& x) { return Vec2(x.x() * x.x(), 0.); };
  Eigen::VectorXd coef = ls.interp->apply(v, 8);

  Eigen::Matrix<double, Eigen::Dynamic, 2> pts(4, 2);
  pts << 0.2, 0.3, 0.5, 0.1, 0.25, 0.6, 0.05, 0.05;
  Eigen::MatrixXd mv = ls.frame.eval(pts);
  Eigen::VectorXd v0 = ls.IT.values(0, mv) * coef, v1 = ls.IT.values(1, mv) * coef;
  for (int q = 0; q < 4; q++) {
    CHECK(v0[q] == doctest::Approx(5. * pts(q, 0) / 6.).epsilon(1e-12));
    CHECK(v1[q] == doctest::Approx(-pts(q, 1) / 6.).epsilon(1e-12));
  }

  QuadRule rule = cell_rule(mesh, g, 0, 8);
  Eigen::MatrixXd mq = ls.frame.eval(rule.nodes);
  double ix = rule.weights.dot(Eigen::VectorXd(ls.IT.values(0, mq) * coef));
  CHECK(ix == doctest::Approx(5. / 36.).epsilon(1e-12));
  CHECK(std::abs(ix - 1. / 12.) == doctest::Approx(1. / 18.).epsilon(1e-10));
}
