#include "hystokes/polyspaces.hpp"

#include <cmath>
#include <stdexcept>

namespace hystokes {

int poly_dim(int deg) { return deg < 0 ? 0 : (deg + 1) * (deg + 2) / 2; }

int mono_index(int a, int b) {
  int d = a + b;
  return d * (d + 1) / 2 + b;
}

Eigen::MatrixXd MonoFrame::eval(const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts) const {
  const Eigen::Index npts = pts.rows();
  const int nm = dim();
  Eigen::MatrixXd vals(npts, nm);
  Eigen::MatrixXd px(npts, deg + 1), py(npts, deg + 1);
  px.col(0).setOnes();
  py.col(0).setOnes();
  for (int d = 1; d <= deg; d++) {
    px.col(d) = px.col(d - 1).cwiseProduct((pts.col(0).array() - xT.x()).matrix() / hT);
    py.col(d) = py.col(d - 1).cwiseProduct((pts.col(1).array() - xT.y()).matrix() / hT);
  }
  for (int d = 0; d <= deg; d++)
    for (int b = 0; b <= d; b++)
      vals.col(mono_index(d - b, b)) = px.col(d - b).cwiseProduct(py.col(b));
  return vals;
}

Eigen::MatrixXd MonoFrame::dx_map() const {
  const int nm = dim();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(nm, nm);
  for (int d = 1; d <= deg; d++)
    for (int b = 0; b <= d; b++) {
      int a = d - b;
      if (a >= 1) m(mono_index(a - 1, b), mono_index(a, b)) = a / hT;
    }
  return m;
}

Eigen::MatrixXd MonoFrame::dy_map() const {
  const int nm = dim();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(nm, nm);
  for (int d = 1; d <= deg; d++)
    for (int b = 0; b <= d; b++) {
      if (b >= 1) m(mono_index(d - b, b - 1), mono_index(d - b, b)) = b / hT;
    }
  return m;
}

Eigen::MatrixXd MonoFrame::mx_map() const {
  const int nm = dim();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(nm, nm);
  for (int d = 0; d < deg; d++)
    for (int b = 0; b <= d; b++)
      m(mono_index(d - b + 1, b), mono_index(d - b, b)) = 1.;
  return m;
}

Eigen::MatrixXd MonoFrame::my_map() const {
  const int nm = dim();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(nm, nm);
  for (int d = 0; d < deg; d++)
    for (int b = 0; b <= d; b++)
      m(mono_index(d - b, b + 1), mono_index(d - b, b)) = 1.;
  return m;
}

int CellBasis::ncomp() const {
  switch (kind) {
    case BasisKind::Scalar: return 1;
    case BasisKind::Vector: return 2;
    case BasisKind::Matrix22: return 4;
  }
  return 1;
}

Eigen::MatrixXd CellBasis::component(int c) const {
  const int nm = frame.dim();
  return coef.middleCols(static_cast<Eigen::Index>(c) * nm, nm);
}

Eigen::MatrixXd CellBasis::values(int c, const Eigen::MatrixXd& frame_values) const {
  return frame_values * component(c).transpose();
}

CellBasis CellBasis::gradient() const {
  const int nm = frame.dim();
  Eigen::MatrixXd dx = frame.dx_map().transpose();
  Eigen::MatrixXd dy = frame.dy_map().transpose();
  CellBasis out;
  out.frame = frame;
  if (kind == BasisKind::Scalar) {
    out.kind = BasisKind::Vector;
    out.coef.resize(dim(), 2 * nm);
    out.coef << component(0) * dx, component(0) * dy;
  } else if (kind == BasisKind::Vector) {
    out.kind = BasisKind::Matrix22;
    out.coef.resize(dim(), 4 * nm);
    out.coef << component(0) * dx, component(0) * dy, component(1) * dx, component(1) * dy;
  } else {
    throw std::invalid_argument("CellBasis::gradient: unsupported kind");
  }
  return out;
}

CellBasis CellBasis::divergence() const {
  const int nm = frame.dim();
  Eigen::MatrixXd dx = frame.dx_map().transpose();
  Eigen::MatrixXd dy = frame.dy_map().transpose();
  CellBasis out;
  out.frame = frame;
  if (kind == BasisKind::Vector) {
    out.kind = BasisKind::Scalar;
    out.coef = component(0) * dx + component(1) * dy;
  } else if (kind == BasisKind::Matrix22) {
    out.kind = BasisKind::Vector;
    out.coef.resize(dim(), 2 * nm);
    out.coef << component(0) * dx + component(1) * dy, component(2) * dx + component(3) * dy;
  } else {
    throw std::invalid_argument("CellBasis::divergence: unsupported kind");
  }
  return out;
}

Eigen::MatrixXd basis_gram(const CellBasis& basis, const Eigen::MatrixXd& mono_mass) {
  return basis_cross_gram(basis, basis, mono_mass);
}

Eigen::MatrixXd basis_cross_gram(const CellBasis& a, const CellBasis& b,
                                 const Eigen::MatrixXd& mono_mass) {
  if (a.kind != b.kind) throw std::invalid_argument("basis_cross_gram: kind mismatch");
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(a.dim(), b.dim());
  for (int c = 0; c < a.ncomp(); c++) g += a.component(c) * mono_mass * b.component(c).transpose();
  return g;
}

CellBasis scalar_monomials(const MonoFrame& frame, int ell) {
  if (ell > frame.deg) throw std::invalid_argument("scalar_monomials: ell exceeds frame degree");
  CellBasis b;
  b.kind = BasisKind::Scalar;
  b.frame = frame;
  b.coef = Eigen::MatrixXd::Identity(poly_dim(ell), frame.dim());
  return b;
}

CellBasis orthonormalize(CellBasis basis, const Eigen::MatrixXd& mono_mass) {
  const int nm = basis.frame.dim();
  const int nc = basis.ncomp();
  auto inner = [&](const Eigen::RowVectorXd& f, const Eigen::RowVectorXd& g) {
    double acc = 0.;
    for (int c = 0; c < nc; c++)
      acc += f.segment(static_cast<Eigen::Index>(c) * nm, nm) * mono_mass *
             g.segment(static_cast<Eigen::Index>(c) * nm, nm).transpose();
    return acc;
  };
  for (int i = 0; i < basis.dim(); i++) {
    Eigen::RowVectorXd row = basis.coef.row(i);
    double norm0 = std::sqrt(inner(row, row));
    for (int pass = 0; pass < 2; pass++) {
      for (int j = 0; j < i; j++) {
        Eigen::RowVectorXd prev = basis.coef.row(j);
        row -= inner(row, prev) * prev;
      }
    }
    double norm = std::sqrt(inner(row, row));
    if (!(norm > 1e-10 * std::max(norm0, 1e-300)))
      throw std::runtime_error("orthonormalize: numerically dependent basis rows");
    basis.coef.row(i) = row / norm;
  }
  return basis;
}

namespace {

// Stacks per-component coefficient blocks into a Vector basis row set.
CellBasis make_vector_from_rows(const MonoFrame& frame, const Eigen::MatrixXd& comp0,
                                const Eigen::MatrixXd& comp1) {
  CellBasis b;
  b.kind = BasisKind::Vector;
  b.frame = frame;
  b.coef.resize(comp0.rows(), 2 * frame.dim());
  b.coef << comp0, comp1;
  return b;
}

// L2-normalizes each row of a basis (no orthogonalization; keeps generator structure).
CellBasis l2_normalize(CellBasis basis, const Eigen::MatrixXd& mono_mass) {
  Eigen::MatrixXd g = basis_gram(basis, mono_mass);
  for (int i = 0; i < basis.dim(); i++) {
    double norm = std::sqrt(g(i, i));
    if (!(norm > 0.)) throw std::runtime_error("l2_normalize: zero generator");
    basis.coef.row(i) /= norm;
  }
  return basis;
}

}  // namespace

CellBasis scalar_cell_basis(const MonoFrame& frame, int ell, const Eigen::MatrixXd& mono_mass) {
  return orthonormalize(scalar_monomials(frame, ell), mono_mass);
}

CellBasis vector_cell_basis(const MonoFrame& frame, int ell, const Eigen::MatrixXd& mono_mass) {
  CellBasis s = scalar_cell_basis(frame, ell, mono_mass);
  const int n = s.dim(), nm = frame.dim();
  CellBasis b;
  b.kind = BasisKind::Vector;
  b.frame = frame;
  b.coef = Eigen::MatrixXd::Zero(2 * n, 2 * nm);
  b.coef.topLeftCorner(n, nm) = s.coef;
  b.coef.bottomRightCorner(n, nm) = s.coef;
  return b;
}

CellBasis matrix_cell_basis(const MonoFrame& frame, int ell, const Eigen::MatrixXd& mono_mass) {
  CellBasis s = scalar_cell_basis(frame, ell, mono_mass);
  const int n = s.dim(), nm = frame.dim();
  CellBasis b;
  b.kind = BasisKind::Matrix22;
  b.frame = frame;
  b.coef = Eigen::MatrixXd::Zero(4 * n, 4 * nm);
  for (int c = 0; c < 4; c++)
    b.coef.block(static_cast<Eigen::Index>(c) * n, static_cast<Eigen::Index>(c) * nm, n, nm) = s.coef;
  return b;
}

CellBasis gradient_space_basis(const MonoFrame& frame, int ell, const Eigen::MatrixXd& mono_mass) {
  // grad P^{ell+1}(T)^2: gradients of the non-constant vector monomials up to degree ell+1
  if (ell + 1 > frame.deg) throw std::invalid_argument("gradient_space_basis: frame degree too small");
  const int np = poly_dim(ell + 1), nm = frame.dim();
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(2 * (np - 1), 2 * nm);
  for (int j = 1; j < np; j++) {
    rows(j - 1, j) = 1.;                // (m_j, 0)
    rows(np - 2 + j, nm + j) = 1.;      // (0, m_j)
  }
  CellBasis vb;
  vb.kind = BasisKind::Vector;
  vb.frame = frame;
  vb.coef = rows;
  return orthonormalize(vb.gradient(), mono_mass);
}

CellBasis nedelec_basis(const MonoFrame& frame, int ell, const Eigen::MatrixXd& mono_mass) {
  if (ell < -1) throw std::invalid_argument("nedelec_basis: ell must be >= -1");
  const int nm = frame.dim();
  if (ell > frame.deg) throw std::invalid_argument("nedelec_basis: frame degree too small");
  const int n_grad = std::max(poly_dim(ell) - 1, 0);   // grad P^ell, non-constant monomials
  const int n_comp = poly_dim(ell - 1);                // (x-xT)^perp P^{ell-1}
  Eigen::MatrixXd c0 = Eigen::MatrixXd::Zero(n_grad + n_comp, nm);
  Eigen::MatrixXd c1 = Eigen::MatrixXd::Zero(n_grad + n_comp, nm);
  Eigen::MatrixXd dx = frame.dx_map(), dy = frame.dy_map();
  Eigen::MatrixXd mx = frame.mx_map(), my = frame.my_map();
  for (int j = 1; j <= n_grad; j++) {
    c0.row(j - 1) = dx.col(j).transpose();
    c1.row(j - 1) = dy.col(j).transpose();
  }
  // (x-xT)^perp m = (y-yT, -(x-xT)) m = hT (my m, -mx m)
  for (int j = 0; j < n_comp; j++) {
    c0.row(n_grad + j) = frame.hT * my.col(j).transpose();
    c1.row(n_grad + j) = -frame.hT * mx.col(j).transpose();
  }
  CellBasis b = make_vector_from_rows(frame, c0, c1);
  return b.dim() == 0 ? b : l2_normalize(std::move(b), mono_mass);
}

CellBasis rtn_basis(const MonoFrame& frame, int ell, const Eigen::MatrixXd& mono_mass) {
  if (ell < 0) throw std::invalid_argument("rtn_basis: ell must be >= 0");
  const int nm = frame.dim();
  if (ell > frame.deg) throw std::invalid_argument("rtn_basis: frame degree too small");
  const int n_rot = std::max(poly_dim(ell) - 1, 0);  // rot P^ell, non-constant monomials
  const int n_comp = poly_dim(ell - 1);              // (x-xT) P^{ell-1}
  Eigen::MatrixXd c0 = Eigen::MatrixXd::Zero(n_rot + n_comp, nm);
  Eigen::MatrixXd c1 = Eigen::MatrixXd::Zero(n_rot + n_comp, nm);
  Eigen::MatrixXd dx = frame.dx_map(), dy = frame.dy_map();
  Eigen::MatrixXd mx = frame.mx_map(), my = frame.my_map();
  // rot q = (d_y q, -d_x q)
  for (int j = 1; j <= n_rot; j++) {
    c0.row(j - 1) = dy.col(j).transpose();
    c1.row(j - 1) = -dx.col(j).transpose();
  }
  for (int j = 0; j < n_comp; j++) {
    c0.row(n_rot + j) = frame.hT * mx.col(j).transpose();
    c1.row(n_rot + j) = frame.hT * my.col(j).transpose();
  }
  CellBasis b = make_vector_from_rows(frame, c0, c1);
  return b.dim() == 0 ? b : l2_normalize(std::move(b), mono_mass);
}

CellBasis bdfm_basis(const MonoFrame& frame, int ell, const Eigen::MatrixXd& mono_mass) {
  if (ell < 1) throw std::invalid_argument("bdfm_basis: ell must be >= 1");
  if (ell > frame.deg) throw std::invalid_argument("bdfm_basis: frame degree too small");
  const int np = poly_dim(ell), nm = frame.dim();
  const int skip0 = mono_index(0, ell);  // (y-yT)^ell dropped from the first component
  const int skip1 = mono_index(ell, 0);  // (x-xT)^ell dropped from the second
  Eigen::MatrixXd c0 = Eigen::MatrixXd::Zero(2 * np - 2, nm);
  Eigen::MatrixXd c1 = Eigen::MatrixXd::Zero(2 * np - 2, nm);
  int r = 0;
  for (int j = 0; j < np; j++) {
    if (j == skip0) continue;
    c0(r++, j) = 1.;
  }
  for (int j = 0; j < np; j++) {
    if (j == skip1) continue;
    c1(r++, j) = 1.;
  }
  CellBasis b = make_vector_from_rows(frame, c0, c1);
  return l2_normalize(std::move(b), mono_mass);
}

Eigen::MatrixXd FaceBasis::mono_values(const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts) const {
  const Eigen::Index npts = pts.rows();
  Eigen::VectorXd s = ((pts.col(0).array() - xF.x()) * tF.x() + (pts.col(1).array() - xF.y()) * tF.y()) / hF;
  Eigen::MatrixXd vals(npts, deg + 1);
  vals.col(0).setOnes();
  for (int j = 1; j <= deg; j++) vals.col(j) = vals.col(j - 1).cwiseProduct(s);
  return vals;
}

Eigen::MatrixXd FaceBasis::values(int c, const Eigen::MatrixXd& mono_values) const {
  const int nm = deg + 1;
  return mono_values * coef.middleCols(static_cast<Eigen::Index>(c) * nm, nm).transpose();
}

Eigen::MatrixXd face_mono_gram(double hF, int deg) {
  Eigen::MatrixXd g(deg + 1, deg + 1);
  for (int i = 0; i <= deg; i++)
    for (int j = 0; j <= deg; j++) {
      int m = i + j;
      g(i, j) = (m % 2 == 0) ? hF * std::pow(0.5, m) / (m + 1) : 0.;
    }
  return g;
}

FaceBasis scalar_face_basis(const MeshGeometry::FaceGeom& fg, int deg) {
  FaceBasis b;
  b.xF = fg.midpoint;
  b.tF = fg.tangent;
  b.hF = fg.length;
  b.deg = deg;
  b.ncomp_ = 1;
  Eigen::MatrixXd gram = face_mono_gram(fg.length, deg);
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(deg + 1, deg + 1);
  for (int i = 0; i <= deg; i++) {
    Eigen::RowVectorXd row = c.row(i);
    for (int pass = 0; pass < 2; pass++)
      for (int j = 0; j < i; j++) {
        Eigen::RowVectorXd prev = c.row(j);
        row -= (row * gram * prev.transpose())(0) * prev;
      }
    row /= std::sqrt((row * gram * row.transpose())(0));
    c.row(i) = row;
  }
  b.coef = c;
  return b;
}

FaceBasis vector_face_basis(const MeshGeometry::FaceGeom& fg, int deg) {
  FaceBasis s = scalar_face_basis(fg, deg);
  FaceBasis b = s;
  b.ncomp_ = 2;
  const int n = s.dim(), nm = deg + 1;
  b.coef = Eigen::MatrixXd::Zero(2 * n, 2 * nm);
  b.coef.topLeftCorner(n, nm) = s.coef;
  b.coef.bottomRightCorner(n, nm) = s.coef;
  return b;
}

namespace {

Eigen::VectorXd gram_solve_project(const std::vector<Eigen::MatrixXd>& vals,
                                   const std::vector<Eigen::VectorXd>& fvals,
                                   const Eigen::VectorXd& w) {
  const Eigen::Index dim = vals[0].cols();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  for (std::size_t c = 0; c < vals.size(); c++) {
    gram += vals[c].transpose() * w.asDiagonal() * vals[c];
    rhs += vals[c].transpose() * w.cwiseProduct(fvals[c]);
  }
  return gram.ldlt().solve(rhs);
}

}  // namespace

Eigen::VectorXd project_scalar(const std::function<double(const Vec2&)>& f,
                               const CellBasis& basis, const QuadRule& rule) {
  Eigen::MatrixXd mono = basis.frame.eval(rule.nodes);
  Eigen::VectorXd fv(rule.size());
  for (Eigen::Index p = 0; p < rule.size(); p++) fv[p] = f(rule.nodes.row(p).transpose());
  return gram_solve_project({basis.values(0, mono)}, {fv}, rule.weights);
}

Eigen::VectorXd project_vector(const std::function<Vec2(const Vec2&)>& f,
                               const CellBasis& basis, const QuadRule& rule) {
  Eigen::MatrixXd mono = basis.frame.eval(rule.nodes);
  Eigen::VectorXd f0(rule.size()), f1(rule.size());
  for (Eigen::Index p = 0; p < rule.size(); p++) {
    Vec2 v = f(rule.nodes.row(p).transpose());
    f0[p] = v.x();
    f1[p] = v.y();
  }
  return gram_solve_project({basis.values(0, mono), basis.values(1, mono)}, {f0, f1}, rule.weights);
}

Eigen::VectorXd project_face_scalar(const std::function<double(const Vec2&)>& f,
                                    const FaceBasis& basis, const QuadRule& rule) {
  Eigen::MatrixXd mono = basis.mono_values(rule.nodes);
  Eigen::VectorXd fv(rule.size());
  for (Eigen::Index p = 0; p < rule.size(); p++) fv[p] = f(rule.nodes.row(p).transpose());
  return gram_solve_project({basis.values(0, mono)}, {fv}, rule.weights);
}

Eigen::VectorXd project_face_vector(const std::function<Vec2(const Vec2&)>& f,
                                    const FaceBasis& basis, const QuadRule& rule) {
  Eigen::MatrixXd mono = basis.mono_values(rule.nodes);
  Eigen::VectorXd f0(rule.size()), f1(rule.size());
  for (Eigen::Index p = 0; p < rule.size(); p++) {
    Vec2 v = f(rule.nodes.row(p).transpose());
    f0[p] = v.x();
    f1[p] = v.y();
  }
  return gram_solve_project({basis.values(0, mono), basis.values(1, mono)}, {f0, f1}, rule.weights);
}

CellInterpolator::CellInterpolator(InterpKind kind, int ell, const CellFrameView& view,
                                   CellBasis target, const Eigen::MatrixXd& mono_mass,
                                   int quad_degree)
    : kind_(kind), ell_(ell), view_(view), target_(std::move(target)) {
  if (kind_ == InterpKind::L2Projection) {
    mass_target_ = basis_gram(target_, mono_mass);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(mass_target_);
    condition_ = svd.singularValues()(0) / svd.singularValues().tail(1)(0);
    dof_lu_.compute(mass_target_);
    return;
  }

  const int face_deg = (kind_ == InterpKind::BdmMoments) ? ell_ : ell_ - 1;
  if (face_deg < 0) throw std::invalid_argument("CellInterpolator: negative face moment degree");
  for (int i = 0; i < view_.n_faces(); i++)
    face_tests_.push_back(scalar_face_basis(view_.fg(i), face_deg));
  if (kind_ == InterpKind::BdmMoments) {
    interior_test_ = nedelec_basis(target_.frame, ell_ - 1, mono_mass);
  } else {
    int ideg = ell_ - 2;
    interior_test_ = (ideg >= 0) ? vector_cell_basis(target_.frame, ideg, mono_mass) : CellBasis{};
    if (ideg < 0) {
      interior_test_.kind = BasisKind::Vector;
      interior_test_.frame = target_.frame;
      interior_test_.coef = Eigen::MatrixXd::Zero(0, 2 * target_.frame.dim());
    }
  }
  has_interior_ = interior_test_.dim() > 0;

  Eigen::MatrixXd dof = Eigen::MatrixXd::Zero(target_.dim(), target_.dim());
  int row = 0;
  for (int i = 0; i < view_.n_faces(); i++) {
    QuadRule fr = face_rule(*view_.mesh, view_.face(i), quad_degree);
    Eigen::MatrixXd mono = target_.frame.eval(fr.nodes);
    Vec2 n = view_.normal(i);
    Eigen::MatrixXd vn = n.x() * target_.values(0, mono) + n.y() * target_.values(1, mono);
    Eigen::MatrixXd phi = face_tests_[i].values(0, face_tests_[i].mono_values(fr.nodes));
    dof.middleRows(row, face_tests_[i].dim()) =
        phi.transpose() * fr.weights.asDiagonal() * vn;
    row += face_tests_[i].dim();
  }
  if (has_interior_) {
    // exact: both sides live on the shared monomial frame
    dof.middleRows(row, interior_test_.dim()) = basis_cross_gram(interior_test_, target_, mono_mass);
    row += interior_test_.dim();
  }
  if (row != target_.dim())
    throw std::runtime_error("CellInterpolator: moment count does not match target dimension");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(dof);
  double smin = svd.singularValues().tail(1)(0);
  double smax = svd.singularValues()(0);
  if (!(smin > 0.) || smax / smin > 1e13)
    throw std::runtime_error("CellInterpolator: DOF matrix numerically singular");
  condition_ = smax / smin;
  dof_lu_.compute(dof);
}

Eigen::VectorXd CellInterpolator::solve_moments(const Eigen::VectorXd& m) const {
  return dof_lu_.solve(m);
}

Eigen::VectorXd CellInterpolator::apply(const std::function<Vec2(const Vec2&)>& f,
                                        int quad_degree) const {
  if (kind_ == InterpKind::L2Projection) {
    QuadRule cr = cell_rule(*view_.mesh, *view_.geom, view_.cell, quad_degree);
    Eigen::MatrixXd mono = target_.frame.eval(cr.nodes);
    Eigen::VectorXd f0(cr.size()), f1(cr.size());
    for (Eigen::Index p = 0; p < cr.size(); p++) {
      Vec2 v = f(cr.nodes.row(p).transpose());
      f0[p] = v.x();
      f1[p] = v.y();
    }
    Eigen::VectorXd rhs = target_.values(0, mono).transpose() * cr.weights.cwiseProduct(f0) +
                          target_.values(1, mono).transpose() * cr.weights.cwiseProduct(f1);
    return dof_lu_.solve(rhs);
  }

  Eigen::VectorXd m(target_.dim());
  int row = 0;
  for (int i = 0; i < view_.n_faces(); i++) {
    QuadRule fr = face_rule(*view_.mesh, view_.face(i), quad_degree);
    Vec2 n = view_.normal(i);
    Eigen::VectorXd fn(fr.size());
    for (Eigen::Index p = 0; p < fr.size(); p++)
      fn[p] = f(fr.nodes.row(p).transpose()).dot(n);
    Eigen::MatrixXd phi = face_tests_[i].values(0, face_tests_[i].mono_values(fr.nodes));
    m.segment(row, face_tests_[i].dim()) = phi.transpose() * fr.weights.cwiseProduct(fn);
    row += face_tests_[i].dim();
  }
  if (has_interior_) {
    QuadRule cr = cell_rule(*view_.mesh, *view_.geom, view_.cell, quad_degree);
    Eigen::MatrixXd mono = interior_test_.frame.eval(cr.nodes);
    Eigen::VectorXd f0(cr.size()), f1(cr.size());
    for (Eigen::Index p = 0; p < cr.size(); p++) {
      Vec2 v = f(cr.nodes.row(p).transpose());
      f0[p] = v.x();
      f1[p] = v.y();
    }
    m.segment(row, interior_test_.dim()) =
        interior_test_.values(0, mono).transpose() * cr.weights.cwiseProduct(f0) +
        interior_test_.values(1, mono).transpose() * cr.weights.cwiseProduct(f1);
  }
  return solve_moments(m);
}

Eigen::MatrixXd CellInterpolator::apply_to_basis(const CellBasis& src, int quad_degree) const {
  if (src.kind != BasisKind::Vector)
    throw std::invalid_argument("CellInterpolator::apply_to_basis: source must be vector-valued");
  if (kind_ == InterpKind::L2Projection) {
    QuadRule cr = cell_rule(*view_.mesh, *view_.geom, view_.cell, quad_degree);
    Eigen::MatrixXd mono = target_.frame.eval(cr.nodes);
    Eigen::MatrixXd rhs =
        target_.values(0, mono).transpose() * cr.weights.asDiagonal() * src.values(0, mono) +
        target_.values(1, mono).transpose() * cr.weights.asDiagonal() * src.values(1, mono);
    return dof_lu_.solve(rhs);
  }

  Eigen::MatrixXd m(target_.dim(), src.dim());
  int row = 0;
  for (int i = 0; i < view_.n_faces(); i++) {
    QuadRule fr = face_rule(*view_.mesh, view_.face(i), quad_degree);
    Eigen::MatrixXd mono = src.frame.eval(fr.nodes);
    Vec2 n = view_.normal(i);
    Eigen::MatrixXd vn = n.x() * src.values(0, mono) + n.y() * src.values(1, mono);
    Eigen::MatrixXd phi = face_tests_[i].values(0, face_tests_[i].mono_values(fr.nodes));
    m.middleRows(row, face_tests_[i].dim()) = phi.transpose() * fr.weights.asDiagonal() * vn;
    row += face_tests_[i].dim();
  }
  if (has_interior_) {
    QuadRule cr = cell_rule(*view_.mesh, *view_.geom, view_.cell, quad_degree);
    Eigen::MatrixXd mono = src.frame.eval(cr.nodes);
    m.middleRows(row, interior_test_.dim()) =
        interior_test_.values(0, mono).transpose() * cr.weights.asDiagonal() * src.values(0, mono) +
        interior_test_.values(1, mono).transpose() * cr.weights.asDiagonal() * src.values(1, mono);
  }
  return dof_lu_.solve(m);
}

}  // namespace hystokes
