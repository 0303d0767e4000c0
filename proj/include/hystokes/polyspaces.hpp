#ifndef HYSTOKES_POLYSPACES_HPP
#define HYSTOKES_POLYSPACES_HPP

#include "hystokes/mesh.hpp"
#include "hystokes/quadrature.hpp"

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace hystokes {

/// dim P^deg in two variables; deg < 0 gives 0.
int poly_dim(int deg);
/// Position of the monomial x^a y^b in the degree-major ordering.
int mono_index(int a, int b);

/// Scaled monomial frame on a cell: m_(a,b)(x) = ((x-xT)/hT)^a ((y-yT)/hT)^b,
/// degree-major ordering, up to total degree `deg`. All polynomial bases on a
/// cell are stored as coefficient rows over one shared frame, so differentiation
/// and multiplication are exact linear maps.
struct MonoFrame {
  Vec2 xT = Vec2::Zero();
  double hT = 1.;
  int deg = 0;

  int dim() const { return poly_dim(deg); }
  /// Values of all frame monomials at the given points (npts x dim).
  Eigen::MatrixXd eval(const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts) const;
  /// Coefficient map of d/dx (degree-lowering, exact).
  Eigen::MatrixXd dx_map() const;
  Eigen::MatrixXd dy_map() const;
  /// Coefficient map of multiplication by (x-xT)/hT; input must have degree < deg.
  Eigen::MatrixXd mx_map() const;
  Eigen::MatrixXd my_map() const;
};

enum class BasisKind { Scalar, Vector, Matrix22 };

/// Basis of a polynomial space on a cell: each row is one function, stored as
/// monomial coefficients per component (components are contiguous column blocks).
/// Matrix22 components are row-major: (00, 01, 10, 11) with (∇v)_ab = d_b v_a.
struct CellBasis {
  BasisKind kind = BasisKind::Scalar;
  MonoFrame frame;
  Eigen::MatrixXd coef;

  int dim() const { return static_cast<int>(coef.rows()); }
  int ncomp() const;
  /// Coefficient block of one component (dim x frame.dim()).
  Eigen::MatrixXd component(int c) const;
  /// Values of component c at points with precomputed frame values: (npts x dim).
  Eigen::MatrixXd values(int c, const Eigen::MatrixXd& frame_values) const;

  CellBasis gradient() const;    ///< Scalar -> Vector, Vector -> Matrix22
  CellBasis divergence() const;  ///< Vector -> Scalar, Matrix22 -> Vector (row-wise)
};

/// L2 Gram of a basis given the frame monomial mass matrix.
Eigen::MatrixXd basis_gram(const CellBasis& basis, const Eigen::MatrixXd& mono_mass);
/// Cross Gram <a_i, b_j> of two bases sharing kind and frame.
Eigen::MatrixXd basis_cross_gram(const CellBasis& a, const CellBasis& b,
                                 const Eigen::MatrixXd& mono_mass);

/// Monomial basis of P^ell (prefix of the frame; requires ell <= frame.deg).
CellBasis scalar_monomials(const MonoFrame& frame, int ell);
/// L2-orthonormalized P^ell basis (modified Gram-Schmidt against mono_mass).
CellBasis scalar_cell_basis(const MonoFrame& frame, int ell, const Eigen::MatrixXd& mono_mass);
/// Orthonormal P^ell(T)^2 (two copies of the orthonormal scalar basis).
CellBasis vector_cell_basis(const MonoFrame& frame, int ell, const Eigen::MatrixXd& mono_mass);
/// Orthonormal P^ell(T)^{2x2}.
CellBasis matrix_cell_basis(const MonoFrame& frame, int ell, const Eigen::MatrixXd& mono_mass);
/// Orthonormal basis of the gradient space grad P^{ell+1}(T)^2 (matrix-valued).
CellBasis gradient_space_basis(const MonoFrame& frame, int ell, const Eigen::MatrixXd& mono_mass);

/// Nedelec generators N^ell = grad P^ell  (+)  (x-xT)^perp P^{ell-1}, with
/// (a,b)^perp = (b,-a). Rows are L2-normalized, not orthogonalized. ell >= -1.
CellBasis nedelec_basis(const MonoFrame& frame, int ell, const Eigen::MatrixXd& mono_mass);
/// Raviart-Thomas-Nedelec generators RTN^ell = rot P^ell (+) (x-xT) P^{ell-1},
/// with rot q = (d_y q, -d_x q). Rows L2-normalized. ell >= 0.
CellBasis rtn_basis(const MonoFrame& frame, int ell, const Eigen::MatrixXd& mono_mass);
/// BDFM^ell on an axis-aligned rectangle: P^ell(T)^2 minus span{((y-yT)^ell,0),(0,(x-xT)^ell)}.
/// Rows L2-normalized. ell >= 1.
CellBasis bdfm_basis(const MonoFrame& frame, int ell, const Eigen::MatrixXd& mono_mass);

/// Modified Gram-Schmidt orthonormalization (one re-orthogonalization pass)
/// in the metric induced by mono_mass. Throws if the rows are numerically dependent.
CellBasis orthonormalize(CellBasis basis, const Eigen::MatrixXd& mono_mass);

/// Basis on a face: polynomials in the affine parameter s = (x-xF).tF / hF,
/// L2(F)-orthonormalized. Vector variants use the Cartesian component pair.
struct FaceBasis {
  Vec2 xF = Vec2::Zero();
  Vec2 tF = Vec2::UnitX();
  double hF = 1.;
  int deg = 0;
  int ncomp_ = 1;
  Eigen::MatrixXd coef;  ///< dim x (ncomp * (deg+1))

  int dim() const { return static_cast<int>(coef.rows()); }
  int ncomp() const { return ncomp_; }
  /// Values of the face monomials s^j at physical points (npts x (deg+1)).
  Eigen::MatrixXd mono_values(const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts) const;
  /// Values of component c at points given mono_values.
  Eigen::MatrixXd values(int c, const Eigen::MatrixXd& mono_values) const;
};

/// Exact Gram of the face monomials s^0..s^deg on the face.
Eigen::MatrixXd face_mono_gram(double hF, int deg);
FaceBasis scalar_face_basis(const MeshGeometry::FaceGeom& fg, int deg);
FaceBasis vector_face_basis(const MeshGeometry::FaceGeom& fg, int deg);

/// L2 projections (Gram solve; quadrature must be exact for products).
Eigen::VectorXd project_scalar(const std::function<double(const Vec2&)>& f,
                               const CellBasis& basis, const QuadRule& rule);
Eigen::VectorXd project_vector(const std::function<Vec2(const Vec2&)>& f,
                               const CellBasis& basis, const QuadRule& rule);
Eigen::VectorXd project_face_scalar(const std::function<double(const Vec2&)>& f,
                                    const FaceBasis& basis, const QuadRule& rule);
Eigen::VectorXd project_face_vector(const std::function<Vec2(const Vec2&)>& f,
                                    const FaceBasis& basis, const QuadRule& rule);

/// Local view of one cell: geometry plus oriented face data.
struct CellFrameView {
  const Mesh* mesh = nullptr;
  const MeshGeometry* geom = nullptr;
  std::size_t cell = 0;

  int n_faces() const { return static_cast<int>(mesh->cell_faces[cell].size()); }
  std::size_t face(int i) const { return mesh->cell_faces[cell][i]; }
  const MeshGeometry::CellGeom& cg() const { return geom->cell[cell]; }
  const MeshGeometry::FaceGeom& fg(int i) const { return geom->face[face(i)]; }
  /// Outward normal n_TF of local face i.
  Vec2 normal(int i) const { return geom->sign[cell][i] * fg(i).normal; }
};

enum class InterpKind { BdmMoments, RtnMoments, BdfmMoments, L2Projection };

/// Interpolator onto a velocity space on one cell, realized through its defining
/// moments: face moments of the normal component plus interior moments (or a
/// plain L2 projection). The DOF matrix against the target basis is factorized
/// once; its condition number is kept for reporting.
class CellInterpolator {
public:
  /// BdmMoments: target P^ell(T)^2; face moments vs P^ell(F), interior vs N^{ell-1}.
  /// RtnMoments: target RTN^ell; face vs P^{ell-1}(F), interior vs P^{ell-2}(T)^2.
  /// BdfmMoments: target BDFM^ell; face vs P^{ell-1}(F), interior vs P^{ell-2}(T)^2.
  /// L2Projection: target P^ell(T)^2; plain L2 projection.
  CellInterpolator(InterpKind kind, int ell, const CellFrameView& view,
                   CellBasis target, const Eigen::MatrixXd& mono_mass, int quad_degree);

  const CellBasis& target() const { return target_; }
  InterpKind kind() const { return kind_; }
  double condition() const { return condition_; }

  /// Interpolate a smooth field; quad_degree must make the moments exact.
  Eigen::VectorXd apply(const std::function<Vec2(const Vec2&)>& f, int quad_degree) const;
  /// Matrix of the interpolator on a polynomial source basis (target.dim x src.dim).
  Eigen::MatrixXd apply_to_basis(const CellBasis& src, int quad_degree) const;

private:
  Eigen::VectorXd solve_moments(const Eigen::VectorXd& m) const;

  InterpKind kind_;
  int ell_;
  CellFrameView view_;
  CellBasis target_;
  std::vector<FaceBasis> face_tests_;
  CellBasis interior_test_;
  bool has_interior_ = false;
  Eigen::MatrixXd mass_target_;  // used by the projection kind
  Eigen::PartialPivLU<Eigen::MatrixXd> dof_lu_;
  double condition_ = 1.;
};

}  // namespace hystokes

#endif
