#ifndef HYSTOKES_LOCALOPS_HPP
#define HYSTOKES_LOCALOPS_HPP

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "hystokes/mesh.hpp"
#include "hystokes/method.hpp"
#include "hystokes/polyspaces.hpp"
#include "hystokes/quadrature.hpp"

namespace hystokes {

/// Block layout of the hybrid unknowns attached to one cell:
/// velocity [u_T | u_F0 | u_F1 | ...], pressure [p_T | p_F0 | p_F1 | ...].
struct LocalDofLayout {
  int ucell = 0;
  std::vector<int> uface;
  int pcell = 0;
  std::vector<int> pface;

  int n_faces() const { return static_cast<int>(uface.size()); }
  int u_total() const {
    int n = ucell;
    for (int d : uface) n += d;
    return n;
  }
  int p_total() const {
    int n = pcell;
    for (int d : pface) n += d;
    return n;
  }
  int total() const { return u_total() + p_total(); }
  /// offset of the face-f velocity block within the velocity part
  int u_offset(int f) const {
    int o = ucell;
    for (int i = 0; i < f; i++) o += uface[i];
    return o;
  }
  /// offset of the face-f pressure block within the pressure part
  int p_offset(int f) const {
    int o = pcell;
    for (int i = 0; i < f; i++) o += pface[i];
    return o;
  }
};

/// Per-cell bases, interpolator and quadrature caches shared by the local
/// operators, bilinear forms and error computations.
struct LocalSpaces {
  MethodConfig cfg;
  CellFrameView view;
  MonoFrame frame;           ///< shared monomial frame of degree k+2
  Eigen::MatrixXd mono_mass; ///< exact monomial Gram matrix on the cell

  CellBasis U;      ///< cell velocity basis, orthonormal
  CellBasis P;      ///< cell pressure basis, orthonormal
  CellBasis Sigma;  ///< discrete velocity gradient space, orthonormal
  CellBasis W;      ///< velocity reconstruction space P^{w_deg}^2, orthonormal
  CellBasis IT;     ///< interpolation target (equals U except for the boxed variant)
  std::vector<FaceBasis> UF;  ///< face velocity bases, orthonormal
  std::vector<FaceBasis> PF;  ///< face pressure bases, orthonormal
  std::shared_ptr<CellInterpolator> interp;  ///< I_{U,T} onto IT

  double lambda_T = 0.;  ///< card(F_T) h_T^2 / |T|
  int form_degree = 0;   ///< quadrature exactness used for operator/form integrands
  LocalDofLayout layout;

  // face quadrature caches at the form degree
  std::vector<QuadRule> fq;
  std::vector<Eigen::MatrixXd> fq_frame;  ///< frame monomial values at face nodes
  std::vector<Eigen::MatrixXd> uf_mono;   ///< UF 1D monomial values at face nodes
  std::vector<Eigen::MatrixXd> pf_mono;   ///< PF 1D monomial values at face nodes
};

LocalSpaces make_local_spaces(const Mesh& mesh, const MeshGeometry& geom, std::size_t cell,
                              const MethodConfig& cfg, const QuadOptions& quad = {});

/// Local operators as coefficient maps from the hybrid blocks (layout order)
/// into the orthonormal bases of LocalSpaces.
struct LocalOperators {
  Eigen::MatrixXd D;  ///< discrete divergence, P coefficients x velocity unknowns
  Eigen::MatrixXd G;  ///< discrete pressure gradient, U coefficients x pressure unknowns
  Eigen::MatrixXd E;  ///< discrete velocity gradient, Sigma coefficients x velocity unknowns
  Eigen::MatrixXd R;   ///< velocity reconstruction, W coefficients x velocity unknowns
  Eigen::MatrixXd IU;  ///< I_{U,T} applied to the U basis, IT coefficients (identity unless boxed)
  Eigen::MatrixXd deltaT;                ///< I_{U,T}(r_T . - v_T), IT coefficients
  std::vector<Eigen::MatrixXd> deltaTF;  ///< pi_{U_F}(r_T . - v_F), UF coefficients
};

LocalOperators make_local_operators(const LocalSpaces& ls);

/// Numerical check that I_{U,T} preserves cell averages, probing vector
/// polynomials one degree above the interpolation order. Must agree with
/// MethodConfig::avg_preserving (verified in tests and at assembly).
bool interp_preserves_averages(const LocalSpaces& ls, double tol = 1e-11);

/// Values at the face-f quadrature nodes of one component of (v_F - v_T),
/// as a matrix applied to the local velocity coefficients.
Eigen::MatrixXd velocity_jump_values(const LocalSpaces& ls, int f, int comp);

/// Values at the face-f quadrature nodes of (q_F - q_T), applied to the
/// local pressure coefficients.
Eigen::MatrixXd pressure_jump_values(const LocalSpaces& ls, int f);

}  // namespace hystokes

#endif
