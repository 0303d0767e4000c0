#ifndef HYSTOKES_SCHEME_HPP
#define HYSTOKES_SCHEME_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "hystokes/forms.hpp"
#include "hystokes/localops.hpp"
#include "hystokes/mesh.hpp"
#include "hystokes/method.hpp"

namespace hystokes {

/// Per-cell discrete spaces and operators for a (mesh, method) pair, built
/// once and shared by assembly, error evaluation and the property checks.
struct Discretization {
  const Mesh* mesh = nullptr;
  MeshGeometry geom;
  MethodConfig cfg;
  QuadOptions quad;
  std::vector<LocalSpaces> spaces;  // one per cell
  std::vector<LocalOperators> ops;  // one per cell

  // Uniform block dimensions (identical across cells for a fixed method).
  int ucell_dim = 0, uface_dim = 0, pcell_dim = 0, pface_dim = 0;

  Discretization(const Mesh& mesh, const MethodConfig& cfg, const QuadOptions& quad = {},
                 int threads = 0);

  std::size_t n_cells() const { return mesh->cells.size(); }
  std::size_t n_faces() const { return mesh->faces.size(); }
};

/// Numeric subspace checks for the inclusions the method relies on
/// (gradients of cell pressures inside the cell velocity space, divergences
/// of cell velocities inside the cell pressure space where claimed, stress
/// divergences and normal traces compatible with the velocity spaces).
/// Throws std::runtime_error naming the first violated inclusion.
void check_method_assumptions(const LocalSpaces& ls);

/// Global numbering of the hybrid unknowns. Uncondensed order:
///   [cell velocity | internal-face velocity | cell pressure | face pressure | multiplier];
/// condensed order:
///   [internal-face velocity | cell-pressure mean | face pressure | multiplier].
/// Boundary-face velocities are eliminated by the homogeneous Dirichlet
/// condition and carry offset -1.
struct DofMap {
  std::vector<std::ptrdiff_t> ucell, uface, pcell, pface;
  std::ptrdiff_t multiplier = -1;
  std::ptrdiff_t size = 0;
  int ucell_dim = 0, uface_dim = 0, pcell_dim = 0, pface_dim = 0;
  bool condensed = false;
};

DofMap build_dof_map(const Discretization& disc, bool condensed);

/// Volume load; poly_degree >= 0 marks an exactly-integrable polynomial and
/// enables the quadrature under-resolution warning in assemble().
struct Forcing {
  std::function<Vec2(const Vec2&)> f;
  int poly_degree = -1;
};

/// Assembled saddle-point system
///   [ nu*A   B^T ] [u]   [F]
///   [ B   -d/nu*D ] [p] = [0],   plus one symmetric multiplier row/column
/// pinning the global pressure mean to zero. Per-cell blocks are retained for
/// static condensation and for recovering eliminated unknowns after a solve.
struct GlobalSystem {
  const Discretization* disc = nullptr;
  double nu = 1.0;
  DofMap map;                     // numbering of the current matrix
  Eigen::SparseMatrix<double> A;  // current (full or condensed) matrix
  Eigen::VectorXd b;
  std::ptrdiff_t full_size = 0;  // size before condensation

  // Per-cell coupled blocks over [u_T | u_F... | p_T | p_F... | multiplier].
  std::vector<Eigen::MatrixXd> local_K;
  std::vector<Eigen::VectorXd> local_F;

  // Condensation recovery, one entry per cell: x_elim = rec_vec - rec_mat * x_kept.
  std::vector<Eigen::MatrixXd> rec_mat;
  std::vector<Eigen::VectorXd> rec_vec;

  bool condensed() const { return map.condensed; }
};

GlobalSystem assemble(const Discretization& disc, double nu, const Forcing& load,
                      int threads = 0);

/// Replaces the system by its static condensation onto
/// [internal-face velocity | cell-pressure mean | face pressure | multiplier].
/// Throws if the system is already condensed.
void condense(GlobalSystem& sys, int threads = 0);

/// Hybrid coefficient fields; face entries on the boundary are explicit zero
/// vectors of the right dimension.
struct HybridField {
  std::vector<Eigen::VectorXd> cell;
  std::vector<Eigen::VectorXd> face;
};

struct HybridSolution {
  HybridField u;
  HybridField p;
  double multiplier = 0.0;
  double mean_pressure = 0.0;  // assembled pressure mean, reported as a diagnostic
  double residual = 0.0;       // relative algebraic residual of the solve
};

/// Sparse LU solve with residual verification (relative residual <= 1e-10,
/// else throws) and recovery of condensed unknowns.
HybridSolution solve(const GlobalSystem& sys);

/// Writes mesh/method metadata, the DOF layout and the hybrid coefficient
/// arrays as JSON.
void write_solution_json(const std::string& path, const GlobalSystem& sys,
                         const HybridSolution& sol);

}  // namespace hystokes

#endif
