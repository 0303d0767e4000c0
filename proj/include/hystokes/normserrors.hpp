#ifndef HYSTOKES_NORMSERRORS_HPP
#define HYSTOKES_NORMSERRORS_HPP

#include <Eigen/Dense>
#include <array>
#include <functional>

#include "hystokes/scheme.hpp"

namespace hystokes {

/// Closed-form reference solution; grad_u follows the (grad v)_ab = d_b v_a
/// convention, and f_degree >= 0 marks a polynomial volume load.
struct ExactSolution {
  std::function<Vec2(const Vec2&)> u;
  std::function<Eigen::Matrix2d(const Vec2&)> grad_u;
  std::function<double(const Vec2&)> p;
  std::function<Vec2(const Vec2&)> f;
  double nu = 1.;
  int f_degree = -1;

  Forcing forcing() const { return {f, f_degree}; }
};

HybridField subtract(const HybridField& a, const HybridField& b);

/// L2 norm of the cell part of a hybrid field (exact: coefficient two-norm
/// over the orthonormal cell bases).
double cell_l2(const HybridField& f);

/// Local coefficient vectors [cell | face0 | face1 | ...] of a hybrid field.
Eigen::VectorXd local_velocity(const Discretization& disc, std::size_t cell, const HybridField& f);
Eigen::VectorXd local_pressure(const Discretization& disc, std::size_t cell, const HybridField& f);

/// Discrete H1 norm: sum_T ( |grad v_T|^2 + h_T^{-1} sum_F |pi_F(v_F - v_T)|_F^2 ),
/// with the jump projected onto the face velocity space.
double norm_1h(const Discretization& disc, const HybridField& u);
/// Pressure jump seminorm: sum_T h_T sum_F |q_F - q_T|_F^2.
double seminorm_0h(const Discretization& disc, const HybridField& p);
/// |q_h|_{L2}^2 + sum_T h_T^2 |G_T q|^2.
double norm_Ph(const Discretization& disc, const HybridField& p);
/// Energy norm nu |u|_{1,h}^2 + nu^{-1} |p|_{P,h}^2 + delta nu^{-1} |p|_{0,h}^2.
double norm_nuh(const Discretization& disc, const HybridField& u, const HybridField& p, double nu);
/// max over cells of the L2 norm of div(u_T).
double divergence_norm_max(const Discretization& disc, const HybridField& u);

/// Cell part by the method's interpolator, face parts by L2 projection.
HybridField interpolate_velocity(const Discretization& disc,
                                 const std::function<Vec2(const Vec2&)>& u);
/// Cell and face parts by L2 projection.
HybridField interpolate_pressure(const Discretization& disc,
                                 const std::function<double(const Vec2&)>& p);

/// The five reported error measures: hybrid-H1 and L2 velocity errors against
/// the interpolant, reconstruction errors against the exact field, and the L2
/// pressure error against the pressure projection.
struct ErrorReport {
  double e_1h = 0.;       ///< |u_h - Iu|_{1,h}
  double e_grad_rec = 0.; ///< |grad(r_h u_h) - grad u|_{L2}
  double e_L2 = 0.;       ///< |u_h - Iu|_{L2} (cell parts)
  double e_rec = 0.;      ///< |r_h u_h - u|_{L2}
  double e_p = 0.;        ///< |p_h - Ip|_{L2} (cell parts)

  std::array<double, 5> columns() const { return {e_1h, e_grad_rec, e_L2, e_rec, e_p}; }
};

ErrorReport compute_errors(const Discretization& disc, const HybridSolution& sol,
                           const ExactSolution& exact, int threads = 0);

}  // namespace hystokes

#endif
