#ifndef HYSTOKES_FORMS_HPP
#define HYSTOKES_FORMS_HPP

#include <Eigen/Dense>

#include "hystokes/localops.hpp"

namespace hystokes {

/// Local bilinear forms over the hybrid layout of one cell.
struct LocalForms {
  Eigen::MatrixXd A;      ///< viscous form a_T (stabilization included, viscosity not applied)
  Eigen::MatrixXd B;      ///< coupling b_T(v, q) = int_T G_T q . v_T, pressure x velocity
  Eigen::MatrixXd Dstab;  ///< pressure jump form d_T = h_T sum_F int_F (p_F - p_T)(q_F - q_T)
};

/// nu is only consumed by the augmented (boxed) stabilization, which embeds
/// a 1/nu factor; the assembled scheme multiplies A by nu in all cases.
LocalForms make_local_forms(const LocalSpaces& ls, const LocalOperators& op, double nu = 1.);

/// Stabilization matrix s_T alone (A minus the consistent gradient part).
Eigen::MatrixXd stabilization_matrix(const LocalSpaces& ls, const LocalOperators& op, double nu = 1.);

/// Divergence-route evaluation of the coupling:
///   -int_T (D_T v) q_T + sum_F int_F (v_T - v_F).n (q_F - q_T).
/// Differs from b_T by coupling_lift_correction; the two routes agree after
/// global assembly on velocities with vanishing boundary traces.
Eigen::MatrixXd coupling_matrix_bis(const LocalSpaces& ls, const LocalOperators& op);

/// The face term sum_F int_F (v_F.n) q_F separating the two coupling routes;
/// cancels across internal faces and vanishes on boundary faces of the
/// zero-trace velocity space.
Eigen::MatrixXd coupling_lift_correction(const LocalSpaces& ls);

/// Direct quadrature evaluation of the gradient-penalty viscous form
///   int_T grad w : grad v
///   + sum_F int_F (w_F - w_T).(grad v_T n) + sum_F int_F (grad w_T n).(v_F - v_T)
///   + eta sum_F h_F^{-1} int_F (w_F - w_T).(v_F - v_T),
/// which the rewritten discrete-gradient form must reproduce exactly.
Eigen::MatrixXd rw_viscous_direct(const LocalSpaces& ls, double eta);

}  // namespace hystokes

#endif
