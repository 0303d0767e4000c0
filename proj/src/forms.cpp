#include "hystokes/forms.hpp"

#include <stdexcept>

namespace hystokes {

namespace {

Eigen::MatrixXd classical_stab(const LocalSpaces& ls, const LocalOperators& op) {
  const double hT = ls.view.cg().diameter;
  Eigen::MatrixXd S = (ls.lambda_T / (hT * hT)) * op.deltaT.transpose() * op.deltaT;
  for (int f = 0; f < ls.layout.n_faces(); f++)
    S += op.deltaTF[f].transpose() * op.deltaTF[f] / ls.view.fg(f).length;
  return S;
}

Eigen::MatrixXd rw_stab(const LocalSpaces& ls, const LocalOperators& op) {
  Eigen::MatrixXd EmG = op.E;
  EmG.leftCols(ls.layout.ucell) -= basis_cross_gram(ls.Sigma, ls.U.gradient(), ls.mono_mass);
  Eigen::MatrixXd S = -EmG.transpose() * EmG;
  for (int f = 0; f < ls.layout.n_faces(); f++) {
    const double fac = ls.cfg.eta / ls.view.fg(f).length;
    for (int c = 0; c < 2; c++) {
      Eigen::MatrixXd J = velocity_jump_values(ls, f, c);
      S += fac * J.transpose() * ls.fq[f].weights.asDiagonal() * J;
    }
  }
  return S;
}

Eigen::MatrixXd boxed_term(const LocalSpaces& ls, const LocalOperators& op) {
  const int ucell = ls.layout.ucell;
  const Eigen::MatrixXd X = basis_cross_gram(ls.U, ls.IT, ls.mono_mass);
  const Eigen::MatrixXd XI = X * op.IU;
  Eigen::MatrixXd box = Eigen::MatrixXd::Identity(ucell, ucell) - XI - XI.transpose() +
                        op.IU.transpose() * op.IU;
  const double hT = ls.view.cg().diameter;
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(ls.layout.u_total(), ls.layout.u_total());
  S.topLeftCorner(ucell, ucell) = (ls.lambda_T / (hT * hT)) * box;
  return S;
}

}  // namespace

Eigen::MatrixXd stabilization_matrix(const LocalSpaces& ls, const LocalOperators& op, double nu) {
  switch (ls.cfg.stab) {
    case StabKind::HhoClassical: return classical_stab(ls, op);
    case StabKind::RhebergenWells: return rw_stab(ls, op);
    case StabKind::HhoBoxed: return classical_stab(ls, op) + boxed_term(ls, op) / nu;
  }
  throw std::logic_error("stabilization_matrix: invalid kind");
}

LocalForms make_local_forms(const LocalSpaces& ls, const LocalOperators& op, double nu) {
  LocalForms lf;
  lf.A = op.E.transpose() * op.E + stabilization_matrix(ls, op, nu);

  lf.B = Eigen::MatrixXd::Zero(ls.layout.p_total(), ls.layout.u_total());
  lf.B.leftCols(ls.layout.ucell) = op.G.transpose();

  // each face jump carries its own length scale; this keeps the penalty
  // graded on cells with faces of very different size
  lf.Dstab = Eigen::MatrixXd::Zero(ls.layout.p_total(), ls.layout.p_total());
  for (int f = 0; f < ls.layout.n_faces(); f++) {
    Eigen::MatrixXd J = pressure_jump_values(ls, f);
    lf.Dstab += ls.view.fg(f).length * J.transpose() * ls.fq[f].weights.asDiagonal() * J;
  }
  return lf;
}

Eigen::MatrixXd coupling_matrix_bis(const LocalSpaces& ls, const LocalOperators& op) {
  const int pN = ls.layout.p_total(), uN = ls.layout.u_total();
  Eigen::MatrixXd bis = Eigen::MatrixXd::Zero(pN, uN);
  bis.topRows(ls.layout.pcell) = -op.D;
  for (int f = 0; f < ls.layout.n_faces(); f++) {
    const Vec2 n = ls.view.normal(f);
    Eigen::MatrixXd Pj = pressure_jump_values(ls, f);
    for (int c = 0; c < 2; c++) {
      Eigen::MatrixXd Vj = velocity_jump_values(ls, f, c);
      bis -= n[c] * Pj.transpose() * ls.fq[f].weights.asDiagonal() * Vj;
    }
  }
  return bis;
}

Eigen::MatrixXd coupling_lift_correction(const LocalSpaces& ls) {
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(ls.layout.p_total(), ls.layout.u_total());
  for (int f = 0; f < ls.layout.n_faces(); f++) {
    const Vec2 n = ls.view.normal(f);
    const Eigen::MatrixXd vn = n.x() * ls.UF[f].values(0, ls.uf_mono[f]) +
                               n.y() * ls.UF[f].values(1, ls.uf_mono[f]);
    C.block(ls.layout.p_offset(f), ls.layout.u_offset(f), ls.layout.pface[f],
            ls.layout.uface[f]) = ls.PF[f].values(0, ls.pf_mono[f]).transpose() *
                                  ls.fq[f].weights.asDiagonal() * vn;
  }
  return C;
}

Eigen::MatrixXd rw_viscous_direct(const LocalSpaces& ls, double eta) {
  const int uN = ls.layout.u_total(), ucell = ls.layout.ucell;
  const CellBasis GU = ls.U.gradient();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(uN, uN);
  A.topLeftCorner(ucell, ucell) = basis_gram(GU, ls.mono_mass);
  for (int f = 0; f < ls.layout.n_faces(); f++) {
    const Vec2 n = ls.view.normal(f);
    const Eigen::VectorXd& w = ls.fq[f].weights;
    const double jfac = eta / ls.view.fg(f).length;
    for (int c = 0; c < 2; c++) {
      Eigen::MatrixXd Gn = Eigen::MatrixXd::Zero(ls.fq[f].size(), uN);
      Gn.leftCols(ucell) = n.x() * GU.values(2 * c, ls.fq_frame[f]) +
                           n.y() * GU.values(2 * c + 1, ls.fq_frame[f]);
      Eigen::MatrixXd Vj = velocity_jump_values(ls, f, c);
      Eigen::MatrixXd cross = Gn.transpose() * w.asDiagonal() * Vj;
      A += cross + cross.transpose() + jfac * Vj.transpose() * w.asDiagonal() * Vj;
    }
  }
  return A;
}

}  // namespace hystokes
