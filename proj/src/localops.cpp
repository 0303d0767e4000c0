#include "hystokes/localops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hystokes {

namespace {

CellBasis make_u_basis(const MethodConfig& cfg, const MonoFrame& frame, const Eigen::MatrixXd& M) {
  switch (cfg.u_cell_space) {
    case CellVelocitySpace::FullPoly: return vector_cell_basis(frame, cfg.u_cell_deg, M);
    case CellVelocitySpace::Rtn: return orthonormalize(rtn_basis(frame, cfg.u_cell_deg, M), M);
    case CellVelocitySpace::Bdfm: return orthonormalize(bdfm_basis(frame, cfg.u_cell_deg, M), M);
  }
  throw std::logic_error("make_u_basis: invalid space");
}

CellBasis make_target_basis(const MethodConfig& cfg, const MonoFrame& frame, const Eigen::MatrixXd& M) {
  switch (cfg.interp) {
    case InterpKind::BdmMoments:
    case InterpKind::L2Projection: return vector_cell_basis(frame, cfg.interp_order, M);
    case InterpKind::RtnMoments: return orthonormalize(rtn_basis(frame, cfg.interp_order, M), M);
    case InterpKind::BdfmMoments: return orthonormalize(bdfm_basis(frame, cfg.interp_order, M), M);
  }
  throw std::logic_error("make_target_basis: invalid kind");
}

}  // namespace

LocalSpaces make_local_spaces(const Mesh& mesh, const MeshGeometry& geom, std::size_t cell,
                              const MethodConfig& cfg, const QuadOptions& quad) {
  LocalSpaces ls;
  ls.cfg = cfg;
  ls.view = CellFrameView{&mesh, &geom, cell};
  const auto& cg = geom.cell[cell];
  ls.frame = MonoFrame{cg.centroid, cg.diameter, cfg.k + 2};

  QuadRule mr = cell_rule(mesh, geom, cell, 2 * ls.frame.deg);
  Eigen::MatrixXd mv = ls.frame.eval(mr.nodes);
  ls.mono_mass = mv.transpose() * mr.weights.asDiagonal() * mv;

  ls.U = make_u_basis(cfg, ls.frame, ls.mono_mass);
  ls.P = scalar_cell_basis(ls.frame, cfg.p_cell_deg, ls.mono_mass);
  ls.Sigma = cfg.sigma == SigmaKind::MatrixValued
                 ? matrix_cell_basis(ls.frame, cfg.sigma_deg, ls.mono_mass)
                 : gradient_space_basis(ls.frame, cfg.sigma_deg, ls.mono_mass);
  ls.W = vector_cell_basis(ls.frame, cfg.w_deg, ls.mono_mass);
  ls.IT = make_target_basis(cfg, ls.frame, ls.mono_mass);

  ls.form_degree = quad.form_degree(cfg.k);
  ls.lambda_T = ls.view.n_faces() * cg.diameter * cg.diameter / cg.area;

  const int nf = ls.view.n_faces();
  ls.layout.ucell = ls.U.dim();
  ls.layout.pcell = ls.P.dim();
  ls.UF.reserve(nf);
  ls.PF.reserve(nf);
  for (int f = 0; f < nf; f++) {
    ls.UF.push_back(vector_face_basis(ls.view.fg(f), cfg.u_face_deg));
    ls.PF.push_back(scalar_face_basis(ls.view.fg(f), cfg.p_face_deg));
    ls.layout.uface.push_back(ls.UF[f].dim());
    ls.layout.pface.push_back(ls.PF[f].dim());
    ls.fq.push_back(face_rule(mesh, ls.view.face(f), ls.form_degree));
    ls.fq_frame.push_back(ls.frame.eval(ls.fq[f].nodes));
    ls.uf_mono.push_back(ls.UF[f].mono_values(ls.fq[f].nodes));
    ls.pf_mono.push_back(ls.PF[f].mono_values(ls.fq[f].nodes));
  }

  ls.interp = std::make_shared<CellInterpolator>(cfg.interp, cfg.interp_order, ls.view, ls.IT,
                                                 ls.mono_mass, ls.form_degree);
  return ls;
}

LocalOperators make_local_operators(const LocalSpaces& ls) {
  const LocalDofLayout& L = ls.layout;
  const Eigen::MatrixXd& M = ls.mono_mass;
  const int nf = L.n_faces();
  const int uN = L.u_total(), pN = L.p_total();
  LocalOperators op;

  // divergence: int_T D v q = -int_T v_T . grad q + sum_F int_F (v_F.n) q
  op.D = Eigen::MatrixXd::Zero(ls.P.dim(), uN);
  op.D.leftCols(L.ucell) = -basis_cross_gram(ls.P.gradient(), ls.U, M);

  // pressure gradient: int_T G q . v = -int_T q_T (div v) + sum_F int_F q_F (v.n)
  op.G = Eigen::MatrixXd::Zero(ls.U.dim(), pN);
  op.G.leftCols(L.pcell) = -basis_cross_gram(ls.U.divergence(), ls.P, M);

  // velocity gradient: int_T E v : s = int_T grad v_T : s + sum_F int_F (v_F - v_T).(s n)
  op.E = Eigen::MatrixXd::Zero(ls.Sigma.dim(), uN);
  op.E.leftCols(L.ucell) = basis_cross_gram(ls.Sigma, ls.U.gradient(), M);

  // velocity reconstruction r_T: grad-grad system plus average closure
  const CellBasis GW = ls.W.gradient();
  const int wdim = ls.W.dim();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(wdim + 2, wdim + 2);
  S.topLeftCorner(wdim, wdim) = basis_gram(GW, M);
  for (int a = 0; a < 2; a++) {
    Eigen::VectorXd avg = ls.W.component(a) * M.col(0);  // int_T (w_i)_a
    S.block(wdim + a, 0, 1, wdim) = avg.transpose();
    S.block(0, wdim + a, wdim, 1) = avg;
  }
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(wdim + 2, uN);
  rhs.block(0, 0, wdim, L.ucell) = -basis_cross_gram(GW.divergence(), ls.U, M);
  if (ls.cfg.avg_preserving()) {
    for (int a = 0; a < 2; a++)
      rhs.block(wdim + a, 0, 1, L.ucell) = (ls.U.component(a) * M.col(0)).transpose();
  }

  for (int f = 0; f < nf; f++) {
    const Vec2 n = ls.view.normal(f);
    const Eigen::VectorXd& w = ls.fq[f].weights;
    const Eigen::MatrixXd& mono = ls.fq_frame[f];
    const Eigen::MatrixXd fv0 = ls.UF[f].values(0, ls.uf_mono[f]);
    const Eigen::MatrixXd fv1 = ls.UF[f].values(1, ls.uf_mono[f]);
    const Eigen::MatrixXd uv0 = ls.U.values(0, mono);
    const Eigen::MatrixXd uv1 = ls.U.values(1, mono);

    op.D.block(0, L.u_offset(f), ls.P.dim(), L.uface[f]) =
        ls.P.values(0, mono).transpose() * w.asDiagonal() * (n.x() * fv0 + n.y() * fv1);

    op.G.block(0, L.p_offset(f), ls.U.dim(), L.pface[f]) =
        (n.x() * uv0 + n.y() * uv1).transpose() * w.asDiagonal() * ls.PF[f].values(0, ls.pf_mono[f]);

    // (s n)_a = s_a0 n_x + s_a1 n_y with matrix components ordered (00,01,10,11)
    const Eigen::MatrixXd sn0 = n.x() * ls.Sigma.values(0, mono) + n.y() * ls.Sigma.values(1, mono);
    const Eigen::MatrixXd sn1 = n.x() * ls.Sigma.values(2, mono) + n.y() * ls.Sigma.values(3, mono);
    op.E.leftCols(L.ucell) -=
        sn0.transpose() * w.asDiagonal() * uv0 + sn1.transpose() * w.asDiagonal() * uv1;
    op.E.block(0, L.u_offset(f), ls.Sigma.dim(), L.uface[f]) =
        sn0.transpose() * w.asDiagonal() * fv0 + sn1.transpose() * w.asDiagonal() * fv1;

    const Eigen::MatrixXd gwn0 = n.x() * GW.values(0, mono) + n.y() * GW.values(1, mono);
    const Eigen::MatrixXd gwn1 = n.x() * GW.values(2, mono) + n.y() * GW.values(3, mono);
    rhs.block(0, L.u_offset(f), wdim, L.uface[f]) =
        gwn0.transpose() * w.asDiagonal() * fv0 + gwn1.transpose() * w.asDiagonal() * fv1;

    if (!ls.cfg.avg_preserving()) {
      const double fac = ls.view.cg().area / (nf * ls.view.fg(f).length);
      rhs.block(wdim + 0, L.u_offset(f), 1, L.uface[f]) = fac * (w.transpose() * fv0);
      rhs.block(wdim + 1, L.u_offset(f), 1, L.uface[f]) = fac * (w.transpose() * fv1);
    }
  }

  op.R = S.partialPivLu().solve(rhs).topRows(wdim);

  // difference operators feeding the stabilization
  const Eigen::MatrixXd IW = ls.interp->apply_to_basis(ls.W, ls.form_degree);
  op.IU = ls.interp->apply_to_basis(ls.U, ls.form_degree);
  op.deltaT = IW * op.R;
  op.deltaT.leftCols(L.ucell) -= op.IU;

  op.deltaTF.resize(nf);
  for (int f = 0; f < nf; f++) {
    const Eigen::VectorXd& w = ls.fq[f].weights;
    const Eigen::MatrixXd& mono = ls.fq_frame[f];
    Eigen::MatrixXd PW =
        ls.UF[f].values(0, ls.uf_mono[f]).transpose() * w.asDiagonal() * ls.W.values(0, mono) +
        ls.UF[f].values(1, ls.uf_mono[f]).transpose() * w.asDiagonal() * ls.W.values(1, mono);
    op.deltaTF[f] = PW * op.R;
    op.deltaTF[f].block(0, L.u_offset(f), L.uface[f], L.uface[f]) -=
        Eigen::MatrixXd::Identity(L.uface[f], L.uface[f]);
  }
  return op;
}

bool interp_preserves_averages(const LocalSpaces& ls, double tol) {
  const int probe_deg = std::min(ls.cfg.interp_order + 1, ls.frame.deg);
  const CellBasis probe = vector_cell_basis(ls.frame, probe_deg, ls.mono_mass);
  const Eigen::MatrixXd IP = ls.interp->apply_to_basis(probe, ls.form_degree);
  double diff = 0.;
  for (int a = 0; a < 2; a++) {
    Eigen::VectorXd it_avg = ls.IT.component(a) * ls.mono_mass.col(0);
    Eigen::VectorXd pr_avg = probe.component(a) * ls.mono_mass.col(0);
    diff = std::max(diff, (IP.transpose() * it_avg - pr_avg).cwiseAbs().maxCoeff());
  }
  return diff <= tol * std::sqrt(ls.view.cg().area);
}

Eigen::MatrixXd velocity_jump_values(const LocalSpaces& ls, int f, int comp) {
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(ls.fq[f].size(), ls.layout.u_total());
  v.leftCols(ls.layout.ucell) = -ls.U.values(comp, ls.fq_frame[f]);
  v.middleCols(ls.layout.u_offset(f), ls.layout.uface[f]) = ls.UF[f].values(comp, ls.uf_mono[f]);
  return v;
}

Eigen::MatrixXd pressure_jump_values(const LocalSpaces& ls, int f) {
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(ls.fq[f].size(), ls.layout.p_total());
  v.leftCols(ls.layout.pcell) = -ls.P.values(0, ls.fq_frame[f]);
  v.middleCols(ls.layout.p_offset(f), ls.layout.pface[f]) = ls.PF[f].values(0, ls.pf_mono[f]);
  return v;
}

}  // namespace hystokes
