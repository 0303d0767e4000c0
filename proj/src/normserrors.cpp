#include "hystokes/normserrors.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "hystokes/parallel.hpp"
#include "hystokes/quadrature.hpp"

namespace hystokes {

HybridField subtract(const HybridField& a, const HybridField& b) {
  if (a.cell.size() != b.cell.size() || a.face.size() != b.face.size())
    throw std::invalid_argument("subtract: field shapes differ");
  HybridField out;
  out.cell.resize(a.cell.size());
  out.face.resize(a.face.size());
  for (std::size_t i = 0; i < a.cell.size(); i++) out.cell[i] = a.cell[i] - b.cell[i];
  for (std::size_t i = 0; i < a.face.size(); i++) out.face[i] = a.face[i] - b.face[i];
  return out;
}

double cell_l2(const HybridField& f) {
  double acc = 0.;
  for (const Eigen::VectorXd& v : f.cell) acc += v.squaredNorm();
  return std::sqrt(acc);
}

namespace {

Eigen::VectorXd gather_local(const Discretization& disc, std::size_t cell, const HybridField& f,
                             int cell_dim, const std::vector<int>& face_dims) {
  const auto& faces = disc.mesh->cell_faces[cell];
  int total = cell_dim;
  for (int d : face_dims) total += d;
  Eigen::VectorXd v(total);
  v.head(cell_dim) = f.cell[cell];
  int off = cell_dim;
  for (std::size_t i = 0; i < faces.size(); i++) {
    v.segment(off, face_dims[i]) = f.face[faces[i]];
    off += face_dims[i];
  }
  return v;
}

}  // namespace

Eigen::VectorXd local_velocity(const Discretization& disc, std::size_t cell,
                               const HybridField& f) {
  const LocalDofLayout& L = disc.spaces[cell].layout;
  return gather_local(disc, cell, f, L.ucell, L.uface);
}

Eigen::VectorXd local_pressure(const Discretization& disc, std::size_t cell,
                               const HybridField& f) {
  const LocalDofLayout& L = disc.spaces[cell].layout;
  return gather_local(disc, cell, f, L.pcell, L.pface);
}

double norm_1h(const Discretization& disc, const HybridField& u) {
  double acc = 0.;
  for (std::size_t c = 0; c < disc.n_cells(); c++) {
    const LocalSpaces& ls = disc.spaces[c];
    Eigen::VectorXd uloc = local_velocity(disc, c, u);
    Eigen::MatrixXd gg = basis_gram(ls.U.gradient(), ls.mono_mass);
    Eigen::VectorXd ucell = uloc.head(ls.layout.ucell);
    acc += ucell.dot(gg * ucell);
    double hT = ls.view.cg().diameter;
    for (int f = 0; f < ls.layout.n_faces(); f++) {
      // jump measured after projecting the cell trace onto the face space;
      // the face basis is orthonormal so the squared face norm is the
      // squared coefficient norm
      Eigen::VectorXd pj = uloc.segment(ls.layout.u_offset(f), ls.layout.uface[f]);
      for (int comp = 0; comp < 2; comp++)
        pj -= ls.UF[f].values(comp, ls.uf_mono[f]).transpose() *
              ls.fq[f].weights.asDiagonal() * ls.U.values(comp, ls.fq_frame[f]) * ucell;
      acc += pj.squaredNorm() / hT;
    }
  }
  return std::sqrt(acc);
}

double seminorm_0h(const Discretization& disc, const HybridField& p) {
  double acc = 0.;
  for (std::size_t c = 0; c < disc.n_cells(); c++) {
    const LocalSpaces& ls = disc.spaces[c];
    Eigen::VectorXd ploc = local_pressure(disc, c, p);
    double hT = ls.view.cg().diameter;
    for (int f = 0; f < ls.layout.n_faces(); f++) {
      Eigen::VectorXd j = pressure_jump_values(ls, f) * ploc;
      acc += hT * j.array().square().matrix().dot(ls.fq[f].weights);
    }
  }
  return std::sqrt(acc);
}

double norm_Ph(const Discretization& disc, const HybridField& p) {
  double acc = 0.;
  for (std::size_t c = 0; c < disc.n_cells(); c++) {
    const LocalSpaces& ls = disc.spaces[c];
    Eigen::VectorXd ploc = local_pressure(disc, c, p);
    double hT = ls.view.cg().diameter;
    acc += ploc.head(ls.layout.pcell).squaredNorm();
    acc += hT * hT * (disc.ops[c].G * ploc).squaredNorm();
  }
  return std::sqrt(acc);
}

double norm_nuh(const Discretization& disc, const HybridField& u, const HybridField& p,
                double nu) {
  double a = norm_1h(disc, u), b = norm_Ph(disc, p);
  double acc = nu * a * a + b * b / nu;
  if (disc.cfg.delta != 0) {
    double s = seminorm_0h(disc, p);
    acc += s * s / nu;
  }
  return std::sqrt(acc);
}

double divergence_norm_max(const Discretization& disc, const HybridField& u) {
  double worst = 0.;
  for (std::size_t c = 0; c < disc.n_cells(); c++) {
    const LocalSpaces& ls = disc.spaces[c];
    Eigen::MatrixXd dg = basis_gram(ls.U.divergence(), ls.mono_mass);
    const Eigen::VectorXd& ucell = u.cell[c];
    worst = std::max(worst, std::sqrt(std::max(0., ucell.dot(dg * ucell))));
  }
  return worst;
}

HybridField interpolate_velocity(const Discretization& disc,
                                 const std::function<Vec2(const Vec2&)>& u) {
  HybridField out;
  out.cell.resize(disc.n_cells());
  out.face.resize(disc.n_faces());
  int qd = disc.quad.error_degree();
  bool boxed = disc.cfg.stab == StabKind::HhoBoxed;
  for (std::size_t c = 0; c < disc.n_cells(); c++) {
    const LocalSpaces& ls = disc.spaces[c];
    Eigen::VectorXd it = ls.interp->apply(u, qd);
    // the boxed variant interpolates into IT, a subspace of the widened U
    out.cell[c] = boxed ? Eigen::VectorXd(basis_cross_gram(ls.U, ls.IT, ls.mono_mass) * it) : it;
  }
  for (std::size_t f = 0; f < disc.n_faces(); f++) {
    std::size_t owner = disc.mesh->faces[f].owner;
    const LocalSpaces& ls = disc.spaces[owner];
    const auto& faces = disc.mesh->cell_faces[owner];
    int lf = 0;
    while (faces[static_cast<std::size_t>(lf)] != f) lf++;
    out.face[f] = project_face_vector(u, ls.UF[lf], face_rule(*disc.mesh, f, qd));
  }
  return out;
}

HybridField interpolate_pressure(const Discretization& disc,
                                 const std::function<double(const Vec2&)>& p) {
  HybridField out;
  out.cell.resize(disc.n_cells());
  out.face.resize(disc.n_faces());
  int qd = disc.quad.error_degree();
  for (std::size_t c = 0; c < disc.n_cells(); c++) {
    const LocalSpaces& ls = disc.spaces[c];
    out.cell[c] = project_scalar(p, ls.P, cell_rule(*disc.mesh, disc.geom, c, qd));
  }
  for (std::size_t f = 0; f < disc.n_faces(); f++) {
    std::size_t owner = disc.mesh->faces[f].owner;
    const LocalSpaces& ls = disc.spaces[owner];
    const auto& faces = disc.mesh->cell_faces[owner];
    int lf = 0;
    while (faces[static_cast<std::size_t>(lf)] != f) lf++;
    out.face[f] = project_face_scalar(p, ls.PF[lf], face_rule(*disc.mesh, f, qd));
  }
  return out;
}

ErrorReport compute_errors(const Discretization& disc, const HybridSolution& sol,
                           const ExactSolution& exact, int threads) {
  HybridField Iu = interpolate_velocity(disc, exact.u);
  HybridField Ip = interpolate_pressure(disc, exact.p);
  HybridField du = subtract(sol.u, Iu);

  ErrorReport rep;
  rep.e_1h = norm_1h(disc, du);
  rep.e_L2 = cell_l2(du);
  rep.e_p = cell_l2(subtract(sol.p, Ip));

  std::size_t nc = disc.n_cells();
  std::vector<double> rec2(nc, 0.), grad2(nc, 0.);
  parallel_for(
      nc,
      [&](std::size_t c) {
        const LocalSpaces& ls = disc.spaces[c];
        Eigen::VectorXd uloc = local_velocity(disc, c, sol.u);
        Eigen::VectorXd rc = disc.ops[c].R * uloc;
        // for reporting, re-fix the reconstruction's cell mean from face data:
        // its boundary integral is matched to the face unknowns' integral, so
        // the reported field depends on the constant part only through the
        // skeleton values
        double perim = 0.;
        Vec2 bint = Vec2::Zero(), fint = Vec2::Zero();
        for (int f = 0; f < ls.layout.n_faces(); f++) {
          perim += ls.view.fg(f).length;
          Eigen::VectorXd uf = uloc.segment(ls.layout.u_offset(f), ls.layout.uface[f]);
          for (int comp = 0; comp < 2; comp++) {
            bint[comp] += ls.fq[f].weights.dot(
                Eigen::VectorXd(ls.W.values(comp, ls.fq_frame[f]) * rc));
            fint[comp] += ls.fq[f].weights.dot(
                Eigen::VectorXd(ls.UF[f].values(comp, ls.uf_mono[f]) * uf));
          }
        }
        Vec2 shift = (fint - bint) / perim;
        QuadRule rule = cell_rule(*disc.mesh, disc.geom, c, disc.quad.error_degree());
        Eigen::MatrixXd mv = ls.frame.eval(rule.nodes);
        Eigen::VectorXd w0 = ls.W.values(0, mv) * rc, w1 = ls.W.values(1, mv) * rc;
        w0.array() += shift.x();
        w1.array() += shift.y();
        CellBasis GW = ls.W.gradient();
        Eigen::VectorXd g00 = GW.values(0, mv) * rc, g01 = GW.values(1, mv) * rc;
        Eigen::VectorXd g10 = GW.values(2, mv) * rc, g11 = GW.values(3, mv) * rc;
        double sr = 0., sg = 0.;
        for (Eigen::Index q = 0; q < rule.size(); q++) {
          Vec2 x = rule.nodes.row(q).transpose();
          Vec2 ue = exact.u(x);
          Eigen::Matrix2d ge = exact.grad_u(x);
          double w = rule.weights[q];
          sr += w * ((w0[q] - ue.x()) * (w0[q] - ue.x()) + (w1[q] - ue.y()) * (w1[q] - ue.y()));
          sg += w * ((g00[q] - ge(0, 0)) * (g00[q] - ge(0, 0)) +
                     (g01[q] - ge(0, 1)) * (g01[q] - ge(0, 1)) +
                     (g10[q] - ge(1, 0)) * (g10[q] - ge(1, 0)) +
                     (g11[q] - ge(1, 1)) * (g11[q] - ge(1, 1)));
        }
        rec2[c] = sr;
        grad2[c] = sg;
      },
      threads);
  double sr = 0., sg = 0.;
  for (std::size_t c = 0; c < nc; c++) {
    sr += rec2[c];
    sg += grad2[c];
  }
  rep.e_rec = std::sqrt(sr);
  rep.e_grad_rec = std::sqrt(sg);
  return rep;
}

}  // namespace hystokes
