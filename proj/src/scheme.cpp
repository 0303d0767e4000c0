#include "hystokes/scheme.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <stdexcept>
#include <vector>

#include "hystokes/parallel.hpp"
#include "hystokes/quadrature.hpp"

namespace hystokes {

namespace {

/// Worst relative L2 distance from a member of `sub` to its projection onto
/// the orthonormal basis `space` (0 when the inclusion holds).
double inclusion_residual(const CellBasis& sub, const CellBasis& space,
                          const Eigen::MatrixXd& mono_mass) {
  Eigen::MatrixXd g = basis_gram(sub, mono_mass);
  Eigen::MatrixXd c = basis_cross_gram(sub, space, mono_mass);
  double worst = 0.;
  for (int i = 0; i < sub.dim(); i++) {
    double full = g(i, i);
    if (full < 1e-28) continue;  // zero member, e.g. the gradient of a constant
    worst = std::max(worst, (full - c.row(i).squaredNorm()) / full);
  }
  return std::max(worst, 0.);
}

}  // namespace

void check_method_assumptions(const LocalSpaces& ls) {
  const double tol = 1e-9;
  if (inclusion_residual(ls.P.gradient(), ls.U, ls.mono_mass) > tol)
    throw std::runtime_error("method assumptions: grad(P_T) is not contained in U_T");
  if (inclusion_residual(ls.U.divergence(), ls.P, ls.mono_mass) > tol)
    throw std::runtime_error("method assumptions: div(U_T) is not contained in P_T");
  if (inclusion_residual(ls.Sigma.divergence(), ls.U, ls.mono_mass) > tol)
    throw std::runtime_error("method assumptions: div(Sigma_T) is not contained in U_T");
  if (ls.cfg.p_cell_deg > ls.cfg.u_face_deg)
    throw std::runtime_error("method assumptions: cell pressure traces exceed the face velocity degree");
  if (ls.cfg.sigma_deg > ls.cfg.u_face_deg)
    throw std::runtime_error("method assumptions: stress normal traces exceed the face velocity degree");
}

Discretization::Discretization(const Mesh& m, const MethodConfig& c, const QuadOptions& q,
                               int threads)
    : mesh(&m), cfg(c), quad(q) {
  if (m.cells.empty()) throw std::invalid_argument("discretization: empty mesh");
  if (!mesh_compatible(m, cfg.compat))
    throw std::invalid_argument("discretization: mesh is incompatible with method '" +
                                cfg.label() + "'");
  geom = geometry(m);
  std::size_t nc = m.cells.size();

  std::vector<std::optional<LocalSpaces>> tmp(nc);
  parallel_for(nc, [&](std::size_t i) { tmp[i].emplace(make_local_spaces(m, geom, i, cfg, quad)); },
               threads);
  spaces.reserve(nc);
  for (auto& t : tmp) spaces.push_back(std::move(*t));
  tmp.clear();

  ops.resize(nc);
  parallel_for(nc, [&](std::size_t i) { ops[i] = make_local_operators(spaces[i]); }, threads);

  ucell_dim = spaces[0].U.dim();
  pcell_dim = spaces[0].P.dim();
  uface_dim = spaces[0].UF[0].dim();
  pface_dim = spaces[0].PF[0].dim();
  for (const LocalSpaces& ls : spaces) {
    bool ok = ls.U.dim() == ucell_dim && ls.P.dim() == pcell_dim;
    for (const FaceBasis& fb : ls.UF) ok = ok && fb.dim() == uface_dim;
    for (const FaceBasis& fb : ls.PF) ok = ok && fb.dim() == pface_dim;
    if (!ok) throw std::logic_error("discretization: non-uniform block dimensions");
  }

  check_method_assumptions(spaces[0]);
  if (interp_preserves_averages(spaces[0]) != cfg.avg_preserving())
    throw std::logic_error(
        "discretization: interpolator average-preservation disagrees with the configuration of '" +
        cfg.label() + "'");
}

DofMap build_dof_map(const Discretization& disc, bool condensed) {
  const Mesh& m = *disc.mesh;
  DofMap map;
  map.condensed = condensed;
  map.ucell_dim = condensed ? 0 : disc.ucell_dim;
  map.uface_dim = disc.uface_dim;
  map.pcell_dim = condensed ? 1 : disc.pcell_dim;
  map.pface_dim = disc.pface_dim;
  map.ucell.assign(m.cells.size(), -1);
  map.uface.assign(m.faces.size(), -1);
  map.pcell.assign(m.cells.size(), -1);
  map.pface.assign(m.faces.size(), -1);
  std::ptrdiff_t off = 0;
  if (!condensed)
    for (std::size_t c = 0; c < m.cells.size(); c++) {
      map.ucell[c] = off;
      off += map.ucell_dim;
    }
  for (std::size_t f = 0; f < m.faces.size(); f++)
    if (!m.faces[f].is_boundary()) {
      map.uface[f] = off;
      off += map.uface_dim;
    }
  for (std::size_t c = 0; c < m.cells.size(); c++) {
    map.pcell[c] = off;
    off += map.pcell_dim;
  }
  for (std::size_t f = 0; f < m.faces.size(); f++) {
    map.pface[f] = off;
    off += map.pface_dim;
  }
  map.multiplier = off++;
  map.size = off;
  return map;
}

namespace {

/// Global index of each slot of the cell's extended local vector
/// [u_T | u_F... | p_T | p_F... | multiplier]; -1 marks slots the map drops
/// (boundary-face velocities, and eliminated blocks under a condensed map).
std::vector<std::ptrdiff_t> cell_scatter(const Discretization& disc, const DofMap& map,
                                         std::size_t c) {
  const LocalDofLayout& L = disc.spaces[c].layout;
  const auto& faces = disc.mesh->cell_faces[c];
  std::vector<std::ptrdiff_t> g(static_cast<std::size_t>(L.total()) + 1, -1);
  std::size_t pos = 0;
  for (int j = 0; j < L.ucell; j++, pos++)
    if (map.ucell[c] >= 0) g[pos] = map.ucell[c] + j;
  for (int f = 0; f < L.n_faces(); f++) {
    std::ptrdiff_t base = map.uface[faces[f]];
    for (int j = 0; j < L.uface[f]; j++, pos++)
      if (base >= 0) g[pos] = base + j;
  }
  for (int j = 0; j < L.pcell; j++, pos++)
    if (j < map.pcell_dim) g[pos] = map.pcell[c] + j;
  for (int f = 0; f < L.n_faces(); f++) {
    std::ptrdiff_t base = map.pface[faces[f]];
    for (int j = 0; j < L.pface[f]; j++, pos++) g[pos] = base + j;
  }
  g[pos] = map.multiplier;
  return g;
}

/// Splits the local slots into Schur-eliminated ones (present in the full map,
/// absent from the condensed one) and kept ones.
void split_cell(const std::vector<std::ptrdiff_t>& gfull, const std::vector<std::ptrdiff_t>& gcond,
                std::vector<int>& elim, std::vector<int>& kept) {
  elim.clear();
  kept.clear();
  for (std::size_t i = 0; i < gcond.size(); i++) {
    if (gcond[i] >= 0)
      kept.push_back(static_cast<int>(i));
    else if (gfull[i] >= 0)
      elim.push_back(static_cast<int>(i));
  }
}

}  // namespace

GlobalSystem assemble(const Discretization& disc, double nu, const Forcing& load, int threads) {
  if (!(nu > 0.)) throw std::invalid_argument("assemble: viscosity must be positive");
  if (!load.f) throw std::invalid_argument("assemble: no volume load given");
  GlobalSystem sys;
  sys.disc = &disc;
  sys.nu = nu;
  sys.map = build_dof_map(disc, false);
  sys.full_size = sys.map.size;

  int k = disc.cfg.k;
  if (load.poly_degree >= 0 && disc.quad.rhs_degree(k) < load.poly_degree + k + 2)
    std::cerr << "[hystokes] warning: volume load of degree " << load.poly_degree
              << " is under-integrated at quadrature degree " << disc.quad.rhs_degree(k) << "\n";

  std::size_t nc = disc.n_cells();
  sys.local_K.resize(nc);
  sys.local_F.resize(nc);
  bool use_delta = disc.cfg.delta != 0;
  parallel_for(
      nc,
      [&](std::size_t c) {
        const LocalSpaces& ls = disc.spaces[c];
        LocalForms forms = make_local_forms(ls, disc.ops[c], nu);
        const LocalDofLayout& L = ls.layout;
        int uN = L.u_total(), pN = L.p_total(), n = uN + pN + 1;
        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
        K.topLeftCorner(uN, uN) = nu * forms.A;
        K.block(uN, 0, pN, uN) = forms.B;
        K.block(0, uN, uN, pN) = forms.B.transpose();
        if (use_delta) K.block(uN, uN, pN, pN) = -(1. / nu) * forms.Dstab;
        Eigen::VectorXd cvec = Eigen::VectorXd::Zero(pN);
        cvec.head(L.pcell) = ls.P.coef * ls.mono_mass.col(0);
        K.col(n - 1).segment(uN, pN) = cvec;
        K.row(n - 1).segment(uN, pN) = cvec.transpose();
        sys.local_K[c] = std::move(K);

        Eigen::VectorXd F = Eigen::VectorXd::Zero(n);
        QuadRule rule = cell_rule(*disc.mesh, disc.geom, c, disc.quad.rhs_degree(k));
        Eigen::MatrixXd mv = ls.frame.eval(rule.nodes);
        Eigen::MatrixXd u0 = ls.U.values(0, mv), u1 = ls.U.values(1, mv);
        for (Eigen::Index q = 0; q < rule.size(); q++) {
          Vec2 fval = load.f(rule.nodes.row(q).transpose());
          F.head(L.ucell) +=
              rule.weights[q] * (fval.x() * u0.row(q) + fval.y() * u1.row(q)).transpose();
        }
        sys.local_F[c] = std::move(F);
      },
      threads);

  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(sys.map.size);
  for (std::size_t c = 0; c < nc; c++) {
    auto g = cell_scatter(disc, sys.map, c);
    const Eigen::MatrixXd& K = sys.local_K[c];
    const Eigen::VectorXd& F = sys.local_F[c];
    for (std::size_t i = 0; i < g.size(); i++) {
      if (g[i] < 0) continue;
      b[g[i]] += F[static_cast<Eigen::Index>(i)];
      for (std::size_t j = 0; j < g.size(); j++) {
        double v = K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (g[j] >= 0 && v != 0.) trips.emplace_back(g[i], g[j], v);
      }
    }
  }
  sys.A.resize(sys.map.size, sys.map.size);
  sys.A.setFromTriplets(trips.begin(), trips.end());
  sys.b = std::move(b);
  return sys;
}

void condense(GlobalSystem& sys, int threads) {
  if (sys.condensed()) throw std::logic_error("condense: system is already condensed");
  const Discretization& disc = *sys.disc;
  std::size_t nc = disc.n_cells();
  DofMap cmap = build_dof_map(disc, true);
  sys.rec_mat.resize(nc);
  sys.rec_vec.resize(nc);

  struct Part {
    Eigen::MatrixXd S;
    Eigen::VectorXd F;
    std::vector<std::ptrdiff_t> g;
  };
  std::vector<Part> parts(nc);
  parallel_for(
      nc,
      [&](std::size_t c) {
        auto gfull = cell_scatter(disc, sys.map, c);
        auto gcond = cell_scatter(disc, cmap, c);
        std::vector<int> elim, kept;
        split_cell(gfull, gcond, elim, kept);
        const Eigen::MatrixXd& K = sys.local_K[c];
        const Eigen::VectorXd& F = sys.local_F[c];
        Eigen::Index ne = static_cast<Eigen::Index>(elim.size());
        Eigen::Index ng = static_cast<Eigen::Index>(kept.size());
        Eigen::MatrixXd Kee(ne, ne), Keg(ne, ng), Kgg(ng, ng);
        Eigen::VectorXd Fe(ne), Fg(ng);
        for (Eigen::Index i = 0; i < ne; i++) {
          Fe[i] = F[elim[i]];
          for (Eigen::Index j = 0; j < ne; j++) Kee(i, j) = K(elim[i], elim[j]);
          for (Eigen::Index j = 0; j < ng; j++) Keg(i, j) = K(elim[i], kept[j]);
        }
        for (Eigen::Index i = 0; i < ng; i++) {
          Fg[i] = F[kept[i]];
          for (Eigen::Index j = 0; j < ng; j++) Kgg(i, j) = K(kept[i], kept[j]);
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(Kee);
        Eigen::MatrixXd X = lu.solve(Keg);
        Eigen::VectorXd y = lu.solve(Fe);
        if (!X.allFinite() || !y.allFinite())
          throw std::runtime_error("condense: singular cell block");
        parts[c].S = Kgg - Keg.transpose() * X;  // the local matrix is symmetric
        parts[c].F = Fg - Keg.transpose() * y;
        parts[c].g.resize(kept.size());
        for (std::size_t i = 0; i < kept.size(); i++) parts[c].g[i] = gcond[kept[i]];
        sys.rec_mat[c] = std::move(X);
        sys.rec_vec[c] = std::move(y);
      },
      threads);

  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(cmap.size);
  for (std::size_t c = 0; c < nc; c++) {
    const Part& P = parts[c];
    Eigen::Index ng = P.F.size();
    for (Eigen::Index i = 0; i < ng; i++) {
      b[P.g[i]] += P.F[i];
      for (Eigen::Index j = 0; j < ng; j++)
        if (P.S(i, j) != 0.) trips.emplace_back(P.g[i], P.g[j], P.S(i, j));
    }
  }
  Eigen::SparseMatrix<double> A(cmap.size, cmap.size);
  A.setFromTriplets(trips.begin(), trips.end());
  sys.A = std::move(A);
  sys.b = std::move(b);
  sys.map = std::move(cmap);
}

HybridSolution solve(const GlobalSystem& sys) {
  const Discretization& disc = *sys.disc;
  Eigen::SparseMatrix<double> A = sys.A;
  A.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(A);
  lu.factorize(A);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("solve: sparse LU factorization failed");
  Eigen::VectorXd x = lu.solve(sys.b);

  double scale = sys.b.norm() + A.norm() * x.norm();
  double resid = (A * x - sys.b).norm();
  double relres = scale > 0. ? resid / scale : resid;
  if (!(relres <= 1e-10))
    throw std::runtime_error("solve: relative residual " + std::to_string(relres) +
                             " exceeds 1e-10");

  HybridSolution sol;
  sol.residual = relres;
  std::size_t nc = disc.n_cells(), nf = disc.n_faces();
  sol.u.cell.resize(nc);
  sol.p.cell.resize(nc);
  sol.u.face.resize(nf);
  sol.p.face.resize(nf);
  const DofMap& map = sys.map;
  for (std::size_t f = 0; f < nf; f++) {
    sol.u.face[f] = map.uface[f] >= 0 ? Eigen::VectorXd(x.segment(map.uface[f], map.uface_dim))
                                      : Eigen::VectorXd::Zero(map.uface_dim);
    sol.p.face[f] = x.segment(map.pface[f], map.pface_dim);
  }
  sol.multiplier = x[map.multiplier];

  if (!sys.condensed()) {
    for (std::size_t c = 0; c < nc; c++) {
      sol.u.cell[c] = x.segment(map.ucell[c], map.ucell_dim);
      sol.p.cell[c] = x.segment(map.pcell[c], map.pcell_dim);
    }
  } else {
    DofMap full = build_dof_map(disc, false);
    for (std::size_t c = 0; c < nc; c++) {
      auto gfull = cell_scatter(disc, full, c);
      auto gcond = cell_scatter(disc, map, c);
      std::vector<int> elim, kept;
      split_cell(gfull, gcond, elim, kept);
      Eigen::VectorXd xg(static_cast<Eigen::Index>(kept.size()));
      for (std::size_t i = 0; i < kept.size(); i++) xg[static_cast<Eigen::Index>(i)] = x[gcond[kept[i]]];
      Eigen::VectorXd xe = sys.rec_vec[c] - sys.rec_mat[c] * xg;
      Eigen::VectorXd loc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(gfull.size()));
      for (std::size_t i = 0; i < kept.size(); i++) loc[kept[i]] = xg[static_cast<Eigen::Index>(i)];
      for (std::size_t i = 0; i < elim.size(); i++) loc[elim[i]] = xe[static_cast<Eigen::Index>(i)];
      const LocalDofLayout& L = disc.spaces[c].layout;
      sol.u.cell[c] = loc.head(L.ucell);
      sol.p.cell[c] = loc.segment(L.u_total(), L.pcell);
    }
  }

  double mean = 0.;
  for (std::size_t c = 0; c < nc; c++)
    mean += (disc.spaces[c].P.coef * disc.spaces[c].mono_mass.col(0)).dot(sol.p.cell[c]);
  sol.mean_pressure = mean;
  return sol;
}

void write_solution_json(const std::string& path, const GlobalSystem& sys,
                         const HybridSolution& sol) {
  const Discretization& disc = *sys.disc;
  auto coeffs = [](const std::vector<Eigen::VectorXd>& blocks) {
    std::vector<std::vector<double>> out;
    out.reserve(blocks.size());
    for (const Eigen::VectorXd& v : blocks) out.emplace_back(v.data(), v.data() + v.size());
    return out;
  };
  nlohmann::json j;
  j["method"] = std::string(method_name(disc.cfg.name));
  j["k"] = disc.cfg.k;
  j["nu"] = sys.nu;
  j["condensed"] = sys.condensed();
  j["system_size"] = sys.map.size;
  j["full_size"] = sys.full_size;
  j["mesh"] = {{"cells", disc.mesh->cells.size()},
               {"faces", disc.mesh->faces.size()},
               {"mesh_size", disc.geom.mesh_size()}};
  j["blocks"] = {{"u_cell", disc.ucell_dim},
                 {"u_face", disc.uface_dim},
                 {"p_cell", disc.pcell_dim},
                 {"p_face", disc.pface_dim}};
  j["multiplier"] = sol.multiplier;
  j["mean_pressure"] = sol.mean_pressure;
  j["residual"] = sol.residual;
  j["u"] = {{"cell", coeffs(sol.u.cell)}, {"face", coeffs(sol.u.face)}};
  j["p"] = {{"cell", coeffs(sol.p.cell)}, {"face", coeffs(sol.p.face)}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_solution_json: cannot open " + path);
  out << j.dump(2) << "\n";
}

}  // namespace hystokes
