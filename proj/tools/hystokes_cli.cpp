#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <json.hpp>
#include <string>
#include <vector>

#include "hystokes/verify.hpp"

namespace {

using namespace hystokes;

struct CommonOpts {
  std::string method = "polytopal";
  int k = 0;
  std::string mesh = "cart:8";
  double nu = 1.;
  double eta = -1.;
  std::string sigma;  // "", "matrix", "gradient"
  std::string stab;   // "", "classical", "rw", "boxed"
  int quad_bump = 0;
  int threads = 0;
  unsigned long long seed = 42;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--method,-m", o.method, "method name (botti_massa, rhebergen_wells, rtn_new, bdfm_new, polytopal)");
  cmd->add_option("--degree,-k", o.k, "face polynomial degree k");
  cmd->add_option("--mesh", o.mesh, "mesh as family:n (cart, tri, hexa, locref) or file:PATH");
  cmd->add_option("--nu", o.nu, "viscosity");
  cmd->add_option("--eta", o.eta, "jump penalty (gradient-plus-jump stabilization only)");
  cmd->add_option("--sigma", o.sigma, "stress space: matrix | gradient");
  cmd->add_option("--stab", o.stab, "stabilization override: classical | rw | boxed");
  cmd->add_option("--quad-bump", o.quad_bump, "extra quadrature degrees on all rules");
  cmd->add_option("--threads", o.threads, "worker threads (0: HYSTOKES_THREADS or auto)");
  cmd->add_option("--seed", o.seed, "RNG seed for randomized checks");
}

MethodConfig make_cfg(const CommonOpts& o) {
  MethodOverrides ov;
  if (!o.sigma.empty()) {
    if (o.sigma == "matrix")
      ov.sigma = SigmaKind::MatrixValued;
    else if (o.sigma == "gradient")
      ov.sigma = SigmaKind::GradientBased;
    else
      throw CLI::ValidationError("--sigma", "expected matrix|gradient");
  }
  if (!o.stab.empty()) {
    if (o.stab == "classical")
      ov.stab = StabKind::HhoClassical;
    else if (o.stab == "rw")
      ov.stab = StabKind::RhebergenWells;
    else if (o.stab == "boxed")
      ov.stab = StabKind::HhoBoxed;
    else
      throw CLI::ValidationError("--stab", "expected classical|rw|boxed");
  }
  if (o.eta > 0.) ov.eta = o.eta;
  return make_config(parse_method(o.method), o.k, ov);
}

std::pair<std::string, int> split_mesh(const std::string& spec) {
  if (spec.rfind("file:", 0) == 0) return {spec, 0};
  auto pos = spec.find(':');
  if (pos == std::string::npos) throw CLI::ValidationError("--mesh", "expected family:n or file:PATH");
  return {spec.substr(0, pos), std::stoi(spec.substr(pos + 1))};
}

QuadOptions make_quad(const CommonOpts& o) { return QuadOptions{o.quad_bump}; }

void print_study(const StudyResult& res) {
  std::printf("# method=%s k=%d family=%s nu=%g\n", std::string(method_name(res.cfg.name)).c_str(),
              res.cfg.k, res.family.c_str(), res.nu);
  std::printf("%10s %8s %12s %12s %12s %12s %12s | %5s %5s %5s %5s %5s\n", "h", "size", "e_1h",
              "e_gradrec", "e_L2", "e_rec", "e_p", "o_1h", "o_gr", "o_L2", "o_rec", "o_p");
  for (const StudyRow& r : res.rows) {
    std::printf("%10.4e %8td %12.6e %12.6e %12.6e %12.6e %12.6e |", r.h, r.size, r.err[0],
                r.err[1], r.err[2], r.err[3], r.err[4]);
    for (int i = 0; i < 5; i++)
      std::isnan(r.ocv[i]) ? std::printf(" %5s", "--") : std::printf(" %5.2f", r.ocv[i]);
    std::printf("\n");
  }
}

int run_solve(const CommonOpts& o, bool do_condense, const std::string& out_json,
              const std::string& out_csv) {
  (void)out_csv;
  MethodConfig cfg = make_cfg(o);
  auto [family, n] = split_mesh(o.mesh);
  Mesh mesh = build_family_mesh(family, n);
  Discretization disc(mesh, cfg, make_quad(o), o.threads);
  ExactSolution ex = manufactured(o.nu);
  GlobalSystem sys = assemble(disc, o.nu, ex.forcing(), o.threads);
  std::ptrdiff_t full = sys.full_size;
  if (do_condense) condense(sys, o.threads);
  HybridSolution sol = solve(sys);
  ErrorReport err = compute_errors(disc, sol, ex, o.threads);
  std::printf("method=%s k=%d mesh=%s h=%.4e size=%td full=%td\n",
              std::string(method_name(cfg.name)).c_str(), cfg.k, o.mesh.c_str(),
              disc.geom.mesh_size(), sys.map.size, full);
  std::printf("e_1h=%.6e e_grad_rec=%.6e e_L2=%.6e e_rec=%.6e e_p=%.6e\n", err.e_1h,
              err.e_grad_rec, err.e_L2, err.e_rec, err.e_p);
  std::printf("div_max=%.3e mean_p=%.3e residual=%.3e\n", divergence_norm_max(disc, sol.u),
              sol.mean_pressure, sol.residual);
  if (!out_json.empty()) write_solution_json(out_json, sys, sol);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hybrid-velocity / hybrid-pressure Stokes discretization laboratory"};
  app.require_subcommand(1);

  CommonOpts so;
  bool solve_condense = false;
  std::string solve_json, solve_csv;
  CLI::App* solve_cmd = app.add_subcommand("solve", "assemble and solve one configuration");
  add_common(solve_cmd, so);
  solve_cmd->add_flag("--condense", solve_condense, "statically condense before solving");
  solve_cmd->add_option("--json", solve_json, "write the hybrid solution to this JSON file");

  CommonOpts co;
  std::vector<int> levels{2, 4, 8, 16};
  std::string conv_csv;
  bool conv_full = false;
  CLI::App* conv_cmd = app.add_subcommand("convergence", "mesh-refinement error study");
  add_common(conv_cmd, co);
  conv_cmd->add_option("--levels", levels, "mesh resolutions");
  conv_cmd->add_option("--csv", conv_csv, "write the study table to this CSV file");
  conv_cmd->add_flag("--full-system", conv_full, "skip static condensation when solving");

  CommonOpts ro;
  std::vector<double> nus{1., 1e-3, 1e-6};
  CLI::App* rob_cmd = app.add_subcommand("robustness", "viscosity sweep on one mesh");
  add_common(rob_cmd, ro);
  rob_cmd->add_option("--nus", nus, "viscosity values");

  CommonOpts ko;
  bool with_stability = false;
  CLI::App* check_cmd = app.add_subcommand("check", "structure checks of one configuration");
  add_common(check_cmd, ko);
  check_cmd->add_flag("--stability", with_stability, "also run the mesh-refinement stability probes");

  try {
    app.parse(argc, argv);

    if (solve_cmd->parsed()) return run_solve(so, solve_condense, solve_json, solve_csv);

    if (conv_cmd->parsed()) {
      MethodConfig cfg = make_cfg(co);
      auto [family, n0] = split_mesh(co.mesh);
      (void)n0;
      StudyResult res =
          convergence_study(cfg, family, levels, co.nu, make_quad(co), co.threads, !conv_full);
      print_study(res);
      if (!conv_csv.empty()) write_study_csv(conv_csv, res);
      return 0;
    }

    if (rob_cmd->parsed()) {
      MethodConfig cfg = make_cfg(ro);
      auto [family, n] = split_mesh(ro.mesh);
      RobustnessResult res = robustness_sweep(cfg, family, n, nus, make_quad(ro), ro.threads);
      std::printf("# method=%s k=%d mesh=%s\n", std::string(method_name(cfg.name)).c_str(), cfg.k,
                  ro.mesh.c_str());
      std::printf("%12s %14s %14s %14s %14s %14s %16s\n", "nu", "e_1h", "e_gradrec", "e_L2",
                  "e_rec", "e_p", "velocity_drift");
      for (std::size_t i = 0; i < res.nus.size(); i++)
        std::printf("%12.3e %14.6e %14.6e %14.6e %14.6e %14.6e %16.6e\n", res.nus[i],
                    res.err[i][0], res.err[i][1], res.err[i][2], res.err[i][3], res.err[i][4],
                    res.velocity_drift[i]);
      return 0;
    }

    if (check_cmd->parsed()) {
      MethodConfig cfg = make_cfg(ko);
      auto [family, n] = split_mesh(ko.mesh);
      Mesh mesh = build_family_mesh(family, n);
      auto checks = property_suite(cfg, mesh, ko.seed, make_quad(ko), ko.threads);
      bool all = true;
      for (const CheckResult& c : checks) {
        std::printf("%-32s %s   value=%.3e threshold=%.3e\n", c.name.c_str(),
                    c.pass ? "PASS" : "FAIL", c.value, c.threshold);
        all = all && c.pass;
      }
      if (with_stability) {
        StabilityReport rep = stability_probe(cfg, family, {n, 2 * n, 4 * n}, ko.nu,
                                              make_quad(ko), ko.threads);
        for (std::size_t i = 0; i < rep.levels.size(); i++)
          std::printf("level n=%-3d inf_sup=%.4e a_priori=%.4e poincare=%.4e\n", rep.levels[i],
                      rep.inf_sup[i], rep.a_priori[i], rep.poincare[i]);
        for (const CheckResult& c : rep.checks) {
          std::printf("%-32s %s   value=%.3e threshold=%.3e\n", c.name.c_str(),
                      c.pass ? "PASS" : "FAIL", c.value, c.threshold);
          all = all && c.pass;
        }
      }
      return all ? 0 : 1;
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
