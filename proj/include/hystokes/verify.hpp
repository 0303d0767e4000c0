#ifndef HYSTOKES_VERIFY_HPP
#define HYSTOKES_VERIFY_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hystokes/normserrors.hpp"
#include "hystokes/scheme.hpp"

namespace hystokes {

/// Divergence-free polynomial reference flow on the unit square with zero
/// boundary trace: u = (G(x) g(y), -G(y) g(x)) with G(t) = t^2 (t-1)^2 and
/// g = G', p = x^7 + y^7 - 1/4 (zero mean), f = -nu lap(u) + grad(p).
ExactSolution manufactured(double nu = 1.);

/// Built-in mesh families of the unit square ("cart", "tri", "hexa",
/// "locref") at resolution n, or "file:PATH" for a stored mesh.
Mesh build_family_mesh(const std::string& family, int n);

/// Stacked coefficient vector [cells | faces] of a hybrid field.
Eigen::VectorXd stack_field(const HybridField& f);

struct StudyRow {
  int n = 0;
  double h = 0.;
  std::ptrdiff_t size = 0;       ///< condensed system size
  std::ptrdiff_t full_size = 0;  ///< size before condensation
  std::array<double, 5> err{};   ///< e_1h, e_grad_rec, e_L2, e_rec, e_p
  std::array<double, 5> ocv{};   ///< observed convergence vs previous row (NaN on the first)
  double div_max = 0.;           ///< max cell L2 norm of div(u_T)
  double energy = 0.;            ///< |(u_h, p_h)|_{nu,h}
  double load_l2 = 0.;           ///< |f|_{L2}
  double velocity_l2 = 0.;       ///< |u_h|_{L2} (cell parts)
};

struct StudyResult {
  MethodConfig cfg;
  std::string family;
  double nu = 1.;
  std::vector<StudyRow> rows;
};

/// `do_condense = false` keeps the saddle-point system unreduced; on large
/// simplicial meshes at k = 2 the direct solver handles the sparser full
/// matrix with far less fill-in than the face-coupled condensed one.
StudyResult convergence_study(const MethodConfig& cfg, const std::string& family,
                              const std::vector<int>& levels, double nu = 1.,
                              const QuadOptions& quad = {}, int threads = 0,
                              bool do_condense = true);

/// `# manifest:` and `# timestamp:` comment lines, then
/// h,k,size,e_1h,ocv_1h,...,e_p,ocv_p with 7 significant digits and "--" for
/// the missing first-row rates.
void write_study_csv(const std::string& path, const StudyResult& result);

/// Fixed mesh, sweeping viscosity. err[i] holds the five error columns at
/// nus[i] (the first four are the velocity ones, the last is e_p);
/// velocity_drift[i] is the relative difference of the stacked velocity
/// coefficients against the first viscosity.
struct RobustnessResult {
  MethodConfig cfg;
  std::string family;
  int n = 0;
  std::vector<double> nus;
  std::vector<std::array<double, 5>> err;
  std::vector<double> velocity_drift;
};

RobustnessResult robustness_sweep(const MethodConfig& cfg, const std::string& family, int n,
                                  const std::vector<double>& nus, const QuadOptions& quad = {},
                                  int threads = 0);

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.;      ///< measured quantity
  double threshold = 0.;  ///< bound it was compared against
};

/// Deterministic structure checks of one method on one mesh: interpolator
/// reproduction and average handling, commutation of the divergence, gradient
/// and pressure-gradient operators with interpolation, the cell/face coupling
/// identities, the viscous-form rewriting, stabilization polynomial
/// consistency, local kernels and positivity, assembled-system symmetry,
/// zero-load and condensation equivalence, and scaling covariance.
std::vector<CheckResult> property_suite(const MethodConfig& cfg, const Mesh& mesh,
                                        std::uint64_t seed = 42, const QuadOptions& quad = {},
                                        int threads = 0);

/// Mesh-refinement probes: generalized inf-sup eigenvalue of the pressure
/// Schur complement, a-priori energy bound ratio, and discrete Poincare
/// ratio, each per level plus summary pass/fail checks.
struct StabilityReport {
  std::vector<int> levels;
  std::vector<double> inf_sup;
  std::vector<double> a_priori;
  std::vector<double> poincare;
  std::vector<CheckResult> checks;
};

StabilityReport stability_probe(const MethodConfig& cfg, const std::string& family,
                                const std::vector<int>& levels, double nu = 1.,
                                const QuadOptions& quad = {}, int threads = 0);

}  // namespace hystokes

#endif
