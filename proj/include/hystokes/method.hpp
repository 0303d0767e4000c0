#ifndef HYSTOKES_METHOD_HPP
#define HYSTOKES_METHOD_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "hystokes/mesh.hpp"
#include "hystokes/polyspaces.hpp"

namespace hystokes {

/// The five hybrid velocity/pressure discretizations.
enum class Method { BottiMassa, RhebergenWells, RtnNew, BdfmNew, Polytopal };

/// Shape of the cell velocity space U_T.
enum class CellVelocitySpace { FullPoly, Rtn, Bdfm };

/// Shape of the discrete-gradient space Sigma_T.
enum class SigmaKind { MatrixValued, GradientBased };

/// Viscous stabilization family.
enum class StabKind { HhoClassical, RhebergenWells, HhoBoxed };

/// Mesh classes a method supports.
enum class MeshCompat { Simplicial, Rectangular, AnyPolytopal };

struct MethodOverrides {
  std::optional<SigmaKind> sigma;
  std::optional<StabKind> stab;
  std::optional<double> eta;
};

/// Fully resolved space/stabilization selection for one method at degree k.
struct MethodConfig {
  Method name = Method::Polytopal;
  int k = 0;

  CellVelocitySpace u_cell_space = CellVelocitySpace::FullPoly;
  int u_cell_deg = 1;  ///< order parameter of U_T (full-poly degree or RTN/BDFM order)
  InterpKind interp = InterpKind::L2Projection;
  int interp_order = 1;
  int u_face_deg = 0;
  int p_cell_deg = 0;
  int p_face_deg = 0;
  SigmaKind sigma = SigmaKind::MatrixValued;
  int sigma_deg = 0;  ///< MatrixValued: P^{sigma_deg} matrices; GradientBased: grad P^{sigma_deg+1} vectors
  int w_deg = 1;      ///< velocity reconstruction degree
  StabKind stab = StabKind::HhoClassical;
  double eta = 6.;    ///< jump penalty (RhebergenWells stabilization only)
  int delta = 0;      ///< 1 if the pressure jump stabilization d_h is required
  MeshCompat compat = MeshCompat::AnyPolytopal;

  /// Degree of U_T normal traces on faces; the discrete pressure gradient
  /// commutes with interpolation only when this does not exceed p_face_deg.
  int normal_trace_deg() const {
    return u_cell_space == CellVelocitySpace::FullPoly ? u_cell_deg : u_cell_deg - 1;
  }
  bool g_commutes() const { return normal_trace_deg() <= p_face_deg; }

  /// True when I_{U,T} preserves cell averages, selecting the volumetric
  /// closure of the velocity reconstruction (fallback: face-average closure).
  bool avg_preserving() const {
    return interp == InterpKind::L2Projection || interp_order >= 2;
  }

  std::string label() const;
};

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::BottiMassa: return "botti_massa";
    case Method::RhebergenWells: return "rhebergen_wells";
    case Method::RtnNew: return "rtn_new";
    case Method::BdfmNew: return "bdfm_new";
    case Method::Polytopal: return "polytopal";
  }
  throw std::logic_error("method_name: invalid enum");
}

inline Method parse_method(std::string_view s) {
  if (s == "botti_massa" || s == "botti-massa" || s == "bm") return Method::BottiMassa;
  if (s == "rhebergen_wells" || s == "rhebergen-wells" || s == "rw") return Method::RhebergenWells;
  if (s == "rtn_new" || s == "rtn-new" || s == "rtn") return Method::RtnNew;
  if (s == "bdfm_new" || s == "bdfm-new" || s == "bdfm") return Method::BdfmNew;
  if (s == "polytopal" || s == "poly") return Method::Polytopal;
  throw std::invalid_argument("unknown method: " + std::string(s));
}

inline std::string MethodConfig::label() const {
  return std::string(method_name(name)) + "_k" + std::to_string(k);
}

inline MethodConfig make_config(Method m, int k, const MethodOverrides& ov = {}) {
  if (k < 0) throw std::invalid_argument("make_config: k must be >= 0");
  MethodConfig c;
  c.name = m;
  c.k = k;
  c.u_face_deg = k;
  c.w_deg = k + 1;
  switch (m) {
    case Method::BottiMassa:
      c.u_cell_space = CellVelocitySpace::FullPoly;
      c.u_cell_deg = k + 1;
      c.interp = InterpKind::BdmMoments;
      c.interp_order = k + 1;
      c.p_cell_deg = k;
      c.p_face_deg = k + 1;
      c.sigma_deg = k;
      c.stab = StabKind::HhoClassical;
      c.delta = 0;
      c.compat = MeshCompat::Simplicial;
      break;
    case Method::RhebergenWells:
      if (k < 1) throw std::invalid_argument("rhebergen_wells requires k >= 1 (cell pressures have degree k-1)");
      c.u_cell_space = CellVelocitySpace::FullPoly;
      c.u_cell_deg = k;
      c.interp = InterpKind::BdmMoments;
      c.interp_order = k;
      c.p_cell_deg = k - 1;
      c.p_face_deg = k;
      c.sigma_deg = k - 1;
      c.stab = StabKind::RhebergenWells;
      c.eta = 6. * (k + 1) * (k + 1);
      c.delta = 0;
      c.compat = MeshCompat::Simplicial;
      break;
    case Method::RtnNew:
      c.u_cell_space = CellVelocitySpace::Rtn;
      c.u_cell_deg = k + 1;
      c.interp = InterpKind::RtnMoments;
      c.interp_order = k + 1;
      c.p_cell_deg = k;
      c.p_face_deg = k;
      c.sigma_deg = k;
      c.stab = StabKind::HhoClassical;
      c.delta = 0;
      c.compat = MeshCompat::Simplicial;
      break;
    case Method::BdfmNew:
      c.u_cell_space = CellVelocitySpace::Bdfm;
      c.u_cell_deg = k + 1;
      c.interp = InterpKind::BdfmMoments;
      c.interp_order = k + 1;
      c.p_cell_deg = k;
      c.p_face_deg = k;
      c.sigma_deg = k;
      c.stab = StabKind::HhoClassical;
      c.delta = 0;
      c.compat = MeshCompat::Rectangular;
      break;
    case Method::Polytopal:
      c.u_cell_space = CellVelocitySpace::FullPoly;
      c.u_cell_deg = k + 1;
      c.interp = InterpKind::L2Projection;
      c.interp_order = k + 1;
      c.p_cell_deg = k;
      c.p_face_deg = k;
      c.sigma_deg = k;
      c.stab = StabKind::HhoClassical;
      c.delta = 1;
      c.compat = MeshCompat::AnyPolytopal;
      break;
  }
  if (ov.sigma) c.sigma = *ov.sigma;
  if (ov.stab) {
    if (*ov.stab == StabKind::HhoBoxed) {
      if (m != Method::RtnNew && m != Method::BdfmNew)
        throw std::invalid_argument("the augmented (boxed) stabilization only applies to rtn_new and bdfm_new");
      // widen U_T to the full polynomial space; the moment interpolator is kept
      c.u_cell_space = CellVelocitySpace::FullPoly;
    } else if (*ov.stab != c.stab) {
      throw std::invalid_argument("stabilization override incompatible with method");
    }
    c.stab = *ov.stab;
  }
  if (ov.eta) {
    if (c.stab != StabKind::RhebergenWells)
      throw std::invalid_argument("eta only applies to the rhebergen_wells stabilization");
    if (*ov.eta <= 0.) throw std::invalid_argument("eta must be positive");
    c.eta = *ov.eta;
  }
  return c;
}

inline bool mesh_compatible(const Mesh& mesh, MeshCompat compat) {
  switch (compat) {
    case MeshCompat::Simplicial: return mesh.is_simplicial();
    case MeshCompat::Rectangular: return mesh.is_rectangular();
    case MeshCompat::AnyPolytopal: return true;
  }
  return false;
}

/// Quadrature degrees, adjustable through a uniform bump.
struct QuadOptions {
  int bump = 0;

  /// exactness for local operator and form integrands
  int form_degree(int k) const { return 2 * (k + 2) + bump; }
  /// exactness for the forcing term (the reference forcing is degree 6)
  int rhs_degree(int k) const { return k + 9 + bump; }
  /// exactness for error integrals against the exact solution
  int error_degree() const { return 16 + bump; }
};

}  // namespace hystokes

#endif
