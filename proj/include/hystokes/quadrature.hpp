#ifndef HYSTOKES_QUADRATURE_HPP
#define HYSTOKES_QUADRATURE_HPP

#include "hystokes/mesh.hpp"

#include <Eigen/Dense>

namespace hystokes {

/// Quadrature rule in physical coordinates. Weights are strictly positive and
/// sum to the measure of the integration domain.
struct QuadRule {
  Eigen::Matrix<double, Eigen::Dynamic, 2> nodes;
  Eigen::VectorXd weights;
  int exactness = 0;  ///< polynomial degree integrated exactly

  Eigen::Index size() const { return weights.size(); }
};

/// Gauss-Legendre nodes and weights on [0,1]; exact up to degree 2*npts-1.
void gauss_legendre(int npts, Eigen::VectorXd& nodes, Eigen::VectorXd& weights);

/// Rule on the segment [a,b] exact for polynomials of the given total degree,
/// with ceil((degree+1)/2) nodes.
QuadRule segment_rule(const Vec2& a, const Vec2& b, int degree);

/// Rule on the triangle (A,B,C), exact for the given total degree (tensorized
/// Gauss under the collapsed-square map; all weights positive).
QuadRule triangle_rule(const Vec2& A, const Vec2& B, const Vec2& C, int degree);

/// Rule on a mesh cell: fan triangulation from the cell centroid.
QuadRule cell_rule(const Mesh& mesh, const MeshGeometry& geom, std::size_t cell, int degree);

/// Rule on a mesh face.
QuadRule face_rule(const Mesh& mesh, std::size_t face, int degree);

}  // namespace hystokes

#endif
