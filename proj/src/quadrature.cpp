#include "hystokes/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace hystokes {

namespace {

// Nodes by Newton iteration on P_n; cached since the same sizes recur on every cell.
const std::pair<Eigen::VectorXd, Eigen::VectorXd>& gauss_legendre_cached(int npts) {
  static std::map<int, std::pair<Eigen::VectorXd, Eigen::VectorXd>> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(npts);
  if (it != cache.end()) return it->second;

  Eigen::VectorXd x(npts), w(npts);
  for (int i = 0; i < npts; i++) {
    // Chebyshev-based initial guess on [-1,1]
    double t = std::cos(M_PI * (i + 0.75) / (npts + 0.5));
    for (int iter = 0; iter < 100; iter++) {
      // Legendre recurrence: p0 = 1, p1 = t
      double p0 = 1., p1 = t;
      for (int k = 2; k <= npts; k++) {
        double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = npts * (t * p1 - p0) / (t * t - 1.);
      double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    double p0 = 1., p1 = t;
    for (int k = 2; k <= npts; k++) {
      double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = npts * (t * p1 - p0) / (t * t - 1.);
    x[i] = 0.5 * (1. + t);               // map to [0,1]
    w[i] = 1. / ((1. - t * t) * dp * dp);  // includes the 1/2 interval scaling
  }
  return cache.emplace(npts, std::make_pair(x, w)).first->second;
}

}  // namespace

void gauss_legendre(int npts, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  if (npts < 1) throw std::invalid_argument("gauss_legendre: npts must be >= 1");
  const auto& nw = gauss_legendre_cached(npts);
  nodes = nw.first;
  weights = nw.second;
}

QuadRule segment_rule(const Vec2& a, const Vec2& b, int degree) {
  if (degree < 0) throw std::invalid_argument("segment_rule: degree must be >= 0");
  int n = (degree + 2) / 2;  // ceil((degree+1)/2)
  const auto& nw = gauss_legendre_cached(n);
  QuadRule rule;
  rule.nodes.resize(n, 2);
  rule.weights.resize(n);
  double len = (b - a).norm();
  for (int i = 0; i < n; i++) {
    rule.nodes.row(i) = (a + nw.first[i] * (b - a)).transpose();
    rule.weights[i] = len * nw.second[i];
  }
  rule.exactness = 2 * n - 1;
  return rule;
}

QuadRule triangle_rule(const Vec2& A, const Vec2& B, const Vec2& C, int degree) {
  if (degree < 0) throw std::invalid_argument("triangle_rule: degree must be >= 0");
  // Collapsed map P(u,v) = A + u(B-A) + uv(C-B), Jacobian 2|T| u: a total degree d
  // integrand has degree d+1 in u and d in v.
  int nu = (degree + 3) / 2;  // ceil((degree+2)/2)
  int nv = (degree + 2) / 2;
  const auto& u = gauss_legendre_cached(nu);
  const auto& v = gauss_legendre_cached(nv);
  double area2 = (B.x() - A.x()) * (C.y() - A.y()) - (C.x() - A.x()) * (B.y() - A.y());
  if (area2 <= 0.) throw std::invalid_argument("triangle_rule: triangle is degenerate or clockwise");
  QuadRule rule;
  rule.nodes.resize(nu * nv, 2);
  rule.weights.resize(nu * nv);
  int idx = 0;
  for (int i = 0; i < nu; i++)
    for (int j = 0; j < nv; j++, idx++) {
      double ui = u.first[i], vj = v.first[j];
      rule.nodes.row(idx) = (A + ui * (B - A) + ui * vj * (C - B)).transpose();
      rule.weights[idx] = area2 * ui * u.second[i] * v.second[j];
    }
  rule.exactness = degree;
  return rule;
}

QuadRule cell_rule(const Mesh& mesh, const MeshGeometry& geom, std::size_t cell, int degree) {
  const auto& loop = mesh.cells[cell];
  const Vec2& xT = geom.cell[cell].centroid;
  std::vector<QuadRule> parts;
  parts.reserve(loop.size());
  Eigen::Index total = 0;
  for (std::size_t i = 0; i < loop.size(); i++) {
    const Vec2& p = mesh.vertices[loop[i]];
    const Vec2& q = mesh.vertices[loop[(i + 1) % loop.size()]];
    parts.push_back(triangle_rule(xT, p, q, degree));
    total += parts.back().size();
  }
  QuadRule rule;
  rule.nodes.resize(total, 2);
  rule.weights.resize(total);
  Eigen::Index at = 0;
  for (const QuadRule& part : parts) {
    rule.nodes.middleRows(at, part.size()) = part.nodes;
    rule.weights.segment(at, part.size()) = part.weights;
    at += part.size();
  }
  rule.exactness = degree;
  return rule;
}

QuadRule face_rule(const Mesh& mesh, std::size_t face, int degree) {
  return segment_rule(mesh.vertices[mesh.faces[face].v[0]], mesh.vertices[mesh.faces[face].v[1]], degree);
}

}  // namespace hystokes
