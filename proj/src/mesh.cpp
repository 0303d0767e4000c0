#include "hystokes/mesh.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace hystokes {

namespace {

double loop_area(const std::vector<Vec2>& verts, const std::vector<std::size_t>& loop) {
  double a = 0.;
  for (std::size_t i = 0; i < loop.size(); i++) {
    const Vec2& p = verts[loop[i]];
    const Vec2& q = verts[loop[(i + 1) % loop.size()]];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

}  // namespace

std::size_t Mesh::n_boundary_faces() const {
  std::size_t n = 0;
  for (const Face& f : faces) n += f.is_boundary() ? 1 : 0;
  return n;
}

Mesh Mesh::from_cells(std::vector<Vec2> vertices, std::vector<std::vector<std::size_t>> cells) {
  Mesh m;
  m.vertices = std::move(vertices);
  m.cells = std::move(cells);

  for (std::size_t ic = 0; ic < m.cells.size(); ic++) {
    const auto& loop = m.cells[ic];
    if (loop.size() < 3) throw std::runtime_error("mesh: cell " + std::to_string(ic) + " has fewer than 3 vertices");
    for (std::size_t v : loop) {
      if (v >= m.vertices.size())
        throw std::runtime_error("mesh: cell " + std::to_string(ic) + " references unknown vertex");
    }
    std::vector<std::size_t> sorted(loop);
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw std::runtime_error("mesh: cell " + std::to_string(ic) + " repeats a vertex");
    if (loop_area(m.vertices, loop) <= 0.)
      throw std::runtime_error("mesh: cell " + std::to_string(ic) + " is not counter-clockwise with positive area");
  }

  std::map<std::pair<std::size_t, std::size_t>, std::size_t> edge_to_face;
  m.cell_faces.resize(m.cells.size());
  for (std::size_t ic = 0; ic < m.cells.size(); ic++) {
    const auto& loop = m.cells[ic];
    for (std::size_t i = 0; i < loop.size(); i++) {
      std::size_t a = loop[i];
      std::size_t b = loop[(i + 1) % loop.size()];
      auto key = std::minmax(a, b);
      auto it = edge_to_face.find(key);
      if (it == edge_to_face.end()) {
        Face f;
        f.v = {a, b};
        f.owner = static_cast<int>(ic);
        edge_to_face.emplace(key, m.faces.size());
        m.cell_faces[ic].push_back(m.faces.size());
        m.faces.push_back(f);
      } else {
        Face& f = m.faces[it->second];
        if (f.neighbour >= 0)
          throw std::runtime_error("mesh: edge shared by more than two cells");
        if (f.v[0] != b || f.v[1] != a)
          throw std::runtime_error("mesh: neighbouring cells traverse a shared edge in the same direction");
        f.neighbour = static_cast<int>(ic);
        m.cell_faces[ic].push_back(it->second);
      }
    }
  }
  return m;
}

void Mesh::validate() const {
  double total = 0.;
  for (const auto& loop : cells) {
    double a = loop_area(vertices, loop);
    if (a <= 0.) throw std::runtime_error("mesh: cell with non-positive area");
    total += a;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::runtime_error("mesh: cells do not tile the unit square (total area " + std::to_string(total) + ")");
  for (const Face& f : faces) {
    if (f.owner < 0) throw std::runtime_error("mesh: face without owner");
  }
}

bool Mesh::is_simplicial() const {
  return std::all_of(cells.begin(), cells.end(), [](const auto& c) { return c.size() == 3; });
}

bool Mesh::is_rectangular() const {
  for (const auto& loop : cells) {
    if (loop.size() != 4) return false;
    for (std::size_t i = 0; i < 4; i++) {
      Vec2 e = vertices[loop[(i + 1) % 4]] - vertices[loop[i]];
      if (std::abs(e.x()) > 1e-12 && std::abs(e.y()) > 1e-12) return false;
    }
  }
  return true;
}

Mesh build_cartesian(int n) {
  if (n < 1) throw std::invalid_argument("build_cartesian: n must be >= 1");
  std::vector<Vec2> verts;
  verts.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
  for (int j = 0; j <= n; j++)
    for (int i = 0; i <= n; i++)
      verts.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
  auto vid = [n](int i, int j) { return static_cast<std::size_t>(j) * (n + 1) + i; };
  std::vector<std::vector<std::size_t>> cells;
  cells.reserve(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; j++)
    for (int i = 0; i < n; i++)
      cells.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)});
  return Mesh::from_cells(std::move(verts), std::move(cells));
}

Mesh build_triangular(int n) {
  if (n < 1) throw std::invalid_argument("build_triangular: n must be >= 1");
  std::vector<Vec2> verts;
  for (int j = 0; j <= n; j++)
    for (int i = 0; i <= n; i++)
      verts.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
  auto vid = [n](int i, int j) { return static_cast<std::size_t>(j) * (n + 1) + i; };
  std::vector<std::vector<std::size_t>> cells;
  cells.reserve(2 * static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; j++)
    for (int i = 0; i < n; i++) {
      cells.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      cells.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
    }
  return Mesh::from_cells(std::move(verts), std::move(cells));
}

namespace {

// Clips a convex polygon against the half-plane {x : n.x <= c}; Sutherland-Hodgman.
// Intersections are computed from lexicographically ordered endpoints so that the
// two cells sharing a clipped edge produce bit-identical cut points.
std::vector<Vec2> clip_halfplane(const std::vector<Vec2>& poly, const Vec2& n, double c) {
  auto inside = [&](const Vec2& p) { return n.dot(p) <= c + 1e-13; };
  auto cut = [&](Vec2 p, Vec2 q) {
    if (q.x() < p.x() || (q.x() == p.x() && q.y() < p.y())) std::swap(p, q);
    double dp = n.dot(p) - c, dq = n.dot(q) - c;
    double t = dp / (dp - dq);
    return Vec2(p + t * (q - p));
  };
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < poly.size(); i++) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    bool pin = inside(p), qin = inside(q);
    if (pin) out.push_back(p);
    if (pin != qin) out.push_back(cut(p, q));
  }
  return out;
}

}  // namespace

Mesh build_hexagonal(int n) {
  if (n < 1) throw std::invalid_argument("build_hexagonal: n must be >= 1");
  const double R = 1.0 / (std::sqrt(3.0) * n);  // circumradius; x-pitch sqrt(3) R = 1/n
  const double w = std::sqrt(3.0) * R;
  const double dy = 1.5 * R;
  const int rows = static_cast<int>(std::ceil(1.0 / dy)) + 2;

  std::vector<std::vector<Vec2>> polys;
  for (int j = -1; j <= rows; j++) {
    double cy = j * dy;
    double xoff = (j % 2 == 0) ? 0.0 : 0.5 * w;
    for (int i = -1; i <= n + 1; i++) {
      double cx = i * w + xoff;
      std::vector<Vec2> hex;
      for (int m = 0; m < 6; m++) {
        double ang = M_PI / 6.0 + m * M_PI / 3.0;  // pointy-top
        hex.emplace_back(cx + R * std::cos(ang), cy + R * std::sin(ang));
      }
      hex = clip_halfplane(hex, Vec2(-1, 0), 0.0);
      hex = clip_halfplane(hex, Vec2(1, 0), 1.0);
      hex = clip_halfplane(hex, Vec2(0, -1), 0.0);
      hex = clip_halfplane(hex, Vec2(0, 1), 1.0);
      if (hex.size() < 3) continue;
      // drop consecutive duplicates left by clipping
      std::vector<Vec2> clean;
      for (const Vec2& p : hex) {
        if (clean.empty() || (p - clean.back()).norm() > 1e-12) clean.push_back(p);
      }
      while (clean.size() > 1 && (clean.front() - clean.back()).norm() <= 1e-12) clean.pop_back();
      if (clean.size() < 3) continue;
      double a = 0.;
      for (std::size_t ii = 0; ii < clean.size(); ii++) {
        const Vec2& p = clean[ii];
        const Vec2& q = clean[(ii + 1) % clean.size()];
        a += p.x() * q.y() - q.x() * p.y();
      }
      if (0.5 * a < 1e-13) continue;
      polys.push_back(std::move(clean));
    }
  }

  // merge identical coordinates into shared vertices (clipping is bit-reproducible)
  std::vector<Vec2> verts;
  std::map<std::pair<std::int64_t, std::int64_t>, std::size_t> vmap;
  auto vertex_id = [&](const Vec2& p) {
    auto key = std::make_pair(static_cast<std::int64_t>(std::llround(p.x() * 1e12)),
                              static_cast<std::int64_t>(std::llround(p.y() * 1e12)));
    auto it = vmap.find(key);
    if (it != vmap.end()) return it->second;
    vmap.emplace(key, verts.size());
    verts.push_back(p);
    return verts.size() - 1;
  };
  std::vector<std::vector<std::size_t>> cells;
  for (const auto& poly : polys) {
    std::vector<std::size_t> loop;
    for (const Vec2& p : poly) {
      std::size_t id = vertex_id(p);
      if (loop.empty() || loop.back() != id) loop.push_back(id);
    }
    while (loop.size() > 1 && loop.front() == loop.back()) loop.pop_back();
    if (loop.size() >= 3) cells.push_back(std::move(loop));
  }
  return Mesh::from_cells(std::move(verts), std::move(cells));
}

Mesh build_locref(int n) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("build_locref: n must be even and >= 2");
  const int m = 2 * n;  // fine-grid subdivisions per unit length
  std::vector<Vec2> verts;
  std::map<std::pair<int, int>, std::size_t> vmap;
  auto vid = [&](int a, int b) {  // vertex at (a/m, b/m)
    auto it = vmap.find({a, b});
    if (it != vmap.end()) return it->second;
    vmap.emplace(std::make_pair(a, b), verts.size());
    verts.emplace_back(static_cast<double>(a) / m, static_cast<double>(b) / m);
    return verts.size() - 1;
  };

  std::vector<std::vector<std::size_t>> cells;
  for (int j = 0; j < n; j++)
    for (int i = 0; i < n; i++) {
      bool refined = (i < n / 2 && j < n / 2);
      int a0 = 2 * i, b0 = 2 * j;  // fine-grid coordinates of the cell's corner
      if (refined) {
        for (int sj = 0; sj < 2; sj++)
          for (int si = 0; si < 2; si++) {
            int a = a0 + si, b = b0 + sj;
            cells.push_back({vid(a, b), vid(a + 1, b), vid(a + 1, b + 1), vid(a, b + 1)});
          }
      } else {
        std::vector<std::size_t> loop;
        loop.push_back(vid(a0, b0));
        if (j == n / 2 && i < n / 2) loop.push_back(vid(a0 + 1, b0));  // hanging node below
        loop.push_back(vid(a0 + 2, b0));
        loop.push_back(vid(a0 + 2, b0 + 2));
        loop.push_back(vid(a0, b0 + 2));
        if (i == n / 2 && j < n / 2) loop.push_back(vid(a0, b0 + 1));  // hanging node on the left
        cells.push_back(std::move(loop));
      }
    }
  return Mesh::from_cells(std::move(verts), std::move(cells));
}

Mesh read_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_mesh: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(std::string("read_mesh: JSON parse error: ") + e.what());
  }
  if (!j.contains("vertices") || !j.contains("cells"))
    throw std::runtime_error("read_mesh: missing 'vertices' or 'cells'");
  std::vector<Vec2> verts;
  for (const auto& v : j["vertices"]) {
    if (!v.is_array() || v.size() != 2) throw std::runtime_error("read_mesh: bad vertex entry");
    verts.emplace_back(v[0].get<double>(), v[1].get<double>());
  }
  std::vector<std::vector<std::size_t>> cells;
  for (const auto& c : j["cells"]) {
    std::vector<std::size_t> loop;
    for (const auto& idx : c) loop.push_back(idx.get<std::size_t>());
    cells.push_back(std::move(loop));
  }
  return Mesh::from_cells(std::move(verts), std::move(cells));
}

void write_mesh(const Mesh& mesh, const std::string& path) {
  std::ostringstream os;
  os.precision(17);
  os << "{\n  \"vertices\": [\n";
  for (std::size_t i = 0; i < mesh.vertices.size(); i++) {
    os << "    [" << mesh.vertices[i].x() << ", " << mesh.vertices[i].y() << "]"
       << (i + 1 < mesh.vertices.size() ? "," : "") << "\n";
  }
  os << "  ],\n  \"cells\": [\n";
  for (std::size_t i = 0; i < mesh.cells.size(); i++) {
    os << "    [";
    for (std::size_t k = 0; k < mesh.cells[i].size(); k++)
      os << mesh.cells[i][k] << (k + 1 < mesh.cells[i].size() ? ", " : "");
    os << "]" << (i + 1 < mesh.cells.size() ? "," : "") << "\n";
  }
  os << "  ]\n}\n";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_mesh: cannot open " + path);
  out << os.str();
}

MeshGeometry geometry(const Mesh& mesh) {
  MeshGeometry g;
  g.cell.resize(mesh.n_cells());
  g.face.resize(mesh.n_faces());
  g.sign.resize(mesh.n_cells());

  for (std::size_t ic = 0; ic < mesh.n_cells(); ic++) {
    const auto& loop = mesh.cells[ic];
    double a = 0.;
    Vec2 c = Vec2::Zero();
    for (std::size_t i = 0; i < loop.size(); i++) {
      const Vec2& p = mesh.vertices[loop[i]];
      const Vec2& q = mesh.vertices[loop[(i + 1) % loop.size()]];
      double cross = p.x() * q.y() - q.x() * p.y();
      a += cross;
      c += cross * (p + q);
    }
    a *= 0.5;
    c /= 6. * a;
    double diam = 0.;
    for (std::size_t i = 0; i < loop.size(); i++)
      for (std::size_t k = i + 1; k < loop.size(); k++)
        diam = std::max(diam, (mesh.vertices[loop[i]] - mesh.vertices[loop[k]]).norm());
    g.cell[ic] = {diam, a, c};
  }

  for (std::size_t f = 0; f < mesh.n_faces(); f++) {
    const Vec2& p = mesh.vertices[mesh.faces[f].v[0]];
    const Vec2& q = mesh.vertices[mesh.faces[f].v[1]];
    Vec2 t = q - p;
    double len = t.norm();
    t /= len;
    g.face[f] = {len, 0.5 * (p + q), t, Vec2(t.y(), -t.x())};
  }

  for (std::size_t ic = 0; ic < mesh.n_cells(); ic++) {
    g.sign[ic].reserve(mesh.cell_faces[ic].size());
    for (std::size_t f : mesh.cell_faces[ic])
      g.sign[ic].push_back(mesh.faces[f].owner == static_cast<int>(ic) ? 1 : -1);
  }
  return g;
}

double MeshGeometry::mesh_size() const {
  double h = 0.;
  for (const auto& c : cell) h = std::max(h, c.diameter);
  return h;
}

}  // namespace hystokes
