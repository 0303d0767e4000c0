#ifndef HYSTOKES_MESH_HPP
#define HYSTOKES_MESH_HPP

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace hystokes {

using Vec2 = Eigen::Vector2d;

/// Mesh edge: endpoint pair in the owner cell's traversal order, plus incident cells.
struct Face {
  std::array<std::size_t, 2> v;
  int owner = -1;      ///< cell whose loop traverses v[0] -> v[1]
  int neighbour = -1;  ///< second incident cell, -1 on the domain boundary
  bool is_boundary() const { return neighbour < 0; }
};

/// Polygonal mesh of the unit square: vertices, CCW cell loops, derived face connectivity.
struct Mesh {
  std::vector<Vec2> vertices;
  std::vector<std::vector<std::size_t>> cells;  ///< CCW vertex loops
  std::vector<Face> faces;
  std::vector<std::vector<std::size_t>> cell_faces;  ///< per cell, face indices in loop order

  std::size_t n_vertices() const { return vertices.size(); }
  std::size_t n_cells() const { return cells.size(); }
  std::size_t n_faces() const { return faces.size(); }
  std::size_t n_boundary_faces() const;
  std::size_t n_internal_faces() const { return n_faces() - n_boundary_faces(); }

  /// Builds the face table from vertex loops. Throws on non-simple loops,
  /// non-positive cell areas, or an edge shared by more than two cells.
  static Mesh from_cells(std::vector<Vec2> vertices,
                         std::vector<std::vector<std::size_t>> cells);

  /// Full integrity check: topology, orientation, and that the cells tile the
  /// unit square (total area 1 within 1e-12).
  void validate() const;

  /// True if every cell is a triangle.
  bool is_simplicial() const;
  /// True if every cell is an axis-aligned rectangle.
  bool is_rectangular() const;
};

/// Cartesian n x n grid of squares.
Mesh build_cartesian(int n);
/// Structured triangular mesh: Cartesian n x n grid, each square split along the (+1,+1) diagonal.
Mesh build_triangular(int n);
/// Honeycomb of regular hexagons (about n across) clipped to the unit square.
Mesh build_hexagonal(int n);
/// Cartesian n x n grid (n even) with the quadrant (0,1/2)^2 refined once;
/// hanging nodes are resolved by splitting the coarse neighbours' edges.
Mesh build_locref(int n);

/// Reads a mesh from JSON {"vertices": [[x,y],...], "cells": [[i,...],...]} (0-based loops).
Mesh read_mesh(const std::string& path);
/// Writes the same JSON format with 17 significant digits.
void write_mesh(const Mesh& mesh, const std::string& path);

/// Precomputed cell and face geometry.
struct MeshGeometry {
  struct CellGeom {
    double diameter;  ///< h_T
    double area;      ///< |T|
    Vec2 centroid;    ///< x_T (area centroid)
  };
  struct FaceGeom {
    double length;  ///< h_F
    Vec2 midpoint;  ///< x_F
    Vec2 tangent;   ///< unit, along the stored vertex order
    Vec2 normal;    ///< unit, outward from the owner cell
  };
  std::vector<CellGeom> cell;
  std::vector<FaceGeom> face;
  /// sign[T][i] = +1 if cell T owns its i-th face (normal points out of T), else -1.
  std::vector<std::vector<int>> sign;

  double mesh_size() const;  ///< max cell diameter
};

MeshGeometry geometry(const Mesh& mesh);

}  // namespace hystokes

#endif
