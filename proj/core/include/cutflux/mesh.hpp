#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

namespace cutflux {

using Vec2 = Eigen::Vector2d;

// 90-degree rotations. rot_cw maps (x,y) -> (y,-x).
inline Vec2 rot_cw(const Vec2& v) { return Vec2(v.y(), -v.x()); }
inline Vec2 rot_ccw(const Vec2& v) { return Vec2(-v.y(), v.x()); }

inline double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
}

/// Mesh edge. Interior edges carry two adjacent cells; the unit normal
/// points from cell_minus to cell_plus. Boundary edges have cell_plus = -1
/// and an outward normal.
struct Edge {
  int v0 = -1, v1 = -1;          // endpoint vertices, v0 < v1
  int cell_minus = -1;           // T_F^-
  int cell_plus = -1;            // T_F^+, -1 on the boundary
  double length = 0.0;           // h_F
  Vec2 normal = Vec2::Zero();    // n_F

  bool boundary() const { return cell_plus < 0; }
};

/// Conforming triangulation. Cells are stored counter-clockwise with the
/// newest vertex first, so the refinement edge of a cell is always the edge
/// opposite local vertex 0. Meshes are immutable after construction; refine()
/// returns a new mesh.
struct Mesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> cells;       // CCW, vertex 0 = bisection peak
  std::vector<Edge> edges;
  std::vector<std::array<int, 3>> cell_edges;  // edge j opposite local vertex j
  std::vector<std::vector<int>> vertex_cells;  // ascending cell ids per vertex
  std::vector<double> cell_area;
  std::vector<double> cell_diameter;           // h_T
  std::vector<char> vertex_on_boundary;
  std::vector<int> parent;                     // cell id in the pre-refinement mesh

  int n_cells() const { return static_cast<int>(cells.size()); }
  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_edges() const { return static_cast<int>(edges.size()); }

  const Vec2& vertex(int v) const { return vertices[v]; }
  Vec2 centroid(int cell) const;

  /// Sign of the jump of the cell indicator chi_T across edge e, i.e. +1 if
  /// the cell is T_F^- (or the edge is on the boundary), -1 if it is T_F^+.
  int chi_jump_sign(int e, int cell) const;

  /// Outward unit normal of `cell` on its edge e.
  Vec2 outward_normal(int e, int cell) const;

  /// Local index (0..2) of `vertex` within `cell`, or -1.
  int local_vertex(int cell, int vertex) const;

  /// Edge id connecting two vertices, or -1.
  int edge_between(int a, int b) const;
};

/// Build a mesh from raw vertices and CCW cells, computing edges, adjacency
/// and geometry. Throws on non-positive cells or non-conforming input.
Mesh make_mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> cells);

enum class Domain { Square, LShape };

/// Structured triangulation of [a,b]^2 with n subdivisions per axis, every
/// square split along the (lower-left, upper-right) diagonal. For LShape the
/// quadrant [mid,b]x[a,mid] is omitted, which requires n to be even.
Mesh build_structured_mesh(Domain domain, double a, double b, int n);

/// Newest-vertex bisection of the marked cells plus conformity closure.
/// parent[] of the result maps each cell to its ancestor in `mesh`.
Mesh refine(const Mesh& mesh, const std::vector<int>& marked);

/// Dörfler marking: smallest set of cells (ties broken by lower index) whose
/// squared indicators sum to at least theta times the total.
std::vector<int> dorfler_mark(const std::vector<double>& indicators, double theta);

}  // namespace cutflux
