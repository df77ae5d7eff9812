#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "cutflux/mesh.hpp"

namespace cutflux {

/// Signed distance-like interface description: phi < 0 in subdomain 1,
/// phi > 0 in subdomain 2. Values at mesh vertices are snapped away from
/// zero during classification.
struct LevelSet {
  std::function<double(const Vec2&)> phi;
  double operator()(const Vec2& p) const { return phi(p); }
};

enum class CellClass : char { Inside1, Inside2, Cut };

/// Geometry of a cut cell. The interface chord joins the zero crossings of
/// the linearly interpolated level set on the two cut edges; its normal
/// points from subdomain 1 into subdomain 2 and the tangent is the clockwise
/// rotation of the normal.
struct CutCellGeometry {
  std::array<Vec2, 2> gamma;            // chord endpoints
  Vec2 n_gamma, t_gamma, x_gamma;       // unit normal/tangent, chord midpoint
  double gamma_length = 0.0;
  std::vector<Vec2> poly1, poly2;       // CCW sub-polygons (triangle and quad)
  double area1 = 0.0, area2 = 0.0;
  double h_min = 0.0;                   // min sub-edge length over the cut edges
  int lone_local = -1;                  // local vertex separated by the chord
  int uncut_local_edge = -1;            // local index of the single uncut edge
};

struct CutEdgeGeometry {
  Vec2 split;                 // zero crossing on the edge
  double len1 = 0.0;          // |F ∩ Ω1|
  double len2 = 0.0;          // |F ∩ Ω2|
};

/// Per-cell and per-edge classification of a mesh against a level set,
/// with the cut geometry needed by assembly and flux reconstruction.
/// Immutable after classify(); all queries are pure.
struct CutTopology {
  std::vector<double> phi_vertex;       // snapped vertex values
  std::vector<CellClass> cell_class;
  std::vector<int> cut_index;           // cell -> index into cut_cells, or -1
  std::vector<int> cut_cells;           // ascending
  std::vector<CutCellGeometry> cut_geom;

  std::vector<char> edge_cut;           // F in F_h^Gamma
  std::vector<int> cut_edge_index;      // edge -> index into cut_edges, or -1
  std::vector<int> cut_edges;           // ascending
  std::vector<CutEdgeGeometry> cut_edge_geom;

  std::array<std::vector<char>, 2> edge_in_side;   // F in F_h^i
  std::array<std::vector<char>, 2> edge_ghost;     // F in F_g^i (interior edges)

  bool cell_in_side(int cell, int side) const {
    const CellClass c = cell_class[cell];
    return c == CellClass::Cut || c == (side == 1 ? CellClass::Inside1 : CellClass::Inside2);
  }
  bool is_cut(int cell) const { return cell_class[cell] == CellClass::Cut; }
  const CutCellGeometry& geom(int cell) const { return cut_geom[cut_index[cell]]; }
  const CutEdgeGeometry& edge_geom(int e) const { return cut_edge_geom[cut_edge_index[e]]; }
  bool edge_in_Fh(int e, int side) const { return edge_in_side[side - 1][e]; }
  bool edge_in_ghost(int e, int side) const { return edge_ghost[side - 1][e]; }

  /// Length of F ∩ Ω^side (full length, a sub-length, or zero).
  double edge_part_length(const Mesh& mesh, int e, int side) const;

  /// Endpoints of F ∩ Ω^side; false if the intersection is empty.
  bool edge_part(const Mesh& mesh, int e, int side, Vec2& a, Vec2& b) const;

  /// Area of T ∩ Ω^side.
  double cell_part_area(const Mesh& mesh, int cell, int side) const;
};

/// Classify every cell and edge by the vertex signs of phi, snapping values
/// with |phi| < 1e-12 * h_local to +1e-12 * h_local first.
CutTopology classify(const Mesh& mesh, const LevelSet& phi);

/// Cells of node fans whose side-i patch splits into several edge-connected
/// components (the interface weaves in and out of the fan). Such pinched
/// configurations break the patch-local multiplier construction and must be
/// refined away.
std::vector<int> pinched_fan_cells(const Mesh& mesh, const CutTopology& cut);

/// Refine until no pinched fans remain; throws if max_rounds is exhausted.
Mesh resolve_pinched_fans(Mesh mesh, const LevelSet& phi, int max_rounds = 40);

struct KappaWeights {
  double omega1, omega2, k_gamma;
};

/// Diffusion-weighted interface averages: omega1 = k2/(k1+k2),
/// omega2 = k1/(k1+k2), k_gamma the harmonic mean k1*k2/(k1+k2).
KappaWeights kappa_weights(double k1, double k2);

struct QuadratureRule {
  std::vector<Vec2> points;
  std::vector<double> weights;  // sum to the measure of the domain

  double integrate(const std::function<double(const Vec2&)>& f) const {
    double s = 0.0;
    for (std::size_t q = 0; q < points.size(); ++q) s += weights[q] * f(points[q]);
    return s;
  }
};

/// Interior-point rule on a triangle, exact for bivariate polynomials of the
/// given degree (2 or 4 supported).
QuadratureRule quad_triangle(const Vec2& a, const Vec2& b, const Vec2& c, int degree);

/// Fan triangulation from the first vertex; empty rule for degenerate input.
QuadratureRule quad_polygon(std::span<const Vec2> polygon, int degree);

/// Gauss rule on a segment (degree 2 -> 2 points, degree 4 -> 3 points),
/// weights carry the segment length.
QuadratureRule quad_segment(const Vec2& a, const Vec2& b, int degree);

/// Rule over T ∩ Ω^side: the whole triangle for uncut cells, the matching
/// sub-polygon for cut cells, empty if the cell has no side part.
QuadratureRule quad_cell_part(const Mesh& mesh, const CutTopology& cut, int cell, int side,
                              int degree);

}  // namespace cutflux
