#include "cutflux/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cutflux {

namespace {

constexpr double kSnapRel = 1e-12;

int sign_of(double v) { return v < 0.0 ? -1 : 1; }

Vec2 edge_zero_crossing(const Vec2& p, double phi_p, const Vec2& q, double phi_q) {
  // phi linear along the edge; signs differ strictly after snapping.
  const double t = phi_p / (phi_p - phi_q);
  return p + t * (q - p);
}

}  // namespace

double CutTopology::edge_part_length(const Mesh& mesh, int e, int side) const {
  if (edge_cut[e]) {
    const CutEdgeGeometry& g = edge_geom(e);
    return side == 1 ? g.len1 : g.len2;
  }
  return edge_in_Fh(e, side) ? mesh.edges[e].length : 0.0;
}

bool CutTopology::edge_part(const Mesh& mesh, int e, int side, Vec2& a, Vec2& b) const {
  const Edge& ed = mesh.edges[e];
  if (edge_cut[e]) {
    const CutEdgeGeometry& g = edge_geom(e);
    // The endpoint whose sign matches `side` anchors the sub-segment.
    const int side_v0 = sign_of(phi_vertex[ed.v0]) < 0 ? 1 : 2;
    const int anchor = (side_v0 == side) ? ed.v0 : ed.v1;
    a = mesh.vertices[anchor];
    b = g.split;
    return true;
  }
  if (!edge_in_Fh(e, side)) return false;
  a = mesh.vertices[ed.v0];
  b = mesh.vertices[ed.v1];
  return true;
}

double CutTopology::cell_part_area(const Mesh& mesh, int cell, int side) const {
  if (is_cut(cell)) {
    const CutCellGeometry& g = geom(cell);
    return side == 1 ? g.area1 : g.area2;
  }
  return cell_in_side(cell, side) ? mesh.cell_area[cell] : 0.0;
}

CutTopology classify(const Mesh& mesh, const LevelSet& phi) {
  CutTopology cut;
  const int nv = mesh.n_vertices();
  const int nc = mesh.n_cells();
  const int ne = mesh.n_edges();

  // Snap vertex values: |phi| below 1e-12 * local edge scale becomes positive.
  cut.phi_vertex.resize(nv);
  std::vector<double> h_local(nv, 0.0);
  for (const Edge& e : mesh.edges) {
    h_local[e.v0] = std::max(h_local[e.v0], e.length);
    h_local[e.v1] = std::max(h_local[e.v1], e.length);
  }
  for (int v = 0; v < nv; ++v) {
    double val = phi(mesh.vertices[v]);
    if (!std::isfinite(val)) throw std::runtime_error("classify: level set not finite at vertex");
    const double eps = kSnapRel * h_local[v];
    if (std::abs(val) < eps) val = eps;
    cut.phi_vertex[v] = val;
  }

  cut.cell_class.resize(nc);
  cut.cut_index.assign(nc, -1);
  cut.edge_cut.assign(ne, 0);
  cut.cut_edge_index.assign(ne, -1);
  cut.edge_in_side[0].assign(ne, 0);
  cut.edge_in_side[1].assign(ne, 0);
  cut.edge_ghost[0].assign(ne, 0);
  cut.edge_ghost[1].assign(ne, 0);

  for (int e = 0; e < ne; ++e) {
    const Edge& ed = mesh.edges[e];
    const double pa = cut.phi_vertex[ed.v0];
    const double pb = cut.phi_vertex[ed.v1];
    cut.edge_in_side[0][e] = (pa < 0.0 || pb < 0.0);
    cut.edge_in_side[1][e] = (pa > 0.0 || pb > 0.0);
    if (sign_of(pa) != sign_of(pb)) {
      cut.edge_cut[e] = 1;
      cut.cut_edge_index[e] = static_cast<int>(cut.cut_edges.size());
      cut.cut_edges.push_back(e);
      CutEdgeGeometry g;
      g.split = edge_zero_crossing(mesh.vertices[ed.v0], pa, mesh.vertices[ed.v1], pb);
      const double d0 = (g.split - mesh.vertices[ed.v0]).norm();
      const double d1 = (g.split - mesh.vertices[ed.v1]).norm();
      if (pa < 0.0) {
        g.len1 = d0;
        g.len2 = d1;
      } else {
        g.len1 = d1;
        g.len2 = d0;
      }
      cut.cut_edge_geom.push_back(g);
    }
  }

  for (int c = 0; c < nc; ++c) {
    const auto& vtx = mesh.cells[c];
    const std::array<int, 3> s = {sign_of(cut.phi_vertex[vtx[0]]),
                                  sign_of(cut.phi_vertex[vtx[1]]),
                                  sign_of(cut.phi_vertex[vtx[2]])};
    const int total = s[0] + s[1] + s[2];
    if (total == -3) {
      cut.cell_class[c] = CellClass::Inside1;
      continue;
    }
    if (total == 3) {
      cut.cell_class[c] = CellClass::Inside2;
      continue;
    }
    cut.cell_class[c] = CellClass::Cut;
    cut.cut_index[c] = static_cast<int>(cut.cut_cells.size());
    cut.cut_cells.push_back(c);

    CutCellGeometry g;
    // The lone vertex carries the minority sign; the chord separates it.
    const int lone_sign = (total == 1) ? -1 : 1;
    for (int j = 0; j < 3; ++j)
      if (s[j] == lone_sign) g.lone_local = j;
    const int l = g.lone_local;
    const int m1 = (l + 1) % 3;
    const int m2 = (l + 2) % 3;
    // The two cut edges of the cell are (lone,m1) and (m2,lone); the edge
    // (m1,m2), opposite the lone vertex, is the single uncut edge.
    g.uncut_local_edge = l;

    const Vec2 pl = mesh.vertices[vtx[l]];
    const Vec2 pm1 = mesh.vertices[vtx[m1]];
    const Vec2 pm2 = mesh.vertices[vtx[m2]];
    const double fl = cut.phi_vertex[vtx[l]];
    const double t1 = fl / (fl - cut.phi_vertex[vtx[m1]]);
    const double t2 = fl / (fl - cut.phi_vertex[vtx[m2]]);
    const Vec2 q1 = pl + t1 * (pm1 - pl);
    const Vec2 q2 = pl + t2 * (pm2 - pl);

    g.gamma = {q1, q2};
    g.gamma_length = (q2 - q1).norm();
    if (!(g.gamma_length > 0.0))
      throw std::runtime_error("classify: degenerate interface chord (snapping failed)");
    g.x_gamma = 0.5 * (q1 + q2);
    Vec2 n = rot_cw((q2 - q1) / g.gamma_length);
    // Orient from subdomain 1 to subdomain 2.
    const double toward_lone = n.dot(pl - g.x_gamma);
    if ((lone_sign < 0 && toward_lone > 0.0) || (lone_sign > 0 && toward_lone < 0.0)) n = -n;
    g.n_gamma = n;
    g.t_gamma = rot_cw(n);

    std::vector<Vec2> lone_poly = {pl, q1, q2};
    std::vector<Vec2> quad_poly = {q1, pm1, pm2, q2};
    // The chord cuts off the similar triangle with parameters t1, t2, so its
    // area is t1 t2 |T| exactly; the shoelace formula would cancel badly for
    // sliver cuts produced by snapped vertices.
    const double lone_area = t1 * t2 * mesh.cell_area[c];
    const double quad_area = mesh.cell_area[c] - lone_area;
    if (lone_sign < 0) {
      g.poly1 = std::move(lone_poly);
      g.poly2 = std::move(quad_poly);
      g.area1 = lone_area;
      g.area2 = quad_area;
    } else {
      g.poly1 = std::move(quad_poly);
      g.poly2 = std::move(lone_poly);
      g.area1 = quad_area;
      g.area2 = lone_area;
    }
    if (!(g.area1 > 0.0) || !(g.area2 > 0.0))
      throw std::runtime_error("classify: cut sub-polygon with non-positive area");

    g.h_min = std::numeric_limits<double>::max();
    for (int j = 0; j < 3; ++j) {
      const int e = mesh.cell_edges[c][j];
      if (!cut.edge_cut[e]) continue;
      const CutEdgeGeometry& eg = cut.edge_geom(e);
      g.h_min = std::min({g.h_min, eg.len1, eg.len2});
    }

    cut.cut_geom.push_back(std::move(g));
  }

  // A cut edge has endpoints of opposite sign, so both adjacent cells carry
  // mixed vertex signs and must be cut themselves.
  for (int e : cut.cut_edges) {
    const Edge& ed = mesh.edges[e];
    if (!cut.is_cut(ed.cell_minus) || (!ed.boundary() && !cut.is_cut(ed.cell_plus)))
      throw std::runtime_error("classify: cut edge adjacent to an uncut cell");
  }

  // Ghost-penalty facets: interior edges of F_h^i with a cut neighbor.
  for (int e = 0; e < ne; ++e) {
    const Edge& ed = mesh.edges[e];
    if (ed.boundary()) continue;
    const bool near_cut = cut.is_cut(ed.cell_minus) || cut.is_cut(ed.cell_plus);
    if (!near_cut) continue;
    for (int side = 1; side <= 2; ++side)
      if (cut.edge_in_Fh(e, side)) cut.edge_ghost[side - 1][e] = 1;
  }

  return cut;
}

std::vector<int> pinched_fan_cells(const Mesh& mesh, const CutTopology& cut) {
  std::vector<int> marked;
  std::vector<int> cells, roots;

  auto find = [&](int i) {
    while (roots[i] != i) i = roots[i] = roots[roots[i]];
    return i;
  };

  for (int v = 0; v < mesh.n_vertices(); ++v) {
    for (int side = 1; side <= 2; ++side) {
      cells.clear();
      for (int c : mesh.vertex_cells[v])
        if (cut.cell_in_side(c, side)) cells.push_back(c);
      if (cells.size() < 2) continue;

      roots.resize(cells.size());
      for (std::size_t i = 0; i < roots.size(); ++i) roots[i] = static_cast<int>(i);
      auto index_of = [&](int c) {
        for (std::size_t i = 0; i < cells.size(); ++i)
          if (cells[i] == c) return static_cast<int>(i);
        return -1;
      };

      // Patch cells couple only through the multiplier unknowns, i.e. the
      // F_h^i edges at v.
      for (std::size_t i = 0; i < cells.size(); ++i)
        for (int j = 0; j < 3; ++j) {
          const int e = mesh.cell_edges[cells[i]][j];
          const Edge& ed = mesh.edges[e];
          if (ed.v0 != v && ed.v1 != v) continue;
          if (!cut.edge_in_Fh(e, side) || ed.boundary()) continue;
          const int other = index_of(ed.cell_minus == cells[i] ? ed.cell_plus : ed.cell_minus);
          if (other >= 0) roots[find(static_cast<int>(i))] = find(other);
        }

      int components = 0;
      for (std::size_t i = 0; i < cells.size(); ++i)
        if (find(static_cast<int>(i)) == static_cast<int>(i)) ++components;
      if (components > 1)
        for (int c : cells) marked.push_back(c);
    }
  }

  std::sort(marked.begin(), marked.end());
  marked.erase(std::unique(marked.begin(), marked.end()), marked.end());
  return marked;
}

Mesh resolve_pinched_fans(Mesh mesh, const LevelSet& phi, int max_rounds) {
  for (int round = 0; round < max_rounds; ++round) {
    const CutTopology cut = classify(mesh, phi);
    const std::vector<int> marked = pinched_fan_cells(mesh, cut);
    if (marked.empty()) return mesh;
    mesh = refine(mesh, marked);
  }
  throw std::runtime_error("resolve_pinched_fans: interface still pinched after refinement");
}

KappaWeights kappa_weights(double k1, double k2) {
  if (!(k1 > 0.0) || !(k2 > 0.0))
    throw std::invalid_argument("kappa_weights: diffusivities must be positive");
  KappaWeights w;
  w.omega1 = k2 / (k1 + k2);
  w.omega2 = k1 / (k1 + k2);
  w.k_gamma = k1 * k2 / (k1 + k2);
  return w;
}

QuadratureRule quad_triangle(const Vec2& a, const Vec2& b, const Vec2& c, int degree) {
  const double area = signed_area(a, b, c);
  QuadratureRule rule;
  if (area <= 0.0) return rule;

  auto push = [&](double l0, double l1, double l2, double w) {
    rule.points.push_back(l0 * a + l1 * b + l2 * c);
    rule.weights.push_back(w * area);
  };

  if (degree <= 2) {
    // Interior 3-point rule, degree 2.
    const double t = 1.0 / 6.0, s = 2.0 / 3.0, w = 1.0 / 3.0;
    push(s, t, t, w);
    push(t, s, t, w);
    push(t, t, s, w);
    return rule;
  }
  if (degree <= 4) {
    // Dunavant 6-point rule, degree 4.
    const double a1 = 0.445948490915965, w1 = 0.223381589678011;
    const double a2 = 0.091576213509771, w2 = 0.109951743655322;
    push(a1, a1, 1.0 - 2.0 * a1, w1);
    push(a1, 1.0 - 2.0 * a1, a1, w1);
    push(1.0 - 2.0 * a1, a1, a1, w1);
    push(a2, a2, 1.0 - 2.0 * a2, w2);
    push(a2, 1.0 - 2.0 * a2, a2, w2);
    push(1.0 - 2.0 * a2, a2, a2, w2);
    return rule;
  }
  throw std::invalid_argument("quad_triangle: unsupported degree");
}

QuadratureRule quad_polygon(std::span<const Vec2> polygon, int degree) {
  QuadratureRule rule;
  if (polygon.size() < 3) return rule;
  for (std::size_t k = 1; k + 1 < polygon.size(); ++k) {
    const QuadratureRule tri = quad_triangle(polygon[0], polygon[k], polygon[k + 1], degree);
    rule.points.insert(rule.points.end(), tri.points.begin(), tri.points.end());
    rule.weights.insert(rule.weights.end(), tri.weights.begin(), tri.weights.end());
  }
  return rule;
}

QuadratureRule quad_segment(const Vec2& a, const Vec2& b, int degree) {
  const double len = (b - a).norm();
  QuadratureRule rule;
  if (len == 0.0) return rule;

  auto push = [&](double t, double w) {
    rule.points.push_back(a + 0.5 * (1.0 + t) * (b - a));
    rule.weights.push_back(0.5 * w * len);
  };

  if (degree <= 3) {
    const double t = 1.0 / std::sqrt(3.0);
    push(-t, 1.0);
    push(t, 1.0);
    return rule;
  }
  if (degree <= 5) {
    const double t = std::sqrt(3.0 / 5.0);
    push(-t, 5.0 / 9.0);
    push(0.0, 8.0 / 9.0);
    push(t, 5.0 / 9.0);
    return rule;
  }
  throw std::invalid_argument("quad_segment: unsupported degree");
}

QuadratureRule quad_cell_part(const Mesh& mesh, const CutTopology& cut, int cell, int side,
                              int degree) {
  if (cut.is_cut(cell)) {
    const CutCellGeometry& g = cut.geom(cell);
    const std::vector<Vec2>& poly = (side == 1) ? g.poly1 : g.poly2;
    return quad_polygon(poly, degree);
  }
  if (!cut.cell_in_side(cell, side)) return {};
  const auto& [a, b, c] = mesh.cells[cell];
  return quad_triangle(mesh.vertices[a], mesh.vertices[b], mesh.vertices[c], degree);
}

}  // namespace cutflux
