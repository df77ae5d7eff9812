#include "cutflux/spaces.hpp"

#include <stdexcept>

namespace cutflux {

ChDofMap build_ch_dofmap(const Mesh& mesh, const CutTopology& cut) {
  ChDofMap map;
  map.vertex_dof[0].assign(mesh.n_vertices(), -1);
  map.vertex_dof[1].assign(mesh.n_vertices(), -1);

  for (int side = 1; side <= 2; ++side) {
    std::vector<char> active(mesh.n_vertices(), 0);
    for (int c = 0; c < mesh.n_cells(); ++c) {
      if (!cut.cell_in_side(c, side)) continue;
      for (int j = 0; j < 3; ++j) active[mesh.cells[c][j]] = 1;
    }
    for (int v = 0; v < mesh.n_vertices(); ++v) {
      if (!active[v]) continue;
      map.vertex_dof[side - 1][v] = map.n_dofs++;
      map.dof_vertex.push_back(v);
      map.dof_side.push_back(side);
      // A dof is constrained only where its own subdomain meets the outer
      // boundary; extension dofs of the other family stay free (they are
      // controlled by the ghost penalty, and pinning them would break the
      // solvability of the boundary node patches).
      const bool owns = (cut.phi_vertex[v] < 0.0) == (side == 1);
      map.dirichlet.push_back(mesh.vertex_on_boundary[v] && owns);
    }
  }
  return map;
}

int edge_node_sign(const Mesh& mesh, int e, int vertex) {
  const Edge& ed = mesh.edges[e];
  Vec2 d;
  if (vertex == ed.v0)
    d = mesh.vertices[ed.v1] - mesh.vertices[ed.v0];
  else if (vertex == ed.v1)
    d = mesh.vertices[ed.v0] - mesh.vertices[ed.v1];
  else
    throw std::invalid_argument("edge_node_sign: vertex not on edge");
  return ed.normal.dot(rot_cw(d)) > 0.0 ? 1 : -1;
}

bool node_interior_to_side(const Mesh& mesh, const CutTopology& cut, int side, int vertex) {
  if (mesh.vertex_on_boundary[vertex]) return false;
  for (int c : mesh.vertex_cells[vertex])
    if (!cut.cell_in_side(c, side)) return false;
  return true;
}

std::array<Vec2, 3> p1_gradients(const Mesh& mesh, int cell) {
  const auto& [a, b, c] = mesh.cells[cell];
  const Vec2 &pa = mesh.vertices[a], &pb = mesh.vertices[b], &pc = mesh.vertices[c];
  const double inv2A = 1.0 / (2.0 * mesh.cell_area[cell]);
  return {rot_ccw(pc - pb) * inv2A, rot_ccw(pa - pc) * inv2A, rot_ccw(pb - pa) * inv2A};
}

double PrimalField::eval(int cell, int side, const Vec2& p) const {
  if (!cut->cell_in_side(cell, side))
    throw std::invalid_argument("PrimalField::eval: cell has no dofs on requested side");
  const auto& [a, b, c] = mesh->cells[cell];
  const Vec2 &pa = mesh->vertices[a], &pb = mesh->vertices[b], &pc = mesh->vertices[c];
  const double inv2A = 1.0 / (2.0 * mesh->cell_area[cell]);
  const double lb = 2.0 * signed_area(pa, p, pc) * inv2A;
  const double lc = 2.0 * signed_area(pa, pb, p) * inv2A;
  const double la = 1.0 - lb - lc;
  return la * coeff[dofmap->dof(side, a)] + lb * coeff[dofmap->dof(side, b)] +
         lc * coeff[dofmap->dof(side, c)];
}

Vec2 PrimalField::grad(int cell, int side) const {
  if (!cut->cell_in_side(cell, side))
    throw std::invalid_argument("PrimalField::grad: cell has no dofs on requested side");
  const auto g = p1_gradients(*mesh, cell);
  Vec2 out = Vec2::Zero();
  for (int j = 0; j < 3; ++j) out += coeff[dofmap->dof(side, mesh->cells[cell][j])] * g[j];
  return out;
}

Vec2 rt_basis(const Mesh& mesh, int cell, int j, const Vec2& p) {
  const int opposite = mesh.cells[cell][j];
  const int e = mesh.cell_edges[cell][j];
  const double scale = mesh.edges[e].length / (2.0 * mesh.cell_area[cell]);
  return scale * (p - mesh.vertices[opposite]);
}

Vec2 rt_eval(const Mesh& mesh, int cell, const RTCoeffs& c, const Vec2& p) {
  Vec2 out = Vec2::Zero();
  for (int j = 0; j < 3; ++j)
    if (c.dof[j] != 0.0) out += c.dof[j] * rt_basis(mesh, cell, j, p);
  return out;
}

double rt_divergence(const Mesh& mesh, int cell, const RTCoeffs& c) {
  double d = 0.0;
  for (int j = 0; j < 3; ++j)
    d += c.dof[j] * mesh.edges[mesh.cell_edges[cell][j]].length;
  return d / mesh.cell_area[cell];
}

}  // namespace cutflux
