#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "cutflux/geometry.hpp"
#include "cutflux/mesh.hpp"

namespace cutflux {

/// Dof map of the doubled piecewise-linear space: one dof per vertex of each
/// subdomain mesh, so vertices touched by both subdomains carry two dofs.
/// Side-1 dofs come first, each side ordered by ascending vertex id.
/// Dirichlet dofs sit on the outer boundary AND belong to the subdomain that
/// owns the vertex by level-set sign; extension dofs there remain free.
struct ChDofMap {
  std::array<std::vector<int>, 2> vertex_dof;  // per side: vertex -> dof or -1
  std::vector<int> dof_vertex;
  std::vector<int> dof_side;                   // 1 or 2
  std::vector<char> dirichlet;
  int n_dofs = 0;

  int dof(int side, int vertex) const { return vertex_dof[side - 1][vertex]; }
};

ChDofMap build_ch_dofmap(const Mesh& mesh, const CutTopology& cut);

/// Orientation sign s_N^F of an edge normal relative to one of its endpoints:
/// +1 if n_F is the clockwise rotation of the unit vector pointing from N to
/// the other endpoint, -1 otherwise.
int edge_node_sign(const Mesh& mesh, int e, int vertex);

/// True if the vertex is interior to the subdomain mesh (not on the outer
/// boundary and with all surrounding cells active on that side).
bool node_interior_to_side(const Mesh& mesh, const CutTopology& cut, int side, int vertex);

/// Edgewise linear multipliers, one family per subdomain, stored by their
/// two endpoint values on every edge (zero off F_h^i).
struct MultiplierField {
  std::array<std::vector<double>, 2> endpoint_value;  // per side: 2*edge + (0|1)

  void resize(int n_edges) {
    endpoint_value[0].assign(2 * n_edges, 0.0);
    endpoint_value[1].assign(2 * n_edges, 0.0);
  }
  double at(const Mesh& mesh, int side, int e, int vertex) const {
    const Edge& ed = mesh.edges[e];
    return endpoint_value[side - 1][2 * e + (vertex == ed.v0 ? 0 : 1)];
  }
  double& slot(const Mesh& mesh, int side, int e, int vertex) {
    const Edge& ed = mesh.edges[e];
    return endpoint_value[side - 1][2 * e + (vertex == ed.v0 ? 0 : 1)];
  }
  /// Edge mean, i.e. the P0 projection of the linear multiplier.
  double edge_mean(int side, int e) const {
    return 0.5 * (endpoint_value[side - 1][2 * e] + endpoint_value[side - 1][2 * e + 1]);
  }
};

/// Piecewise-linear solution over the doubled dof map. Evaluation is
/// barycentric on the requested side; gradients are cellwise constant.
struct PrimalField {
  const Mesh* mesh = nullptr;
  const CutTopology* cut = nullptr;
  const ChDofMap* dofmap = nullptr;
  Eigen::VectorXd coeff;

  double eval(int cell, int side, const Vec2& p) const;
  Vec2 grad(int cell, int side) const;

  /// Interface jump u_1 - u_2 at a point of a cut cell.
  double interface_jump(int cell, const Vec2& p) const {
    return eval(cell, 1, p) - eval(cell, 2, p);
  }
  double vertex_value(int side, int vertex) const {
    const int d = dofmap->dof(side, vertex);
    return d < 0 ? 0.0 : coeff[d];
  }
};

/// P1 hat-function gradients of a cell, indexed by local vertex.
std::array<Vec2, 3> p1_gradients(const Mesh& mesh, int cell);

/// Lowest-order Raviart-Thomas data on one triangle (or one side of a cut
/// triangle): the three edge dofs N_{T,j} against the outward normal.
struct RTCoeffs {
  std::array<double, 3> dof = {0.0, 0.0, 0.0};
};

/// Basis function of edge j (opposite local vertex j), |F_j|/(2|T|) (x - A_j).
Vec2 rt_basis(const Mesh& mesh, int cell, int j, const Vec2& p);

Vec2 rt_eval(const Mesh& mesh, int cell, const RTCoeffs& c, const Vec2& p);

/// Divergence of an RT0 field, constant per cell.
double rt_divergence(const Mesh& mesh, int cell, const RTCoeffs& c);

}  // namespace cutflux
