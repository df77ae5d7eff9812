#include "cutflux/multiplier.hpp"

#include <algorithm>
#include <cmath>

#include "cutflux/linalg.hpp"

namespace cutflux {

NodePatchSystem build_node_patch(const Mesh& mesh, const CutTopology& cut,
                                 const ProblemData& data, const ResidualTable& residuals,
                                 int node, int side) {
  NodePatchSystem patch;
  patch.node = node;
  patch.side = side;
  patch.zero_floor = residuals.noise;

  for (int c : mesh.vertex_cells[node])
    if (cut.cell_in_side(c, side)) patch.cells.push_back(c);

  for (int c : patch.cells)
    for (int j = 0; j < 3; ++j) {
      const int e = mesh.cell_edges[c][j];
      const Edge& ed = mesh.edges[e];
      if (ed.v0 != node && ed.v1 != node) continue;
      if (!cut.edge_in_Fh(e, side)) continue;
      if (std::find(patch.edges.begin(), patch.edges.end(), e) == patch.edges.end())
        patch.edges.push_back(e);
    }
  std::sort(patch.edges.begin(), patch.edges.end());

  const int m = static_cast<int>(patch.cells.size());
  const int n = static_cast<int>(patch.edges.size());
  patch.rows = Eigen::MatrixXd::Zero(m, n);
  patch.rhs.resize(m);

  const double ki = data.k(side);
  for (int row = 0; row < m; ++row) {
    const int c = patch.cells[row];
    for (int j = 0; j < 3; ++j) {
      const int e = mesh.cell_edges[c][j];
      const Edge& ed = mesh.edges[e];
      if (ed.v0 != node && ed.v1 != node) continue;
      if (!cut.edge_in_Fh(e, side)) continue;
      const auto col = std::find(patch.edges.begin(), patch.edges.end(), e) - patch.edges.begin();
      patch.rows(row, col) += 0.5 * ki * ed.length * mesh.chi_jump_sign(e, c);
    }
    patch.rhs[row] = residuals.at(side, c, mesh.local_vertex(c, node));
  }

  patch.interior = node_interior_to_side(mesh, cut, side, node);
  if (patch.interior) {
    patch.constraint.resize(n);
    for (int col = 0; col < n; ++col) {
      const int e = patch.edges[col];
      patch.constraint[col] =
          static_cast<double>(edge_node_sign(mesh, e, node)) * mesh.edges[e].length;
    }
  }
  return patch;
}

Eigen::VectorXd solve_node_patch(const NodePatchSystem& patch) {
  DenseSystem sys{patch.rows, patch.rhs, 1e-10, patch.zero_floor};
  std::optional<Eigen::VectorXd> constraint;
  if (patch.interior) constraint = patch.constraint;
  return solve_constrained_lsq(sys, constraint);
}

MultiplierField assemble_theta(const PrimalField& u, const ProblemData& data,
                               const ResidualTable& residuals) {
  const Mesh& mesh = *u.mesh;
  const CutTopology& cut = *u.cut;
  const ChDofMap& dofmap = *u.dofmap;

  MultiplierField theta;
  theta.resize(mesh.n_edges());

  for (int side = 1; side <= 2; ++side)
    for (int v = 0; v < mesh.n_vertices(); ++v) {
      if (dofmap.dof(side, v) < 0) continue;  // v not in N_h^i
      const NodePatchSystem patch = build_node_patch(mesh, cut, data, residuals, v, side);
      const Eigen::VectorXd x = solve_node_patch(patch);
      for (std::size_t k = 0; k < patch.edges.size(); ++k)
        theta.slot(mesh, side, patch.edges[k], v) = x[k];
    }
  return theta;
}

double mixed_identity_defect(const PrimalField& u, const ProblemData& data,
                             const MultiplierField& theta, const ResidualTable& residuals) {
  const Mesh& mesh = *u.mesh;
  const CutTopology& cut = *u.cut;
  double defect = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c)
    for (int side = 1; side <= 2; ++side) {
      if (!cut.cell_in_side(c, side)) continue;
      for (int j = 0; j < 3; ++j) {
        const double bh = bh_elementwise(mesh, cut, theta, data, c, mesh.cells[c][j], side);
        defect = std::max(defect, std::abs(bh - residuals.at(side, c, j)));
      }
    }
  return defect;
}

double constraint_defect(const Mesh& mesh, const CutTopology& cut, const MultiplierField& theta) {
  double defect = 0.0;
  for (int side = 1; side <= 2; ++side) {
    std::vector<double> sums(mesh.n_vertices(), 0.0);
    for (int e = 0; e < mesh.n_edges(); ++e) {
      if (!cut.edge_in_Fh(e, side)) continue;
      const Edge& ed = mesh.edges[e];
      for (int v : {ed.v0, ed.v1})
        sums[v] += edge_node_sign(mesh, e, v) * ed.length * theta.at(mesh, side, e, v);
    }
    for (int v = 0; v < mesh.n_vertices(); ++v)
      if (node_interior_to_side(mesh, cut, side, v))
        defect = std::max(defect, std::abs(sums[v]));
  }
  return defect;
}

}  // namespace cutflux
