#pragma once

#include <vector>

#include "cutflux/assembly.hpp"
#include "cutflux/geometry.hpp"
#include "cutflux/mesh.hpp"
#include "cutflux/spaces.hpp"

namespace cutflux {

/// Local system of one node patch: one unknown per edge of F_N ∩ F_h^i (the
/// multiplier endpoint value at N), one equation per patch triangle, plus
/// the multiplier-space constraint row at interior nodes.
struct NodePatchSystem {
  int node = -1;
  int side = 0;
  std::vector<int> edges;   // ascending edge ids, one unknown each
  std::vector<int> cells;   // ascending patch cells
  Eigen::MatrixXd rows;     // cells.size() x edges.size()
  Eigen::VectorXd rhs;
  bool interior = false;
  Eigen::VectorXd constraint;  // s_N^F h_F, present when interior
  double zero_floor = 0.0;     // residual noise level of the right-hand side
};

/// Build the patch system at (node, side); the right-hand side is read from
/// the residual table.
NodePatchSystem build_node_patch(const Mesh& mesh, const CutTopology& cut,
                                 const ProblemData& data, const ResidualTable& residuals,
                                 int node, int side);

/// Solve a node patch for the multiplier endpoint values at N, one per edge
/// of the patch. Minimal-norm solution for underdetermined (boundary-node)
/// patches; throws on incompatible systems.
Eigen::VectorXd solve_node_patch(const NodePatchSystem& patch);

/// Accumulate all node contributions into the edgewise multiplier field.
MultiplierField assemble_theta(const PrimalField& u, const ProblemData& data,
                               const ResidualTable& residuals);

/// Max violation of b_h^i(theta_i, phi_N chi_T) = r_h^i(phi_N chi_T) over
/// all elementwise test functions.
double mixed_identity_defect(const PrimalField& u, const ProblemData& data,
                             const MultiplierField& theta, const ResidualTable& residuals);

/// Max violation of the interior-node constraint sum_F s_N^F h_F theta(N)
/// over both multiplier families.
double constraint_defect(const Mesh& mesh, const CutTopology& cut, const MultiplierField& theta);

}  // namespace cutflux
