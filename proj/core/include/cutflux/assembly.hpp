#pragma once

#include <functional>

#include "cutflux/geometry.hpp"
#include "cutflux/linalg.hpp"
#include "cutflux/mesh.hpp"
#include "cutflux/spaces.hpp"

namespace cutflux {

/// Problem coefficients and data. Evaluators taking a side use the smooth
/// extension of the corresponding subdomain expression, so they may be
/// called anywhere in the subdomain's active mesh.
struct ProblemData {
  double k1 = 1.0, k2 = 1.0;
  double gamma = 10.0;     // Nitsche penalty
  double gamma_g = 0.1;    // ghost penalty
  std::function<double(const Vec2&, int side)> f;
  std::function<double(const Vec2&)> g;  // interface flux jump; empty means 0
  std::function<double(const Vec2&, int side)> dirichlet;

  double k(int side) const { return side == 1 ? k1 : k2; }
  double f_at(const Vec2& p, int side) const { return f ? f(p, side) : 0.0; }
  double g_at(const Vec2& p) const { return g ? g(p) : 0.0; }
};

struct LinearSystem {
  SparseMatrix A;
  Eigen::VectorXd b;
};

/// Value of the P1 hat function of `local_vertex` at a point of the cell.
double hat_value(const Mesh& mesh, int cell, int local_vertex, const Vec2& p);

/// Normal-gradient jump of the side-i solution across edge e, seen from
/// `cell` with its outward normal. Identical to the jump against n_F
/// regardless of orientation.
double normal_gradient_jump(const PrimalField& u, int e, int side, int cell);

/// Mean of grad(u_i) . n_F across edge e (one-sided on the boundary).
double mean_grad_normal(const PrimalField& u, int e, int side);

/// CutFEM stiffness matrix and load vector with the interface Nitsche terms
/// and the ghost penalty. Dirichlet values are interpolated at boundary dofs
/// and eliminated symmetrically.
LinearSystem assemble_system(const Mesh& mesh, const CutTopology& cut, const ProblemData& data,
                             const ChDofMap& dofmap);

/// Residual r_h^i(phi_N chi_T) of the mixed formulation, evaluated through
/// the integrated-by-parts expression (element source term, interface terms,
/// half normal-jump terms on the element boundary, ghost-penalty terms).
double assemble_residual(const PrimalField& u, const ProblemData& data, int cell, int vertex,
                         int side);

/// Residuals r_h^i(phi_N chi_T) for all (cell, local vertex, side), indexed
/// [side-1][3*cell + local]. Entries are zero where the side is inactive.
/// `noise` estimates the absolute rounding level of an entry: the terms of
/// the residual cancel down from the magnitudes of the assembled forms, so
/// near-orthogonal nodes carry noise far above 1e-16 |r|.
struct ResidualTable {
  std::array<std::vector<double>, 2> r;
  double scale = 0.0;  // max |r| over all valid entries
  double noise = 0.0;

  double at(int side, int cell, int local) const { return r[side - 1][3 * cell + local]; }
};
ResidualTable assemble_residual_table(const PrimalField& u, const ProblemData& data);

/// b_h^i(theta_i, phi_N chi_T): the trapezium pairing of a multiplier with
/// an elementwise hat function.
double bh_elementwise(const Mesh& mesh, const CutTopology& cut, const MultiplierField& theta,
                      const ProblemData& data, int cell, int vertex, int side);

}  // namespace cutflux
