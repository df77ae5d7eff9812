#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace cutflux {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Assemble a sparse matrix from triplets; duplicate (row,col) entries are
/// summed during finalization.
SparseMatrix sparse_from_triplets(int rows, int cols, const std::vector<Triplet>& triplets);

/// Direct Cholesky-type solve of a symmetric positive definite system.
/// The residual is recomputed on every call; one step of iterative
/// refinement is applied before failing the 1e-10 relative residual bound.
Eigen::VectorXd solve_sparse_spd(const SparseMatrix& A, const Eigen::VectorXd& b);

/// Small dense system solved in the least-squares sense.
struct DenseSystem {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  double rank_tol = 1e-10;   // relative to the largest pivot
  double zero_floor = 0.0;   // absolute residual level treated as noise
};

/// Minimal-norm solution of a consistent dense system, with an optional
/// homogeneous constraint row appended. Throws if the best residual exceeds
/// 1e-8 times the data scale, which signals an incompatible local system.
Eigen::VectorXd solve_constrained_lsq(const DenseSystem& system,
                                      const std::optional<Eigen::VectorXd>& constraint_row);

}  // namespace cutflux
