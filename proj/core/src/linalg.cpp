#include "cutflux/linalg.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include <Eigen/SparseCholesky>

namespace cutflux {

SparseMatrix sparse_from_triplets(int rows, int cols, const std::vector<Triplet>& triplets) {
  SparseMatrix A(rows, cols);
  A.setFromTriplets(triplets.begin(), triplets.end());
  A.makeCompressed();
  return A;
}

Eigen::VectorXd solve_sparse_spd(const SparseMatrix& A, const Eigen::VectorXd& b) {
  if (A.rows() != A.cols() || A.rows() != b.size())
    throw std::invalid_argument("solve_sparse_spd: dimension mismatch");

  Eigen::SimplicialLDLT<SparseMatrix> solver;
  solver.compute(A);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "solve_sparse_spd: factorization failed on " << A.rows() << "x" << A.cols()
        << " system, min diagonal of D = "
        << (solver.vectorD().size() ? solver.vectorD().minCoeff() : 0.0);
    throw std::runtime_error(msg.str());
  }

  Eigen::VectorXd x = solver.solve(b);
  // Iterative refinement toward machine-level residuals: downstream
  // conservation identities inherit the row residuals of this solve.
  for (int pass = 0; pass < 3; ++pass) {
    const Eigen::VectorXd r = b - A * x;
    const double rel = r.norm() / std::max(b.norm(), 1e-300);
    if (rel < 1e-15) break;
    x += solver.solve(r);
  }
  const double bnorm = b.norm();
  const double tol = 1e-10 * (bnorm > 0.0 ? bnorm : 1.0);
  const double res = (A * x - b).norm();
  if (res > tol) {
    std::ostringstream msg;
    msg << "solve_sparse_spd: residual " << res << " exceeds " << tol << " for n=" << A.rows();
    throw std::runtime_error(msg.str());
  }
  return x;
}

Eigen::VectorXd solve_constrained_lsq(const DenseSystem& system,
                                      const std::optional<Eigen::VectorXd>& constraint_row) {
  const Eigen::Index n = system.A.cols();
  Eigen::Index rows = system.A.rows();
  if (constraint_row) {
    if (constraint_row->size() != n)
      throw std::invalid_argument("solve_constrained_lsq: constraint size mismatch");
    ++rows;
  }

  Eigen::MatrixXd M(rows, n);
  Eigen::VectorXd rhs(rows);
  M.topRows(system.A.rows()) = system.A;
  rhs.head(system.b.size()) = system.b;
  if (constraint_row) {
    M.row(rows - 1) = constraint_row->transpose();
    rhs(rows - 1) = 0.0;
  }

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  cod.setThreshold(system.rank_tol);
  cod.compute(M);
  const Eigen::VectorXd x = cod.solve(rhs);

  // Consistency certificate: the residual must be at rounding level relative
  // to the data. The floors cover systems whose data is itself noise.
  const double m_max = M.cwiseAbs().maxCoeff();
  const double scale = std::max(m_max * x.cwiseAbs().maxCoeff(), rhs.cwiseAbs().maxCoeff());
  const double res = (M * x - rhs).norm();
  if (res > 1e-8 * scale + 1e-14 * m_max + system.zero_floor) {
    std::ostringstream msg;
    msg << "solve_constrained_lsq: incompatible local system, residual " << res << " vs scale "
        << scale;
    throw std::runtime_error(msg.str());
  }
  return x;
}

}  // namespace cutflux
