#ifndef IVT_LINSOLVE_HPP
#define IVT_LINSOLVE_HPP

#include <Eigen/Dense>
#include <vector>

#include "ivt/errors.hpp"

namespace ivt {

/// Symmetric linear system assembled in lower-triangular storage and
/// factorized by a symmetric-indefinite LDL^T with 1x1/2x2 pivoting
/// (Bunch-Kaufman). The saddle structure of the coupled problems makes
/// the matrix indefinite; plain Cholesky-type pivoting is not enough.
class SparseSymSystem {
public:
  explicit SparseSymSystem(int n = 0) { resize(n); }

  void resize(int n);
  int size() const { return n_; }

  void zero();
  /// Accumulate into A(i,j); only the lower triangle (i >= j) is stored,
  /// (i,j) and (j,i) address the same entry.
  void add(int i, int j, double v);
  void add_rhs(int i, double v) { rhs_[i] += v; }

  Eigen::VectorXd& rhs() { return rhs_; }
  const Eigen::VectorXd& rhs() const { return rhs_; }

  double coeff(int i, int j) const;

  /// Factorize and solve for the stored rhs. Relative solve residual is
  /// brought below 1e-10 by one step of iterative refinement.
  Eigen::VectorXd factor_solve();
  /// Same, for an explicit right-hand side.
  Eigen::VectorXd factor_solve(const Eigen::VectorXd& b);

private:
  int n_ = 0;
  std::vector<std::vector<std::pair<int, double>>> rows_; // lower triangle
  Eigen::VectorXd rhs_;
};

/// Dense symmetric-indefinite solve used by the system above and directly
/// by the small coupled models. Throws SingularMatrix with the offending
/// pivot index.
Eigen::VectorXd sym_indefinite_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

} // namespace ivt

#endif
