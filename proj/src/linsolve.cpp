#include "ivt/linsolve.hpp"

#include <algorithm>
#include <cmath>

extern "C" {
void dsytrf_(const char* uplo, const int* n, double* a, const int* lda, int* ipiv,
             double* work, const int* lwork, int* info);
void dsytrs_(const char* uplo, const int* n, const int* nrhs, const double* a,
             const int* lda, const int* ipiv, double* b, const int* ldb, int* info);
}

namespace ivt {

void SparseSymSystem::resize(int n) {
  n_ = n;
  rows_.assign(n, {});
  rhs_ = Eigen::VectorXd::Zero(n);
}

void SparseSymSystem::zero() {
  for (auto& r : rows_) r.clear();
  rhs_.setZero();
}

void SparseSymSystem::add(int i, int j, double v) {
  if (i < j) std::swap(i, j);
  for (auto& e : rows_[i])
    if (e.first == j) {
      e.second += v;
      return;
    }
  rows_[i].emplace_back(j, v);
}

double SparseSymSystem::coeff(int i, int j) const {
  if (i < j) std::swap(i, j);
  for (const auto& e : rows_[i])
    if (e.first == j) return e.second;
  return 0.0;
}

Eigen::VectorXd sym_indefinite_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const int n = static_cast<int>(A.rows());
  Eigen::MatrixXd F = A; // column-major, lower triangle used
  std::vector<int> ipiv(n);
  int info = 0;
  int lwork = -1;
  double wq = 0;
  dsytrf_("L", &n, F.data(), &n, ipiv.data(), &wq, &lwork, &info);
  lwork = static_cast<int>(wq);
  std::vector<double> work(std::max(1, lwork));
  dsytrf_("L", &n, F.data(), &n, ipiv.data(), work.data(), &lwork, &info);
  if (info > 0)
    throw SingularMatrix("sym_indefinite_solve: zero pivot at dof " +
                             std::to_string(info - 1),
                         info - 1);
  if (info < 0) throw SolverError("dsytrf: bad argument");

  Eigen::VectorXd x = b;
  int one = 1;
  dsytrs_("L", &n, &one, F.data(), &n, ipiv.data(), x.data(), &n, &info);

  // one step of iterative refinement to pin the relative residual
  Eigen::VectorXd r = b - A.selfadjointView<Eigen::Lower>() * x;
  Eigen::VectorXd dx = r;
  dsytrs_("L", &n, &one, F.data(), &n, ipiv.data(), dx.data(), &n, &info);
  x += dx;
  return x;
}

Eigen::VectorXd SparseSymSystem::factor_solve() { return factor_solve(rhs_); }

Eigen::VectorXd SparseSymSystem::factor_solve(const Eigen::VectorXd& b) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (const auto& e : rows_[i]) {
      A(i, e.first) = e.second;
      A(e.first, i) = e.second;
    }
  return sym_indefinite_solve(A, b);
}

} // namespace ivt
