#ifndef IVT_TENSOR_HPP
#define IVT_TENSOR_HPP

#include <Eigen/Dense>
#include <array>

#include "ivt/errors.hpp"

namespace ivt {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat3 = Eigen::Matrix3d;

/// Full second-order tensor in 3-D, row-major components.
struct Tensor3 {
  std::array<double, 9> a{};

  double& operator()(int i, int j) { return a[3 * i + j]; }
  double operator()(int i, int j) const { return a[3 * i + j]; }

  static Tensor3 identity();
  static Tensor3 diag(double a0, double a1, double a2);
  double det() const;
  Mat3 mat() const;
  static Tensor3 from(const Mat3& m);
};

/// Symmetric second-order tensor, Voigt order (11,22,33,12,23,13) with
/// tensorial (not engineering) shear components.
struct SymTensor3 {
  std::array<double, 6> v{};

  double& operator[](int i) { return v[i]; }
  double operator[](int i) const { return v[i]; }

  double operator()(int i, int j) const;

  static SymTensor3 identity();
  static SymTensor3 diag(double a0, double a1, double a2);
  static SymTensor3 from(const Mat3& m); // symmetrizes

  Mat3 mat() const;

  SymTensor3 operator+(const SymTensor3& o) const;
  SymTensor3 operator-(const SymTensor3& o) const;
  SymTensor3 operator*(double s) const;
  SymTensor3& operator+=(const SymTensor3& o);

  /// Double contraction A:B (shear terms counted twice).
  double dot(const SymTensor3& o) const;
  /// Frobenius norm |A| = sqrt(A:A).
  double norm() const;
};

double trace(const SymTensor3& A);
SymTensor3 deviator(const SymTensor3& A);

/// Voigt <-> Mandel conversion. All factor-of-2 / sqrt(2) bookkeeping for
/// fourth- and sixth-order contractions is localized here: Mandel components
/// are orthonormal, so contractions become plain dot products and 6x6
/// matrix products.
Vec6 to_mandel(const SymTensor3& A);
SymTensor3 from_mandel(const Vec6& m);
/// Orthonormal Mandel basis tensor E_I as a 3x3 matrix.
Mat3 mandel_basis(int I);

/// Eigenvalues (descending) with orthogonal eigenprojections. Eigenvalues
/// closer than rel_tol * max|lambda| are merged into one cluster/projection.
struct SpectralDecomp {
  int n_clusters = 0;
  std::array<double, 3> lambda{};      // one value per cluster
  std::array<SymTensor3, 3> proj{};    // idempotent, sum to identity
};

SpectralDecomp spectral_decompose(const SymTensor3& A, double rel_tol = 1e-9);

/// C = F^T F. Throws NonPositiveJacobian for det F <= 0.
SymTensor3 right_cauchy_green(const Tensor3& F);

/// Logarithmic strain eps = 1/2 ln C with exact first and second
/// derivatives w.r.t. C. Derivatives are stored in orthonormal Mandel
/// coordinates: d_eps is the 6x6 map H -> (d eps/dC):H, dd_eps[i] is the
/// 6x6 second-derivative slab of Mandel component i.
struct HenckyEval {
  SymTensor3 eps;
  Mat6 d_eps;
  std::array<Mat6, 6> dd_eps;
};

/// Throws NonPositiveJacobian if any eigenvalue of C is <= 0.
HenckyEval hencky_strain(const SymTensor3& C, bool want_second = true);

/// Contraction S:(d^2 eps/dC^2) as a Mandel 6x6 matrix, for a stress-like S.
Mat6 contract_dd(const HenckyEval& h, const Vec6& S_mandel);

} // namespace ivt

#endif
