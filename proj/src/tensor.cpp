#include "ivt/tensor.hpp"

#include <cmath>

namespace ivt {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kInvSqrt2 = 0.7071067811865476;
// Voigt index pairs (11,22,33,12,23,13)
constexpr int kVi[6] = {0, 1, 2, 0, 1, 0};
constexpr int kVj[6] = {0, 1, 2, 1, 2, 2};
} // namespace

Tensor3 Tensor3::identity() {
  Tensor3 t;
  t(0, 0) = t(1, 1) = t(2, 2) = 1.0;
  return t;
}

Tensor3 Tensor3::diag(double a0, double a1, double a2) {
  Tensor3 t;
  t(0, 0) = a0;
  t(1, 1) = a1;
  t(2, 2) = a2;
  return t;
}

double Tensor3::det() const { return mat().determinant(); }

Mat3 Tensor3::mat() const {
  Mat3 m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = (*this)(i, j);
  return m;
}

Tensor3 Tensor3::from(const Mat3& m) {
  Tensor3 t;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) t(i, j) = m(i, j);
  return t;
}

double SymTensor3::operator()(int i, int j) const {
  if (i == j) return v[i];
  int k = i + j; // 12->3? pairs: (0,1)->3, (1,2)->4, (0,2)->5
  if (k == 1) return v[3];
  if (k == 3) return v[4];
  return v[5];
}

SymTensor3 SymTensor3::identity() {
  SymTensor3 s;
  s.v = {1, 1, 1, 0, 0, 0};
  return s;
}

SymTensor3 SymTensor3::diag(double a0, double a1, double a2) {
  SymTensor3 s;
  s.v = {a0, a1, a2, 0, 0, 0};
  return s;
}

SymTensor3 SymTensor3::from(const Mat3& m) {
  SymTensor3 s;
  for (int I = 0; I < 6; ++I) s.v[I] = 0.5 * (m(kVi[I], kVj[I]) + m(kVj[I], kVi[I]));
  return s;
}

Mat3 SymTensor3::mat() const {
  Mat3 m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = (*this)(i, j);
  return m;
}

SymTensor3 SymTensor3::operator+(const SymTensor3& o) const {
  SymTensor3 r;
  for (int i = 0; i < 6; ++i) r.v[i] = v[i] + o.v[i];
  return r;
}

SymTensor3 SymTensor3::operator-(const SymTensor3& o) const {
  SymTensor3 r;
  for (int i = 0; i < 6; ++i) r.v[i] = v[i] - o.v[i];
  return r;
}

SymTensor3 SymTensor3::operator*(double s) const {
  SymTensor3 r;
  for (int i = 0; i < 6; ++i) r.v[i] = v[i] * s;
  return r;
}

SymTensor3& SymTensor3::operator+=(const SymTensor3& o) {
  for (int i = 0; i < 6; ++i) v[i] += o.v[i];
  return *this;
}

double SymTensor3::dot(const SymTensor3& o) const {
  return v[0] * o.v[0] + v[1] * o.v[1] + v[2] * o.v[2] +
         2.0 * (v[3] * o.v[3] + v[4] * o.v[4] + v[5] * o.v[5]);
}

double SymTensor3::norm() const { return std::sqrt(dot(*this)); }

double trace(const SymTensor3& A) { return A.v[0] + A.v[1] + A.v[2]; }

SymTensor3 deviator(const SymTensor3& A) {
  SymTensor3 d = A;
  double p = trace(A) / 3.0;
  d.v[0] -= p;
  d.v[1] -= p;
  d.v[2] -= p;
  return d;
}

Vec6 to_mandel(const SymTensor3& A) {
  Vec6 m;
  m << A.v[0], A.v[1], A.v[2], kSqrt2 * A.v[3], kSqrt2 * A.v[4], kSqrt2 * A.v[5];
  return m;
}

SymTensor3 from_mandel(const Vec6& m) {
  SymTensor3 s;
  s.v = {m[0], m[1], m[2], kInvSqrt2 * m[3], kInvSqrt2 * m[4], kInvSqrt2 * m[5]};
  return s;
}

Mat3 mandel_basis(int I) {
  Mat3 e = Mat3::Zero();
  if (I < 3) {
    e(I, I) = 1.0;
  } else {
    e(kVi[I], kVj[I]) = kInvSqrt2;
    e(kVj[I], kVi[I]) = kInvSqrt2;
  }
  return e;
}

SpectralDecomp spectral_decompose(const SymTensor3& A, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(A.mat());
  // ascending from Eigen; we want descending
  Eigen::Vector3d lam = es.eigenvalues().reverse();
  Mat3 V;
  V.col(0) = es.eigenvectors().col(2);
  V.col(1) = es.eigenvectors().col(1);
  V.col(2) = es.eigenvectors().col(0);

  double scale = lam.cwiseAbs().maxCoeff();
  double tol = rel_tol * (scale > 0 ? scale : 1.0);

  SpectralDecomp d;
  int i = 0;
  while (i < 3) {
    int j = i;
    double sum = 0.0;
    Mat3 P = Mat3::Zero();
    while (j < 3 && std::abs(lam[j] - lam[i]) < tol) {
      sum += lam[j];
      P += V.col(j) * V.col(j).transpose();
      ++j;
    }
    d.lambda[d.n_clusters] = sum / (j - i);
    d.proj[d.n_clusters] = SymTensor3::from(P);
    ++d.n_clusters;
    i = j;
  }
  return d;
}

SymTensor3 right_cauchy_green(const Tensor3& F) {
  if (!(F.det() > 0.0))
    throw NonPositiveJacobian("right_cauchy_green: det F <= 0");
  Mat3 f = F.mat();
  return SymTensor3::from(f.transpose() * f);
}

namespace {

// Divided differences of f(x) = 1/2 ln x on positive clustered eigenvalues.
// First differences use log1p to stay accurate for close arguments; second
// differences switch to a series value at the cluster centroid when the
// total spread is small (the centroid kills the first-order term).
double f_val(double x) { return 0.5 * std::log(x); }
double f_d1(double x) { return 0.5 / x; }
double f_d2(double x) { return -0.5 / (x * x); }

double dd1(double a, double b) {
  if (a == b) return f_d1(a);
  return 0.5 * std::log1p((a - b) / b) / (a - b);
}

double dd2(double a, double b, double c, double scale) {
  double lo = std::min({a, b, c});
  double hi = std::max({a, b, c});
  if (hi - lo < 1e-5 * scale) return 0.5 * f_d2((a + b + c) / 3.0);
  // order so the outer pair has the largest gap
  double x = a, y = b, z = c;
  if (std::abs(a - b) >= std::abs(a - c) && std::abs(a - b) >= std::abs(b - c)) {
    x = a; y = c; z = b;
  } else if (std::abs(a - c) >= std::abs(b - c)) {
    x = a; y = b; z = c;
  } else {
    x = b; y = a; z = c;
  }
  return (dd1(x, y) - dd1(y, z)) / (x - z);
}

} // namespace

HenckyEval hencky_strain(const SymTensor3& C, bool want_second) {
  SpectralDecomp sd = spectral_decompose(C);
  for (int k = 0; k < sd.n_clusters; ++k)
    if (!(sd.lambda[k] > 0.0))
      throw NonPositiveJacobian("hencky_strain: C is not positive definite");

  HenckyEval h;
  const int n = sd.n_clusters;
  double scale = 0.0;
  for (int k = 0; k < n; ++k) scale = std::max(scale, std::abs(sd.lambda[k]));

  Mat3 eps = Mat3::Zero();
  for (int k = 0; k < n; ++k) eps += f_val(sd.lambda[k]) * sd.proj[k].mat();
  h.eps = SymTensor3::from(eps);

  std::array<Mat3, 3> P;
  for (int k = 0; k < n; ++k) P[k] = sd.proj[k].mat();

  double d1[3][3];
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) d1[a][b] = dd1(sd.lambda[a], sd.lambda[b]);

  // first derivative: Df[H] = sum_ab dd1_ab P_a H P_b
  std::array<Mat3, 6> E;
  for (int I = 0; I < 6; ++I) E[I] = mandel_basis(I);

  // cache P_a E_J (and E_J P_b = (P_b E_J)^T by symmetry of P, E)
  Mat3 PE[3][6];
  for (int a = 0; a < n; ++a)
    for (int J = 0; J < 6; ++J) PE[a][J] = P[a] * E[J];

  for (int J = 0; J < 6; ++J) {
    Mat3 M = Mat3::Zero();
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) M += d1[a][b] * (PE[a][J] * P[b]);
    h.d_eps.col(J) = to_mandel(SymTensor3::from(M));
  }

  if (!want_second) {
    for (auto& s : h.dd_eps) s.setZero();
    return h;
  }

  double d2[3][3][3];
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        d2[a][b][c] = dd2(sd.lambda[a], sd.lambda[b], sd.lambda[c], scale);

  // second derivative bilinear action:
  // D2f[H,K] = sum_abc dd2_abc (P_a H P_b K P_c + P_a K P_b H P_c)
  for (auto& s : h.dd_eps) s.setZero();
  for (int J = 0; J < 6; ++J) {
    for (int K = J; K < 6; ++K) {
      Mat3 M = Mat3::Zero();
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          Mat3 AJB = PE[a][J] * P[b]; // P_a E_J P_b
          Mat3 AKB = PE[a][K] * P[b];
          for (int c = 0; c < n; ++c)
            M += d2[a][b][c] * (AJB * PE[c][K].transpose() + AKB * PE[c][J].transpose());
        }
      // PE[c][K]^T = E_K P_c, so AJB * that = P_a E_J P_b E_K P_c
      Vec6 m = to_mandel(SymTensor3::from(M));
      for (int i = 0; i < 6; ++i) {
        h.dd_eps[i](J, K) = m[i];
        h.dd_eps[i](K, J) = m[i];
      }
    }
  }
  return h;
}

Mat6 contract_dd(const HenckyEval& h, const Vec6& S_mandel) {
  Mat6 W = Mat6::Zero();
  for (int i = 0; i < 6; ++i) W += S_mandel[i] * h.dd_eps[i];
  return W;
}

} // namespace ivt
