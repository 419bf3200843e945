#pragma once

#include "trid/factors.hpp"
#include "trid/tensor.hpp"

namespace trid {

/// Contraction matrices of the triple product.  With the conventions of
/// TripleFactors, the reconstruction x(i,j,t) = sum A(i,q,s) B(p,j,s) C(p,q,t)
/// factors through three matrix identities:
///
///   X_(1) = A_(1) * F,  F = F(B, C)  of size r^2 x (n2*n3),
///      F[q + s*r, j + t*n2] = sum_p B(p,j,s) * C(p,q,t)
///   X_(2) = B_(2) * G,  G = G(A, C)  of size r^2 x (n1*n3),
///      G[p + s*r, i + t*n1] = sum_q A(i,q,s) * C(p,q,t)
///   X_(3) = C_(3) * H,  H = H(A, B)  of size r^2 x (n1*n2),
///      H[p + q*r, i + j*n1] = sum_s A(i,q,s) * B(p,j,s)
///
/// Each is assembled from r x * blocks built out of factor slices, e.g. the
/// (s, t) block of F equals C(:,:,t)^T * B(:,:,s).

template <typename Scalar>
typename Tensor3<Scalar>::Matrix buildF(const Tensor3<Scalar>& B, const Tensor3<Scalar>& C) {
  const Index r = B.n1();
  if (B.n3() != r || C.n1() != r || C.n2() != r)
    throw std::invalid_argument("buildF: B/C shapes are inconsistent");
  const Index n2 = B.n2(), n3 = C.n3();
  typename Tensor3<Scalar>::Matrix f(r * r, n2 * n3);
  for (Index t = 0; t < n3; ++t)
    for (Index s = 0; s < r; ++s)
      f.block(s * r, t * n2, r, n2).noalias() = C.frontal(t).transpose() * B.frontal(s);
  return f;
}

template <typename Scalar>
typename Tensor3<Scalar>::Matrix buildG(const Tensor3<Scalar>& A, const Tensor3<Scalar>& C) {
  const Index r = A.n2();
  if (A.n3() != r || C.n1() != r || C.n2() != r)
    throw std::invalid_argument("buildG: A/C shapes are inconsistent");
  const Index n1 = A.n1(), n3 = C.n3();
  typename Tensor3<Scalar>::Matrix g(r * r, n1 * n3);
  for (Index t = 0; t < n3; ++t)
    for (Index s = 0; s < r; ++s)
      g.block(s * r, t * n1, r, n1).noalias() = C.frontal(t) * A.frontal(s).transpose();
  return g;
}

template <typename Scalar>
typename Tensor3<Scalar>::Matrix buildH(const Tensor3<Scalar>& A, const Tensor3<Scalar>& B) {
  const Index r = A.n2();
  if (A.n3() != r || B.n1() != r || B.n3() != r)
    throw std::invalid_argument("buildH: A/B shapes are inconsistent");
  const Index n1 = A.n1(), n2 = B.n2();
  typename Tensor3<Scalar>::Matrix h(r * r, n1 * n2);
  for (Index j = 0; j < n2; ++j)
    for (Index q = 0; q < r; ++q)
      h.block(q * r, j * n1, r, n1).noalias() = B.lateral(j) * A.lateral(q).transpose();
  return h;
}

/// Reconstructs the tensor of a factor triple via X_(1) = A_(1) * F(B, C).
template <typename Scalar>
Tensor3<Scalar> tripleProduct(const TripleFactors<Scalar>& f) {
  using Matrix = typename Tensor3<Scalar>::Matrix;
  const Index n1 = f.n1(), n2 = f.n2(), n3 = f.n3(), r = f.rank();
  Eigen::Map<const Matrix> a1(f.A.vec().data(), n1, r * r);
  Matrix x1 = a1 * buildF(f.B, f.C);
  return fold<Scalar>(x1, 1, n1, n2, n3);
}

/// Shape-checked variant: throws when the factors do not match (n1, n2, n3).
template <typename Scalar>
Tensor3<Scalar> tripleProduct(const TripleFactors<Scalar>& f, Index n1, Index n2, Index n3) {
  if (f.n1() != n1 || f.n2() != n2 || f.n3() != n3)
    throw std::invalid_argument("tripleProduct: factor shapes do not match requested dimensions");
  return tripleProduct(f);
}

/// Transposed Khatri-Rao design of CP along mode 1: the r x (n2*n3) matrix
/// with entry (p, j + t*n2) = B(j, p) * C(t, p), so that X_(1) = A * krt.
template <typename Scalar>
typename Tensor3<Scalar>::Matrix khatriRaoT(const typename Tensor3<Scalar>::Matrix& B,
                                            const typename Tensor3<Scalar>::Matrix& C) {
  if (B.cols() != C.cols()) throw std::invalid_argument("khatriRaoT: column mismatch");
  const Index r = B.cols(), n2 = B.rows(), n3 = C.rows();
  typename Tensor3<Scalar>::Matrix m(r, n2 * n3);
  for (Index t = 0; t < n3; ++t)
    m.middleCols(t * n2, n2) = C.row(t).transpose().asDiagonal() * B.transpose();
  return m;
}

template <typename Scalar>
Tensor3<Scalar> cpTensor(const CPFactors<Scalar>& f) {
  typename Tensor3<Scalar>::Matrix x1 = f.A * khatriRaoT<Scalar>(f.B, f.C);
  return fold<Scalar>(x1, 1, f.n1(), f.n2(), f.n3());
}

template <typename Scalar>
Tensor3<Scalar> cpTensor(const CPFactors<Scalar>& f, Index n1, Index n2, Index n3) {
  if (f.n1() != n1 || f.n2() != n2 || f.n3() != n3)
    throw std::invalid_argument("cpTensor: factor shapes do not match requested dimensions");
  return cpTensor(f);
}

/// Mode-m product X x_m M: multiplies every mode-m fiber by M.
template <typename Scalar>
Tensor3<Scalar> modeProduct(const Tensor3<Scalar>& x, const typename Tensor3<Scalar>::Matrix& m,
                            int mode) {
  if (mode < 1 || mode > 3) throw std::invalid_argument("modeProduct: mode must be 1, 2 or 3");
  if (m.cols() != x.dims()[mode - 1])
    throw std::invalid_argument("modeProduct: matrix columns do not match tensor mode");
  typename Tensor3<Scalar>::Matrix product = m * unfold(x, mode);
  std::array<Index, 3> d = x.dims();
  d[mode - 1] = m.rows();
  return fold<Scalar>(product, mode, d[0], d[1], d[2]);
}

/// Evaluates the Tucker format core x_1 U x_2 V x_3 W by successive mode
/// products.
template <typename Scalar>
Tensor3<Scalar> tuckerApply(const TuckerFactors<Scalar>& f) {
  return modeProduct(modeProduct(modeProduct(f.core, f.U, 1), f.V, 2), f.W, 3);
}

}  // namespace trid
