#pragma once

#include <stdexcept>

#include "trid/tensor.hpp"

namespace trid {

/// Factor triple (A, B, C) of a rank-r triple decomposition of an
/// n1 x n2 x n3 tensor:
///   A is n1 x r x r   (indexed i, q, s)
///   B is r x n2 x r   (indexed p, j, s)
///   C is r x r x n3   (indexed p, q, t)
/// and the reconstructed tensor is
///   x(i, j, t) = sum_{p,q,s} A(i, q, s) * B(p, j, s) * C(p, q, t).
template <typename Scalar>
struct TripleFactors {
  Tensor3<Scalar> A, B, C;

  TripleFactors() = default;
  TripleFactors(Tensor3<Scalar> a, Tensor3<Scalar> b, Tensor3<Scalar> c)
      : A(std::move(a)), B(std::move(b)), C(std::move(c)) {
    validate();
  }

  static TripleFactors zero(Index n1, Index n2, Index n3, Index r) {
    return TripleFactors(Tensor3<Scalar>(n1, r, r), Tensor3<Scalar>(r, n2, r),
                         Tensor3<Scalar>(r, r, n3));
  }

  Index rank() const { return A.n2(); }
  Index n1() const { return A.n1(); }
  Index n2() const { return B.n2(); }
  Index n3() const { return C.n3(); }

  Scalar squaredNorm() const {
    return A.squaredNorm() + B.squaredNorm() + C.squaredNorm();
  }

  void validate() const {
    const Index r = A.n2();
    if (r < 1) throw std::invalid_argument("TripleFactors: rank must be >= 1");
    const bool ok = A.n3() == r && B.n1() == r && B.n3() == r && C.n1() == r &&
                    C.n2() == r;
    if (!ok) throw std::invalid_argument("TripleFactors: factor shapes are inconsistent");
  }
};

/// Zero-pads a factor triple from rank r to newRank >= r.  Padding with
/// zeros leaves the reconstructed tensor unchanged: every product term that
/// touches a padded index has at least one zero factor.
template <typename Scalar>
TripleFactors<Scalar> padFactors(const TripleFactors<Scalar>& f, Index newRank) {
  const Index r = f.rank();
  if (newRank < r) throw std::invalid_argument("padFactors: new rank is smaller than current");
  if (newRank == r) return f;
  TripleFactors<Scalar> g = TripleFactors<Scalar>::zero(f.n1(), f.n2(), f.n3(), newRank);
  for (Index s = 0; s < r; ++s)
    for (Index q = 0; q < r; ++q)
      for (Index i = 0; i < f.n1(); ++i) g.A(i, q, s) = f.A(i, q, s);
  for (Index s = 0; s < r; ++s)
    for (Index j = 0; j < f.n2(); ++j)
      for (Index p = 0; p < r; ++p) g.B(p, j, s) = f.B(p, j, s);
  for (Index t = 0; t < f.n3(); ++t)
    for (Index q = 0; q < r; ++q)
      for (Index p = 0; p < r; ++p) g.C(p, q, t) = f.C(p, q, t);
  return g;
}

/// Factor matrices of a rank-r CP decomposition:
///   x(i, j, t) = sum_p A(i, p) * B(j, p) * C(t, p).
template <typename Scalar>
struct CPFactors {
  using Matrix = typename Tensor3<Scalar>::Matrix;

  Matrix A, B, C;

  CPFactors() = default;
  CPFactors(Matrix a, Matrix b, Matrix c) : A(std::move(a)), B(std::move(b)), C(std::move(c)) {
    validate();
  }

  Index rank() const { return A.cols(); }
  Index n1() const { return A.rows(); }
  Index n2() const { return B.rows(); }
  Index n3() const { return C.rows(); }

  Scalar squaredNorm() const {
    return A.squaredNorm() + B.squaredNorm() + C.squaredNorm();
  }

  void validate() const {
    if (A.cols() < 1) throw std::invalid_argument("CPFactors: rank must be >= 1");
    if (B.cols() != A.cols() || C.cols() != A.cols())
      throw std::invalid_argument("CPFactors: factor ranks are inconsistent");
    if (A.rows() < 1 || B.rows() < 1 || C.rows() < 1)
      throw std::invalid_argument("CPFactors: factor dimensions must be positive");
  }
};

/// Tucker format with an r1 x r2 x r3 core and factor matrices
/// U (n1 x r1), V (n2 x r2), W (n3 x r3):
///   x(i, j, t) = sum_{p,q,s} U(i, p) * V(j, q) * W(t, s) * core(p, q, s).
template <typename Scalar>
struct TuckerFactors {
  using Matrix = typename Tensor3<Scalar>::Matrix;

  Tensor3<Scalar> core;
  Matrix U, V, W;

  TuckerFactors() = default;
  TuckerFactors(Tensor3<Scalar> d, Matrix u, Matrix v, Matrix w)
      : core(std::move(d)), U(std::move(u)), V(std::move(v)), W(std::move(w)) {
    validate();
  }

  Index n1() const { return U.rows(); }
  Index n2() const { return V.rows(); }
  Index n3() const { return W.rows(); }

  Scalar squaredNorm() const {
    return core.squaredNorm() + U.squaredNorm() + V.squaredNorm() + W.squaredNorm();
  }

  void validate() const {
    if (U.cols() != core.n1() || V.cols() != core.n2() || W.cols() != core.n3())
      throw std::invalid_argument("TuckerFactors: factor columns do not match core shape");
    if (U.rows() < 1 || V.rows() < 1 || W.rows() < 1)
      throw std::invalid_argument("TuckerFactors: factor dimensions must be positive");
  }
};

}  // namespace trid
