#pragma once

#include <Eigen/Dense>

#include <array>
#include <cassert>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>

namespace trid {

using Eigen::Index;

/// Dense third-order tensor.
///
/// Entries are stored contiguously in vec order: entry (i, j, t) lives at
/// linear offset i + j*n1 + t*n1*n2, all indices zero-based.  This is the
/// column-major layout of the n1 x (n2*n3) mode-1 unfolding, so vec/unvec
/// and the mode-1 unfolding involve no data movement.
template <typename Scalar_>
class Tensor3 {
  static_assert(std::is_floating_point_v<Scalar_>,
                "Tensor3 expects a floating point scalar");

 public:
  using Scalar = Scalar_;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Tensor3() = default;

  /// Zero tensor of the given shape.
  Tensor3(Index n1, Index n2, Index n3)
      : n1_(n1), n2_(n2), n3_(n3), values_(Vector::Zero(checkedSize(n1, n2, n3))) {}

  /// Wraps an existing value vector (vec order).  Takes ownership by move.
  static Tensor3 fromVec(Index n1, Index n2, Index n3, Vector values) {
    if (values.size() != checkedSize(n1, n2, n3))
      throw std::invalid_argument("Tensor3::fromVec: value count does not match shape");
    Tensor3 x;
    x.n1_ = n1;
    x.n2_ = n2;
    x.n3_ = n3;
    x.values_ = std::move(values);
    return x;
  }

  Index n1() const { return n1_; }
  Index n2() const { return n2_; }
  Index n3() const { return n3_; }
  Index size() const { return values_.size(); }
  std::array<Index, 3> dims() const { return {n1_, n2_, n3_}; }

  Index linearIndex(Index i, Index j, Index t) const {
    assert(i >= 0 && i < n1_ && j >= 0 && j < n2_ && t >= 0 && t < n3_);
    return i + j * n1_ + t * n1_ * n2_;
  }

  Scalar operator()(Index i, Index j, Index t) const {
    return values_[linearIndex(i, j, t)];
  }
  Scalar& operator()(Index i, Index j, Index t) {
    return values_[linearIndex(i, j, t)];
  }

  /// The vectorization of the tensor; shares storage with the tensor.
  const Vector& vec() const { return values_; }
  Vector& vec() { return values_; }

  Scalar squaredNorm() const { return values_.squaredNorm(); }
  Scalar norm() const { return values_.norm(); }
  bool isZero(Scalar tol = Scalar(0)) const { return values_.isZero(tol); }
  void setZero() { values_.setZero(); }

  /// Frontal slice X(:, :, t) as an n1 x n2 map (contiguous).
  auto frontal(Index t) const {
    assert(t >= 0 && t < n3_);
    return Eigen::Map<const Matrix>(values_.data() + t * n1_ * n2_, n1_, n2_);
  }

  /// Lateral slice X(:, j, :) as an n1 x n3 map (column stride n1*n2).
  auto lateral(Index j) const {
    assert(j >= 0 && j < n2_);
    return Eigen::Map<const Matrix, Eigen::Unaligned, Eigen::OuterStride<>>(
        values_.data() + j * n1_, n1_, n3_, Eigen::OuterStride<>(n1_ * n2_));
  }

  /// Horizontal slice X(i, :, :) as an n2 x n3 map (row stride n1).
  auto horizontal(Index i) const {
    assert(i >= 0 && i < n1_);
    using StrideType = Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>;
    return Eigen::Map<const Matrix, Eigen::Unaligned, StrideType>(
        values_.data() + i, n2_, n3_, StrideType(n1_ * n2_, n1_));
  }

 private:
  static Index checkedSize(Index n1, Index n2, Index n3) {
    if (n1 < 1 || n2 < 1 || n3 < 1)
      throw std::invalid_argument("Tensor3: dimensions must be positive");
    return n1 * n2 * n3;
  }

  Index n1_ = 0, n2_ = 0, n3_ = 0;
  Vector values_;
};

using Tensor3d = Tensor3<double>;
using Tensor3f = Tensor3<float>;

/// Mode-m unfolding, m in {1, 2, 3}:
///   mode 1: n1 x (n2*n3), column j + t*n2 holds the mode-1 fiber X(:, j, t)
///   mode 2: n2 x (n1*n3), column i + t*n1 holds X(i, :, t)
///   mode 3: n3 x (n1*n2), column i + j*n1 holds X(i, j, :)
template <typename Scalar>
typename Tensor3<Scalar>::Matrix unfold(const Tensor3<Scalar>& x, int mode) {
  using Matrix = typename Tensor3<Scalar>::Matrix;
  const Index n1 = x.n1(), n2 = x.n2(), n3 = x.n3();
  switch (mode) {
    case 1:
      return Eigen::Map<const Matrix>(x.vec().data(), n1, n2 * n3);
    case 2: {
      Matrix m(n2, n1 * n3);
      for (Index t = 0; t < n3; ++t) m.middleCols(t * n1, n1) = x.frontal(t).transpose();
      return m;
    }
    case 3:
      return Eigen::Map<const Matrix>(x.vec().data(), n1 * n2, n3).transpose();
    default:
      throw std::invalid_argument("unfold: mode must be 1, 2 or 3");
  }
}

/// Inverse of unfold for the given shape.
template <typename Scalar>
Tensor3<Scalar> fold(const typename Tensor3<Scalar>::Matrix& m, int mode, Index n1,
                     Index n2, Index n3) {
  using Matrix = typename Tensor3<Scalar>::Matrix;
  const std::array<Index, 3> rows = {n1, n2, n3};
  const std::array<Index, 3> cols = {n2 * n3, n1 * n3, n1 * n2};
  if (mode < 1 || mode > 3) throw std::invalid_argument("fold: mode must be 1, 2 or 3");
  if (m.rows() != rows[mode - 1] || m.cols() != cols[mode - 1])
    throw std::invalid_argument("fold: matrix shape does not match mode/dimensions");
  Tensor3<Scalar> x(n1, n2, n3);
  switch (mode) {
    case 1:
      x.vec() = Eigen::Map<const typename Tensor3<Scalar>::Vector>(m.data(), m.size());
      break;
    case 2:
      for (Index t = 0; t < n3; ++t)
        Eigen::Map<Matrix>(x.vec().data() + t * n1 * n2, n1, n2) =
            m.middleCols(t * n1, n1).transpose();
      break;
    case 3:
      Eigen::Map<Matrix>(x.vec().data(), n1 * n2, n3) = m.transpose();
      break;
  }
  return x;
}

template <typename Scalar>
Scalar frobeniusNorm(const Tensor3<Scalar>& x) {
  return x.norm();
}

/// ||estimate - reference||_F / ||reference||_F.
/// Throws std::domain_error when the reference tensor is zero.
template <typename Scalar>
Scalar relativeError(const Tensor3<Scalar>& estimate, const Tensor3<Scalar>& reference) {
  if (estimate.dims() != reference.dims())
    throw std::invalid_argument("relativeError: shape mismatch");
  const Scalar refNorm = reference.norm();
  if (refNorm == Scalar(0))
    throw std::domain_error("relativeError: reference tensor is zero");
  return (estimate.vec() - reference.vec()).norm() / refNorm;
}

/// Mode permutation: result r with r.dims()[k] == x.dims()[perm[k]] and
/// r(i0, i1, i2) == x(j0, j1, j2) where j[perm[k]] = i_k.
template <typename Scalar>
Tensor3<Scalar> permuteModes(const Tensor3<Scalar>& x, const std::array<int, 3>& perm) {
  std::array<bool, 3> seen = {false, false, false};
  for (int p : perm) {
    if (p < 0 || p > 2 || seen[p]) throw std::invalid_argument("permuteModes: invalid permutation");
    seen[p] = true;
  }
  const std::array<Index, 3> d = x.dims();
  Tensor3<Scalar> r(d[perm[0]], d[perm[1]], d[perm[2]]);
  std::array<Index, 3> j{};
  for (Index t = 0; t < r.n3(); ++t)
    for (Index jj = 0; jj < r.n2(); ++jj)
      for (Index i = 0; i < r.n1(); ++i) {
        j[perm[0]] = i;
        j[perm[1]] = jj;
        j[perm[2]] = t;
        r(i, jj, t) = x(j[0], j[1], j[2]);
      }
  return r;
}

}  // namespace trid
