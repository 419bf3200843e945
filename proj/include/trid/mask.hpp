#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "trid/solver.hpp"
#include "trid/tensor.hpp"

namespace trid {

/// Linear observation operator P together with the observed data d, defining
/// the affine constraint P vec(X) = d.
///
/// Two kinds are supported: an entry mask (P selects coordinates, stored as a
/// sorted index list) and a dense matrix P with linearly independent rows.
/// For the dense kind, P P^T is factorized once at construction.
template <typename Scalar>
class MaskOperator {
 public:
  using Vector = typename Tensor3<Scalar>::Vector;
  using Matrix = typename Tensor3<Scalar>::Matrix;

  enum class Kind { Entries, Dense };

  static MaskOperator entries(Index n1, Index n2, Index n3, std::vector<Index> observed,
                              Vector d) {
    MaskOperator m(n1, n2, n3);
    m.kind_ = Kind::Entries;
    if (observed.empty()) throw std::invalid_argument("MaskOperator: no observed entries");
    if (static_cast<Index>(observed.size()) != d.size())
      throw std::invalid_argument("MaskOperator: index/data size mismatch");
    const Index total = n1 * n2 * n3;
    for (std::size_t k = 0; k < observed.size(); ++k) {
      if (observed[k] < 0 || observed[k] >= total)
        throw std::invalid_argument("MaskOperator: observed index out of range");
      if (k > 0 && observed[k] <= observed[k - 1])
        throw std::invalid_argument("MaskOperator: observed indices must be strictly increasing");
    }
    m.observed_ = std::move(observed);
    m.d_ = std::move(d);
    return m;
  }

  static MaskOperator dense(Index n1, Index n2, Index n3, Matrix p, Vector d) {
    MaskOperator m(n1, n2, n3);
    m.kind_ = Kind::Dense;
    if (p.rows() < 1) throw std::invalid_argument("MaskOperator: P must have at least one row");
    if (p.rows() != d.size())
      throw std::invalid_argument("MaskOperator: P rows do not match data size");
    if (p.cols() != n1 * n2 * n3)
      throw std::invalid_argument("MaskOperator: P columns do not match the tensor size");
    m.p_ = std::move(p);
    m.d_ = std::move(d);
    m.gram_.compute(m.p_ * m.p_.transpose());
    // The pivot ratio of the factored Gram matrix bounds its conditioning;
    // LDLT::solve silently pseudo-inverts tiny pivots, so check them here.
    const auto pivots = m.gram_.vectorD().cwiseAbs().eval();
    const Scalar maxPivot = pivots.maxCoeff();
    const Scalar minPivot = pivots.minCoeff();
    if (m.gram_.info() != Eigen::Success || !(maxPivot > Scalar(0)) ||
        !(minPivot > Scalar(100) * std::numeric_limits<Scalar>::epsilon() * maxPivot))
      throw NumericError(
          "MaskOperator: the rows of P are not numerically independent (pivot ratio " +
          std::to_string(static_cast<double>(maxPivot > Scalar(0) ? minPivot / maxPivot
                                                                  : Scalar(0))) +
          ")");
    return m;
  }

  Kind kind() const { return kind_; }
  Index n1() const { return n1_; }
  Index n2() const { return n2_; }
  Index n3() const { return n3_; }
  Index tensorSize() const { return n1_ * n2_ * n3_; }
  Index observedCount() const { return d_.size(); }
  const Vector& data() const { return d_; }
  const std::vector<Index>& observedIndices() const { return observed_; }

  /// P applied to a vectorized tensor.
  Vector apply(const Vector& v) const {
    requireSize(v);
    if (kind_ == Kind::Entries) {
      Vector out(d_.size());
      for (Index k = 0; k < out.size(); ++k) out[k] = v[observed_[k]];
      return out;
    }
    return p_ * v;
  }

  /// Nearest point to v on the affine set {y : P y = d}.  For an entry mask
  /// this writes d into the observed coordinates exactly.
  Vector affineProject(const Vector& v) const {
    requireSize(v);
    Vector out = v;
    if (kind_ == Kind::Entries) {
      for (Index k = 0; k < d_.size(); ++k) out[observed_[k]] = d_[k];
      return out;
    }
    out.noalias() -= p_.transpose() * gram_.solve(p_ * v - d_);
    return out;
  }

  /// Orthogonal projection onto the null space of P.
  Vector nullProject(const Vector& v) const {
    requireSize(v);
    Vector out = v;
    if (kind_ == Kind::Entries) {
      for (Index k : observed_) out[k] = Scalar(0);
      return out;
    }
    out.noalias() -= p_.transpose() * gram_.solve(p_ * v);
    return out;
  }

  Scalar feasibilityResidual(const Vector& v) const { return (apply(v) - d_).norm(); }

  /// Feasible starting tensor: the observed data stay in place and every free
  /// coordinate takes the mean observed value.
  Tensor3<Scalar> initialGuess() const {
    Vector v = Vector::Constant(tensorSize(), d_.mean());
    return Tensor3<Scalar>::fromVec(n1_, n2_, n3_, affineProject(v));
  }

 private:
  MaskOperator(Index n1, Index n2, Index n3) : n1_(n1), n2_(n2), n3_(n3) {
    if (n1 < 1 || n2 < 1 || n3 < 1)
      throw std::invalid_argument("MaskOperator: dimensions must be positive");
  }

  void requireSize(const Vector& v) const {
    if (v.size() != tensorSize())
      throw std::invalid_argument("MaskOperator: vector length does not match the tensor size");
  }

  Kind kind_ = Kind::Entries;
  Index n1_ = 0, n2_ = 0, n3_ = 0;
  std::vector<Index> observed_;
  Vector d_;
  Matrix p_;
  Eigen::LDLT<Matrix> gram_;
};

/// Uniform random entry mask over ceil(fraction * size) distinct coordinates
/// of x, observing the matching values.  Deterministic in (seed).
template <typename Scalar>
MaskOperator<Scalar> sampleMask(const Tensor3<Scalar>& x, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument("sampleMask: fraction must lie in (0, 1]");
  const Index total = x.size();
  const Index m = std::min<Index>(total, static_cast<Index>(std::ceil(fraction * double(total))));
  std::vector<Index> idx(total);
  std::iota(idx.begin(), idx.end(), Index(0));
  auto eng = internal::seededEngine(seed, 0xD1CEull);
  for (Index k = 0; k < m; ++k) {
    std::uniform_int_distribution<Index> pick(k, total - 1);
    std::swap(idx[k], idx[pick(eng)]);
  }
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  typename Tensor3<Scalar>::Vector d(m);
  for (Index k = 0; k < m; ++k) d[k] = x.vec()[idx[k]];
  return MaskOperator<Scalar>::entries(x.n1(), x.n2(), x.n3(), std::move(idx), std::move(d));
}

}  // namespace trid
