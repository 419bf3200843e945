#pragma once

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <vector>

#include "trid/contraction.hpp"
#include "trid/factors.hpp"
#include "trid/tensor.hpp"

namespace trid {

/// Middle value of the three dimensions.
inline Index middleDim(std::array<Index, 3> d) {
  std::sort(d.begin(), d.end());
  return d[1];
}

/// Per-mode matrix ranks of the unfoldings.  A singular value counts while
/// it exceeds tol * sigma_max; tol <= 0 falls back to Eigen's default rank
/// threshold.  The zero tensor reports (0, 0, 0).
template <typename Scalar>
std::array<Index, 3> tuckerRank(const Tensor3<Scalar>& x, Scalar tol = Scalar(1e-10)) {
  using Matrix = typename Tensor3<Scalar>::Matrix;
  std::array<Index, 3> ranks{};
  for (int mode = 1; mode <= 3; ++mode) {
    Eigen::BDCSVD<Matrix> svd(unfold(x, mode));
    if (tol <= Scalar(0)) {
      ranks[mode - 1] = svd.rank();
      continue;
    }
    const auto& sv = svd.singularValues();
    const Scalar cut = tol * sv(0);
    Index r = 0;
    while (r < sv.size() && sv(r) > cut) ++r;
    if (sv(0) == Scalar(0)) r = 0;
    ranks[mode - 1] = r;
  }
  return ranks;
}

namespace internal {

// Factor maps under mode swaps.  Given factors of y, each returns factors of
// the swapped tensor; both swaps are involutions.  The identities follow by
// renaming the summation indices of the reconstruction formula.
template <typename Scalar>
TripleFactors<Scalar> swapFactors12(const TripleFactors<Scalar>& f) {
  const Index r = f.rank();
  auto g = TripleFactors<Scalar>::zero(f.n2(), f.n1(), f.n3(), r);
  for (Index s = 0; s < r; ++s)
    for (Index q = 0; q < r; ++q)
      for (Index i = 0; i < f.n2(); ++i) g.A(i, q, s) = f.B(q, i, s);
  for (Index s = 0; s < r; ++s)
    for (Index j = 0; j < f.n1(); ++j)
      for (Index p = 0; p < r; ++p) g.B(p, j, s) = f.A(j, p, s);
  for (Index t = 0; t < f.n3(); ++t)
    for (Index q = 0; q < r; ++q)
      for (Index p = 0; p < r; ++p) g.C(p, q, t) = f.C(q, p, t);
  return g;
}

template <typename Scalar>
TripleFactors<Scalar> swapFactors23(const TripleFactors<Scalar>& f) {
  const Index r = f.rank();
  auto g = TripleFactors<Scalar>::zero(f.n1(), f.n3(), f.n2(), r);
  for (Index s = 0; s < r; ++s)
    for (Index q = 0; q < r; ++q)
      for (Index i = 0; i < f.n1(); ++i) g.A(i, q, s) = f.A(i, s, q);
  for (Index s = 0; s < r; ++s)
    for (Index j = 0; j < f.n3(); ++j)
      for (Index p = 0; p < r; ++p) g.B(p, j, s) = f.C(p, s, j);
  for (Index t = 0; t < f.n2(); ++t)
    for (Index q = 0; q < r; ++q)
      for (Index p = 0; p < r; ++p) g.C(p, q, t) = f.B(p, t, q);
  return g;
}

}  // namespace internal

/// Exact triple decomposition with rank equal to the middle dimension.
///
/// For n1 >= n2 >= n3 the factors are, with r = n2,
///   A(i, q, s) = x(i, s, q) for q < n3 (zero otherwise),
///   B(p, j, s) = [j == s] / sqrt(r),
///   C(p, q, t) = [q == t] / sqrt(r);
/// every product term then collapses onto a single tensor entry and the sum
/// over p contributes r * (1/sqrt(r))^2 = 1.  Other orderings are handled by
/// sorting the modes (stably, so ties keep their original order) and mapping
/// the factors back through the recorded swaps.
template <typename Scalar>
TripleFactors<Scalar> constructiveTriple(const Tensor3<Scalar>& x) {
  // bubble sort of the three dimensions into descending order
  std::vector<int> swaps;
  Tensor3<Scalar> y = x;
  auto swapIfNeeded = [&](int which) {
    if (which == 12 && y.n1() < y.n2()) {
      y = permuteModes(y, {1, 0, 2});
      swaps.push_back(12);
    } else if (which == 23 && y.n2() < y.n3()) {
      y = permuteModes(y, {0, 2, 1});
      swaps.push_back(23);
    }
  };
  swapIfNeeded(12);
  swapIfNeeded(23);
  swapIfNeeded(12);

  const Index n1 = y.n1(), n2 = y.n2(), n3 = y.n3(), r = n2;
  auto f = TripleFactors<Scalar>::zero(n1, n2, n3, r);
  for (Index s = 0; s < r; ++s)
    for (Index q = 0; q < n3; ++q)
      for (Index i = 0; i < n1; ++i) f.A(i, q, s) = y(i, s, q);
  const Scalar inv = Scalar(1) / std::sqrt(Scalar(r));
  for (Index s = 0; s < r; ++s)
    for (Index p = 0; p < r; ++p) f.B(p, s, s) = inv;
  for (Index t = 0; t < n3; ++t)
    for (Index p = 0; p < r; ++p) f.C(p, t, t) = inv;

  for (auto it = swaps.rbegin(); it != swaps.rend(); ++it)
    f = (*it == 12) ? internal::swapFactors12(f) : internal::swapFactors23(f);
  return f;
}

/// Embeds a CP decomposition as a triple decomposition of the same rank by
/// placing the CP factors on diagonal fibers; the cross terms all vanish, so
/// the reconstruction is unchanged.
template <typename Scalar>
TripleFactors<Scalar> cpToTriple(const CPFactors<Scalar>& f) {
  const Index r = f.rank();
  auto g = TripleFactors<Scalar>::zero(f.n1(), f.n2(), f.n3(), r);
  for (Index q = 0; q < r; ++q)
    for (Index i = 0; i < f.n1(); ++i) g.A(i, q, q) = f.A(i, q);
  for (Index s = 0; s < r; ++s)
    for (Index j = 0; j < f.n2(); ++j) g.B(s, j, s) = f.B(j, s);
  for (Index p = 0; p < r; ++p)
    for (Index t = 0; t < f.n3(); ++t) g.C(p, p, t) = f.C(t, p);
  return g;
}

/// Triple decomposition with rank equal to the middle numerical Tucker rank.
///
/// Compresses the tensor onto the leading singular-vector bases of its
/// unfoldings, applies the mid-dimension construction to the small core and
/// lifts the factors back with one mode product each.  The reconstruction is
/// exact whenever the numerical ranks equal the exact ranks; otherwise the
/// result is still a valid factor triple and serves as a strong initial
/// guess.
template <typename Scalar>
TripleFactors<Scalar> tuckerCompressedTriple(const Tensor3<Scalar>& x,
                                             Scalar tol = Scalar(1e-10)) {
  using Matrix = typename Tensor3<Scalar>::Matrix;
  std::array<Matrix, 3> basis;
  std::array<Index, 3> rank{};
  for (int mode = 1; mode <= 3; ++mode) {
    Eigen::BDCSVD<Matrix> svd(unfold(x, mode), Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    const Scalar cut = tol > Scalar(0) ? tol * sv(0) : Scalar(0);
    Index r = 0;
    while (r < sv.size() && sv(r) > cut) ++r;
    r = std::max<Index>(r, 1);
    rank[mode - 1] = r;
    basis[mode - 1] = svd.matrixU().leftCols(r);
  }
  Tensor3<Scalar> core = modeProduct(
      modeProduct(modeProduct(x, Matrix(basis[0].transpose()), 1),
                  Matrix(basis[1].transpose()), 2),
      Matrix(basis[2].transpose()), 3);
  auto f = constructiveTriple(core);
  return TripleFactors<Scalar>(modeProduct(f.A, basis[0], 1), modeProduct(f.B, basis[1], 2),
                               modeProduct(f.C, basis[2], 3));
}

}  // namespace trid
