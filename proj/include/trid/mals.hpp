#pragma once

#include <algorithm>
#include <optional>
#include <utility>
#include <vector>

#include "trid/contraction.hpp"
#include "trid/rank_tools.hpp"
#include "trid/solver.hpp"

namespace trid {

enum class TripleBlock { A, B, C };

/// Exact proximal update of one factor block with the other two held fixed:
/// the minimizer of ||X_(m) - block_(m) * M||_F^2 + lambda ||block - current||_F^2
/// where M is the contraction built from the fixed blocks.  No extrapolation
/// is applied here.
template <typename Scalar>
Tensor3<Scalar> updateBlock(TripleBlock which, const TripleFactors<Scalar>& f,
                            const Tensor3<Scalar>& x, Scalar lambda) {
  if (f.n1() != x.n1() || f.n2() != x.n2() || f.n3() != x.n3())
    throw std::invalid_argument("updateBlock: factor shapes do not match the tensor");
  if (!(lambda > Scalar(0))) throw std::invalid_argument("updateBlock: lambda must be positive");
  const Index r = f.rank();
  switch (which) {
    case TripleBlock::A: {
      auto next = internal::proximalRidge(unfold(x, 1), buildF(f.B, f.C), unfold(f.A, 1), lambda);
      return fold<Scalar>(next, 1, x.n1(), r, r);
    }
    case TripleBlock::B: {
      auto next = internal::proximalRidge(unfold(x, 2), buildG(f.A, f.C), unfold(f.B, 2), lambda);
      return fold<Scalar>(next, 2, r, x.n2(), r);
    }
    case TripleBlock::C: {
      auto next = internal::proximalRidge(unfold(x, 3), buildH(f.A, f.B), unfold(f.C, 3), lambda);
      return fold<Scalar>(next, 3, r, r, x.n3());
    }
  }
  throw std::invalid_argument("updateBlock: unknown block");
}

template <typename Scalar>
struct DecomposeResult {
  TripleFactors<Scalar> factors;
  SolveTrace<Scalar> trace;
};

namespace internal {

/// One alternating solve with the data tensor fixed.  Updates A, B, C in
/// order, each against the freshest other blocks, extrapolates every block,
/// and records one trace row per iteration.
template <typename Scalar>
DecomposeResult<Scalar> solveTripleFixedX(const Tensor3<Scalar>& x,
                                          const typename Tensor3<Scalar>::Matrix& x1,
                                          const typename Tensor3<Scalar>::Matrix& x2,
                                          const typename Tensor3<Scalar>::Matrix& x3,
                                          TripleFactors<Scalar> f, Scalar lambda,
                                          const SolverConfig<Scalar>& cfg) {
  using Matrix = typename Tensor3<Scalar>::Matrix;
  const auto startedAt = Clock::now();
  const Index n1 = x.n1(), n2 = x.n2(), n3 = x.n3(), r = f.rank();
  const Scalar gamma = cfg.gamma;
  const Scalar decreaseRate = Scalar(2) * lambda / gamma;
  const Scalar normX = x.norm();

  SolveTrace<Scalar> trace;
  trace.lambda = lambda;

  Scalar fPrev = (x.vec() - tripleProduct(f).vec()).squaredNorm();
  trace.rows.push_back(
      {.iter = 0, .objective = fPrev, .seconds = elapsedSeconds(startedAt)});
  trace.iterations = cfg.maxIter;

  for (int k = 1; k <= cfg.maxIter; ++k) {
    Matrix contraction = buildF(f.B, f.C);
    Matrix a1 = unfold(f.A, 1);
    Matrix a1Next = proximalRidge(x1, contraction, a1, lambda);
    a1Next = gamma * a1Next + (Scalar(1) - gamma) * a1;
    const Scalar deltaA = (a1Next - a1).squaredNorm();
    const Scalar relA = relativeChange<Scalar>(a1Next, a1);
    f.A = fold<Scalar>(a1Next, 1, n1, r, r);

    contraction = buildG(f.A, f.C);
    Matrix b2 = unfold(f.B, 2);
    Matrix b2Next = proximalRidge(x2, contraction, b2, lambda);
    b2Next = gamma * b2Next + (Scalar(1) - gamma) * b2;
    const Scalar deltaB = (b2Next - b2).squaredNorm();
    const Scalar relB = relativeChange<Scalar>(b2Next, b2);
    f.B = fold<Scalar>(b2Next, 2, r, n2, r);

    contraction = buildH(f.A, f.B);
    Matrix c3 = unfold(f.C, 3);
    Matrix c3Next = proximalRidge(x3, contraction, c3, lambda);
    c3Next = gamma * c3Next + (Scalar(1) - gamma) * c3;
    const Scalar deltaC = (c3Next - c3).squaredNorm();
    const Scalar relC = relativeChange<Scalar>(c3Next, c3);
    f.C = fold<Scalar>(c3Next, 3, r, r, n3);

    const Scalar fNew = (x3 - c3Next * contraction).squaredNorm();
    checkFinite(fNew, "solveTripleFixedX: objective");
    const Scalar slack = (fPrev - fNew) - decreaseRate * (deltaA + deltaB + deltaC);
    trace.rows.push_back({.iter = k,
                          .objective = fNew,
                          .relChangeA = relA,
                          .relChangeB = relB,
                          .relChangeC = relC,
                          .decreaseSlack = slack,
                          .seconds = elapsedSeconds(startedAt)});
    fPrev = fNew;
    if (std::max({relA, relB, relC}) <= cfg.eps) {
      trace.termination = Termination::Converged;
      trace.iterations = k;
      break;
    }
  }

  trace.finalObjective = fPrev;
  trace.finalRelativeError =
      normX > Scalar(0) ? std::sqrt(std::max(fPrev, Scalar(0))) / normX : Scalar(0);
  {
    Matrix fc = buildF(f.B, f.C);
    Matrix gc = buildG(f.A, f.C);
    Matrix hc = buildH(f.A, f.B);
    const Scalar ga = (Scalar(2) * (unfold(f.A, 1) * fc - x1) * fc.transpose()).norm();
    const Scalar gb = (Scalar(2) * (unfold(f.B, 2) * gc - x2) * gc.transpose()).norm();
    const Scalar gcn = (Scalar(2) * (unfold(f.C, 3) * hc - x3) * hc.transpose()).norm();
    trace.finalGradientNorm = std::sqrt(ga * ga + gb * gb + gcn * gcn);
  }
  trace.seconds = elapsedSeconds(startedAt);
  return {std::move(f), std::move(trace)};
}

template <typename Scalar>
DecomposeResult<Scalar> decomposeFromInits(const Tensor3<Scalar>& x,
                                           const SolverConfig<Scalar>& cfg,
                                           const std::vector<TripleFactors<Scalar>>& inits) {
  using Matrix = typename Tensor3<Scalar>::Matrix;
  const Matrix x1 = unfold(x, 1), x2 = unfold(x, 2), x3 = unfold(x, 3);
  const Scalar lambda = cfg.resolveLambda(x.squaredNorm(), x.size());
  auto solveOne = [&](int i) {
    auto result = solveTripleFixedX(x, x1, x2, x3, inits[i], lambda, cfg);
    result.trace.candidate = i;
    return result;
  };
  auto results = runCandidates<DecomposeResult<Scalar>>(static_cast<int>(inits.size()),
                                                        cfg.threads, solveOne);
  const int best =
      pickBest(results, [](const DecomposeResult<Scalar>& d) { return d.trace.finalObjective; });
  DecomposeResult<Scalar> out = std::move(results[best]);
  if (cfg.rank > middleDim(x.dims()))
    out.trace.warnings.push_back(
        "rank exceeds the middle dimension; the extra rank is redundant");
  return out;
}

}  // namespace internal

/// Alternating proximal decomposition with extrapolation and independent
/// random restarts; the restart with the lowest final objective wins.
template <typename Scalar>
DecomposeResult<Scalar> malsDecompose(const Tensor3<Scalar>& x, const SolverConfig<Scalar>& cfg) {
  cfg.validate();
  std::vector<TripleFactors<Scalar>> inits;
  switch (cfg.init) {
    case InitKind::RandomGaussian: {
      const Scalar scale = internal::initScale(x.norm(), cfg.rank, x.size());
      inits.reserve(cfg.restarts);
      for (int i = 0; i < cfg.restarts; ++i)
        inits.push_back(internal::gaussianTriple<Scalar>(
            cfg.seed, static_cast<std::uint64_t>(i), x.n1(), x.n2(), x.n3(), cfg.rank, scale));
      break;
    }
    case InitKind::Constructive: {
      const Index mid = middleDim(x.dims());
      if (cfg.rank < mid)
        throw std::invalid_argument(
            "malsDecompose: constructive initialization needs rank >= middle dimension");
      inits.push_back(padFactors(constructiveTriple(x), cfg.rank));
      break;
    }
    case InitKind::Provided:
      throw std::invalid_argument(
          "malsDecompose: provided initialization requires the overload taking factors");
  }
  return internal::decomposeFromInits(x, cfg, inits);
}

/// Variant starting from caller-supplied factors (a warm start).
template <typename Scalar>
DecomposeResult<Scalar> malsDecompose(const Tensor3<Scalar>& x, const SolverConfig<Scalar>& cfg,
                                      const TripleFactors<Scalar>& initial) {
  cfg.validate();
  if (initial.n1() != x.n1() || initial.n2() != x.n2() || initial.n3() != x.n3())
    throw std::invalid_argument("malsDecompose: initial factors do not match the tensor");
  if (initial.rank() != cfg.rank)
    throw std::invalid_argument("malsDecompose: initial factors do not match cfg.rank");
  return internal::decomposeFromInits(x, cfg, {initial});
}

template <typename Scalar>
struct SweepPoint {
  Index rank = 0;
  Scalar relativeError = 0;
  int iterations = 0;
  double seconds = 0;
};

template <typename Scalar>
struct SweepResult {
  std::vector<SweepPoint<Scalar>> points;
};

template <typename Scalar>
struct RankBound {
  Index rank = 0;
  /// Whether the error at `rank` actually met the requested target.
  bool achieved = false;
  Scalar error = 0;
  SweepResult<Scalar> curve;
};

namespace internal {

template <typename Scalar>
struct SweepOutcome {
  SweepResult<Scalar> curve;
  Index stopRank = 0;
  Scalar stopError = 0;
  bool targetMet = false;
};

/// Shared engine behind rankSweep and tripleRankUpperBound.  Each rank is
/// solved from the random restarts plus three deterministic candidates where
/// applicable: the previous rank's solution padded with zeros (which makes
/// the curve non-increasing, since padding preserves the reconstruction and
/// each sweep is monotone), the mid-dimension construction, and the
/// Tucker-compressed construction.
template <typename Scalar>
SweepOutcome<Scalar> sweepEngine(const Tensor3<Scalar>& x, const std::vector<Index>& ranks,
                                 SolverConfig<Scalar> cfg, std::optional<Scalar> target) {
  using Matrix = typename Tensor3<Scalar>::Matrix;
  if (ranks.empty()) throw std::invalid_argument("rank sweep: empty rank list");
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (ranks[i] < 1) throw std::invalid_argument("rank sweep: ranks must be >= 1");
    if (i > 0 && ranks[i] <= ranks[i - 1])
      throw std::invalid_argument("rank sweep: ranks must be strictly increasing");
  }

  const Matrix x1 = unfold(x, 1), x2 = unfold(x, 2), x3 = unfold(x, 3);
  const Index mid = middleDim(x.dims());
  const Scalar normX = x.norm();
  const Scalar lambda = cfg.resolveLambda(x.squaredNorm(), x.size());

  std::optional<TripleFactors<Scalar>> constructed;
  std::optional<TripleFactors<Scalar>> compressed;
  if (normX > Scalar(0)) {
    constructed = constructiveTriple(x);
    compressed = tuckerCompressedTriple(x);
  }

  SweepOutcome<Scalar> out;
  std::optional<TripleFactors<Scalar>> warm;
  for (Index r : ranks) {
    cfg.rank = r;
    std::vector<TripleFactors<Scalar>> inits;
    const Scalar scale = initScale(normX, r, x.size());
    for (int i = 0; i < cfg.restarts; ++i)
      inits.push_back(gaussianTriple<Scalar>(
          cfg.seed, (static_cast<std::uint64_t>(r) << 20) ^ static_cast<std::uint64_t>(i),
          x.n1(), x.n2(), x.n3(), r, scale));
    if (warm && warm->rank() <= r) inits.push_back(padFactors(*warm, r));
    if (constructed && r >= mid) inits.push_back(padFactors(*constructed, r));
    if (compressed && r >= compressed->rank()) inits.push_back(padFactors(*compressed, r));

    auto solveOne = [&](int i) {
      auto result = solveTripleFixedX(x, x1, x2, x3, inits[i], lambda, cfg);
      result.trace.candidate = i;
      return result;
    };
    auto results = runCandidates<DecomposeResult<Scalar>>(static_cast<int>(inits.size()),
                                                          cfg.threads, solveOne);
    const int best = pickBest(
        results, [](const DecomposeResult<Scalar>& d) { return d.trace.finalObjective; });
    const auto& winner = results[best];
    out.curve.points.push_back({r, winner.trace.finalRelativeError, winner.trace.iterations,
                                winner.trace.seconds});
    warm = winner.factors;
    out.stopRank = r;
    out.stopError = winner.trace.finalRelativeError;
    if (target && out.stopError <= *target) {
      out.targetMet = true;
      break;
    }
  }
  return out;
}

}  // namespace internal

/// Best relative error per rank over the given strictly increasing ranks.
template <typename Scalar>
SweepResult<Scalar> rankSweep(const Tensor3<Scalar>& x, const std::vector<Index>& ranks,
                              const SolverConfig<Scalar>& cfg) {
  cfg.validate();
  return internal::sweepEngine<Scalar>(x, ranks, cfg, std::nullopt).curve;
}

/// Smallest rank whose swept relative error reaches `target`.  The sweep runs
/// r = 1 .. middle dimension; the mid-dimension construction makes the last
/// step exact up to rounding, so the reported rank is always a valid upper
/// bound even when the target itself was stricter than attainable.  The zero
/// tensor reports rank 0 without materializing factors.
template <typename Scalar>
RankBound<Scalar> tripleRankUpperBound(const Tensor3<Scalar>& x, Scalar target,
                                       const SolverConfig<Scalar>& cfg) {
  cfg.validate();
  if (!(target >= Scalar(0)))
    throw std::invalid_argument("tripleRankUpperBound: target must be >= 0");
  RankBound<Scalar> bound;
  if (x.isZero()) {
    bound.rank = 0;
    bound.achieved = true;
    bound.error = 0;
    return bound;
  }
  std::vector<Index> ranks;
  for (Index r = 1; r <= middleDim(x.dims()); ++r) ranks.push_back(r);
  auto outcome = internal::sweepEngine<Scalar>(x, ranks, cfg, target);
  bound.rank = outcome.stopRank;
  bound.achieved = outcome.targetMet;
  bound.error = outcome.stopError;
  bound.curve = std::move(outcome.curve);
  return bound;
}

}  // namespace trid
