#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "trid/contraction.hpp"
#include "trid/mals.hpp"
#include "trid/mask.hpp"
#include "trid/solver.hpp"

namespace trid {

/// Closed-form update of the tensor block of the recovery objective
///   ||X - model||^2 + lambda ||X - xk||^2   subject to  P vec(X) = d:
/// the unconstrained minimizer (model + lambda xk) / (1 + lambda) projected
/// back onto the affine constraint.  With an entry mask the observed
/// coordinates of the result equal d exactly.
template <typename Scalar>
Tensor3<Scalar> projectFeasibleUpdate(const Tensor3<Scalar>& xk, const Tensor3<Scalar>& model,
                                      const MaskOperator<Scalar>& mask, Scalar lambda) {
  if (xk.dims() != model.dims())
    throw std::invalid_argument("projectFeasibleUpdate: tensor shapes differ");
  if (xk.n1() != mask.n1() || xk.n2() != mask.n2() || xk.n3() != mask.n3())
    throw std::invalid_argument("projectFeasibleUpdate: mask does not match the tensor");
  if (!(lambda > Scalar(0)))
    throw std::invalid_argument("projectFeasibleUpdate: lambda must be positive");
  typename Tensor3<Scalar>::Vector v =
      (model.vec() + lambda * xk.vec()) / (Scalar(1) + lambda);
  return Tensor3<Scalar>::fromVec(xk.n1(), xk.n2(), xk.n3(), mask.affineProject(v));
}

template <typename Scalar>
struct GradientNorms {
  Scalar x = 0, a = 0, b = 0, c = 0;
  Scalar total = 0;
};

/// Blocks of the projected gradient of f(X, A, B, C) = ||X - ABC||^2, with
/// the X block projected onto the feasible directions (the null space of P).
template <typename Scalar>
struct ProjectedGradient {
  Tensor3<Scalar> x, a, b, c;
  GradientNorms<Scalar> norms;
};

template <typename Scalar>
ProjectedGradient<Scalar> projectedGradient(const Tensor3<Scalar>& x,
                                            const TripleFactors<Scalar>& f,
                                            const MaskOperator<Scalar>& mask) {
  using Matrix = typename Tensor3<Scalar>::Matrix;
  const Index r = f.rank();
  auto model = tripleProduct(f, x.n1(), x.n2(), x.n3());
  ProjectedGradient<Scalar> g;
  g.x = Tensor3<Scalar>::fromVec(
      x.n1(), x.n2(), x.n3(),
      mask.nullProject(typename Tensor3<Scalar>::Vector(Scalar(2) *
                                                        (x.vec() - model.vec()))));
  const Matrix x1 = unfold(x, 1), x2 = unfold(x, 2), x3 = unfold(x, 3);
  Matrix fc = buildF(f.B, f.C);
  Matrix gc = buildG(f.A, f.C);
  Matrix hc = buildH(f.A, f.B);
  g.a = fold<Scalar>(Scalar(2) * (unfold(f.A, 1) * fc - x1) * fc.transpose(), 1, x.n1(), r, r);
  g.b = fold<Scalar>(Scalar(2) * (unfold(f.B, 2) * gc - x2) * gc.transpose(), 2, r, x.n2(), r);
  g.c = fold<Scalar>(Scalar(2) * (unfold(f.C, 3) * hc - x3) * hc.transpose(), 3, r, r, x.n3());
  g.norms.x = g.x.norm();
  g.norms.a = g.a.norm();
  g.norms.b = g.b.norm();
  g.norms.c = g.c.norm();
  g.norms.total = std::sqrt(g.norms.x * g.norms.x + g.norms.a * g.norms.a +
                            g.norms.b * g.norms.b + g.norms.c * g.norms.c);
  return g;
}

template <typename Scalar>
struct RecoveryResult {
  /// Final feasible tensor iterate (exactly consistent with the data).
  Tensor3<Scalar> X;
  TripleFactors<Scalar> factors;
  SolveTrace<Scalar> trace;
};

namespace internal {

template <typename Scalar>
RecoveryResult<Scalar> solveRecovery(const MaskOperator<Scalar>& mask,
                                     const Tensor3<Scalar>& x0, TripleFactors<Scalar> f,
                                     Scalar lambda, const SolverConfig<Scalar>& cfg) {
  using Matrix = typename Tensor3<Scalar>::Matrix;
  const auto startedAt = Clock::now();
  const Index n1 = x0.n1(), n2 = x0.n2(), n3 = x0.n3(), r = f.rank();
  const Scalar gamma = cfg.gamma;
  const Scalar decreaseRate = Scalar(2) * lambda / gamma;

  SolveTrace<Scalar> trace;
  trace.lambda = lambda;

  Tensor3<Scalar> x = x0;
  Scalar fPrev = (x.vec() - tripleProduct(f).vec()).squaredNorm();
  trace.rows.push_back({.iter = 0,
                        .objective = fPrev,
                        .feasibility = mask.feasibilityResidual(x.vec()),
                        .seconds = elapsedSeconds(startedAt)});
  trace.iterations = cfg.maxIter;

  for (int k = 1; k <= cfg.maxIter; ++k) {
    auto model = tripleProduct(f);
    auto xTilde = projectFeasibleUpdate(x, model, mask, lambda);
    typename Tensor3<Scalar>::Vector xNext =
        gamma * xTilde.vec() + (Scalar(1) - gamma) * x.vec();
    const Scalar deltaX = (xNext - x.vec()).squaredNorm();
    const Scalar relX = relativeChange<Scalar>(xNext, x.vec());
    x.vec() = std::move(xNext);

    const Matrix x1 = unfold(x, 1), x2 = unfold(x, 2), x3 = unfold(x, 3);

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
    checkFinite(fNew, "solveRecovery: objective");
    const Scalar slack =
        (fPrev - fNew) - decreaseRate * (deltaX + deltaA + deltaB + deltaC);
    trace.rows.push_back({.iter = k,
                          .objective = fNew,
                          .relChangeX = relX,
                          .relChangeA = relA,
                          .relChangeB = relB,
                          .relChangeC = relC,
                          .decreaseSlack = slack,
                          .feasibility = mask.feasibilityResidual(x.vec()),
                          .seconds = elapsedSeconds(startedAt)});
    fPrev = fNew;
    if (std::max({relX, relA, relB, relC}) <= cfg.eps) {
      trace.termination = Termination::Converged;
      trace.iterations = k;
      break;
    }
  }

  trace.finalObjective = fPrev;
  const Scalar normX = x.norm();
  trace.finalRelativeError =
      normX > Scalar(0) ? std::sqrt(std::max(fPrev, Scalar(0))) / normX : Scalar(0);
  trace.finalGradientNorm = projectedGradient(x, f, mask).norms.total;
  trace.seconds = elapsedSeconds(startedAt);
  return {std::move(x), std::move(f), std::move(trace)};
}

template <typename Scalar>
RecoveryResult<Scalar> recoverFromInits(const MaskOperator<Scalar>& mask,
                                        const SolverConfig<Scalar>& cfg,
                                        const Tensor3<Scalar>& x0,
                                        const std::vector<TripleFactors<Scalar>>& inits) {
  const Scalar lambda = cfg.resolveLambda(x0.squaredNorm(), x0.size());
  auto solveOne = [&](int i) {
    auto result = solveRecovery(mask, x0, inits[i], lambda, cfg);
    result.trace.candidate = i;
    return result;
  };
  auto results = runCandidates<RecoveryResult<Scalar>>(static_cast<int>(inits.size()),
                                                       cfg.threads, solveOne);
  const int best =
      pickBest(results, [](const RecoveryResult<Scalar>& d) { return d.trace.finalObjective; });
  RecoveryResult<Scalar> out = std::move(results[best]);
  if (cfg.rank > middleDim({mask.n1(), mask.n2(), mask.n3()}))
    out.trace.warnings.push_back(
        "rank exceeds the middle dimension; the extra rank is redundant");
  return out;
}

}  // namespace internal

/// Low-rank tensor recovery from the observations in `mask`.  Alternates the
/// closed-form feasible tensor update with the three factor updates, all with
/// extrapolation; every tensor iterate satisfies the data constraint up to
/// rounding.  The restart with the lowest final objective wins.
template <typename Scalar>
RecoveryResult<Scalar> malsRecover(const MaskOperator<Scalar>& mask,
                                   const SolverConfig<Scalar>& cfg) {
  cfg.validate();
  const Tensor3<Scalar> x0 = mask.initialGuess();
  std::vector<TripleFactors<Scalar>> inits;
  switch (cfg.init) {
    case InitKind::RandomGaussian: {
      const Scalar scale = internal::initScale(x0.norm(), cfg.rank, x0.size());
      for (int i = 0; i < cfg.restarts; ++i)
        inits.push_back(internal::gaussianTriple<Scalar>(
            cfg.seed, static_cast<std::uint64_t>(i), x0.n1(), x0.n2(), x0.n3(), cfg.rank,
            scale));
      break;
    }
    case InitKind::Constructive: {
      const Index mid = middleDim(x0.dims());
      if (cfg.rank < mid)
        throw std::invalid_argument(
            "malsRecover: constructive initialization needs rank >= middle dimension");
      inits.push_back(padFactors(constructiveTriple(x0), cfg.rank));
      break;
    }
    case InitKind::Provided:
      throw std::invalid_argument(
          "malsRecover: provided initialization requires the overload taking factors");
  }
  return internal::recoverFromInits(mask, cfg, x0, inits);
}

/// Variant starting from caller-supplied factors.
template <typename Scalar>
RecoveryResult<Scalar> malsRecover(const MaskOperator<Scalar>& mask,
                                   const SolverConfig<Scalar>& cfg,
                                   const TripleFactors<Scalar>& initial) {
  cfg.validate();
  if (initial.n1() != mask.n1() || initial.n2() != mask.n2() || initial.n3() != mask.n3())
    throw std::invalid_argument("malsRecover: initial factors do not match the mask");
  if (initial.rank() != cfg.rank)
    throw std::invalid_argument("malsRecover: initial factors do not match cfg.rank");
  return internal::recoverFromInits(mask, cfg, mask.initialGuess(), {initial});
}

}  // namespace trid
