#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include "trid/contraction.hpp"
#include "trid/mask.hpp"
#include "trid/recovery.hpp"
#include "trid/solver.hpp"

namespace trid {

template <typename Scalar>
struct CpDecomposeResult {
  CPFactors<Scalar> factors;
  SolveTrace<Scalar> trace;
};

template <typename Scalar>
struct CpRecoveryResult {
  Tensor3<Scalar> X;
  CPFactors<Scalar> factors;
  SolveTrace<Scalar> trace;
};

template <typename Scalar>
struct TuckerDecomposeResult {
  TuckerFactors<Scalar> factors;
  SolveTrace<Scalar> trace;
};

template <typename Scalar>
struct TuckerRecoveryResult {
  Tensor3<Scalar> X;
  TuckerFactors<Scalar> factors;
  SolveTrace<Scalar> trace;
};

/// Exact minimizer of ||X - core x1 U x2 V x3 W||^2 + lambda ||core - core0||^2.
/// Diagonalizing the three factor Grams decouples the normal equations into
/// one scalar division per core entry.
template <typename Scalar>
Tensor3<Scalar> tuckerCoreUpdate(const Tensor3<Scalar>& x, const TuckerFactors<Scalar>& f,
                                 Scalar lambda) {
  using Matrix = typename Tensor3<Scalar>::Matrix;
  if (x.n1() != f.n1() || x.n2() != f.n2() || x.n3() != f.n3())
    throw std::invalid_argument("tuckerCoreUpdate: tensor and factors disagree on shape");
  if (!(lambda > Scalar(0)))
    throw std::invalid_argument("tuckerCoreUpdate: lambda must be positive");
  Eigen::SelfAdjointEigenSolver<Matrix> eu(Matrix(f.U.transpose() * f.U));
  Eigen::SelfAdjointEigenSolver<Matrix> ev(Matrix(f.V.transpose() * f.V));
  Eigen::SelfAdjointEigenSolver<Matrix> ew(Matrix(f.W.transpose() * f.W));
  if (eu.info() != Eigen::Success || ev.info() != Eigen::Success || ew.info() != Eigen::Success)
    throw NumericError("tuckerCoreUpdate: Gram eigendecomposition failed");

  Tensor3<Scalar> rhs = modeProduct(
      modeProduct(modeProduct(x, Matrix(f.U.transpose()), 1), Matrix(f.V.transpose()), 2),
      Matrix(f.W.transpose()), 3);
  rhs.vec() += lambda * f.core.vec();
  Tensor3<Scalar> hat = modeProduct(
      modeProduct(modeProduct(rhs, Matrix(eu.eigenvectors().transpose()), 1),
                  Matrix(ev.eigenvectors().transpose()), 2),
      Matrix(ew.eigenvectors().transpose()), 3);
  for (Index s = 0; s < hat.n3(); ++s)
    for (Index q = 0; q < hat.n2(); ++q)
      for (Index p = 0; p < hat.n1(); ++p)
        hat(p, q, s) /= eu.eigenvalues()[p] * ev.eigenvalues()[q] * ew.eigenvalues()[s] + lambda;
  return modeProduct(modeProduct(modeProduct(hat, eu.eigenvectors(), 1), ev.eigenvectors(), 2),
                     ew.eigenvectors(), 3);
}

namespace internal {

/// Random CP start drawing the factor entries in the same stream order as the
/// triple initialization, so the two methods coincide exactly at rank one.
template <typename Scalar>
CPFactors<Scalar> gaussianCp(std::uint64_t seed, std::uint64_t stream, Index n1, Index n2,
                             Index n3, Index r, Scalar scale) {
  auto eng = seededEngine(seed, stream);
  auto a = gaussianMatrix<Scalar>(eng, n1, r, scale);
  auto b = gaussianMatrix<Scalar>(eng, n2, r, scale);
  auto c = gaussianMatrix<Scalar>(eng, n3, r, scale);
  return CPFactors<Scalar>(std::move(a), std::move(b), std::move(c));
}

/// Random Tucker start at the CP-equivalent point: the same factor draws plus
/// a superdiagonal core of ones, so rank-one runs match the other methods.
template <typename Scalar>
TuckerFactors<Scalar> gaussianTucker(std::uint64_t seed, std::uint64_t stream, Index n1,
                                     Index n2, Index n3, Index r, Scalar scale) {
  auto eng = seededEngine(seed, stream);
  auto u = gaussianMatrix<Scalar>(eng, n1, r, scale);
  auto v = gaussianMatrix<Scalar>(eng, n2, r, scale);
  auto w = gaussianMatrix<Scalar>(eng, n3, r, scale);
  Tensor3<Scalar> core(r, r, r);
  for (Index q = 0; q < r; ++q) core(q, q, q) = Scalar(1);
  return TuckerFactors<Scalar>(std::move(core), std::move(u), std::move(v), std::move(w));
}

template <typename Scalar>
void requireRandomInit(const SolverConfig<Scalar>& cfg, const char* where) {
  if (cfg.init != InitKind::RandomGaussian)
    throw std::invalid_argument(std::string(where) +
                                ": only random initialization is supported");
}

/// One CP proximal sweep (A, B, C) against fixed unfoldings, with
/// extrapolation.  Returns the post-sweep objective pieces via out-params.
template <typename Scalar>
struct CpSweep {
  Scalar deltaSq = 0, maxRel = 0;
  Scalar relA = 0, relB = 0, relC = 0;
  typename Tensor3<Scalar>::Matrix designC;
};

template <typename Scalar>
CpSweep<Scalar> cpSweep(const typename Tensor3<Scalar>::Matrix& x1,
                        const typename Tensor3<Scalar>::Matrix& x2,
                        const typename Tensor3<Scalar>::Matrix& x3, CPFactors<Scalar>& f,
                        Scalar lambda, Scalar gamma) {
  using Matrix = typename Tensor3<Scalar>::Matrix;
  CpSweep<Scalar> s;

  Matrix design = khatriRaoT<Scalar>(f.B, f.C);
  Matrix aNext = proximalRidge<Scalar>(x1, design, f.A, lambda);
  aNext = gamma * aNext + (Scalar(1) - gamma) * f.A;
  s.deltaSq += (aNext - f.A).squaredNorm();
  s.relA = relativeChange<Scalar>(aNext, f.A);
  f.A = std::move(aNext);

  design = khatriRaoT<Scalar>(f.A, f.C);
  Matrix bNext = proximalRidge<Scalar>(x2, design, f.B, lambda);
  bNext = gamma * bNext + (Scalar(1) - gamma) * f.B;
  s.deltaSq += (bNext - f.B).squaredNorm();
  s.relB = relativeChange<Scalar>(bNext, f.B);
  f.B = std::move(bNext);

  s.designC = khatriRaoT<Scalar>(f.A, f.B);
  Matrix cNext = proximalRidge<Scalar>(x3, s.designC, f.C, lambda);
  cNext = gamma * cNext + (Scalar(1) - gamma) * f.C;
  s.deltaSq += (cNext - f.C).squaredNorm();
  s.relC = relativeChange<Scalar>(cNext, f.C);
  f.C = std::move(cNext);

  s.maxRel = std::max({s.relA, s.relB, s.relC});
  return s;
}

template <typename Scalar>
Scalar cpGradientNorm(const typename Tensor3<Scalar>::Matrix& x1,
                      const typename Tensor3<Scalar>::Matrix& x2,
                      const typename Tensor3<Scalar>::Matrix& x3,
                      const CPFactors<Scalar>& f) {
  using Matrix = typename Tensor3<Scalar>::Matrix;
  Matrix ma = khatriRaoT<Scalar>(f.B, f.C);
  Matrix mb = khatriRaoT<Scalar>(f.A, f.C);
  Matrix mc = khatriRaoT<Scalar>(f.A, f.B);
  const Scalar ga = (Scalar(2) * (f.A * ma - x1) * ma.transpose()).squaredNorm();
  const Scalar gb = (Scalar(2) * (f.B * mb - x2) * mb.transpose()).squaredNorm();
  const Scalar gc = (Scalar(2) * (f.C * mc - x3) * mc.transpose()).squaredNorm();
  return std::sqrt(ga + gb + gc);
}

template <typename Scalar>
CpDecomposeResult<Scalar> solveCpFixedX(const typename Tensor3<Scalar>::Matrix& x1,
                                        const typename Tensor3<Scalar>::Matrix& x2,
                                        const typename Tensor3<Scalar>::Matrix& x3,
                                        Scalar normX, CPFactors<Scalar> f, Scalar lambda,
                                        const SolverConfig<Scalar>& cfg) {
  const auto startedAt = Clock::now();
  const Scalar decreaseRate = Scalar(2) * lambda / cfg.gamma;

  SolveTrace<Scalar> trace;
  trace.lambda = lambda;
  Scalar fPrev = (x3 - f.C * khatriRaoT<Scalar>(f.A, f.B)).squaredNorm();
  trace.rows.push_back(
      {.iter = 0, .objective = fPrev, .seconds = elapsedSeconds(startedAt)});
  trace.iterations = cfg.maxIter;

  for (int k = 1; k <= cfg.maxIter; ++k) {
    auto sweep = cpSweep<Scalar>(x1, x2, x3, f, lambda, cfg.gamma);
    const Scalar fNew = (x3 - f.C * sweep.designC).squaredNorm();
    checkFinite(fNew, "cpMalsDecompose: objective");
    const Scalar slack = (fPrev - fNew) - decreaseRate * sweep.deltaSq;
    trace.rows.push_back({.iter = k,
                          .objective = fNew,
                          .relChangeA = sweep.relA,
                          .relChangeB = sweep.relB,
                          .relChangeC = sweep.relC,
                          .decreaseSlack = slack,
                          .seconds = elapsedSeconds(startedAt)});
    fPrev = fNew;
    if (sweep.maxRel <= cfg.eps) {
      trace.termination = Termination::Converged;
      trace.iterations = k;
      break;
    }
  }

  trace.finalObjective = fPrev;
  trace.finalRelativeError =
      normX > Scalar(0) ? std::sqrt(std::max(fPrev, Scalar(0))) / normX : Scalar(0);
  trace.finalGradientNorm = cpGradientNorm<Scalar>(x1, x2, x3, f);
  trace.seconds = elapsedSeconds(startedAt);
  return {std::move(f), std::move(trace)};
}

/// One Tucker proximal sweep (U, V, W, core) with extrapolation.
template <typename Scalar>
struct TuckerSweep {
  Scalar deltaSq = 0, maxRel = 0;
  Scalar relU = 0, relV = 0, relW = 0, relCore = 0;
};

template <typename Scalar>
TuckerSweep<Scalar> tuckerSweep(const Tensor3<Scalar>& x,
                                const typename Tensor3<Scalar>::Matrix& x1,
                                const typename Tensor3<Scalar>::Matrix& x2,
                                const typename Tensor3<Scalar>::Matrix& x3,
                                TuckerFactors<Scalar>& f, Scalar lambda, Scalar gamma) {
  using Matrix = typename Tensor3<Scalar>::Matrix;
  TuckerSweep<Scalar> s;

  Matrix design = unfold(f.core, 1) * Eigen::kroneckerProduct(f.W, f.V).transpose();
  Matrix uNext = proximalRidge<Scalar>(x1, design, f.U, lambda);
  uNext = gamma * uNext + (Scalar(1) - gamma) * f.U;
  s.deltaSq += (uNext - f.U).squaredNorm();
  s.relU = relativeChange<Scalar>(uNext, f.U);
  f.U = std::move(uNext);

  design = unfold(f.core, 2) * Eigen::kroneckerProduct(f.W, f.U).transpose();
  Matrix vNext = proximalRidge<Scalar>(x2, design, f.V, lambda);
  vNext = gamma * vNext + (Scalar(1) - gamma) * f.V;
  s.deltaSq += (vNext - f.V).squaredNorm();
  s.relV = relativeChange<Scalar>(vNext, f.V);
  f.V = std::move(vNext);

  design = unfold(f.core, 3) * Eigen::kroneckerProduct(f.V, f.U).transpose();
  Matrix wNext = proximalRidge<Scalar>(x3, design, f.W, lambda);
  wNext = gamma * wNext + (Scalar(1) - gamma) * f.W;
  s.deltaSq += (wNext - f.W).squaredNorm();
  s.relW = relativeChange<Scalar>(wNext, f.W);
  f.W = std::move(wNext);

  Tensor3<Scalar> coreNext = tuckerCoreUpdate(x, f, lambda);
  coreNext.vec() = gamma * coreNext.vec() + (Scalar(1) - gamma) * f.core.vec();
  s.deltaSq += (coreNext.vec() - f.core.vec()).squaredNorm();
  s.relCore = relativeChange<Scalar>(coreNext.vec(), f.core.vec());
  f.core = std::move(coreNext);

  s.maxRel = std::max({s.relU, s.relV, s.relW, s.relCore});
  return s;
}

template <typename Scalar>
Scalar tuckerGradientNorm(const Tensor3<Scalar>& x,
                          const typename Tensor3<Scalar>::Matrix& x1,
                          const typename Tensor3<Scalar>::Matrix& x2,
                          const typename Tensor3<Scalar>::Matrix& x3,
                          const TuckerFactors<Scalar>& f, const Tensor3<Scalar>& model) {
  using Matrix = typename Tensor3<Scalar>::Matrix;
  Matrix ku = unfold(f.core, 1) * Eigen::kroneckerProduct(f.W, f.V).transpose();
  Matrix kv = unfold(f.core, 2) * Eigen::kroneckerProduct(f.W, f.U).transpose();
  Matrix kw = unfold(f.core, 3) * Eigen::kroneckerProduct(f.V, f.U).transpose();
  const Scalar gu = (Scalar(2) * (f.U * ku - x1) * ku.transpose()).squaredNorm();
  const Scalar gv = (Scalar(2) * (f.V * kv - x2) * kv.transpose()).squaredNorm();
  const Scalar gw = (Scalar(2) * (f.W * kw - x3) * kw.transpose()).squaredNorm();
  Tensor3<Scalar> resid = Tensor3<Scalar>::fromVec(
      x.n1(), x.n2(), x.n3(),
      typename Tensor3<Scalar>::Vector(model.vec() - x.vec()));
  Tensor3<Scalar> gCore = modeProduct(
      modeProduct(modeProduct(resid, Matrix(f.U.transpose()), 1), Matrix(f.V.transpose()), 2),
      Matrix(f.W.transpose()), 3);
  return std::sqrt(gu + gv + gw + Scalar(4) * gCore.squaredNorm());
}

template <typename Scalar>
TuckerDecomposeResult<Scalar> solveTuckerFixedX(const Tensor3<Scalar>& x,
                                                TuckerFactors<Scalar> f, Scalar lambda,
                                                const SolverConfig<Scalar>& cfg) {
  using Matrix = typename Tensor3<Scalar>::Matrix;
  const auto startedAt = Clock::now();
  const Scalar decreaseRate = Scalar(2) * lambda / cfg.gamma;
  const Matrix x1 = unfold(x, 1), x2 = unfold(x, 2), x3 = unfold(x, 3);
  const Scalar normX = x.norm();

  SolveTrace<Scalar> trace;
  trace.lambda = lambda;
  Scalar fPrev = (x.vec() - tuckerApply(f).vec()).squaredNorm();
  trace.rows.push_back(
      {.iter = 0, .objective = fPrev, .seconds = elapsedSeconds(startedAt)});
  trace.iterations = cfg.maxIter;

  for (int k = 1; k <= cfg.maxIter; ++k) {
    auto sweep = tuckerSweep<Scalar>(x, x1, x2, x3, f, lambda, cfg.gamma);
    const Scalar fNew = (x.vec() - tuckerApply(f).vec()).squaredNorm();
    checkFinite(fNew, "tuckerMalsDecompose: objective");
    const Scalar slack = (fPrev - fNew) - decreaseRate * sweep.deltaSq;
    trace.rows.push_back({.iter = k,
                          .objective = fNew,
                          .relChangeA = sweep.relU,
                          .relChangeB = sweep.relV,
                          .relChangeC = sweep.relW,
                          .relChangeCore = sweep.relCore,
                          .decreaseSlack = slack,
                          .seconds = elapsedSeconds(startedAt)});
    fPrev = fNew;
    if (sweep.maxRel <= cfg.eps) {
      trace.termination = Termination::Converged;
      trace.iterations = k;
      break;
    }
  }

  trace.finalObjective = fPrev;
  trace.finalRelativeError =
      normX > Scalar(0) ? std::sqrt(std::max(fPrev, Scalar(0))) / normX : Scalar(0);
  trace.finalGradientNorm = tuckerGradientNorm<Scalar>(x, x1, x2, x3, f, tuckerApply(f));
  trace.seconds = elapsedSeconds(startedAt);
  return {std::move(f), std::move(trace)};
}

template <typename Scalar>
CpRecoveryResult<Scalar> solveCpRecovery(const MaskOperator<Scalar>& mask,
                                         const Tensor3<Scalar>& x0, CPFactors<Scalar> f,
                                         Scalar lambda, const SolverConfig<Scalar>& cfg) {
  using Matrix = typename Tensor3<Scalar>::Matrix;
  const auto startedAt = Clock::now();
  const Scalar gamma = cfg.gamma;
  const Scalar decreaseRate = Scalar(2) * lambda / gamma;

  SolveTrace<Scalar> trace;
  trace.lambda = lambda;
  Tensor3<Scalar> x = x0;
  Scalar fPrev = (x.vec() - cpTensor(f).vec()).squaredNorm();
  trace.rows.push_back({.iter = 0,
                        .objective = fPrev,
                        .feasibility = mask.feasibilityResidual(x.vec()),
                        .seconds = elapsedSeconds(startedAt)});
  trace.iterations = cfg.maxIter;

  for (int k = 1; k <= cfg.maxIter; ++k) {
    auto xTilde = projectFeasibleUpdate(x, cpTensor(f), mask, lambda);
    typename Tensor3<Scalar>::Vector xNext =
        gamma * xTilde.vec() + (Scalar(1) - gamma) * x.vec();
    const Scalar deltaX = (xNext - x.vec()).squaredNorm();
    const Scalar relX = relativeChange<Scalar>(xNext, x.vec());
    x.vec() = std::move(xNext);

    const Matrix x1 = unfold(x, 1), x2 = unfold(x, 2), x3 = unfold(x, 3);
    auto sweep = cpSweep<Scalar>(x1, x2, x3, f, lambda, gamma);
    const Scalar fNew = (x3 - f.C * sweep.designC).squaredNorm();
    checkFinite(fNew, "cpMalsRecover: objective");
    const Scalar slack = (fPrev - fNew) - decreaseRate * (deltaX + sweep.deltaSq);
    trace.rows.push_back({.iter = k,
                          .objective = fNew,
                          .relChangeX = relX,
                          .relChangeA = sweep.relA,
                          .relChangeB = sweep.relB,
                          .relChangeC = sweep.relC,
                          .decreaseSlack = slack,
                          .feasibility = mask.feasibilityResidual(x.vec()),
                          .seconds = elapsedSeconds(startedAt)});
    fPrev = fNew;
    if (std::max(relX, sweep.maxRel) <= cfg.eps) {
      trace.termination = Termination::Converged;
      trace.iterations = k;
      break;
    }
  }

  trace.finalObjective = fPrev;
  const Scalar normX = x.norm();
  trace.finalRelativeError =
      normX > Scalar(0) ? std::sqrt(std::max(fPrev, Scalar(0))) / normX : Scalar(0);
  const Matrix x1 = unfold(x, 1), x2 = unfold(x, 2), x3 = unfold(x, 3);
  const Scalar gFactors = cpGradientNorm<Scalar>(x1, x2, x3, f);
  const Scalar gx =
      mask.nullProject(typename Tensor3<Scalar>::Vector(
                           Scalar(2) * (x.vec() - cpTensor(f).vec())))
          .norm();
  trace.finalGradientNorm = std::sqrt(gFactors * gFactors + gx * gx);
  trace.seconds = elapsedSeconds(startedAt);
  return {std::move(x), std::move(f), std::move(trace)};
}

template <typename Scalar>
TuckerRecoveryResult<Scalar> solveTuckerRecovery(const MaskOperator<Scalar>& mask,
                                                 const Tensor3<Scalar>& x0,
                                                 TuckerFactors<Scalar> f, Scalar lambda,
                                                 const SolverConfig<Scalar>& cfg) {
  using Matrix = typename Tensor3<Scalar>::Matrix;
  const auto startedAt = Clock::now();
  const Scalar gamma = cfg.gamma;
  const Scalar decreaseRate = Scalar(2) * lambda / gamma;

  SolveTrace<Scalar> trace;
  trace.lambda = lambda;
  Tensor3<Scalar> x = x0;
  Scalar fPrev = (x.vec() - tuckerApply(f).vec()).squaredNorm();
  trace.rows.push_back({.iter = 0,
                        .objective = fPrev,
                        .feasibility = mask.feasibilityResidual(x.vec()),
                        .seconds = elapsedSeconds(startedAt)});
  trace.iterations = cfg.maxIter;

  for (int k = 1; k <= cfg.maxIter; ++k) {
    auto xTilde = projectFeasibleUpdate(x, tuckerApply(f), mask, lambda);
    typename Tensor3<Scalar>::Vector xNext =
        gamma * xTilde.vec() + (Scalar(1) - gamma) * x.vec();
    const Scalar deltaX = (xNext - x.vec()).squaredNorm();
    const Scalar relX = relativeChange<Scalar>(xNext, x.vec());
    x.vec() = std::move(xNext);

    const Matrix x1 = unfold(x, 1), x2 = unfold(x, 2), x3 = unfold(x, 3);
    auto sweep = tuckerSweep<Scalar>(x, x1, x2, x3, f, lambda, gamma);
    const Scalar fNew = (x.vec() - tuckerApply(f).vec()).squaredNorm();
    checkFinite(fNew, "tuckerMalsRecover: objective");
    const Scalar slack = (fPrev - fNew) - decreaseRate * (deltaX + sweep.deltaSq);
    trace.rows.push_back({.iter = k,
                          .objective = fNew,
                          .relChangeX = relX,
                          .relChangeA = sweep.relU,
                          .relChangeB = sweep.relV,
                          .relChangeC = sweep.relW,
                          .relChangeCore = sweep.relCore,
                          .decreaseSlack = slack,
                          .feasibility = mask.feasibilityResidual(x.vec()),
                          .seconds = elapsedSeconds(startedAt)});
    fPrev = fNew;
    if (std::max(relX, sweep.maxRel) <= cfg.eps) {
      trace.termination = Termination::Converged;
      trace.iterations = k;
      break;
    }
  }

  trace.finalObjective = fPrev;
  const Scalar normX = x.norm();
  trace.finalRelativeError =
      normX > Scalar(0) ? std::sqrt(std::max(fPrev, Scalar(0))) / normX : Scalar(0);
  const Matrix x1 = unfold(x, 1), x2 = unfold(x, 2), x3 = unfold(x, 3);
  const Scalar gFactors = tuckerGradientNorm<Scalar>(x, x1, x2, x3, f, tuckerApply(f));
  const Scalar gx =
      mask.nullProject(typename Tensor3<Scalar>::Vector(
                           Scalar(2) * (x.vec() - tuckerApply(f).vec())))
          .norm();
  trace.finalGradientNorm = std::sqrt(gFactors * gFactors + gx * gx);
  trace.seconds = elapsedSeconds(startedAt);
  return {std::move(x), std::move(f), std::move(trace)};
}

}  // namespace internal

/// CP decomposition by the same proximal alternating scheme as the triple
/// solver: each factor matrix update is the exact ridge least-squares
/// minimizer against a transposed-Khatri-Rao design, extrapolated by gamma.
/// At rank one this coincides with malsDecompose.
template <typename Scalar>
CpDecomposeResult<Scalar> cpMalsDecompose(const Tensor3<Scalar>& x,
                                          const SolverConfig<Scalar>& cfg) {
  cfg.validate();
  internal::requireRandomInit(cfg, "cpMalsDecompose");
  using Matrix = typename Tensor3<Scalar>::Matrix;
  const Matrix x1 = unfold(x, 1), x2 = unfold(x, 2), x3 = unfold(x, 3);
  const Scalar lambda = cfg.resolveLambda(x.squaredNorm(), x.size());
  const Scalar scale = internal::initScale(x.norm(), cfg.rank, x.size());
  const Scalar normX = x.norm();

  auto solveOne = [&](int i) {
    auto f = internal::gaussianCp<Scalar>(cfg.seed, static_cast<std::uint64_t>(i), x.n1(),
                                          x.n2(), x.n3(), cfg.rank, scale);
    auto result = internal::solveCpFixedX<Scalar>(x1, x2, x3, normX, std::move(f), lambda, cfg);
    result.trace.candidate = i;
    return result;
  };
  auto results =
      internal::runCandidates<CpDecomposeResult<Scalar>>(cfg.restarts, cfg.threads, solveOne);
  return std::move(results[internal::pickBest(
      results, [](const CpDecomposeResult<Scalar>& d) { return d.trace.finalObjective; })]);
}

/// Tucker decomposition with a cubic rank x rank x rank core, by cyclic
/// proximal updates of U, V, W and the core, each the exact regularized
/// least-squares minimizer, extrapolated by gamma.
template <typename Scalar>
TuckerDecomposeResult<Scalar> tuckerMalsDecompose(const Tensor3<Scalar>& x,
                                                  const SolverConfig<Scalar>& cfg) {
  cfg.validate();
  internal::requireRandomInit(cfg, "tuckerMalsDecompose");
  const Scalar lambda = cfg.resolveLambda(x.squaredNorm(), x.size());
  const Scalar scale = internal::initScale(x.norm(), cfg.rank, x.size());

  auto solveOne = [&](int i) {
    auto f = internal::gaussianTucker<Scalar>(cfg.seed, static_cast<std::uint64_t>(i), x.n1(),
                                              x.n2(), x.n3(), cfg.rank, scale);
    auto result = internal::solveTuckerFixedX<Scalar>(x, std::move(f), lambda, cfg);
    result.trace.candidate = i;
    return result;
  };
  auto results = internal::runCandidates<TuckerDecomposeResult<Scalar>>(cfg.restarts,
                                                                        cfg.threads, solveOne);
  return std::move(results[internal::pickBest(
      results, [](const TuckerDecomposeResult<Scalar>& d) { return d.trace.finalObjective; })]);
}

/// Low-CP-rank recovery: the feasible tensor update of malsRecover with the
/// model tensor swapped for the CP reconstruction.
template <typename Scalar>
CpRecoveryResult<Scalar> cpMalsRecover(const MaskOperator<Scalar>& mask,
                                       const SolverConfig<Scalar>& cfg) {
  cfg.validate();
  internal::requireRandomInit(cfg, "cpMalsRecover");
  const Tensor3<Scalar> x0 = mask.initialGuess();
  const Scalar lambda = cfg.resolveLambda(x0.squaredNorm(), x0.size());
  const Scalar scale = internal::initScale(x0.norm(), cfg.rank, x0.size());

  auto solveOne = [&](int i) {
    auto f = internal::gaussianCp<Scalar>(cfg.seed, static_cast<std::uint64_t>(i), x0.n1(),
                                          x0.n2(), x0.n3(), cfg.rank, scale);
    auto result = internal::solveCpRecovery<Scalar>(mask, x0, std::move(f), lambda, cfg);
    result.trace.candidate = i;
    return result;
  };
  auto results =
      internal::runCandidates<CpRecoveryResult<Scalar>>(cfg.restarts, cfg.threads, solveOne);
  return std::move(results[internal::pickBest(
      results, [](const CpRecoveryResult<Scalar>& d) { return d.trace.finalObjective; })]);
}

/// Low-Tucker-rank recovery with the cubic-core model.
template <typename Scalar>
TuckerRecoveryResult<Scalar> tuckerMalsRecover(const MaskOperator<Scalar>& mask,
                                               const SolverConfig<Scalar>& cfg) {
  cfg.validate();
  internal::requireRandomInit(cfg, "tuckerMalsRecover");
  const Tensor3<Scalar> x0 = mask.initialGuess();
  const Scalar lambda = cfg.resolveLambda(x0.squaredNorm(), x0.size());
  const Scalar scale = internal::initScale(x0.norm(), cfg.rank, x0.size());

  auto solveOne = [&](int i) {
    auto f = internal::gaussianTucker<Scalar>(cfg.seed, static_cast<std::uint64_t>(i), x0.n1(),
                                              x0.n2(), x0.n3(), cfg.rank, scale);
    auto result = internal::solveTuckerRecovery<Scalar>(mask, x0, std::move(f), lambda, cfg);
    result.trace.candidate = i;
    return result;
  };
  auto results = internal::runCandidates<TuckerRecoveryResult<Scalar>>(cfg.restarts,
                                                                       cfg.threads, solveOne);
  return std::move(results[internal::pickBest(
      results, [](const TuckerRecoveryResult<Scalar>& d) { return d.trace.finalObjective; })]);
}

}  // namespace trid
