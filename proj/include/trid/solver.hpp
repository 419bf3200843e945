#pragma once

#include <Eigen/Cholesky>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "trid/factors.hpp"
#include "trid/tensor.hpp"

namespace trid {

/// Numeric failure (singular system, non-finite iterates).  Distinct from
/// std::invalid_argument so callers can separate bad input from a
/// computation that broke down.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class InitKind { RandomGaussian, Provided, Constructive };
enum class Termination { Converged, MaxIterations };

inline const char* toString(Termination t) {
  return t == Termination::Converged ? "converged" : "max_iterations";
}

/// Shared knobs of the alternating proximal solvers.
template <typename Scalar>
struct SolverConfig {
  Index rank = 1;
  /// Extrapolation weight applied to every block update, in [1, 2).
  Scalar gamma = Scalar(1.5);
  /// Proximal weight; empty selects 1e-3 times the mean squared entry of the
  /// reference tensor (1e-3 when the reference is zero).
  std::optional<Scalar> lambda{};
  /// Stop once the largest per-block relative change drops to eps.
  Scalar eps = Scalar(1e-8);
  int maxIter = 2000;
  std::uint64_t seed = 0;
  /// Independent random initializations; the lowest final objective wins.
  int restarts = 5;
  InitKind init = InitKind::RandomGaussian;
  /// Worker threads for the independent restarts.  Has no effect on the
  /// results: every restart derives its generator from (seed, restart index).
  int threads = 1;

  void validate() const {
    if (rank < 1) throw std::invalid_argument("SolverConfig: rank must be >= 1");
    if (!(gamma >= Scalar(1) && gamma < Scalar(2)))
      throw std::invalid_argument("SolverConfig: gamma must lie in [1, 2)");
    if (lambda && !(*lambda > Scalar(0)))
      throw std::invalid_argument("SolverConfig: lambda must be positive");
    if (!(eps >= Scalar(0))) throw std::invalid_argument("SolverConfig: eps must be >= 0");
    if (maxIter < 1) throw std::invalid_argument("SolverConfig: max_iter must be >= 1");
    if (restarts < 1) throw std::invalid_argument("SolverConfig: restarts must be >= 1");
    if (threads < 1) throw std::invalid_argument("SolverConfig: threads must be >= 1");
  }

  Scalar resolveLambda(Scalar referenceSquaredNorm, Index count) const {
    if (lambda) return *lambda;
    if (referenceSquaredNorm > Scalar(0))
      return Scalar(1e-3) * referenceSquaredNorm / Scalar(count);
    return Scalar(1e-3);
  }
};

template <typename Scalar>
struct TraceRow {
  int iter = 0;
  /// Objective after the full block sweep of this iteration.
  Scalar objective = 0;
  /// Relative change of each block; the X column stays zero for plain
  /// decompositions and the core column is used by Tucker solves only.
  Scalar relChangeX = 0;
  Scalar relChangeA = 0;
  Scalar relChangeB = 0;
  Scalar relChangeC = 0;
  Scalar relChangeCore = 0;
  /// (f_prev - f) - (2 lambda / gamma) * sum of squared block changes;
  /// nonnegative up to rounding for every exact proximal update.
  Scalar decreaseSlack = 0;
  /// ||P vec(X) - d|| for recovery runs, zero otherwise.
  Scalar feasibility = 0;
  double seconds = 0;
};

template <typename Scalar>
struct SolveTrace {
  std::vector<TraceRow<Scalar>> rows;
  int iterations = 0;
  Termination termination = Termination::MaxIterations;
  /// Resolved proximal weight actually used.
  Scalar lambda = 0;
  Scalar finalObjective = 0;
  /// ||X - model|| / ||X|| against the solve's reference tensor, 0 when the
  /// reference is zero.
  Scalar finalRelativeError = 0;
  /// Norm of the (projected) gradient at the final iterate.
  Scalar finalGradientNorm = 0;
  /// Which initialization produced this solve.
  int candidate = 0;
  double seconds = 0;
  std::vector<std::string> warnings;
};

namespace internal {

using Clock = std::chrono::steady_clock;

inline double elapsedSeconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Deterministic engine for a (seed, stream) pair; used so that restarts can
/// run in any order or thread and still draw identical values.
inline std::mt19937_64 seededEngine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

template <typename Scalar>
Tensor3<Scalar> gaussianTensor(std::mt19937_64& eng, Index n1, Index n2, Index n3,
                               Scalar scale) {
  std::normal_distribution<Scalar> dist;
  Tensor3<Scalar> x(n1, n2, n3);
  for (Index k = 0; k < x.size(); ++k) x.vec()[k] = scale * dist(eng);
  return x;
}

template <typename Scalar>
typename Tensor3<Scalar>::Matrix gaussianMatrix(std::mt19937_64& eng, Index rows, Index cols,
                                                Scalar scale) {
  std::normal_distribution<Scalar> dist;
  typename Tensor3<Scalar>::Matrix m(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) m(r, c) = scale * dist(eng);
  return m;
}

/// Entry scale for random factor initializations: cbrt(||X|| / (r sqrt(N)))
/// keeps the initial reconstruction on the order of the data; a zero
/// reference yields the zero initialization.
template <typename Scalar>
Scalar initScale(Scalar referenceNorm, Index rank, Index count) {
  return std::cbrt(referenceNorm / (Scalar(rank) * std::sqrt(Scalar(count))));
}

template <typename Scalar>
TripleFactors<Scalar> gaussianTriple(std::uint64_t seed, std::uint64_t stream, Index n1,
                                     Index n2, Index n3, Index r, Scalar scale) {
  auto eng = seededEngine(seed, stream);
  auto a = gaussianTensor<Scalar>(eng, n1, r, r, scale);
  auto b = gaussianTensor<Scalar>(eng, r, n2, r, scale);
  auto c = gaussianTensor<Scalar>(eng, r, r, n3, scale);
  return TripleFactors<Scalar>(std::move(a), std::move(b), std::move(c));
}

/// Exact minimizer of ||Y M - T||_F^2 + lambda ||Y - Y0||_F^2:
/// Y (M M^T + lambda I) = T M^T + lambda Y0, solved per row block with a
/// single Cholesky factorization of the regularized Gram matrix.
template <typename Scalar>
typename Tensor3<Scalar>::Matrix proximalRidge(const typename Tensor3<Scalar>::Matrix& T,
                                               const typename Tensor3<Scalar>::Matrix& M,
                                               const typename Tensor3<Scalar>::Matrix& Y0,
                                               Scalar lambda) {
  using Matrix = typename Tensor3<Scalar>::Matrix;
  Matrix gram = M * M.transpose();
  gram.diagonal().array() += lambda;
  Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success)
    throw NumericError("proximalRidge: Cholesky factorization failed");
  Matrix rhs = (T * M.transpose() + lambda * Y0).transpose();
  return ldlt.solve(rhs).transpose();
}

/// ||next - prev|| / ||next||, falling back to the absolute change when the
/// new block is numerically zero.
template <typename Scalar, typename Derived>
Scalar relativeChange(const Eigen::MatrixBase<Derived>& next,
                      const Eigen::MatrixBase<Derived>& prev) {
  const Scalar diff = (next - prev).norm();
  const Scalar denom = next.norm();
  return denom < Scalar(1e-14) ? diff : diff / denom;
}

/// Runs `count` independent candidate solves, optionally across threads, and
/// returns all results.  Candidates are indexed, and each derives its own
/// randomness from the index, so the schedule cannot change any result.
template <typename Result, typename SolveFn>
std::vector<Result> runCandidates(int count, int threads, SolveFn&& solve) {
  std::vector<Result> results(count);
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) results[i] = solve(i);
    return results;
  }
  const int workers = std::min(threads, count);
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) results[i] = solve(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

/// Index of the lowest score; ties and NaNs resolve to the earliest index.
template <typename Result, typename ScoreFn>
int pickBest(const std::vector<Result>& results, ScoreFn&& score) {
  int best = 0;
  auto bestScore = std::numeric_limits<decltype(score(results[0]))>::infinity();
  for (int i = 0; i < static_cast<int>(results.size()); ++i) {
    const auto s = score(results[i]);
    if (s < bestScore) {
      bestScore = s;
      best = i;
    }
  }
  return best;
}

template <typename Scalar>
void checkFinite(Scalar value, const char* what) {
  if (!std::isfinite(value)) throw NumericError(std::string(what) + " became non-finite");
}

}  // namespace internal
}  // namespace trid
