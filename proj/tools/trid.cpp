#include <charconv>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trid/baselines.hpp"
#include "trid/io.hpp"
#include "trid/mals.hpp"
#include "trid/rank_tools.hpp"
#include "trid/recovery.hpp"

namespace {

using trid::Index;
using trid::Tensor3d;
using Config = trid::SolverConfig<double>;

/// Hyperparameters shared by the solver subcommands.
struct SolverOpts {
  Index rank = 1;
  std::string method = "triple";
  double gamma = 1.5;
  std::string lambda = "auto";
  double eps = 1e-8;
  int maxIter = 2000;
  int restarts = 5;
  std::uint64_t seed = 0;
  int threads = 1;
};

void addSolverFlags(CLI::App* cmd, SolverOpts& opts, bool withMethod) {
  cmd->add_option("--rank", opts.rank, "Factor rank r")->required();
  if (withMethod)
    cmd->add_option("--method", opts.method, "Model class: triple, cp or tucker")
        ->check(CLI::IsMember({"triple", "cp", "tucker"}));
  cmd->add_option("--gamma", opts.gamma, "Extrapolation weight in [1, 2)");
  cmd->add_option("--lambda", opts.lambda, "Proximal weight, or 'auto' for the scaled default");
  cmd->add_option("--eps", opts.eps, "Relative-change stopping tolerance");
  cmd->add_option("--max-iter", opts.maxIter, "Iteration cap per restart");
  cmd->add_option("--restarts", opts.restarts, "Random restarts; best final objective wins");
  cmd->add_option("--seed", opts.seed, "Base random seed");
  cmd->add_option("--threads", opts.threads, "Worker threads for restarts");
}

Config makeConfig(const SolverOpts& opts) {
  Config cfg;
  cfg.rank = opts.rank;
  cfg.gamma = opts.gamma;
  cfg.eps = opts.eps;
  cfg.maxIter = opts.maxIter;
  cfg.restarts = opts.restarts;
  cfg.seed = opts.seed;
  cfg.threads = opts.threads;
  if (opts.lambda != "auto") {
    double value = 0;
    const char* end = opts.lambda.data() + opts.lambda.size();
    auto [ptr, ec] = std::from_chars(opts.lambda.data(), end, value);
    if (ec != std::errc() || ptr != end)
      throw std::invalid_argument("--lambda expects a positive number or 'auto'");
    cfg.lambda = value;
  }
  cfg.validate();
  return cfg;
}

void printTraceSummary(const std::string& method, Index rank,
                       const trid::SolveTrace<double>& trace) {
  std::cout << "method " << method << '\n';
  std::cout << "rank " << rank << '\n';
  std::cout << "lambda " << trid::internal::formatValue(trace.lambda) << '\n';
  std::cout << "iterations " << trace.iterations << '\n';
  std::cout << "termination " << trid::toString(trace.termination) << '\n';
  std::cout << "final_relative_error " << trid::internal::formatValue(trace.finalRelativeError)
            << '\n';
  for (const auto& warning : trace.warnings) std::cerr << "warning: " << warning << '\n';
}

void saveTensorByExtension(const std::string& path, const Tensor3d& x) {
  const auto ext = std::filesystem::path(path).extension().string();
  if (ext == ".tns3")
    trid::saveTns3(path, x);
  else if (ext == ".csv")
    trid::saveTripletCsv(path, x);
  else
    throw std::invalid_argument("unsupported output tensor extension '" + ext +
                                "' (expected .tns3 or .csv)");
}

/// "lo:hi" (or a single "r") -> inclusive rank list.
std::vector<Index> parseRankRange(const std::string& text) {
  auto parseOne = [&](std::string_view token) {
    Index value = 0;
    const char* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, value);
    if (ec != std::errc() || ptr != end || value < 1)
      throw std::invalid_argument("--ranks expects positive ranks as 'lo:hi'");
    return value;
  };
  const auto colon = text.find(':');
  Index lo, hi;
  if (colon == std::string::npos) {
    lo = hi = parseOne(text);
  } else {
    lo = parseOne(std::string_view(text).substr(0, colon));
    hi = parseOne(std::string_view(text).substr(colon + 1));
  }
  if (hi < lo) throw std::invalid_argument("--ranks range is empty");
  std::vector<Index> ranks;
  for (Index r = lo; r <= hi; ++r) ranks.push_back(r);
  return ranks;
}

int runDecompose(const std::string& input, const SolverOpts& opts,
                 const std::string& outFactors, const std::string& outTrace) {
  const Tensor3d x = trid::loadTensorAuto(input);
  const Config cfg = makeConfig(opts);
  if (opts.method == "triple") {
    auto result = trid::malsDecompose(x, cfg);
    trid::saveTraceCsv(outTrace, result.trace, false);
    trid::saveTripleFactors(outFactors, result.factors, cfg, result.trace);
    printTraceSummary(opts.method, cfg.rank, result.trace);
  } else if (opts.method == "cp") {
    auto result = trid::cpMalsDecompose(x, cfg);
    trid::saveTraceCsv(outTrace, result.trace, false);
    trid::saveCpFactors(outFactors, result.factors, cfg, result.trace);
    printTraceSummary(opts.method, cfg.rank, result.trace);
  } else {
    auto result = trid::tuckerMalsDecompose(x, cfg);
    trid::saveTraceCsv(outTrace, result.trace, false);
    trid::saveTuckerFactors(outFactors, result.factors, cfg, result.trace);
    printTraceSummary(opts.method, cfg.rank, result.trace);
  }
  return 0;
}

int runRecover(const std::string& observed, const std::vector<Index>& dims,
               const SolverOpts& opts, const std::string& outTensor,
               const std::string& outTrace, const std::string& truthPath) {
  const auto mask = trid::loadMaskCsv(observed, dims[0], dims[1], dims[2]);
  const Config cfg = makeConfig(opts);
  Tensor3d recovered;
  trid::SolveTrace<double> trace;
  if (opts.method == "triple") {
    auto result = trid::malsRecover(mask, cfg);
    recovered = std::move(result.X);
    trace = std::move(result.trace);
  } else if (opts.method == "cp") {
    auto result = trid::cpMalsRecover(mask, cfg);
    recovered = std::move(result.X);
    trace = std::move(result.trace);
  } else {
    auto result = trid::tuckerMalsRecover(mask, cfg);
    recovered = std::move(result.X);
    trace = std::move(result.trace);
  }
  saveTensorByExtension(outTensor, recovered);
  trid::saveTraceCsv(outTrace, trace, true);
  printTraceSummary(opts.method, cfg.rank, trace);
  std::cout << "feasibility "
            << trid::internal::formatValue(mask.feasibilityResidual(recovered.vec())) << '\n';
  if (!truthPath.empty()) {
    const Tensor3d truth = trid::loadTensorAuto(truthPath);
    std::cout << "relative_error_vs_truth "
              << trid::internal::formatValue(trid::relativeError(recovered, truth)) << '\n';
  }
  return 0;
}

int runRankSweep(const std::string& input, const std::string& ranksText,
                 const SolverOpts& opts, const std::string& outCurve) {
  if (opts.method != "triple")
    throw std::invalid_argument("rank-sweep supports --method triple only");
  const Tensor3d x = trid::loadTensorAuto(input);
  SolverOpts adjusted = opts;
  adjusted.rank = 1;  // per-point ranks come from --ranks
  const Config cfg = makeConfig(adjusted);
  const auto ranks = parseRankRange(ranksText);
  const auto sweep = trid::rankSweep(x, ranks, cfg);
  trid::saveCurveCsv(outCurve, sweep);
  for (const auto& point : sweep.points)
    std::cout << "r " << point.rank << " relative_error "
              << trid::internal::formatValue(point.relativeError) << '\n';
  return 0;
}

int runTuckerRank(const std::string& input, double tol) {
  const Tensor3d x = trid::loadTensorAuto(input);
  const auto ranks = trid::tuckerRank(x, tol);
  std::cout << ranks[0] << ' ' << ranks[1] << ' ' << ranks[2] << '\n';
  return 0;
}

int runSample(const std::string& input, double fraction, std::uint64_t seed,
              const std::string& out) {
  const Tensor3d x = trid::loadTensorAuto(input);
  const auto mask = trid::sampleMask(x, fraction, seed);
  trid::saveMaskCsv(out, mask);
  std::cout << "observed " << mask.observedCount() << " of " << mask.tensorSize() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dense third-order tensor decomposition and recovery"};
  app.require_subcommand(1);

  SolverOpts decomposeOpts;
  std::string decomposeInput, decomposeFactors, decomposeTrace;
  auto* decompose = app.add_subcommand("decompose", "Factor a tensor at a fixed rank");
  decompose->add_option("--input", decomposeInput, "Tensor file (.tns3 or .pgms list)")
      ->required();
  addSolverFlags(decompose, decomposeOpts, true);
  decompose->add_option("--out-factors", decomposeFactors, "Output factor directory")
      ->required();
  decompose->add_option("--out-trace", decomposeTrace, "Output per-iteration trace CSV")
      ->required();

  SolverOpts recoverOpts;
  std::string recoverObserved, recoverTensor, recoverTrace, recoverTruth;
  std::vector<Index> recoverDims;
  auto* recover = app.add_subcommand("recover", "Fill in a tensor from observed entries");
  recover->add_option("--observed", recoverObserved, "Observed-entry CSV (i,j,t,value)")
      ->required();
  recover->add_option("--dims", recoverDims, "Tensor dimensions N1 N2 N3")
      ->expected(3)
      ->required();
  addSolverFlags(recover, recoverOpts, true);
  recover->add_option("--out-tensor", recoverTensor, "Recovered tensor file (.tns3 or .csv)")
      ->required();
  recover->add_option("--out-trace", recoverTrace, "Output per-iteration trace CSV")
      ->required();
  recover->add_option("--truth", recoverTruth,
                      "Ground-truth tensor; prints the relative error against it");

  SolverOpts sweepOpts;
  std::string sweepInput, sweepRanks, sweepCurve;
  auto* sweep = app.add_subcommand("rank-sweep", "Best relative error over a range of ranks");
  sweep->add_option("--input", sweepInput, "Tensor file (.tns3 or .pgms list)")->required();
  sweep->add_option("--ranks", sweepRanks, "Inclusive rank range lo:hi")->required();
  sweep->add_option("--method", sweepOpts.method, "Model class (triple only)");
  sweep->add_option("--gamma", sweepOpts.gamma, "Extrapolation weight in [1, 2)");
  sweep->add_option("--lambda", sweepOpts.lambda,
                    "Proximal weight, or 'auto' for the scaled default");
  sweep->add_option("--eps", sweepOpts.eps, "Relative-change stopping tolerance");
  sweep->add_option("--max-iter", sweepOpts.maxIter, "Iteration cap per restart");
  sweep->add_option("--restarts", sweepOpts.restarts, "Random restarts per rank");
  sweep->add_option("--seed", sweepOpts.seed, "Base random seed");
  sweep->add_option("--threads", sweepOpts.threads, "Worker threads for candidates");
  sweep->add_option("--out-curve", sweepCurve, "Output curve CSV")->required();

  std::string rankInput;
  double rankTol = 1e-10;
  auto* tuckerRankCmd = app.add_subcommand("tucker-rank", "Numerical Tucker rank by unfolding");
  tuckerRankCmd->add_option("--input", rankInput, "Tensor file (.tns3 or .pgms list)")
      ->required();
  tuckerRankCmd->add_option("--tol", rankTol, "Relative singular-value cutoff");

  std::string sampleInput, sampleOut;
  double sampleFraction = 0.5;
  std::uint64_t sampleSeed = 0;
  auto* sample = app.add_subcommand("sample", "Draw a uniform random entry mask");
  sample->add_option("--input", sampleInput, "Tensor file (.tns3 or .pgms list)")->required();
  sample->add_option("--fraction", sampleFraction, "Fraction of entries to observe");
  sample->add_option("--seed", sampleSeed, "Sampling seed");
  sample->add_option("--out", sampleOut, "Output observed-entry CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*decompose)
      return runDecompose(decomposeInput, decomposeOpts, decomposeFactors, decomposeTrace);
    if (*recover)
      return runRecover(recoverObserved, recoverDims, recoverOpts, recoverTensor, recoverTrace,
                        recoverTruth);
    if (*sweep) return runRankSweep(sweepInput, sweepRanks, sweepOpts, sweepCurve);
    if (*tuckerRankCmd) return runTuckerRank(rankInput, rankTol);
    if (*sample) return runSample(sampleInput, sampleFraction, sampleSeed, sampleOut);
    std::cerr << "error: no subcommand selected\n";
    return 2;
  } catch (const trid::NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const trid::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
