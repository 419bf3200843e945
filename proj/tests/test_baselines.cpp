#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "oracles.hpp"
#include "trid/baselines.hpp"
#include "trid/mals.hpp"

using trid::Index;
using trid::Tensor3d;
using Config = trid::SolverConfig<double>;
using Matrix = Tensor3d::Matrix;
using Vector = Tensor3d::Vector;

TEST_CASE("cpMalsDecompose fits a rank-one tensor essentially exactly") {
  auto eng = oracle::engine(601);
  auto truth = oracle::randomCp(eng, 6, 5, 4, 1);
  auto x = trid::cpTensor(truth);
  Config cfg;
  cfg.rank = 1;
  auto result = trid::cpMalsDecompose(x, cfg);
  CHECK(result.trace.finalRelativeError <= 1e-8);
  CHECK(trid::relativeError(trid::cpTensor(result.factors), x) <= 1e-8);
}

TEST_CASE("cpMalsDecompose recovers an exact rank-3 CP factorization") {
  auto eng = oracle::engine(607);
  auto truth = oracle::randomCp(eng, 8, 9, 10, 3);
  auto x = trid::cpTensor(truth);
  Config cfg;
  cfg.rank = 3;
  auto result = trid::cpMalsDecompose(x, cfg);
  CHECK(result.trace.finalRelativeError <= 1e-4);
  CHECK(result.factors.rank() == 3);
}

TEST_CASE("CP objective decreases monotonically with the guaranteed margin") {
  auto eng = oracle::engine(611);
  for (int trial = 0; trial < 5; ++trial) {
    auto x = oracle::randomTensor(eng, 7, 6, 5);
    Config cfg;
    cfg.rank = 2;
    cfg.restarts = 1;
    cfg.seed = trial;
    cfg.eps = 0.0;
    cfg.maxIter = 60;
    auto result = trid::cpMalsDecompose(x, cfg);
    REQUIRE(result.trace.rows.size() == 61);
    for (std::size_t k = 1; k < result.trace.rows.size(); ++k) {
      const double tol = 1e-10 * (1.0 + result.trace.rows[k - 1].objective);
      CHECK(result.trace.rows[k].objective <= result.trace.rows[k - 1].objective + tol);
      CHECK(result.trace.rows[k].decreaseSlack >= -tol);
    }
  }
}

TEST_CASE("tuckerMalsDecompose recovers an exact rank-2 Tucker factorization") {
  auto eng = oracle::engine(613);
  auto truth = oracle::randomTucker(eng, 6, 7, 8, 2, 2, 2);
  auto x = trid::tuckerApply(truth);
  Config cfg;
  cfg.rank = 2;
  auto result = trid::tuckerMalsDecompose(x, cfg);
  CHECK(result.trace.finalRelativeError <= 1e-4);
  CHECK(result.factors.core.dims() == std::array<Index, 3>{2, 2, 2});
  CHECK(trid::relativeError(trid::tuckerApply(result.factors), x) <= 1e-4);
}

TEST_CASE("Tucker objective decreases monotonically with the guaranteed margin") {
  auto eng = oracle::engine(617);
  for (int trial = 0; trial < 5; ++trial) {
    auto x = oracle::randomTensor(eng, 6, 5, 4);
    Config cfg;
    cfg.rank = 2;
    cfg.restarts = 1;
    cfg.seed = trial;
    cfg.eps = 0.0;
    cfg.maxIter = 60;
    auto result = trid::tuckerMalsDecompose(x, cfg);
    REQUIRE(result.trace.rows.size() == 61);
    for (std::size_t k = 1; k < result.trace.rows.size(); ++k) {
      const double tol = 1e-10 * (1.0 + result.trace.rows[k - 1].objective);
      CHECK(result.trace.rows[k].objective <= result.trace.rows[k - 1].objective + tol);
      CHECK(result.trace.rows[k].decreaseSlack >= -tol);
    }
  }
}

TEST_CASE("tuckerCoreUpdate matches a dense Kronecker normal-equations solve") {
  auto eng = oracle::engine(619);
  const Index n1 = 6, n2 = 5, n3 = 4, r = 3;
  auto f = oracle::randomTucker(eng, n1, n2, n3, r, r, r);
  auto x = oracle::randomTensor(eng, n1, n2, n3);
  const double lambda = 0.03;

  auto fast = trid::tuckerCoreUpdate(x, f, lambda);

  Matrix gu = f.U.transpose() * f.U, gv = f.V.transpose() * f.V, gw = f.W.transpose() * f.W;
  Matrix normal = Eigen::kroneckerProduct(gw, Eigen::kroneckerProduct(gv, gu).eval()).eval();
  normal += lambda * Matrix::Identity(r * r * r, r * r * r);
  auto rhsTensor = trid::modeProduct(
      trid::modeProduct(trid::modeProduct(x, Matrix(f.U.transpose()), 1),
                        Matrix(f.V.transpose()), 2),
      Matrix(f.W.transpose()), 3);
  Vector rhs = rhsTensor.vec() + lambda * f.core.vec();
  Vector direct = normal.ldlt().solve(rhs);
  CHECK((fast.vec() - direct).norm() <= 1e-10 * (1.0 + direct.norm()));
}

TEST_CASE("with identity factors the core update alone reproduces a cubic tensor") {
  auto eng = oracle::engine(623);
  const Index r = 4;
  auto x = oracle::randomTensor(eng, r, r, r);
  trid::TuckerFactors<double> f(Tensor3d(r, r, r), Matrix::Identity(r, r),
                                Matrix::Identity(r, r), Matrix::Identity(r, r));
  auto core = trid::tuckerCoreUpdate(x, f, 1e-12);
  CHECK((core.vec() - x.vec()).norm() <= 1e-10 * (1.0 + x.norm()));
  CHECK_THROWS_AS(trid::tuckerCoreUpdate(x, f, 0.0), std::invalid_argument);
  auto wrong = oracle::randomTensor(eng, r, r, r + 1);
  CHECK_THROWS_AS(trid::tuckerCoreUpdate(wrong, f, 1e-3), std::invalid_argument);
}

TEST_CASE("rank-one CP and triple decompositions coincide") {
  auto eng = oracle::engine(629);
  auto x = oracle::randomTensor(eng, 6, 5, 4);
  Config cfg;
  cfg.rank = 1;
  cfg.restarts = 3;
  cfg.maxIter = 500;
  auto cp = trid::cpMalsDecompose(x, cfg);
  auto triple = trid::malsDecompose(x, cfg);
  CHECK(std::abs(cp.trace.finalRelativeError - triple.trace.finalRelativeError) <= 1e-9);
  CHECK(cp.trace.candidate == triple.trace.candidate);
  // The embedded rank-one triple factors reproduce the CP model tensor.
  auto embedded = trid::cpToTriple(cp.factors);
  CHECK(trid::relativeError(trid::tripleProduct(embedded), trid::cpTensor(cp.factors)) <=
        1e-12);
}

TEST_CASE("rank-one Tucker matches the CP result on a rank-one tensor") {
  auto eng = oracle::engine(631);
  auto truth = oracle::randomCp(eng, 5, 6, 4, 1);
  auto x = trid::cpTensor(truth);
  Config cfg;
  cfg.rank = 1;
  auto cp = trid::cpMalsDecompose(x, cfg);
  auto tucker = trid::tuckerMalsDecompose(x, cfg);
  CHECK(cp.trace.finalRelativeError <= 1e-8);
  CHECK(tucker.trace.finalRelativeError <= 1e-8);
  CHECK(std::abs(cp.trace.finalRelativeError - tucker.trace.finalRelativeError) <= 1e-6);
}

TEST_CASE("baseline recoveries with full observations match their decompositions") {
  auto eng = oracle::engine(641);
  auto truth = oracle::randomCp(eng, 6, 5, 4, 2);
  auto x = trid::cpTensor(truth);
  auto mask = trid::sampleMask(x, 1.0, 0);
  Config cfg;
  cfg.rank = 2;
  cfg.restarts = 3;

  auto cpRec = trid::cpMalsRecover(mask, cfg);
  auto cpDec = trid::cpMalsDecompose(x, cfg);
  CHECK(trid::relativeError(cpRec.X, x) <= 1e-12);
  CHECK(std::abs(cpRec.trace.finalRelativeError - cpDec.trace.finalRelativeError) <= 1e-6);

  auto tuRec = trid::tuckerMalsRecover(mask, cfg);
  auto tuDec = trid::tuckerMalsDecompose(x, cfg);
  CHECK(trid::relativeError(tuRec.X, x) <= 1e-12);
  CHECK(std::abs(tuRec.trace.finalRelativeError - tuDec.trace.finalRelativeError) <= 1e-6);
}

TEST_CASE("baseline recovery iterates stay feasible and decrease monotonically") {
  auto eng = oracle::engine(643);
  auto truth = oracle::randomTriple(eng, 8, 7, 6, 2);
  auto x = trid::tripleProduct(truth);
  auto mask = trid::sampleMask(x, 0.5, 3);
  const double tol = 1e-10 * (1.0 + mask.data().norm());
  Config cfg;
  cfg.rank = 2;
  cfg.restarts = 2;
  cfg.maxIter = 150;

  auto cp = trid::cpMalsRecover(mask, cfg);
  auto tucker = trid::tuckerMalsRecover(mask, cfg);
  for (const auto* trace : {&cp.trace, &tucker.trace}) {
    REQUIRE(trace->rows.size() >= 2);
    for (const auto& row : trace->rows) CHECK(row.feasibility <= tol);
    for (std::size_t k = 1; k < trace->rows.size(); ++k) {
      const double slackTol = 1e-10 * (1.0 + trace->rows[k - 1].objective);
      CHECK(trace->rows[k].objective <= trace->rows[k - 1].objective + slackTol);
      CHECK(trace->rows[k].decreaseSlack >= -slackTol);
    }
  }
  CHECK(mask.feasibilityResidual(cp.X.vec()) <= tol);
  CHECK(mask.feasibilityResidual(tucker.X.vec()) <= tol);
}

TEST_CASE("rank-one recovery errors agree across all three methods") {
  auto eng = oracle::engine(647);
  auto x = oracle::randomTensor(eng, 6, 6, 5);
  auto mask = trid::sampleMask(x, 0.6, 11);
  Config cfg;
  cfg.rank = 1;
  cfg.restarts = 3;
  cfg.maxIter = 1000;

  auto triple = trid::malsRecover(mask, cfg);
  auto cp = trid::cpMalsRecover(mask, cfg);
  auto tucker = trid::tuckerMalsRecover(mask, cfg);
  CHECK(std::abs(triple.trace.finalRelativeError - cp.trace.finalRelativeError) <= 1e-6);
  CHECK(std::abs(triple.trace.finalRelativeError - tucker.trace.finalRelativeError) <= 1e-6);
}

TEST_CASE("baseline solvers are deterministic and thread-count independent") {
  auto eng = oracle::engine(653);
  auto x = oracle::randomTensor(eng, 5, 5, 4);
  Config cfg;
  cfg.rank = 2;
  cfg.restarts = 4;
  cfg.maxIter = 80;
  Config parallel = cfg;
  parallel.threads = 4;

  auto cp1 = trid::cpMalsDecompose(x, cfg);
  auto cp2 = trid::cpMalsDecompose(x, parallel);
  CHECK(cp1.factors.A == cp2.factors.A);
  CHECK(cp1.factors.B == cp2.factors.B);
  CHECK(cp1.factors.C == cp2.factors.C);
  CHECK(cp1.trace.finalObjective == cp2.trace.finalObjective);

  auto tu1 = trid::tuckerMalsDecompose(x, cfg);
  auto tu2 = trid::tuckerMalsDecompose(x, parallel);
  CHECK(tu1.factors.U == tu2.factors.U);
  CHECK(tu1.factors.core.vec() == tu2.factors.core.vec());
  CHECK(tu1.trace.finalObjective == tu2.trace.finalObjective);
}

TEST_CASE("baseline solvers accept only random initialization") {
  auto eng = oracle::engine(659);
  auto x = oracle::randomTensor(eng, 4, 4, 4);
  auto mask = trid::sampleMask(x, 0.5, 1);
  Config cfg;
  cfg.rank = 2;
  cfg.init = trid::InitKind::Constructive;
  CHECK_THROWS_AS(trid::cpMalsDecompose(x, cfg), std::invalid_argument);
  CHECK_THROWS_AS(trid::tuckerMalsDecompose(x, cfg), std::invalid_argument);
  CHECK_THROWS_AS(trid::cpMalsRecover(mask, cfg), std::invalid_argument);
  CHECK_THROWS_AS(trid::tuckerMalsRecover(mask, cfg), std::invalid_argument);
}
