#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>

#include "oracles.hpp"
#include "trid/recovery.hpp"

using trid::Index;
using trid::MaskOperator;
using trid::Tensor3d;
using Config = trid::SolverConfig<double>;
using Mask = MaskOperator<double>;
using Matrix = Tensor3d::Matrix;
using Vector = Tensor3d::Vector;

namespace {

Vector randomVector(std::mt19937_64& eng, Index n) {
  std::normal_distribution<double> dist;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = dist(eng);
  return v;
}

double objectiveAt(const Tensor3d& x, const trid::TripleFactors<double>& f) {
  auto model = oracle::naiveTripleProduct(f.A, f.B, f.C);
  return (x.vec() - model.vec()).squaredNorm();
}

}  // namespace

TEST_CASE("entry mask gathers, projects, and reports feasibility") {
  auto eng = oracle::engine(401);
  auto x = oracle::randomTensor(eng, 3, 4, 2);
  std::vector<Index> observed = {0, 5, 6, 11, 23};
  Vector d(5);
  for (int k = 0; k < 5; ++k) d[k] = x.vec()[observed[k]];
  auto mask = Mask::entries(3, 4, 2, observed, d);

  CHECK(mask.kind() == Mask::Kind::Entries);
  CHECK(mask.observedCount() == 5);
  CHECK(mask.tensorSize() == 24);
  CHECK(mask.apply(x.vec()) == d);
  CHECK(mask.feasibilityResidual(x.vec()) == 0.0);

  Vector v = randomVector(eng, 24);
  Vector proj = mask.affineProject(v);
  for (int k = 0; k < 5; ++k) CHECK(proj[observed[k]] == d[k]);
  for (Index i = 0; i < 24; ++i) {
    if (std::find(observed.begin(), observed.end(), i) == observed.end())
      CHECK(proj[i] == v[i]);
  }

  Vector null = mask.nullProject(v);
  for (int k = 0; k < 5; ++k) CHECK(null[observed[k]] == 0.0);
  CHECK(mask.feasibilityResidual(proj) == 0.0);

  auto x0 = mask.initialGuess();
  CHECK(mask.feasibilityResidual(x0.vec()) == 0.0);
  CHECK(x0.vec()[1] == d.mean());
}

TEST_CASE("entry mask construction validates its arguments") {
  Vector d1 = Vector::Ones(1), d2 = Vector::Ones(2);
  CHECK_THROWS_AS(Mask::entries(2, 2, 2, {}, Vector()), std::invalid_argument);
  CHECK_THROWS_AS(Mask::entries(2, 2, 2, {0, 1}, d1), std::invalid_argument);
  CHECK_THROWS_AS(Mask::entries(2, 2, 2, {8}, d1), std::invalid_argument);
  CHECK_THROWS_AS(Mask::entries(2, 2, 2, {-1}, d1), std::invalid_argument);
  CHECK_THROWS_AS(Mask::entries(2, 2, 2, {3, 3}, d2), std::invalid_argument);
  CHECK_THROWS_AS(Mask::entries(2, 2, 2, {5, 2}, d2), std::invalid_argument);
  CHECK_THROWS_AS(Mask::entries(0, 2, 2, {0}, d1), std::invalid_argument);
}

TEST_CASE("dense mask projections satisfy the affine and null-space identities") {
  auto eng = oracle::engine(409);
  const Index n = 2 * 3 * 2;
  Matrix p(4, n);
  for (Index i = 0; i < p.rows(); ++i)
    for (Index j = 0; j < p.cols(); ++j) p(i, j) = std::normal_distribution<double>()(eng);
  Vector d = randomVector(eng, 4);
  auto mask = Mask::dense(2, 3, 2, p, d);
  CHECK(mask.kind() == Mask::Kind::Dense);

  Vector v = randomVector(eng, n);
  Vector proj = mask.affineProject(v);
  CHECK((p * proj - d).norm() <= 1e-10 * (1.0 + d.norm()));
  // Nearest point: the correction v - proj lies in the row space of P,
  // so its null-space component vanishes.
  CHECK(mask.nullProject(Vector(v - proj)).norm() <= 1e-10 * (1.0 + v.norm()));
  // Idempotence of both projections.
  CHECK((mask.affineProject(proj) - proj).norm() <= 1e-12 * (1.0 + proj.norm()));
  Vector null = mask.nullProject(v);
  CHECK((p * null).norm() <= 1e-10 * (1.0 + v.norm()));
  CHECK((mask.nullProject(null) - null).norm() <= 1e-12 * (1.0 + null.norm()));

  auto x0 = mask.initialGuess();
  CHECK(mask.feasibilityResidual(x0.vec()) <= 1e-10 * (1.0 + d.norm()));
}

TEST_CASE("dense mask matching an entry selection agrees with the entry kind") {
  auto eng = oracle::engine(419);
  auto x = oracle::randomTensor(eng, 2, 2, 3);
  std::vector<Index> observed = {1, 4, 7, 10};
  Vector d(4);
  for (int k = 0; k < 4; ++k) d[k] = x.vec()[observed[k]];
  Matrix p = Matrix::Zero(4, 12);
  for (int k = 0; k < 4; ++k) p(k, observed[k]) = 1.0;

  auto entryMask = Mask::entries(2, 2, 3, observed, d);
  auto denseMask = Mask::dense(2, 2, 3, p, d);
  Vector v = randomVector(eng, 12);
  CHECK((entryMask.affineProject(v) - denseMask.affineProject(v)).norm() <= 1e-12);
  CHECK((entryMask.nullProject(v) - denseMask.nullProject(v)).norm() <= 1e-12);
  CHECK(entryMask.feasibilityResidual(v) == doctest::Approx(denseMask.feasibilityResidual(v)));
}

TEST_CASE("dense mask rejects a rank-deficient observation matrix") {
  Matrix p(2, 8);
  p.setOnes();
  Vector d = Vector::Zero(2);
  CHECK_THROWS_AS(Mask::dense(2, 2, 2, p, d), trid::NumericError);
  Matrix wide(2, 7);
  CHECK_THROWS_AS(Mask::dense(2, 2, 2, wide, d), std::invalid_argument);
  CHECK_THROWS_AS(Mask::dense(2, 2, 2, Matrix(Matrix::Identity(3, 8)), d),
                  std::invalid_argument);
}

TEST_CASE("sampleMask draws a deterministic sorted sample of the requested size") {
  auto eng = oracle::engine(421);
  auto x = oracle::randomTensor(eng, 4, 5, 3);
  auto mask = trid::sampleMask(x, 0.5, 7);
  CHECK(mask.observedCount() == 30);  // ceil(0.5 * 60)
  const auto& idx = mask.observedIndices();
  for (std::size_t k = 1; k < idx.size(); ++k) CHECK(idx[k] > idx[k - 1]);
  for (std::size_t k = 0; k < idx.size(); ++k) CHECK(mask.data()[k] == x.vec()[idx[k]]);
  CHECK(mask.feasibilityResidual(x.vec()) == 0.0);

  auto again = trid::sampleMask(x, 0.5, 7);
  CHECK(again.observedIndices() == idx);
  auto other = trid::sampleMask(x, 0.5, 8);
  CHECK(other.observedIndices() != idx);

  auto full = trid::sampleMask(x, 1.0, 0);
  CHECK(full.observedCount() == 60);
  CHECK_THROWS_AS(trid::sampleMask(x, 0.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(trid::sampleMask(x, 1.5, 0), std::invalid_argument);
}

TEST_CASE("projectFeasibleUpdate combines the model and iterate, then restores the data") {
  auto eng = oracle::engine(431);
  auto truth = oracle::randomTensor(eng, 3, 3, 2);
  auto mask = trid::sampleMask(truth, 0.4, 3);
  auto xk = Tensor3d::fromVec(3, 3, 2, mask.affineProject(randomVector(eng, 18)));
  auto model = oracle::randomTensor(eng, 3, 3, 2);
  const double lambda = 0.25;

  auto out = trid::projectFeasibleUpdate(xk, model, mask, lambda);
  for (std::size_t k = 0; k < mask.observedIndices().size(); ++k)
    CHECK(out.vec()[mask.observedIndices()[k]] == mask.data()[k]);
  Vector blend = (model.vec() + lambda * xk.vec()) / (1.0 + lambda);
  for (Index i = 0; i < 18; ++i) {
    if (std::find(mask.observedIndices().begin(), mask.observedIndices().end(), i) ==
        mask.observedIndices().end())
      CHECK(out.vec()[i] == doctest::Approx(blend[i]).epsilon(1e-14));
  }

  // A huge proximal weight keeps a feasible iterate essentially in place.
  auto frozen = trid::projectFeasibleUpdate(xk, model, mask, 1e12);
  CHECK((frozen.vec() - xk.vec()).norm() <= 1e-9 * (1.0 + xk.norm()));

  auto bad = oracle::randomTensor(eng, 3, 3, 3);
  CHECK_THROWS_AS(trid::projectFeasibleUpdate(xk, bad, mask, lambda), std::invalid_argument);
  CHECK_THROWS_AS(trid::projectFeasibleUpdate(bad, bad, mask, lambda), std::invalid_argument);
  CHECK_THROWS_AS(trid::projectFeasibleUpdate(xk, model, mask, 0.0), std::invalid_argument);
}

TEST_CASE("projectedGradient vanishes at an exact feasible decomposition") {
  auto eng = oracle::engine(433);
  auto f = oracle::randomTriple(eng, 5, 4, 3, 2);
  auto x = trid::tripleProduct(f);
  auto mask = trid::sampleMask(x, 0.5, 11);
  auto g = trid::projectedGradient(x, f, mask);
  const double scale = 1.0 + x.norm();
  CHECK(g.norms.x <= 1e-12 * scale);
  CHECK(g.norms.a <= 1e-12 * scale);
  CHECK(g.norms.b <= 1e-12 * scale);
  CHECK(g.norms.c <= 1e-12 * scale);
  CHECK(g.norms.total <= 1e-11 * scale);
}

TEST_CASE("projectedGradient matches central finite differences along feasible directions") {
  auto eng = oracle::engine(439);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n1 = 4, n2 = 3, n3 = 3, r = 2;
    auto f = oracle::randomTriple(eng, n1, n2, n3, r);
    auto x = oracle::randomTensor(eng, n1, n2, n3);
    auto mask = trid::sampleMask(oracle::randomTensor(eng, n1, n2, n3), 0.4, 100 + trial);

    auto g = trid::projectedGradient(x, f, mask);

    // Feasible perturbation: free tensor coordinates plus arbitrary factor moves.
    Tensor3d dx = Tensor3d::fromVec(n1, n2, n3, mask.nullProject(randomVector(eng, x.size())));
    auto df = oracle::randomTriple(eng, n1, n2, n3, r);
    const double analytic = g.x.vec().dot(dx.vec()) + g.a.vec().dot(df.A.vec()) +
                            g.b.vec().dot(df.B.vec()) + g.c.vec().dot(df.C.vec());

    const double h = 1e-5;
    auto shifted = [&](double t) {
      Tensor3d xs = x;
      xs.vec() += t * dx.vec();
      trid::TripleFactors<double> fs = f;
      fs.A.vec() += t * df.A.vec();
      fs.B.vec() += t * df.B.vec();
      fs.C.vec() += t * df.C.vec();
      return objectiveAt(xs, fs);
    };
    const double fd = (shifted(h) - shifted(-h)) / (2.0 * h);
    CHECK(std::abs(fd - analytic) <= 1e-5 * (1.0 + std::abs(analytic)));
  }
}

TEST_CASE("recovery with full observations matches a plain decomposition") {
  auto eng = oracle::engine(443);
  auto truth = oracle::randomTriple(eng, 7, 6, 5, 2);
  auto x = trid::tripleProduct(truth);
  auto mask = trid::sampleMask(x, 1.0, 0);

  Config cfg;
  cfg.rank = 2;
  cfg.restarts = 3;
  auto recovered = trid::malsRecover(mask, cfg);
  auto decomposed = trid::malsDecompose(x, cfg);

  CHECK(trid::relativeError(recovered.X, x) <= 1e-12);
  CHECK(std::abs(recovered.trace.finalRelativeError - decomposed.trace.finalRelativeError) <=
        1e-6);
  CHECK(recovered.trace.finalRelativeError <= 1e-6);
}

TEST_CASE("every recovery iterate is feasible") {
  auto eng = oracle::engine(449);
  auto truth = oracle::randomTriple(eng, 10, 8, 6, 2);
  auto x = trid::tripleProduct(truth);
  auto mask = trid::sampleMask(x, 0.4, 5);
  const double tol = 1e-10 * (1.0 + mask.data().norm());

  Config cfg;
  cfg.rank = 2;
  cfg.restarts = 2;
  cfg.maxIter = 300;
  auto result = trid::malsRecover(mask, cfg);
  REQUIRE(result.trace.rows.size() >= 2);
  for (const auto& row : result.trace.rows) CHECK(row.feasibility <= tol);
  CHECK(mask.feasibilityResidual(result.X.vec()) <= tol);
}

TEST_CASE("recovery fills in a synthetic low-rank tensor from partial data") {
  auto eng = oracle::engine(457);
  auto truth = oracle::randomTriple(eng, 8, 7, 6, 2);
  auto x = trid::tripleProduct(truth);
  auto mask = trid::sampleMask(x, 0.5, 9);

  Config cfg;
  cfg.rank = 2;
  cfg.eps = 1e-9;
  auto result = trid::malsRecover(mask, cfg);
  CHECK(trid::relativeError(result.X, x) <= 1e-3);
  CHECK(trid::relativeError(trid::tripleProduct(result.factors, 8, 7, 6), x) <= 1e-3);
}

TEST_CASE("recovery objective decreases monotonically with the guaranteed margin") {
  auto eng = oracle::engine(461);
  for (int trial = 0; trial < 5; ++trial) {
    const Index n1 = 6, n2 = 5, n3 = 4;
    auto x = oracle::randomTensor(eng, n1, n2, n3);
    auto mask = trid::sampleMask(x, 0.6, 200 + trial);
    Config cfg;
    cfg.rank = 2;
    cfg.restarts = 1;
    cfg.seed = trial;
    cfg.eps = 0.0;  // run a fixed number of sweeps
    cfg.maxIter = 80;
    auto result = trid::malsRecover(mask, cfg);
    REQUIRE(result.trace.rows.size() == 81);
    for (std::size_t k = 1; k < result.trace.rows.size(); ++k) {
      const auto& prev = result.trace.rows[k - 1];
      const auto& row = result.trace.rows[k];
      const double tol = 1e-10 * (1.0 + prev.objective);
      CHECK(row.objective <= prev.objective + tol);
      CHECK(row.decreaseSlack >= -tol);
    }
  }
}

TEST_CASE("a stalled recovery has a small projected gradient") {
  auto eng = oracle::engine(463);
  auto truth = oracle::randomTriple(eng, 6, 6, 6, 2);
  auto x = trid::tripleProduct(truth);
  auto mask = trid::sampleMask(x, 0.5, 17);

  Config cfg;
  cfg.rank = 2;
  cfg.restarts = 2;
  cfg.eps = 1e-12;
  cfg.maxIter = 20000;
  auto result = trid::malsRecover(mask, cfg);
  CHECK(result.trace.finalGradientNorm <= 1e-6 * (1.0 + result.X.norm()));
  auto g = trid::projectedGradient(result.X, result.factors, mask);
  CHECK(g.norms.total == doctest::Approx(result.trace.finalGradientNorm));
}

TEST_CASE("recovery from all-zero observations returns zeros") {
  Tensor3d zero(4, 3, 2);
  auto mask = trid::sampleMask(zero, 0.5, 1);
  Config cfg;
  cfg.rank = 2;
  auto result = trid::malsRecover(mask, cfg);
  CHECK(result.X.isZero());
  CHECK(result.factors.A.isZero());
  CHECK(result.trace.finalObjective == 0.0);
  CHECK(result.trace.finalRelativeError == 0.0);
}

TEST_CASE("recovery results are deterministic and thread-count independent") {
  auto eng = oracle::engine(467);
  auto truth = oracle::randomTriple(eng, 6, 5, 4, 2);
  auto x = trid::tripleProduct(truth);
  auto mask = trid::sampleMask(x, 0.5, 23);

  Config cfg;
  cfg.rank = 2;
  cfg.restarts = 4;
  cfg.maxIter = 120;
  auto a = trid::malsRecover(mask, cfg);
  auto b = trid::malsRecover(mask, cfg);
  Config parallel = cfg;
  parallel.threads = 4;
  auto c = trid::malsRecover(mask, parallel);

  CHECK(a.X.vec() == b.X.vec());
  CHECK(a.X.vec() == c.X.vec());
  CHECK(a.factors.A.vec() == c.factors.A.vec());
  CHECK(a.factors.B.vec() == c.factors.B.vec());
  CHECK(a.factors.C.vec() == c.factors.C.vec());
  CHECK(a.trace.finalObjective == c.trace.finalObjective);
  CHECK(a.trace.candidate == c.trace.candidate);
}

TEST_CASE("provided factors warm-start a recovery") {
  auto eng = oracle::engine(479);
  auto truth = oracle::randomTriple(eng, 6, 5, 4, 2);
  auto x = trid::tripleProduct(truth);
  auto mask = trid::sampleMask(x, 0.6, 29);

  Config cfg;
  cfg.rank = 2;
  auto first = trid::malsRecover(mask, cfg);
  // The overload keeps only the factors warm; the tensor block restarts from
  // the feasible mean-filled guess, so compare quality rather than speed.
  auto warmed = trid::malsRecover(mask, cfg, first.factors);
  CHECK(warmed.trace.candidate == 0);
  CHECK(warmed.trace.finalRelativeError <= first.trace.finalRelativeError + 1e-6);
  const double tol = 1e-10 * (1.0 + mask.data().norm());
  for (const auto& row : warmed.trace.rows) CHECK(row.feasibility <= tol);

  auto wrongRank = oracle::randomTriple(eng, 6, 5, 4, 3);
  CHECK_THROWS_AS(trid::malsRecover(mask, cfg, wrongRank), std::invalid_argument);
  auto wrongDims = oracle::randomTriple(eng, 6, 5, 5, 2);
  CHECK_THROWS_AS(trid::malsRecover(mask, cfg, wrongDims), std::invalid_argument);
  Config provided = cfg;
  provided.init = trid::InitKind::Provided;
  CHECK_THROWS_AS(trid::malsRecover(mask, provided), std::invalid_argument);
}

TEST_CASE("constructive initialization over a mask needs rank >= middle dimension") {
  auto eng = oracle::engine(487);
  auto x = oracle::randomTensor(eng, 5, 4, 3);
  auto mask = trid::sampleMask(x, 0.7, 31);
  Config cfg;
  cfg.init = trid::InitKind::Constructive;
  cfg.rank = 2;
  CHECK_THROWS_AS(trid::malsRecover(mask, cfg), std::invalid_argument);

  cfg.rank = 4;
  cfg.maxIter = 150;
  auto result = trid::malsRecover(mask, cfg);
  CHECK(mask.feasibilityResidual(result.X.vec()) <= 1e-10 * (1.0 + mask.data().norm()));
  CHECK(std::isfinite(result.trace.finalObjective));

  // Fully observed, the constructive start is already exact.
  auto full = trid::sampleMask(x, 1.0, 0);
  auto exact = trid::malsRecover(full, cfg);
  CHECK(exact.trace.finalRelativeError <= 1e-8);
}

TEST_CASE("recovery with a dense mask stays feasible and decreases") {
  auto eng = oracle::engine(491);
  auto truth = oracle::randomTriple(eng, 4, 4, 3, 2);
  auto x = trid::tripleProduct(truth);
  Matrix p(20, x.size());
  for (Index i = 0; i < p.rows(); ++i)
    for (Index j = 0; j < p.cols(); ++j) p(i, j) = std::normal_distribution<double>()(eng);
  Vector d = p * x.vec();
  auto mask = Mask::dense(4, 4, 3, p, d);

  Config cfg;
  cfg.rank = 2;
  cfg.restarts = 2;
  cfg.maxIter = 200;
  auto result = trid::malsRecover(mask, cfg);
  const double tol = 1e-10 * (1.0 + d.norm());
  for (const auto& row : result.trace.rows) CHECK(row.feasibility <= tol);
  for (std::size_t k = 1; k < result.trace.rows.size(); ++k) {
    CHECK(result.trace.rows[k].objective <=
          result.trace.rows[k - 1].objective + 1e-10 * (1.0 + result.trace.rows[k - 1].objective));
  }
}

TEST_CASE("rank above the middle dimension is allowed but warned about in recovery") {
  auto eng = oracle::engine(499);
  auto x = oracle::randomTensor(eng, 4, 3, 3);
  auto mask = trid::sampleMask(x, 0.8, 37);
  Config cfg;
  cfg.rank = 4;
  cfg.restarts = 1;
  cfg.maxIter = 40;
  auto result = trid::malsRecover(mask, cfg);
  REQUIRE(result.trace.warnings.size() == 1);
  CHECK(result.trace.warnings[0].find("middle dimension") != std::string::npos);
}
