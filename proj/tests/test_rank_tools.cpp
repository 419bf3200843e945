#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "trid/rank_tools.hpp"

using trid::Index;
using trid::Tensor3d;
using Matrix = Tensor3d::Matrix;

TEST_CASE("tuckerRank reports full rank for the cross-pattern tensor") {
  auto x = oracle::crossPatternTensor();
  CHECK(trid::tuckerRank(x) == std::array<Index, 3>{4, 4, 4});
}

TEST_CASE("tuckerRank of a rank-one tensor is (1, 1, 1)") {
  auto eng = oracle::engine(211);
  auto f = oracle::randomCp(eng, 5, 4, 6, 1);
  CHECK(trid::tuckerRank(trid::cpTensor(f)) == std::array<Index, 3>{1, 1, 1});
}

TEST_CASE("tuckerRank of the zero tensor is (0, 0, 0)") {
  CHECK(trid::tuckerRank(Tensor3d(3, 4, 5)) == std::array<Index, 3>{0, 0, 0});
}

TEST_CASE("tuckerRank detects the core size of random Tucker tensors") {
  auto eng = oracle::engine(223);
  for (int rep = 0; rep < 10; ++rep) {
    auto f = oracle::randomTucker(eng, 6, 7, 5, 2, 3, 2);
    auto x = trid::tuckerApply(f);
    CHECK(trid::tuckerRank(x) == std::array<Index, 3>{2, 3, 2});
  }
}

TEST_CASE("tuckerRank is equivariant under mode permutations") {
  auto eng = oracle::engine(227);
  auto f = oracle::randomTucker(eng, 6, 5, 7, 2, 3, 4);
  auto x = trid::tuckerApply(f);
  const auto base = trid::tuckerRank(x);
  const std::array<std::array<int, 3>, 6> perms = {
      {{0, 1, 2}, {1, 0, 2}, {0, 2, 1}, {2, 1, 0}, {1, 2, 0}, {2, 0, 1}}};
  for (const auto& p : perms) {
    auto ranks = trid::tuckerRank(trid::permuteModes(x, p));
    for (int k = 0; k < 3; ++k) CHECK(ranks[k] == base[p[k]]);
  }
}

TEST_CASE("tol = 0 falls back to the library rank threshold") {
  auto eng = oracle::engine(229);
  auto f = oracle::randomCp(eng, 5, 5, 5, 2);
  auto x = trid::cpTensor(f);
  CHECK(trid::tuckerRank(x, 0.0) == std::array<Index, 3>{2, 2, 2});
}

TEST_CASE("constructiveTriple is exact with rank equal to the middle dimension") {
  auto eng = oracle::engine(233);
  std::uniform_int_distribution<Index> dim(1, 8);
  for (int rep = 0; rep < 100; ++rep) {
    const Index n1 = dim(eng), n2 = dim(eng), n3 = dim(eng);
    auto x = oracle::randomTensor(eng, n1, n2, n3);
    auto f = trid::constructiveTriple(x);
    CHECK(f.rank() == trid::middleDim({n1, n2, n3}));
    CHECK(trid::relativeError(trid::tripleProduct(f), x) <= 1e-12);
  }
}

TEST_CASE("constructiveTriple handles every dimension ordering including ties") {
  const std::array<std::array<Index, 3>, 7> shapes = {{{5, 3, 2},
                                                       {2, 3, 5},
                                                       {3, 5, 2},
                                                       {2, 5, 3},
                                                       {3, 2, 5},
                                                       {4, 4, 5},
                                                       {3, 3, 3}}};
  auto eng = oracle::engine(239);
  for (const auto& s : shapes) {
    auto x = oracle::randomTensor(eng, s[0], s[1], s[2]);
    auto f = trid::constructiveTriple(x);
    CHECK(f.rank() == trid::middleDim(s));
    CHECK(f.A.n1() == s[0]);
    CHECK(f.B.n2() == s[1]);
    CHECK(f.C.n3() == s[2]);
    CHECK(trid::relativeError(trid::tripleProduct(f), x) <= 1e-12);
  }
}

TEST_CASE("constructiveTriple of the zero tensor reconstructs zero") {
  Tensor3d zero(4, 3, 2);
  auto f = trid::constructiveTriple(zero);
  CHECK(trid::tripleProduct(f).isZero());
}

TEST_CASE("mode-swap factor maps track tensor mode swaps") {
  auto eng = oracle::engine(241);
  auto f = oracle::randomTriple(eng, 4, 3, 5, 2);
  auto x = trid::tripleProduct(f);

  auto f12 = trid::internal::swapFactors12(f);
  CHECK((trid::tripleProduct(f12).vec() - trid::permuteModes(x, {1, 0, 2}).vec()).norm() <=
        1e-12 * x.norm());

  auto f23 = trid::internal::swapFactors23(f);
  CHECK((trid::tripleProduct(f23).vec() - trid::permuteModes(x, {0, 2, 1}).vec()).norm() <=
        1e-12 * x.norm());

  // both maps are involutions
  CHECK((trid::tripleProduct(trid::internal::swapFactors12(f12)).vec() - x.vec()).norm() <=
        1e-12 * x.norm());
  CHECK((trid::tripleProduct(trid::internal::swapFactors23(f23)).vec() - x.vec()).norm() <=
        1e-12 * x.norm());
}

TEST_CASE("cpToTriple reproduces the CP tensor at equal rank") {
  auto eng = oracle::engine(251);
  std::uniform_int_distribution<Index> dim(1, 6), rank(1, 4);
  for (int rep = 0; rep < 100; ++rep) {
    auto f = oracle::randomCp(eng, dim(eng), dim(eng), dim(eng), rank(eng));
    auto g = trid::cpToTriple(f);
    CHECK(g.rank() == f.rank());
    auto viaCp = trid::cpTensor(f);
    auto viaTriple = trid::tripleProduct(g);
    CHECK((viaTriple.vec() - viaCp.vec()).norm() <= 1e-12 * (1.0 + viaCp.norm()));
  }
}

TEST_CASE("cpToTriple of a rank-one CP model is the rank-one triple model") {
  auto eng = oracle::engine(257);
  auto f = oracle::randomCp(eng, 3, 4, 5, 1);
  auto g = trid::cpToTriple(f);
  CHECK(g.A(1, 0, 0) == f.A(1, 0));
  CHECK(g.B(0, 2, 0) == f.B(2, 0));
  CHECK(g.C(0, 0, 3) == f.C(3, 0));
}

TEST_CASE("padFactors preserves the reconstruction") {
  auto eng = oracle::engine(263);
  auto f = oracle::randomTriple(eng, 4, 5, 3, 2);
  auto x = trid::tripleProduct(f);
  for (Index r : {3, 4, 6}) {
    auto g = trid::padFactors(f, r);
    CHECK(g.rank() == r);
    CHECK((trid::tripleProduct(g).vec() - x.vec()).norm() <= 1e-13 * (1.0 + x.norm()));
  }
  CHECK_THROWS_AS(trid::padFactors(f, 1), std::invalid_argument);
}

TEST_CASE("tuckerCompressedTriple is exact on exactly compressible tensors") {
  auto eng = oracle::engine(269);

  // Tucker data: rank = middle of the core sizes
  for (int rep = 0; rep < 10; ++rep) {
    auto f = oracle::randomTucker(eng, 7, 6, 5, 3, 3, 3);
    auto x = trid::tuckerApply(f);
    auto g = trid::tuckerCompressedTriple(x);
    CHECK(g.rank() == 3);
    CHECK(trid::relativeError(trid::tripleProduct(g), x) <= 1e-10);
  }

  // CP data: rank = CP rank (generic factors)
  for (int rep = 0; rep < 10; ++rep) {
    auto f = oracle::randomCp(eng, 6, 7, 5, 2);
    auto x = trid::cpTensor(f);
    auto g = trid::tuckerCompressedTriple(x);
    CHECK(g.rank() == 2);
    CHECK(trid::relativeError(trid::tripleProduct(g), x) <= 1e-10);
  }

  // dense data: degrades to the mid-dimension construction
  auto x = oracle::randomTensor(eng, 4, 5, 3);
  auto g = trid::tuckerCompressedTriple(x);
  CHECK(g.rank() == 4);
  CHECK(trid::relativeError(trid::tripleProduct(g), x) <= 1e-10);
}

TEST_CASE("middleDim sorts the three dimensions") {
  CHECK(trid::middleDim({5, 3, 2}) == 3);
  CHECK(trid::middleDim({2, 3, 5}) == 3);
  CHECK(trid::middleDim({7, 7, 1}) == 7);
  CHECK(trid::middleDim({1, 1, 9}) == 1);
}
