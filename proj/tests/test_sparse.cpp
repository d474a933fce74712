#include <gtest/gtest.h>

#include <random>

#include "bunca/error.hpp"
#include "bunca/sparse.hpp"
#include "oracles.hpp"

using namespace bunca;

namespace {

SparseBinaryMatrix small() {
  // 3 x 4: r0 {1,3}, r1 {}, r2 {0,1,3}
  return SparseBinaryMatrix::from_pairs(3, 4, {{2, 3}, {0, 3}, {2, 0}, {0, 1}, {2, 1}, {0, 1}});
}

}  // namespace

TEST(SparseBinary, FromPairsSortsAndDedups) {
  const auto m = small();
  EXPECT_EQ(m.nnz(), 5);
  EXPECT_EQ(std::vector<Index>(m.row(0).begin(), m.row(0).end()), (std::vector<Index>{1, 3}));
  EXPECT_EQ(m.row_size(1), 0);
  EXPECT_TRUE(m.contains(2, 0));
  EXPECT_FALSE(m.contains(1, 0));
  EXPECT_EQ(m.entry_rows(), (std::vector<Index>{0, 0, 2, 2, 2}));
}

TEST(SparseBinary, FromPairsRejectsOutOfRange) {
  EXPECT_THROW(SparseBinaryMatrix::from_pairs(2, 2, {{0, 2}}), DimensionError);
  EXPECT_THROW(SparseBinaryMatrix::from_pairs(2, 2, {{-1, 0}}), DimensionError);
  EXPECT_THROW(SparseBinaryMatrix::from_pairs(-1, 2, {}), DimensionError);
}

TEST(SparseBinary, FromCsrValidates) {
  EXPECT_NO_THROW(SparseBinaryMatrix::from_csr(2, 3, {0, 1, 3}, {2, 0, 1}));
  EXPECT_THROW(SparseBinaryMatrix::from_csr(2, 3, {0, 1}, {2}), DimensionError);
  EXPECT_THROW(SparseBinaryMatrix::from_csr(2, 3, {0, 2, 1}, {0, 1}), DimensionError);
  EXPECT_THROW(SparseBinaryMatrix::from_csr(1, 3, {0, 2}, {1, 1}), DimensionError);
  EXPECT_THROW(SparseBinaryMatrix::from_csr(1, 3, {0, 1}, {3}), DimensionError);
}

TEST(SparseBinary, EmptyMatrix) {
  const SparseBinaryMatrix m(0, 0);
  EXPECT_EQ(m.nnz(), 0);
  const auto t = transpose(SparseBinaryMatrix(3, 0));
  EXPECT_EQ(t.rows(), 0);
  EXPECT_EQ(t.cols(), 3);
}

TEST(SparseBinary, TransposeMatchesDense) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = oracle::random_binary(7, 5, 0.3, gen);
    EXPECT_EQ(oracle::dense(transpose(m)), Matrix(oracle::dense(m).transpose()));
    EXPECT_EQ(transpose(transpose(m)), m);
  }
}

TEST(Cooccurrence, CountsMatchDenseProducts) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = oracle::random_binary(6, 8, 0.35, gen);
    const Matrix d = oracle::dense(m);
    const Matrix rows = d * d.transpose();
    const Matrix cols = d.transpose() * d;
    const auto cr = cooccurrence(m, CooccurrenceSide::kRows);
    const auto cc = cooccurrence(m, CooccurrenceSide::kCols);
    for (Index i = 0; i < 6; ++i)
      for (Index j = 0; j < 6; ++j) EXPECT_EQ(cr.count(i, j), static_cast<std::int64_t>(rows(i, j)));
    for (Index i = 0; i < 8; ++i)
      for (Index j = 0; j < 8; ++j) EXPECT_EQ(cc.count(i, j), static_cast<std::int64_t>(cols(i, j)));
  }
}

TEST(Cooccurrence, BinarizeDropsDiagonalAndAppliesThreshold) {
  // users 0,1 share bundles 0 and 1; user 2 shares only bundle 1 with them
  const auto x = SparseBinaryMatrix::from_pairs(3, 2, {{0, 0}, {0, 1}, {1, 0}, {1, 1}, {2, 1}});
  const auto c = cooccurrence(x, CooccurrenceSide::kRows);
  EXPECT_EQ(c.count(0, 1), 2);
  EXPECT_EQ(c.count(0, 0), 2);
  const auto b1 = binarize(c);
  EXPECT_FALSE(b1.contains(0, 0));
  EXPECT_TRUE(b1.contains(0, 2));
  const auto b2 = binarize(c, 2);
  EXPECT_TRUE(b2.contains(0, 1));
  EXPECT_FALSE(b2.contains(0, 2));
  EXPECT_THROW(binarize(c, 0), DimensionError);
  EXPECT_EQ(oracle::dense(b2), oracle::cooccur(oracle::dense(x), true, 2));
}

TEST(CountMatrix, RejectsBadCounts) {
  const auto p = SparseBinaryMatrix::from_pairs(2, 2, {{0, 1}});
  EXPECT_THROW(CountMatrix(p, {}), DimensionError);
  EXPECT_THROW(CountMatrix(p, {0}), DimensionError);
  EXPECT_EQ(CountMatrix(p, {4}).count(1, 1), 0);
}

TEST(WeightedCsr, MultiplyMatchesDense) {
  std::mt19937_64 gen(9);
  const auto pattern = oracle::random_binary(5, 6, 0.4, gen);
  std::vector<double> w(static_cast<std::size_t>(pattern.nnz()));
  for (auto& v : w) v = std::uniform_real_distribution<double>(-1, 1)(gen);
  const WeightedCsr op(pattern, w);
  const Matrix x = oracle::random_matrix(6, 3, gen);
  const Matrix y = oracle::random_matrix(5, 3, gen);
  EXPECT_LT((op.multiply(x) - op.to_dense() * x).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((op.multiply_transposed(y) - op.to_dense().transpose() * y).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(op.multiply(y), DimensionError);
  EXPECT_THROW(op.multiply_transposed(x), DimensionError);
  EXPECT_THROW(WeightedCsr(pattern, {1.0}), DimensionError);
}

TEST(NormalizedAdjacency, WeightsAreInverseSqrtDegrees) {
  // path 0-1-2 plus isolated 3
  const auto n = SparseBinaryMatrix::from_pairs(4, 4, {{0, 1}, {1, 0}, {1, 2}, {2, 1}});
  const NormalizedAdjacency a(n);
  EXPECT_DOUBLE_EQ(a.matrix().weight(0, 1), 1.0 / std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(a.matrix().weight(1, 2), 1.0 / std::sqrt(2.0));
  EXPECT_EQ(a.degree(3), 0);
  EXPECT_TRUE(a.symmetric());
  EXPECT_EQ(a.matrix().to_dense(), oracle::normalized(oracle::dense(n)));
}

TEST(NormalizedAdjacency, RejectsDirectedOrNonSquare) {
  EXPECT_THROW(NormalizedAdjacency(SparseBinaryMatrix::from_pairs(2, 2, {{0, 1}})), DimensionError);
  EXPECT_THROW(NormalizedAdjacency(SparseBinaryMatrix(2, 3)), DimensionError);
}

TEST(Bipartite, MatchesDenseBlocks) {
  std::mt19937_64 gen(11);
  const auto m = oracle::random_binary(4, 6, 0.4, gen);
  const auto a = build_bipartite_adjacency(m);
  EXPECT_EQ(a.num_nodes(), 10);
  EXPECT_LT((a.matrix().to_dense() - oracle::normalized(oracle::bipartite(oracle::dense(m)))).cwiseAbs().maxCoeff(),
            1e-15);
}

TEST(Unified, MatchesDenseConstruction) {
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = oracle::random_binary(6, 5, 0.3, gen);
    const auto g = build_unified_graph(x, binarize(cooccurrence(x, CooccurrenceSide::kRows)),
                                       binarize(cooccurrence(x, CooccurrenceSide::kCols)));
    EXPECT_EQ(g.num_users, 6);
    EXPECT_EQ(g.num_bundles, 5);
    const Matrix expected = oracle::normalized(oracle::unified(oracle::dense(x)));
    EXPECT_LT((g.adjacency.matrix().to_dense() - expected).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Unified, RejectsBadLinks) {
  const auto x = SparseBinaryMatrix::from_pairs(2, 2, {{0, 0}, {1, 0}});
  const SparseBinaryMatrix uu(2, 2), bb(2, 2);
  EXPECT_NO_THROW(build_unified_graph(x, uu, bb));
  EXPECT_THROW(build_unified_graph(x, SparseBinaryMatrix::from_pairs(2, 2, {{0, 0}}), bb), DimensionError);
  EXPECT_THROW(build_unified_graph(x, SparseBinaryMatrix::from_pairs(2, 2, {{0, 1}}), bb), DimensionError);
  EXPECT_THROW(build_unified_graph(x, SparseBinaryMatrix(3, 3), bb), DimensionError);
}

TEST(RowMean, AveragesStoredColumnsAndZeroesEmptyRows) {
  const auto m = small();
  const auto op = row_mean_operator(m);
  std::mt19937_64 gen(1);
  const Matrix x = oracle::random_matrix(4, 3, gen);
  EXPECT_LT((op.multiply(x) - oracle::row_mean(oracle::dense(m), x)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_TRUE(op.multiply(x).row(1).isZero(0.0));
}

TEST(SpmvBlock, MatchesDenseProduct) {
  std::mt19937_64 gen(17);
  const auto m = oracle::random_binary(5, 5, 0.4, gen);
  const auto a = build_bipartite_adjacency(m);
  const Matrix x = oracle::random_matrix(10, 4, gen);
  EXPECT_LT((spmv_block(a, x) - a.matrix().to_dense() * x).cwiseAbs().maxCoeff(), 1e-13);
}
