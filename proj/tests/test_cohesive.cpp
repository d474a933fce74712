#include <gtest/gtest.h>

#include <random>

#include "bunca/cohesive.hpp"
#include "bunca/error.hpp"
#include "bunca/gradcheck.hpp"
#include "oracles.hpp"

using namespace bunca;

namespace {

UnifiedGraph unified_for(const SparseBinaryMatrix& x) {
  return build_unified_graph(x, binarize(cooccurrence(x, CooccurrenceSide::kRows)),
                             binarize(cooccurrence(x, CooccurrenceSide::kCols)));
}

}  // namespace

TEST(Cohesive, ZeroLayersIsTheInput) {
  const auto x = SparseBinaryMatrix::from_pairs(2, 2, {{0, 0}, {1, 1}});
  const auto g = unified_for(x);
  std::mt19937_64 gen(1);
  const Tensor u(oracle::random_matrix(2, 3, gen)), b(oracle::random_matrix(2, 3, gen));
  const auto layers = propagate_unified(u, b, g, 0);
  ASSERT_EQ(layers.size(), 1u);
  const auto [su, sb] = aggregate_layers(layers, 2);
  EXPECT_EQ(su.value(), u.value());
  EXPECT_EQ(sb.value(), b.value());
}

TEST(Cohesive, MatchesDensePowerSum) {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 25; ++trial) {
    const Index nu = 3 + static_cast<Index>(gen() % 8), nb = 2 + static_cast<Index>(gen() % 8);
    const auto x = oracle::random_binary(nu, nb, 0.3, gen);
    const auto g = unified_for(x);
    const int H = static_cast<int>(gen() % 4);
    const Matrix u0 = oracle::random_matrix(nu, 4, gen), b0 = oracle::random_matrix(nb, 4, gen);
    const auto [su, sb] = aggregate_layers(propagate_unified(Tensor(u0), Tensor(b0), g, H), nu);
    Matrix stacked(nu + nb, 4);
    stacked << u0, b0;
    const Matrix expected =
        oracle::propagate_sum(oracle::normalized(oracle::unified(oracle::dense(x))), stacked, H);
    EXPECT_LT((su.value() - expected.topRows(nu)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((sb.value() - expected.bottomRows(nb)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Cohesive, IsolatedNodesKeepOnlyLayerZero) {
  // user 2 and bundle 2 never interact
  const auto x = SparseBinaryMatrix::from_pairs(3, 3, {{0, 0}, {1, 1}, {0, 1}});
  const auto g = unified_for(x);
  std::mt19937_64 gen(3);
  const Tensor u(oracle::random_matrix(3, 2, gen)), b(oracle::random_matrix(3, 2, gen));
  const auto [su, sb] = aggregate_layers(propagate_unified(u, b, g, 3), 3);
  EXPECT_EQ(Matrix(su.value().row(2)), Matrix(u.value().row(2)));
  EXPECT_EQ(Matrix(sb.value().row(2)), Matrix(b.value().row(2)));
}

TEST(Cohesive, GradientsReachBothEmbeddingTables) {
  std::mt19937_64 gen(4);
  const auto x = oracle::random_binary(4, 3, 0.5, gen);
  const auto g = unified_for(x);
  const Tensor u = Tensor::parameter(oracle::random_matrix(4, 3, gen));
  const Tensor b = Tensor::parameter(oracle::random_matrix(3, 3, gen));
  ParameterSet p;
  p.add("u", u);
  p.add("b", b);
  const auto report = gradcheck(
      [&] {
        const auto [su, sb] = aggregate_layers(propagate_unified(u, b, g, 2), 4);
        return ops::add(ops::squared_norm(su), ops::sum(ops::exp(ops::scale(sb, 0.3))));
      },
      p);
  EXPECT_TRUE(report.passed) << report.max_rel_error;
}

TEST(Cohesive, RejectsBadDepthAndShapes) {
  const auto x = SparseBinaryMatrix::from_pairs(2, 2, {{0, 0}});
  const auto g = unified_for(x);
  const Tensor u(Matrix::Ones(2, 2)), b(Matrix::Ones(2, 2));
  EXPECT_THROW(propagate_unified(u, b, g, -1), ConfigError);
  EXPECT_THROW(propagate_unified(u, b, g, kMaxPropagationLayers + 1), ConfigError);
  EXPECT_THROW(propagate_unified(Tensor(Matrix::Ones(3, 2)), b, g, 1), DimensionError);
  EXPECT_THROW(sum_layers({}), DimensionError);
}
