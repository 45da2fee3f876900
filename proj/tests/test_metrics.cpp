#include <gtest/gtest.h>

#include "oracles.hpp"
#include "slearn/metrics.hpp"

using namespace slearn;

TEST(F1Adjacent, HandCases) {
  Pdag truth(3);
  truth.add_undirected(0, 1);
  truth.add_undirected(1, 2);
  EXPECT_DOUBLE_EQ(f1_adjacent(truth, truth), 1.0);
  EXPECT_DOUBLE_EQ(f1_adjacent(truth, Pdag(3)), 0.0);
  EXPECT_DOUBLE_EQ(f1_adjacent(Pdag(3), Pdag(3)), 1.0);
  Pdag est(3);
  est.add_undirected(0, 1);
  est.add_directed(0, 2);
  EXPECT_DOUBLE_EQ(f1_adjacent(truth, est), 0.5);
}

TEST(F1Arrowhead, HandCases) {
  Pdag t(2);
  t.add_directed(0, 1);
  Pdag u(2);
  u.add_undirected(0, 1);
  EXPECT_DOUBLE_EQ(f1_arrowhead(t, u), 0.0);
  EXPECT_DOUBLE_EQ(f1_arrowhead(t, t), 1.0);

  Pdag chain(3);
  chain.add_undirected(0, 1);
  chain.add_undirected(1, 2);
  Pdag directed(3);
  directed.add_directed(0, 1);
  directed.add_directed(1, 2);
  EXPECT_DOUBLE_EQ(f1_arrowhead(chain, directed), 0.0);
}

TEST(Shd, HandCases) {
  Pdag a(2);
  a.add_directed(0, 1);
  Pdag b(2);
  b.add_directed(1, 0);
  EXPECT_EQ(shd(a, a), 0u);
  EXPECT_EQ(shd(a, b), 1u);

  Pdag chain(3);
  chain.add_undirected(0, 1);
  chain.add_undirected(1, 2);
  Pdag est(3);
  est.add_directed(0, 1);
  est.add_undirected(0, 2);
  EXPECT_EQ(shd(chain, est), 3u);
}

TEST(Metrics, SizeMismatchIsArgumentError) {
  EXPECT_THROW(f1_adjacent(Pdag(2), Pdag(3)), std::invalid_argument);
  EXPECT_THROW(f1_arrowhead(Pdag(2), Pdag(3)), std::invalid_argument);
  EXPECT_THROW(shd(Pdag(2), Pdag(3)), std::invalid_argument);
}

TEST(Metrics, MatchPairwiseOracleAndProperties) {
  Rng rng(404);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(9));
    const Pdag a = oracle::random_pdag(n, rng.uniform(), rng);
    const Pdag b = oracle::random_pdag(n, rng.uniform(), rng);
    const auto ref = oracle::metrics(a, b);
    const Scores s = evaluate(a, b);
    EXPECT_NEAR(s.f1_adjacent, ref.f1_adj, 1e-12);
    EXPECT_NEAR(s.f1_arrowhead, ref.f1_arr, 1e-12);
    EXPECT_EQ(s.shd, ref.shd);
    EXPECT_EQ(shd(a, b), shd(b, a));
    EXPECT_GE(s.f1_adjacent, 0.0);
    EXPECT_LE(s.f1_adjacent, 1.0);
    EXPECT_GE(s.f1_arrowhead, 0.0);
    EXPECT_LE(s.f1_arrowhead, 1.0);
    EXPECT_DOUBLE_EQ(f1_adjacent(a, a), 1.0);
    EXPECT_DOUBLE_EQ(f1_arrowhead(a, a), 1.0);
    EXPECT_EQ(shd(a, a), 0u);
  }
}

TEST(Metrics, IndependentOfWhichExtensionIsScored) {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const Dag truth = oracle::random_dag(6, 0.4, rng);
    const Cpdag est = dag_to_cpdag(oracle::random_dag(6, 0.4, rng));
    const Scores ref = evaluate(dag_to_cpdag(truth), est);
    for (const auto& m : oracle::extensions(oracle::to_matrix(est))) {
      const Scores s = evaluate(dag_to_cpdag(truth), dag_to_cpdag(oracle::to_dag(m)));
      EXPECT_EQ(s.shd, ref.shd);
      EXPECT_DOUBLE_EQ(s.f1_arrowhead, ref.f1_arrowhead);
    }
  }
}
