#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "slearn/datagen.hpp"

using namespace slearn;

namespace {

Dag eight_node_ten_edges() {
  const Edge e[] = {{0, 1}, {0, 2}, {1, 3}, {2, 3}, {3, 4}, {2, 5}, {4, 6}, {5, 6}, {6, 7}, {1, 7}};
  return Dag::from_edges(8, e);
}

double max_offdiag_abs(const Eigen::MatrixXd& c) {
  double out = 0.0;
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    for (Eigen::Index j = 0; j < c.cols(); ++j)
      if (i != j) out = std::max(out, std::abs(c(i, j)));
  return out;
}

}  // namespace

TEST(ReplicateNetwork, SingleNodeBase) {
  const auto rep = replicate_network(Dag(1), 5, 1);
  EXPECT_EQ(rep.graph.size(), 5);
  EXPECT_EQ(rep.graph.edge_count(), 0u);
  EXPECT_EQ(rep.cross_edges, 0u);
}

TEST(ReplicateNetwork, TwoNodeChainRoundsToZeroCrossEdges) {
  const Edge e[] = {{0, 1}};
  const Dag base = Dag::from_edges(2, e);
  const auto rep = replicate_network(base, 2, 9);
  EXPECT_EQ(rep.graph, base);
  EXPECT_EQ(rep.cross_edges, 0u);
}

TEST(ReplicateNetwork, CountsAndCopiesAcrossSeeds) {
  const Dag base = eight_node_ten_edges();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto rep = replicate_network(base, 40, seed);
    ASSERT_EQ(rep.copies, 5);
    EXPECT_EQ(rep.graph.size(), 40);
    EXPECT_EQ(rep.cross_edges, 5u);
    EXPECT_EQ(rep.graph.edge_count(), 55u);
    EXPECT_NO_THROW(topological_sort(rep.graph));
    std::size_t intra = 0;
    for (const Edge& e : rep.graph.edges()) {
      const int ca = e.from / 8, cb = e.to / 8;
      if (ca == cb) {
        ++intra;
        EXPECT_TRUE(base.has_edge(e.from % 8, e.to % 8));
      }
    }
    EXPECT_EQ(intra, 50u);
  }
}

TEST(ReplicateNetwork, Errors) {
  EXPECT_THROW(replicate_network(eight_node_ten_edges(), 7, 0), std::invalid_argument);
  EXPECT_THROW(replicate_network(Dag(0), 3, 0), std::invalid_argument);
  const Edge e[] = {{0, 1}};
  // Two copies of a 2-node chain have at most 4 cross pairs; 20 are requested.
  try {
    replicate_network(Dag::from_edges(2, e), 4, 0, 10.0);
    FAIL() << "expected GenerationError";
  } catch (const GenerationError& err) {
    EXPECT_EQ(err.attempts(), 20000u);
  }
}

TEST(ReplicateNetwork, AsiaHeadlineCounts) {
  // 125 copies x 8 edges = 1000 intra edges, plus 100 cross edges.
  const auto rep = replicate_network(load_base_network("asia8"), 1000, 4);
  EXPECT_EQ(rep.copies, 125);
  EXPECT_EQ(rep.graph.edge_count(), 1100u);
}

TEST(SemWeights, WithinRanges) {
  Rng rng(1);
  const auto rep = replicate_network(load_base_network("alarm37"), 100, 2);
  const SemWeights w = draw_sem_weights(rep.graph, rng);
  ASSERT_EQ(w.weights.size(), rep.graph.edge_count());
  for (double x : w.weights) {
    EXPECT_GE(std::abs(x), 0.5);
    EXPECT_LE(std::abs(x), 1.0);
  }
  for (double s : w.noise_std) {
    EXPECT_GE(s, kNoiseStdFloor);
    EXPECT_LE(s, 1.0);
  }
}

TEST(SampleSem, EmptyGraphColumnsAreUncorrelated) {
  auto [data, w] = sample_sem(Dag(6), 1000, 17);
  EXPECT_LT(max_offdiag_abs(correlation_matrix(data)), 0.1);
}

TEST(SampleSem, NoiselessEdgeCopiesParent) {
  const Edge e[] = {{0, 1}};
  const Dag g = Dag::from_edges(2, e);
  SemWeights w{{{0, 1}}, {1.0}, {1.0, 0.0}};
  Rng rng(8);
  const Dataset d = simulate_sem(g, w, 200, rng);
  EXPECT_TRUE(d.values().col(0) == d.values().col(1));
}

TEST(SampleSem, SingleEdgeCorrelationMatchesClosedForm) {
  const Edge e[] = {{0, 1}};
  const Dag g = Dag::from_edges(2, e);
  SemWeights w{{{0, 1}}, {0.8}, {1.0, 1.0}};
  Rng rng(21);
  const Dataset d = simulate_sem(g, w, 10000, rng);
  // 0.8 / sqrt(0.64 + 1)
  EXPECT_NEAR(correlation_matrix(d)(0, 1), 0.624695047554424, 0.05);
  EXPECT_NEAR(implied_covariance(g, w)(0, 1), 0.8, 1e-12);
  EXPECT_NEAR(implied_covariance(g, w)(1, 1), 1.64, 1e-12);
}

TEST(SampleSem, CovarianceConvergesToImpliedCovariance) {
  Rng rng(77);
  const Dag g = oracle::random_dag(10, 0.3, rng);
  auto frobenius = [&](Eigen::Index m) {
    auto [d, w] = sample_sem(g, m, 5);
    return (covariance_matrix(d) - implied_covariance(g, w)).norm();
  };
  EXPECT_LT(frobenius(10000), frobenius(1000));
  EXPECT_LT(frobenius(10000), 0.1);
}

TEST(Standardize, SimpleColumn) {
  Eigen::MatrixXd x(3, 1);
  x << 1, 2, 3;
  const Dataset s = standardize(Dataset(x));
  EXPECT_NEAR(s.values()(0, 0), -1.0, 1e-12);
  EXPECT_NEAR(s.values()(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(s.values()(2, 0), 1.0, 1e-12);
}

TEST(Standardize, MomentsIdempotenceAndCorrelation) {
  Rng rng(4);
  const Dag g = oracle::random_dag(8, 0.4, rng);
  auto [raw, w] = sample_sem(g, 500, 3);
  const Dataset s = standardize(raw);
  for (Eigen::Index j = 0; j < s.variables(); ++j) {
    EXPECT_NEAR(s.values().col(j).mean(), 0.0, 1e-9);
    EXPECT_NEAR(std::sqrt(s.values().col(j).squaredNorm() / 499.0), 1.0, 1e-9);
  }
  EXPECT_LT((standardize(s).values() - s.values()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((correlation_matrix(s) - correlation_matrix(raw)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Standardize, ZeroVarianceColumnIsNamed) {
  Eigen::MatrixXd x(4, 3);
  x << 1, 5, 2, 2, 5, 3, 3, 5, 1, 4, 5, 0;
  try {
    standardize(Dataset(x));
    FAIL();
  } catch (const DegenerateColumnError& e) {
    EXPECT_EQ(e.column(), 1u);
    EXPECT_NE(std::string(e.what()).find("x1"), std::string::npos);
  }
}

TEST(Problem, DeterministicAndConsistent) {
  const Dag base = load_base_network("asia8");
  const Problem a = generate_problem(base, "asia8", 40, 300, 99);
  const Problem b = generate_problem(base, "asia8", 40, 300, 99);
  EXPECT_EQ(a.truth, b.truth);
  EXPECT_EQ(a.data, b.data);
  EXPECT_EQ(a.truth_cpdag, dag_to_cpdag(a.truth));
  EXPECT_EQ(a.data.variables(), a.truth.size());
  const Problem c = generate_problem(base, "asia8", 40, 300, 100);
  EXPECT_FALSE(a.data == c.data);
}

TEST(Csv, RoundTripIsExact) {
  auto [d, w] = sample_sem(load_base_network("chain5"), 50, 1);
  const std::string text = format_csv(d);
  EXPECT_EQ(text.substr(0, 15), "x0,x1,x2,x3,x4\n");
  EXPECT_EQ(parse_csv(text), d);
  EXPECT_EQ(format_csv(parse_csv(text)), text);
  EXPECT_THROW(parse_csv("x0,x1\n1,2\n3\n"), FormatError);
  EXPECT_THROW(parse_csv("x0\nabc\n"), FormatError);
}

TEST(Bundle, WriteAndReadBack) {
  const auto dir = std::filesystem::temp_directory_path() / "slearn_bundle_test";
  std::filesystem::remove_all(dir);
  const Problem p = generate_problem(load_base_network("collider5"), "collider5", 10, 100, 12);
  write_problem(dir, p);
  const Problem q = read_problem(dir);
  EXPECT_EQ(q.id, p.id);
  EXPECT_EQ(q.seed, p.seed);
  EXPECT_EQ(q.truth, p.truth);
  EXPECT_EQ(q.data, p.data);
  const auto meta = nlohmann::json::parse(read_text_file((dir / "meta.json").string()));
  EXPECT_EQ(meta.at("generator_version"), kGeneratorVersion);
  EXPECT_EQ(meta.at("m"), 100);
  std::filesystem::remove_all(dir);
}

TEST(Rng, SubstreamsAreReproducibleAndDistinct) {
  Rng a = Rng::substream(7, "noise");
  Rng b = Rng::substream(7, "noise");
  Rng c = Rng::substream(7, "weights");
  for (int i = 0; i < 10; ++i) {
    const auto x = a();
    EXPECT_EQ(x, b());
    EXPECT_NE(x, c());
  }
  // Counter-based: the first output depends only on the key.
  EXPECT_EQ(Rng(42)(), Rng(42)());
}
