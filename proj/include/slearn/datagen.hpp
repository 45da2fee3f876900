#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "slearn/dataset.hpp"
#include "slearn/errors.hpp"
#include "slearn/graph.hpp"
#include "slearn/graph_io.hpp"
#include "slearn/rng.hpp"

#ifndef SLEARN_DEFAULT_FIXTURE_DIR
#define SLEARN_DEFAULT_FIXTURE_DIR "fixtures"
#endif

namespace slearn {

inline constexpr const char* kGeneratorVersion = "slearn-datagen/1";

/// Fixture directory: $SLEARN_FIXTURES if set, else the build-time default.
inline std::filesystem::path fixture_dir() {
  if (const char* env = std::getenv("SLEARN_FIXTURES"); env != nullptr && *env != '\0') return env;
  return SLEARN_DEFAULT_FIXTURE_DIR;
}

/// Loads `<fixture_dir>/<name>.graph`. Ships: chain5, asia8, alarm37, collider5.
inline Dag load_base_network(const std::string& name) {
  auto path = fixture_dir() / (name + ".graph");
  if (!std::filesystem::exists(path)) throw std::invalid_argument("unknown base network '" + name + "' (" + path.string() + ")");
  return parse_dag(read_text_file(path.string()));
}

struct Replication {
  Dag graph;
  int copies = 0;
  std::size_t cross_edges = 0;
};

/// ceil(target_n / base.n) disjoint copies of `base` (copy c occupies nodes
/// [c * base.n, (c + 1) * base.n)), plus round(cross_fraction * intra edges)
/// random edges between distinct copies that keep the graph acyclic.
///
/// Cross edges are drawn as (copy_a, copy_b, u, v) and rejected when the
/// copies coincide, the pair is already adjacent, or the edge closes a cycle.
/// Gives up after 1000 * R draws.
inline Replication replicate_network(const Dag& base, int target_n, std::uint64_t seed,
                                     double cross_fraction = 0.10) {
  const int bn = base.size();
  if (bn < 1) throw std::invalid_argument("base network must have at least one node");
  if (target_n < bn) {
    throw std::invalid_argument("target_n (" + std::to_string(target_n) + ") is smaller than the base network (" +
                                std::to_string(bn) + ")");
  }
  const int copies = (target_n + bn - 1) / bn;
  Replication out{Dag(copies * bn), copies, 0};
  for (int c = 0; c < copies; ++c) {
    for (const Edge& e : base.edges()) out.graph.add_edge(c * bn + e.from, c * bn + e.to);
  }

  const auto intra = static_cast<double>(copies) * static_cast<double>(base.edge_count());
  const auto wanted = static_cast<std::size_t>(std::llround(cross_fraction * intra));
  if (wanted == 0) return out;
  const std::size_t max_attempts = 1000 * wanted;
  if (copies < 2) throw GenerationError("cannot place cross edges with a single copy", 0);

  Rng rng = Rng::substream(seed, "replicate");
  std::size_t attempts = 0;
  while (out.cross_edges < wanted) {
    if (attempts >= max_attempts) {
      throw GenerationError("placed " + std::to_string(out.cross_edges) + " of " + std::to_string(wanted) +
                                " cross edges",
                            attempts);
    }
    ++attempts;
    const auto ca = static_cast<int>(rng.below(static_cast<std::uint64_t>(copies)));
    const auto cb = static_cast<int>(rng.below(static_cast<std::uint64_t>(copies)));
    const auto u = static_cast<int>(rng.below(static_cast<std::uint64_t>(bn)));
    const auto v = static_cast<int>(rng.below(static_cast<std::uint64_t>(bn)));
    if (ca == cb) continue;
    const Node from = ca * bn + u;
    const Node to = cb * bn + v;
    if (out.graph.adjacent(from, to) || would_create_cycle(out.graph, from, to)) continue;
    out.graph.add_edge(from, to);
    ++out.cross_edges;
  }
  return out;
}

/// Linear-Gaussian SEM parameters. `weights[k]` belongs to `edges[k]`.
struct SemWeights {
  std::vector<Edge> edges;
  std::vector<double> weights;
  std::vector<double> noise_std;

  double weight(Node u, Node v) const {
    auto it = std::lower_bound(edges.begin(), edges.end(), Edge{u, v});
    if (it == edges.end() || *it != Edge{u, v}) return 0.0;
    return weights[static_cast<std::size_t>(it - edges.begin())];
  }
};

inline constexpr double kNoiseStdFloor = 1e-3;

/// Weights uniform on [-1, -0.5] U [0.5, 1]; noise std uniform on [0, 1],
/// floored at kNoiseStdFloor.
inline SemWeights draw_sem_weights(const Dag& truth, Rng& rng) {
  SemWeights w;
  w.edges = truth.edges();
  w.weights.reserve(w.edges.size());
  for (std::size_t k = 0; k < w.edges.size(); ++k) {
    const double magnitude = rng.uniform(0.5, 1.0);
    w.weights.push_back(rng.coin() ? -magnitude : magnitude);
  }
  w.noise_std.reserve(static_cast<std::size_t>(truth.size()));
  for (Node i = 0; i < truth.size(); ++i) w.noise_std.push_back(std::max(kNoiseStdFloor, rng.uniform()));
  return w;
}

/// Draws m rows of X_i = sum_{j in pa(i)} w_ji X_j + sigma_i * N(0, 1),
/// visiting nodes in topological order within each row.
inline Dataset simulate_sem(const Dag& truth, const SemWeights& w, Eigen::Index m, Rng& rng) {
  const int n = truth.size();
  const auto order = topological_sort(truth);
  // Incoming weights per node, aligned with truth.parents(i).
  std::vector<std::vector<double>> incoming(static_cast<std::size_t>(n));
  for (Node i = 0; i < n; ++i) {
    for (Node p : truth.parents(i)) incoming[static_cast<std::size_t>(i)].push_back(w.weight(p, i));
  }
  Eigen::MatrixXd x(m, n);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Node i : order) {
      const auto si = static_cast<std::size_t>(i);
      double value = w.noise_std[si] * rng.normal();
      const auto& pa = truth.parents(i);
      for (std::size_t k = 0; k < pa.size(); ++k) value += incoming[si][k] * x(r, pa[k]);
      x(r, i) = value;
    }
  }
  return Dataset(std::move(x));
}

/// Weights from substream "sem-weights", noise from "sem-noise".
inline std::pair<Dataset, SemWeights> sample_sem(const Dag& truth, Eigen::Index m, std::uint64_t seed) {
  if (m < 2) throw std::invalid_argument("sample_sem needs m >= 2");
  Rng weight_rng = Rng::substream(seed, "sem-weights");
  SemWeights w = draw_sem_weights(truth, weight_rng);
  Rng noise_rng = Rng::substream(seed, "sem-noise");
  Dataset d = simulate_sem(truth, w, m, noise_rng);
  return {std::move(d), std::move(w)};
}

/// Population covariance (I - B)^-T diag(sigma^2) (I - B)^-1 with B(j, i) = w_ji.
inline Eigen::MatrixXd implied_covariance(const Dag& truth, const SemWeights& w) {
  const int n = truth.size();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < w.edges.size(); ++k) b(w.edges[k].from, w.edges[k].to) = w.weights[k];
  Eigen::MatrixXd inv = (Eigen::MatrixXd::Identity(n, n) - b).inverse();
  Eigen::VectorXd var(n);
  for (int i = 0; i < n; ++i) var(i) = w.noise_std[static_cast<std::size_t>(i)] * w.noise_std[static_cast<std::size_t>(i)];
  return inv.transpose() * var.asDiagonal() * inv;
}

/// A learning instance with known ground truth. `data` is standardized.
struct Problem {
  std::string id;
  std::string base_name;
  std::uint64_t seed = 0;
  int target_n = 0;
  int copies = 0;
  std::size_t cross_edges = 0;
  Dag truth;
  Cpdag truth_cpdag;
  Dataset data;
};

inline std::string problem_id(const std::string& base_name, int n, std::uint64_t seed) {
  return base_name + "_n" + std::to_string(n) + "_s" + std::to_string(seed);
}

/// Replicate, sample and standardize. Bit-identical for identical arguments.
inline Problem generate_problem(const Dag& base, const std::string& base_name, int target_n, Eigen::Index m,
                                std::uint64_t seed) {
  auto rep = replicate_network(base, target_n, seed);
  auto [raw, weights] = sample_sem(rep.graph, m, seed);
  Problem p;
  p.id = problem_id(base_name, rep.graph.size(), seed);
  p.base_name = base_name;
  p.seed = seed;
  p.target_n = target_n;
  p.copies = rep.copies;
  p.cross_edges = rep.cross_edges;
  p.truth_cpdag = dag_to_cpdag(rep.graph);
  p.truth = std::move(rep.graph);
  p.data = standardize(raw);
  return p;
}

// ---------------------------------------------------------------------------
// Problem bundle: <dir>/truth.graph, <dir>/data.csv, <dir>/meta.json

inline nlohmann::json problem_meta(const Problem& p) {
  return {{"id", p.id},
          {"base_name", p.base_name},
          {"seed", p.seed},
          {"m", p.data.samples()},
          {"n", p.truth.size()},
          {"target_n", p.target_n},
          {"copies", p.copies},
          {"cross_edges", p.cross_edges},
          {"generator_version", kGeneratorVersion}};
}

inline void write_problem(const std::filesystem::path& dir, const Problem& p) {
  std::filesystem::create_directories(dir);
  write_text_file((dir / "truth.graph").string(), format_graph(p.truth));
  write_csv((dir / "data.csv").string(), p.data);
  write_text_file((dir / "meta.json").string(), problem_meta(p).dump(2) + "\n");
}

inline Problem read_problem(const std::filesystem::path& dir) {
  Problem p;
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_text_file((dir / "meta.json").string()));
    p.id = meta.at("id").get<std::string>();
    p.base_name = meta.at("base_name").get<std::string>();
    p.seed = meta.at("seed").get<std::uint64_t>();
    p.target_n = meta.value("target_n", 0);
    p.copies = meta.value("copies", 0);
    p.cross_edges = meta.value("cross_edges", std::size_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("meta.json: ") + e.what());
  }
  p.truth = parse_dag(read_text_file((dir / "truth.graph").string()));
  p.truth_cpdag = dag_to_cpdag(p.truth);
  p.data = read_csv((dir / "data.csv").string());
  if (p.data.variables() != p.truth.size()) {
    throw FormatError("data.csv has " + std::to_string(p.data.variables()) + " columns but truth has " +
                      std::to_string(p.truth.size()) + " nodes");
  }
  return p;
}

}  // namespace slearn
