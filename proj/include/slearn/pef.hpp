#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "slearn/diagnostics.hpp"
#include "slearn/ensemble.hpp"
#include "slearn/graph.hpp"
#include "slearn/parallel.hpp"
#include "slearn/scoring.hpp"

namespace slearn {

/// Disjoint node sets covering [0, n); each cluster sorted, clusters ordered
/// by smallest member.
struct Partition {
  std::vector<std::vector<Node>> clusters;
};

namespace detail {

inline void normalize(Partition& p) {
  std::erase_if(p.clusters, [](const auto& c) { return c.empty(); });
  for (auto& c : p.clusters) std::sort(c.begin(), c.end());
  std::sort(p.clusters.begin(), p.clusters.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
}

inline double average_distance(const SufficientStats& s, const std::vector<Node>& a, const std::vector<Node>& b) {
  double sum = 0.0;
  for (Node u : a)
    for (Node v : b) sum += 1.0 - std::abs(s.corr(u, v));
  return sum / static_cast<double>(a.size() * b.size());
}

}  // namespace detail

/// Average-linkage agglomerative clustering on 1 - |corr|. Merges that would
/// push a cluster past ceil(max_frac n) nodes are skipped; clustering ends
/// when no allowed merge remains. Clusters below ceil(min_frac n) then join
/// their nearest cluster that has room, or failing that pull the nearest
/// nodes out of clusters that can spare them. Ties go to the lowest index.
inline Partition partition(const SufficientStats& stats, double max_frac, double min_frac) {
  if (!(min_frac > 0.0 && min_frac <= max_frac && max_frac < 1.0)) {
    throw std::invalid_argument("partition needs 0 < min_frac <= max_frac < 1");
  }
  const int n = stats.variables();
  Partition out;
  if (n < 3) {
    out.clusters.emplace_back();
    for (Node i = 0; i < n; ++i) out.clusters.back().push_back(i);
    detail::normalize(out);
    return out;
  }
  const auto cap = static_cast<std::size_t>(std::ceil(max_frac * n));
  const auto floor_size = static_cast<std::size_t>(std::ceil(min_frac * n));

  // Lance-Williams average-linkage updates on a dense distance matrix.
  const auto un = static_cast<std::size_t>(n);
  std::vector<std::vector<Node>> clusters(un);
  std::vector<char> alive(un, 1);
  std::vector<std::vector<double>> dist(un, std::vector<double>(un, 0.0));
  for (std::size_t i = 0; i < un; ++i) {
    clusters[i] = {static_cast<Node>(i)};
    for (std::size_t j = 0; j < un; ++j) {
      if (i != j) dist[i][j] = 1.0 - std::abs(stats.corr(static_cast<Node>(i), static_cast<Node>(j)));
    }
  }
  for (;;) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t ba = un, bb = un;
    for (std::size_t a = 0; a < un; ++a) {
      if (!alive[a]) continue;
      for (std::size_t b = a + 1; b < un; ++b) {
        if (!alive[b] || clusters[a].size() + clusters[b].size() > cap) continue;
        if (dist[a][b] < best) {
          best = dist[a][b];
          ba = a;
          bb = b;
        }
      }
    }
    if (ba == un) break;
    const double wa = static_cast<double>(clusters[ba].size());
    const double wb = static_cast<double>(clusters[bb].size());
    for (std::size_t c = 0; c < un; ++c) {
      if (!alive[c] || c == ba || c == bb) continue;
      dist[ba][c] = dist[c][ba] = (wa * dist[ba][c] + wb * dist[bb][c]) / (wa + wb);
    }
    clusters[ba].insert(clusters[ba].end(), clusters[bb].begin(), clusters[bb].end());
    clusters[bb].clear();
    alive[bb] = 0;
  }
  for (std::size_t i = 0; i < un; ++i) {
    if (alive[i]) out.clusters.push_back(std::move(clusters[i]));
  }
  detail::normalize(out);

  // Repair clusters below the size floor, smallest first.
  for (;;) {
    std::optional<std::size_t> small;
    for (std::size_t i = 0; i < out.clusters.size(); ++i) {
      if (out.clusters[i].size() >= floor_size) continue;
      if (!small || out.clusters[i].size() < out.clusters[*small].size()) small = i;
    }
    if (!small || out.clusters.size() == 1) break;
    auto& s = out.clusters[*small];
    std::optional<std::size_t> target;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < out.clusters.size(); ++j) {
      if (j == *small || out.clusters[j].size() + s.size() > cap) continue;
      const double d = detail::average_distance(stats, s, out.clusters[j]);
      if (d < best) {
        best = d;
        target = j;
      }
    }
    if (target) {
      auto& t = out.clusters[*target];
      t.insert(t.end(), s.begin(), s.end());
      s.clear();
      detail::normalize(out);
      continue;
    }
    // No cluster has room: borrow nodes from clusters above the floor.
    bool moved = false;
    while (s.size() < floor_size) {
      std::optional<std::pair<std::size_t, std::size_t>> pick;
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < out.clusters.size(); ++j) {
        if (j == *small || out.clusters[j].size() <= floor_size) continue;
        for (std::size_t k = 0; k < out.clusters[j].size(); ++k) {
          const double d = detail::average_distance(stats, s, {out.clusters[j][k]});
          if (d < nearest) {
            nearest = d;
            pick = {j, k};
          }
        }
      }
      if (!pick) break;
      auto& donor = out.clusters[pick->first];
      s.push_back(donor[pick->second]);
      donor.erase(donor.begin() + static_cast<std::ptrdiff_t>(pick->second));
      moved = true;
    }
    detail::normalize(out);
    if (!moved) break;
  }
  return out;
}

/// Either one configured learner or an ensemble selected by BIC.
using Solver = std::variant<AlgorithmConfig, Sle>;

struct SolverOutput {
  Cpdag graph;
  /// Ensemble member whose output was kept; empty for a single config.
  std::optional<std::size_t> chosen;
  std::vector<std::optional<double>> member_bic;
};

inline SolverOutput solve(const Solver& solver, const SufficientStats& stats, double selection_lambda = 2.0,
                          int jobs = 1) {
  if (const auto* config = std::get_if<AlgorithmConfig>(&solver)) return {run_config(stats, *config), {}, {}};
  SleSolution s = solve_with_sle(std::get<Sle>(solver), stats, selection_lambda, jobs);
  return {std::move(s.graph), s.chosen, std::move(s.member_bic)};
}

struct ClusterEstimate {
  std::vector<Node> cluster;
  /// CPDAG over local indices 0..|cluster|-1.
  Cpdag graph;
  std::optional<std::size_t> chosen;
  std::vector<std::optional<double>> member_bic;
  std::string error;
};

/// Runs the solver on each cluster's correlation submatrix. A failing cluster
/// contributes an empty subgraph and keeps its error message.
inline std::vector<ClusterEstimate> estimate(const Partition& part, const SufficientStats& stats, const Solver& solver,
                                             double selection_lambda = 2.0, int jobs = 1) {
  std::vector<ClusterEstimate> out(part.clusters.size());
  parallel_for(part.clusters.size(), jobs, [&](std::size_t c) {
    const auto& nodes = part.clusters[c];
    ClusterEstimate& e = out[c];
    e.cluster = nodes;
    try {
      SolverOutput s = solve(solver, stats.restrict(nodes), selection_lambda);
      e.graph = std::move(s.graph);
      e.chosen = s.chosen;
      e.member_bic = std::move(s.member_bic);
    } catch (const std::exception& ex) {
      e.graph = Cpdag(static_cast<int>(nodes.size()));
      e.error = ex.what();
    }
  });
  for (const auto& e : out) {
    if (!e.error.empty()) diagnostic("cluster at node " + std::to_string(e.cluster.front()) + " failed: " + e.error);
  }
  return out;
}

struct FuseResult {
  Cpdag graph;
  /// Total BIC of the working DAG: the initial union, then after each move.
  std::vector<double> trace;
  std::size_t cross_added = 0;
  std::size_t deleted = 0;
};

inline constexpr double kFuseCorrelationThreshold = 0.1;

/// Joins per-cluster estimates into one graph. Each subgraph is extended to a
/// DAG and the union is scored; cross-cluster pairs with |corr| >= 0.1 are
/// tried in order of decreasing |corr|, each added in the direction with the
/// larger positive BIC gain that keeps the graph acyclic. A backward pass
/// then removes any edge whose deletion raises the BIC until none does.
inline FuseResult fuse(const std::vector<ClusterEstimate>& parts, const SufficientStats& stats, double fuse_lambda) {
  const int n = stats.variables();
  std::vector<int> owner(static_cast<std::size_t>(n), -1);
  Dag g(n);
  for (std::size_t c = 0; c < parts.size(); ++c) {
    const auto& nodes = parts[c].cluster;
    for (Node v : nodes) {
      if (v < 0 || v >= n || owner[static_cast<std::size_t>(v)] != -1) {
        throw std::invalid_argument("subgraph clusters do not partition the nodes");
      }
      owner[static_cast<std::size_t>(v)] = static_cast<int>(c);
    }
    const Dag local = extend_or_approximate(parts[c].graph);
    for (const Edge& e : local.edges()) {
      g.add_edge(nodes[static_cast<std::size_t>(e.from)], nodes[static_cast<std::size_t>(e.to)]);
    }
  }
  if (std::find(owner.begin(), owner.end(), -1) != owner.end()) {
    throw std::invalid_argument("subgraph clusters do not cover every node");
  }

  LocalScoreCache score(stats, fuse_lambda);
  FuseResult out;
  double total = 0.0;
  for (Node v = 0; v < n; ++v) total += score(v, g.parents(v));
  out.trace.push_back(total);

  auto gain_of_adding = [&](Node from, Node to) {
    if (would_create_cycle(g, from, to)) return -std::numeric_limits<double>::infinity();
    const auto& pa = g.parents(to);
    std::vector<Node> with = pa;
    with.insert(std::lower_bound(with.begin(), with.end(), from), from);
    return score(to, with) - score(to, pa);
  };

  struct Candidate {
    double strength;
    Node u;
    Node v;
  };
  std::vector<Candidate> candidates;
  for (Node u = 0; u < n; ++u) {
    for (Node v = u + 1; v < n; ++v) {
      if (owner[static_cast<std::size_t>(u)] == owner[static_cast<std::size_t>(v)]) continue;
      const double r = std::abs(stats.corr(u, v));
      if (r >= kFuseCorrelationThreshold) candidates.push_back({r, u, v});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.strength > b.strength; });
  for (const Candidate& c : candidates) {
    if (g.adjacent(c.u, c.v)) continue;
    const double forward = gain_of_adding(c.u, c.v);
    const double backward = gain_of_adding(c.v, c.u);
    const double gain = std::max(forward, backward);
    if (!(gain > 0.0)) continue;
    if (forward >= backward) g.add_edge(c.u, c.v); else g.add_edge(c.v, c.u);
    total += gain;
    out.trace.push_back(total);
    ++out.cross_added;
  }

  for (bool changed = true; changed;) {
    changed = false;
    for (const Edge& e : g.edges()) {
      const auto& pa = g.parents(e.to);
      std::vector<Node> without = pa;
      std::erase(without, e.from);
      const double gain = score(e.to, without) - score(e.to, pa);
      if (gain > 0.0) {
        g.remove_edge(e.from, e.to);
        total += gain;
        out.trace.push_back(total);
        ++out.deleted;
        changed = true;
      }
    }
  }
  out.graph = dag_to_cpdag(g);
  return out;
}

struct PefOptions {
  double max_frac = 0.10;
  double min_frac = 0.05;
  double fuse_lambda = 2.0;
  double selection_lambda = 2.0;
  int jobs = 1;
};

struct PefResult {
  Cpdag graph;
  Partition partition;
  std::vector<ClusterEstimate> estimates;
  FuseResult fusion;
  bool single_cluster = false;
};

/// Partition, estimate and fuse. Below 3 / min_frac variables the problem is
/// solved in one piece and fusion is skipped.
inline PefResult p_sle(const SufficientStats& stats, const Solver& solver, const PefOptions& opt = {}) {
  PefResult out;
  const int n = stats.variables();
  if (static_cast<double>(n) < 3.0 / opt.min_frac) {
    out.single_cluster = true;
    out.partition.clusters.emplace_back();
    for (Node i = 0; i < n; ++i) out.partition.clusters.back().push_back(i);
    SolverOutput s = solve(solver, stats, opt.selection_lambda, opt.jobs);
    out.graph = s.graph;
    out.estimates.push_back({out.partition.clusters.front(), std::move(s.graph), s.chosen, std::move(s.member_bic), {}});
    return out;
  }
  out.partition = partition(stats, opt.max_frac, opt.min_frac);
  out.estimates = estimate(out.partition, stats, solver, opt.selection_lambda, opt.jobs);
  out.fusion = fuse(out.estimates, stats, opt.fuse_lambda);
  out.graph = out.fusion.graph;
  return out;
}

/// Audit log: partition, per-cluster member choice and BICs, fusion trace.
inline nlohmann::json trace_json(const PefResult& r) {
  nlohmann::json clusters = nlohmann::json::array();
  for (const auto& e : r.estimates) {
    nlohmann::json c{{"nodes", e.cluster}, {"edges", e.graph.edge_count()}};
    if (e.chosen) c["chosen_member"] = *e.chosen;
    if (!e.member_bic.empty()) {
      nlohmann::json bics = nlohmann::json::array();
      for (const auto& b : e.member_bic) bics.push_back(b ? nlohmann::json(*b) : nlohmann::json(nullptr));
      c["member_bic"] = bics;
    }
    if (!e.error.empty()) c["error"] = e.error;
    clusters.push_back(std::move(c));
  }
  return {{"single_cluster", r.single_cluster},
          {"clusters", clusters},
          {"fusion",
           {{"trace", r.fusion.trace}, {"cross_added", r.fusion.cross_added}, {"deleted", r.fusion.deleted}}}};
}

}  // namespace slearn
