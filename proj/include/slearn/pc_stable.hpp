#pragma once

#include <vector>

#include "slearn/graph.hpp"
#include "slearn/scoring.hpp"

namespace slearn {

struct PcResult {
  Cpdag graph;
  /// Edges that conflicting v-structures tried to orient both ways; left undirected.
  std::vector<Edge> contested;
  int depth_reached = 0;
};

namespace detail {

// Advances `idx` (strictly increasing indices into a pool of size n) to the
// next k-combination in lexicographic order. Returns false after the last.
inline bool next_combination(std::vector<std::size_t>& idx, std::size_t n) {
  const std::size_t k = idx.size();
  for (std::size_t i = k; i-- > 0;) {
    if (idx[i] < n - k + i) {
      ++idx[i];
      for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace detail

/// PC-Stable skeleton search, v-structure orientation and Meek closure.
///
/// At each depth the adjacency sets are frozen before any test runs and all
/// removals are applied after the sweep, so the skeleton does not depend on
/// variable order.
inline PcResult run_pc_stable_detailed(const SufficientStats& stats, double alpha, int max_depth) {
  const int n = stats.variables();
  const auto un = static_cast<std::size_t>(n);
  std::vector<std::vector<char>> adj(un, std::vector<char>(un, 1));
  for (std::size_t i = 0; i < un; ++i) adj[i][i] = 0;
  std::vector<std::vector<Node>> sepset(un * un);
  auto sep = [&](Node i, Node j) -> std::vector<Node>& {
    return sepset[static_cast<std::size_t>(std::min(i, j)) * un + static_cast<std::size_t>(std::max(i, j))];
  };

  PcResult result;
  std::vector<Node> cond;
  for (int depth = 0; depth <= max_depth; ++depth) {
    std::vector<std::vector<Node>> frozen(un);
    for (std::size_t i = 0; i < un; ++i) {
      for (std::size_t j = 0; j < un; ++j) {
        if (adj[i][j]) frozen[i].push_back(static_cast<Node>(j));
      }
    }

    bool testable = false;
    std::vector<Edge> removals;
    for (Node i = 0; i < n; ++i) {
      for (Node j = i + 1; j < n; ++j) {
        if (!adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) continue;
        bool separated = false;
        for (int side = 0; side < 2 && !separated; ++side) {
          const Node x = side == 0 ? i : j;
          const Node y = side == 0 ? j : i;
          std::vector<Node> pool;
          for (Node z : frozen[static_cast<std::size_t>(x)]) {
            if (z != y) pool.push_back(z);
          }
          if (pool.size() < static_cast<std::size_t>(depth)) continue;
          testable = true;
          std::vector<std::size_t> idx(static_cast<std::size_t>(depth));
          for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
          do {
            cond.clear();
            for (std::size_t k : idx) cond.push_back(pool[k]);
            if (fisher_z_test(stats, i, j, cond, alpha).independent) {
              sep(i, j) = cond;
              separated = true;
              break;
            }
          } while (detail::next_combination(idx, pool.size()));
        }
        if (separated) removals.push_back({i, j});
      }
    }
    for (const Edge& e : removals) {
      adj[static_cast<std::size_t>(e.from)][static_cast<std::size_t>(e.to)] = 0;
      adj[static_cast<std::size_t>(e.to)][static_cast<std::size_t>(e.from)] = 0;
    }
    result.depth_reached = depth;
    if (!testable) break;
  }

  // Unshielded triples i - k - j with k outside sepset(i, j) become colliders.
  std::vector<std::vector<char>> arrow(un, std::vector<char>(un, 0));
  for (Node k = 0; k < n; ++k) {
    std::vector<Node> nbrs;
    for (Node z = 0; z < n; ++z) {
      if (adj[static_cast<std::size_t>(k)][static_cast<std::size_t>(z)]) nbrs.push_back(z);
    }
    for (std::size_t a = 0; a < nbrs.size(); ++a) {
      for (std::size_t b = a + 1; b < nbrs.size(); ++b) {
        const Node i = nbrs[a];
        const Node j = nbrs[b];
        if (adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) continue;
        const auto& s = sep(i, j);
        if (std::find(s.begin(), s.end(), k) == s.end()) {
          arrow[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = 1;
          arrow[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] = 1;
        }
      }
    }
  }

  Pdag p(n);
  for (Node a = 0; a < n; ++a) {
    for (Node b = a + 1; b < n; ++b) {
      const auto sa = static_cast<std::size_t>(a);
      const auto sb = static_cast<std::size_t>(b);
      if (!adj[sa][sb]) continue;
      if (arrow[sa][sb] && arrow[sb][sa]) {
        result.contested.push_back({a, b});
        p.add_undirected(a, b);
      } else if (arrow[sa][sb]) {
        p.add_directed(a, b);
      } else if (arrow[sb][sa]) {
        p.add_directed(b, a);
      } else {
        p.add_undirected(a, b);
      }
    }
  }
  result.graph = apply_meek_rules(std::move(p), ConflictPolicy::kLeaveUndirected);
  return result;
}

inline Cpdag run_pc_stable(const SufficientStats& stats, double alpha, int max_depth) {
  return run_pc_stable_detailed(stats, alpha, max_depth).graph;
}

}  // namespace slearn
