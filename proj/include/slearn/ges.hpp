#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "slearn/graph.hpp"
#include "slearn/scoring.hpp"

namespace slearn {

struct GesResult {
  Cpdag graph;
  /// total BIC of the current class after each accepted operator.
  std::vector<double> forward_trace;
  std::vector<double> backward_trace;
};

namespace detail {

inline bool all_adjacent(const Pdag& p, Node v, std::span<const Node> set) {
  for (Node s : set) {
    if (!p.adjacent(v, s)) return false;
  }
  return true;
}

inline bool is_clique(const Pdag& p, std::span<const Node> set) {
  for (std::size_t a = 0; a < set.size(); ++a) {
    for (std::size_t b = a + 1; b < set.size(); ++b) {
      if (!p.adjacent(set[a], set[b])) return false;
    }
  }
  return true;
}

// Calls visit(chosen) for every subset of `pool` (in include-later order,
// empty set first) such that base + chosen is a clique and |chosen| <= limit.
// `base` must already be a clique.
inline void for_each_clique_extension(const Pdag& p, std::span<const Node> base, std::span<const Node> pool,
                                      std::size_t limit, const std::function<void(const std::vector<Node>&)>& visit) {
  std::vector<Node> chosen;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    visit(chosen);
    if (chosen.size() >= limit) return;
    for (std::size_t k = start; k < pool.size(); ++k) {
      const Node t = pool[k];
      if (!all_adjacent(p, t, base) || !all_adjacent(p, t, chosen)) continue;
      chosen.push_back(t);
      rec(k + 1);
      chosen.pop_back();
    }
  };
  rec(0);
}

// True iff every semi-directed path from `from` to `to` passes through a
// node of `blocked`.
inline bool semi_directed_paths_blocked(const Pdag& p, Node from, Node to, std::span<const Node> blocked) {
  std::vector<char> seen(static_cast<std::size_t>(p.size()), 0);
  for (Node b : blocked) seen[static_cast<std::size_t>(b)] = 1;
  std::vector<Node> stack{from};
  seen[static_cast<std::size_t>(from)] = 1;
  while (!stack.empty()) {
    const Node u = stack.back();
    stack.pop_back();
    for (const auto* next : {&p.children(u), &p.neighbors(u)}) {
      for (Node v : *next) {
        if (v == to) return false;
        if (!seen[static_cast<std::size_t>(v)]) {
          seen[static_cast<std::size_t>(v)] = 1;
          stack.push_back(v);
        }
      }
    }
  }
  return true;
}

inline std::vector<Node> sorted_union(std::vector<Node> a, std::span<const Node> b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

// Re-completes p and returns the class score of the extension used.
inline double recomplete(Pdag& p, LocalScoreCache& score) {
  const Dag ext = consistent_extension(p);
  double total = 0.0;
  for (Node i = 0; i < ext.size(); ++i) total += score(i, ext.parents(i));
  p = dag_to_cpdag(ext);
  return total;
}

}  // namespace detail

/// Greedy equivalence search with the Gaussian BIC at penalty `lambda`.
///
/// Forward phase applies the best valid Insert(x, y, T) while some gain is
/// positive; backward phase applies the best valid Delete(x, y, H) likewise.
/// After every operator the PDAG is re-completed to its CPDAG. New parent
/// sets never exceed `max_parents`. With `faithfulness`, forward candidates
/// are restricted to pairs whose single-edge gain over the empty graph is
/// positive.
inline GesResult run_ges_traced(const SufficientStats& stats, double lambda, int max_parents, bool faithfulness) {
  const int n = stats.variables();
  const auto un = static_cast<std::size_t>(n);
  LocalScoreCache score(stats, lambda);
  GesResult result;
  Pdag p(n);

  std::vector<std::vector<char>> allowed(un, std::vector<char>(un, 1));
  if (faithfulness) {
    for (Node x = 0; x < n; ++x) {
      for (Node y = 0; y < n; ++y) {
        if (x == y) continue;
        const Node px[] = {x};
        allowed[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)] =
            score(y, px) - score(y, std::span<const Node>{}) > 0.0;
      }
    }
  }

  // Forward.
  for (;;) {
    double best_gain = 0.0;
    Node best_x = -1;
    Node best_y = -1;
    std::vector<Node> best_t;
    for (Node y = 0; y < n; ++y) {
      const auto& pa_y = p.parents(y);
      if (static_cast<int>(pa_y.size()) + 1 > max_parents) continue;
      for (Node x = 0; x < n; ++x) {
        if (x == y || p.adjacent(x, y) || !allowed[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)]) continue;
        std::vector<Node> na;
        std::vector<Node> pool;
        for (Node t : p.neighbors(y)) (p.adjacent(t, x) ? na : pool).push_back(t);
        if (!detail::is_clique(p, na)) continue;
        const int room = max_parents - static_cast<int>(pa_y.size() + na.size()) - 1;
        if (room < 0) continue;
        detail::for_each_clique_extension(p, na, pool, static_cast<std::size_t>(room), [&](const std::vector<Node>& t) {
          const std::vector<Node> cond = detail::sorted_union(detail::sorted_union(pa_y, na), t);
          const std::vector<Node> with_x = detail::sorted_union(cond, std::span<const Node>(&x, 1));
          const double gain = score(y, with_x) - score(y, cond);
          if (!(gain > best_gain)) return;
          const std::vector<Node> blocked = detail::sorted_union(na, t);
          if (!detail::semi_directed_paths_blocked(p, y, x, blocked)) return;
          best_gain = gain;
          best_x = x;
          best_y = y;
          best_t = t;
        });
      }
    }
    if (best_x < 0) break;
    p.add_directed(best_x, best_y);
    for (Node t : best_t) p.orient(t, best_y);
    result.forward_trace.push_back(detail::recomplete(p, score));
  }

  // Backward.
  for (;;) {
    double best_gain = 0.0;
    Node best_x = -1;
    Node best_y = -1;
    std::vector<Node> best_h;
    for (Node y = 0; y < n; ++y) {
      std::vector<Node> candidates = p.parents(y);
      candidates.insert(candidates.end(), p.neighbors(y).begin(), p.neighbors(y).end());
      std::vector<Node> pa_y = p.parents(y);
      for (Node x : candidates) {
        std::vector<Node> na;
        for (Node t : p.neighbors(y)) {
          if (t != x && p.adjacent(t, x)) na.push_back(t);
        }
        std::vector<Node> pa_wo_x = pa_y;
        std::erase(pa_wo_x, x);
        // Enumerate kept = NA \ H as cliques inside NA.
        detail::for_each_clique_extension(p, std::span<const Node>{}, na, na.size(), [&](const std::vector<Node>& kept) {
          const std::vector<Node> cond = detail::sorted_union(pa_wo_x, kept);
          const std::vector<Node> with_x = detail::sorted_union(cond, std::span<const Node>(&x, 1));
          const double gain = score(y, cond) - score(y, with_x);
          if (!(gain > best_gain)) return;
          best_gain = gain;
          best_x = x;
          best_y = y;
          best_h.clear();
          for (Node t : na) {
            if (!std::binary_search(kept.begin(), kept.end(), t)) best_h.push_back(t);
          }
        });
      }
    }
    if (best_x < 0) break;
    p.remove_edge(best_x, best_y);
    for (Node h : best_h) {
      if (p.has_undirected(best_y, h)) p.orient(best_y, h);
      if (p.has_undirected(best_x, h)) p.orient(best_x, h);
    }
    result.backward_trace.push_back(detail::recomplete(p, score));
  }

  result.graph = std::move(p);
  return result;
}

inline Cpdag run_ges(const SufficientStats& stats, double lambda, int max_parents, bool faithfulness) {
  return run_ges_traced(stats, lambda, max_parents, faithfulness).graph;
}

}  // namespace slearn
