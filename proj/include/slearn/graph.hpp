#pragma once

#include <algorithm>
#include <cstdint>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "slearn/errors.hpp"

namespace slearn {

using Node = int;

// Ordered pair; for undirected edges the canonical form has from < to.
struct Edge {
  Node from = 0;
  Node to = 0;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

namespace detail {

inline bool sorted_contains(const std::vector<Node>& v, Node x) {
  return std::binary_search(v.begin(), v.end(), x);
}

inline bool sorted_insert(std::vector<Node>& v, Node x) {
  auto it = std::lower_bound(v.begin(), v.end(), x);
  if (it != v.end() && *it == x) return false;
  v.insert(it, x);
  return true;
}

inline bool sorted_erase(std::vector<Node>& v, Node x) {
  auto it = std::lower_bound(v.begin(), v.end(), x);
  if (it == v.end() || *it != x) return false;
  v.erase(it);
  return true;
}

inline void check_node(Node v, int n) {
  if (v < 0 || v >= n) {
    throw std::invalid_argument("node " + std::to_string(v) + " out of range [0, " +
                                std::to_string(n) + ")");
  }
}

}  // namespace detail

/// Directed acyclic graph over dense node indices [0, n).
///
/// Parent and child lists are kept sorted, so iteration order is always by
/// node index. Every mutation preserves acyclicity.
class Dag {
 public:
  Dag() = default;
  explicit Dag(int n) : parents_(static_cast<std::size_t>(n)), children_(static_cast<std::size_t>(n)) {
    if (n < 0) throw std::invalid_argument("negative node count");
  }

  /// Throws GraphError if the edges contain a cycle.
  static Dag from_edges(int n, std::span<const Edge> edges);

  int size() const noexcept { return static_cast<int>(parents_.size()); }
  std::size_t edge_count() const noexcept { return edge_count_; }

  bool has_edge(Node u, Node v) const {
    return detail::sorted_contains(parents_[static_cast<std::size_t>(v)], u);
  }
  bool adjacent(Node u, Node v) const { return has_edge(u, v) || has_edge(v, u); }

  const std::vector<Node>& parents(Node v) const { return parents_[static_cast<std::size_t>(v)]; }
  const std::vector<Node>& children(Node v) const { return children_[static_cast<std::size_t>(v)]; }

  /// Adds u -> v. Throws std::invalid_argument for self-loops, duplicates or
  /// out-of-range nodes, GraphError if the edge would close a cycle.
  void add_edge(Node u, Node v);
  void remove_edge(Node u, Node v);

  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count_);
    for (Node u = 0; u < size(); ++u) {
      for (Node v : children(u)) out.push_back({u, v});
    }
    return out;
  }

  friend bool operator==(const Dag&, const Dag&) = default;

 private:
  std::vector<std::vector<Node>> parents_;
  std::vector<std::vector<Node>> children_;
  std::size_t edge_count_ = 0;
};

/// Partially directed graph: separate directed and undirected edge sets.
///
/// Holds any PDAG while orientation is in progress; functions documented as
/// returning a CPDAG guarantee the completed form.
class Pdag {
 public:
  Pdag() = default;
  explicit Pdag(int n)
      : parents_(static_cast<std::size_t>(n)),
        children_(static_cast<std::size_t>(n)),
        neighbors_(static_cast<std::size_t>(n)) {
    if (n < 0) throw std::invalid_argument("negative node count");
  }

  static Pdag from_dag(const Dag& g) {
    Pdag p(g.size());
    for (const Edge& e : g.edges()) p.add_directed(e.from, e.to);
    return p;
  }

  int size() const noexcept { return static_cast<int>(parents_.size()); }

  bool has_directed(Node u, Node v) const {
    return detail::sorted_contains(children_[static_cast<std::size_t>(u)], v);
  }
  bool has_undirected(Node u, Node v) const {
    return detail::sorted_contains(neighbors_[static_cast<std::size_t>(u)], v);
  }
  bool adjacent(Node u, Node v) const {
    return has_undirected(u, v) || has_directed(u, v) || has_directed(v, u);
  }

  const std::vector<Node>& parents(Node v) const { return parents_[static_cast<std::size_t>(v)]; }
  const std::vector<Node>& children(Node v) const { return children_[static_cast<std::size_t>(v)]; }
  /// Undirected neighbours.
  const std::vector<Node>& neighbors(Node v) const { return neighbors_[static_cast<std::size_t>(v)]; }

  /// All nodes adjacent to v by any edge kind, sorted.
  std::vector<Node> adjacents(Node v) const {
    std::vector<Node> out;
    const auto& p = parents(v);
    const auto& c = children(v);
    const auto& u = neighbors(v);
    out.reserve(p.size() + c.size() + u.size());
    out.insert(out.end(), p.begin(), p.end());
    out.insert(out.end(), c.begin(), c.end());
    out.insert(out.end(), u.begin(), u.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  void add_directed(Node u, Node v) {
    check_new_pair(u, v);
    detail::sorted_insert(children_[static_cast<std::size_t>(u)], v);
    detail::sorted_insert(parents_[static_cast<std::size_t>(v)], u);
  }
  void add_undirected(Node u, Node v) {
    check_new_pair(u, v);
    detail::sorted_insert(neighbors_[static_cast<std::size_t>(u)], v);
    detail::sorted_insert(neighbors_[static_cast<std::size_t>(v)], u);
  }

  /// Removes whatever edge joins u and v. Returns false if none.
  bool remove_edge(Node u, Node v) {
    auto su = static_cast<std::size_t>(u);
    auto sv = static_cast<std::size_t>(v);
    bool removed = false;
    if (detail::sorted_erase(neighbors_[su], v)) {
      detail::sorted_erase(neighbors_[sv], u);
      removed = true;
    }
    if (detail::sorted_erase(children_[su], v)) {
      detail::sorted_erase(parents_[sv], u);
      removed = true;
    }
    if (detail::sorted_erase(children_[sv], u)) {
      detail::sorted_erase(parents_[su], v);
      removed = true;
    }
    return removed;
  }

  /// Turns the undirected edge u -- v into u -> v.
  void orient(Node u, Node v) {
    if (!has_undirected(u, v)) {
      throw std::invalid_argument("orient: no undirected edge " + std::to_string(u) + " -- " +
                                  std::to_string(v));
    }
    remove_edge(u, v);
    add_directed(u, v);
  }

  /// Turns a directed edge (either direction) between u and v into u -- v.
  void unorient(Node u, Node v) {
    if (has_directed(u, v) || has_directed(v, u)) {
      remove_edge(u, v);
      add_undirected(u, v);
    }
  }

  std::vector<Edge> directed_edges() const {
    std::vector<Edge> out;
    for (Node u = 0; u < size(); ++u) {
      for (Node v : children(u)) out.push_back({u, v});
    }
    return out;
  }
  std::vector<Edge> undirected_edges() const {
    std::vector<Edge> out;
    for (Node u = 0; u < size(); ++u) {
      for (Node v : neighbors(u)) {
        if (u < v) out.push_back({u, v});
      }
    }
    return out;
  }
  std::size_t edge_count() const {
    std::size_t directed = 0;
    std::size_t undirected_ends = 0;
    for (Node u = 0; u < size(); ++u) {
      directed += children(u).size();
      undirected_ends += neighbors(u).size();
    }
    return directed + undirected_ends / 2;
  }

  friend bool operator==(const Pdag&, const Pdag&) = default;

 private:
  void check_new_pair(Node u, Node v) const {
    detail::check_node(u, size());
    detail::check_node(v, size());
    if (u == v) throw std::invalid_argument("self-loop on node " + std::to_string(u));
    if (adjacent(u, v)) {
      throw std::invalid_argument("nodes " + std::to_string(u) + " and " + std::to_string(v) +
                                  " are already adjacent");
    }
  }

  std::vector<std::vector<Node>> parents_;
  std::vector<std::vector<Node>> children_;
  std::vector<std::vector<Node>> neighbors_;
};

/// Completed PDAG: the canonical representation of a Markov equivalence class.
using Cpdag = Pdag;

// ---------------------------------------------------------------------------
// Ordering and reachability

/// Kahn's algorithm, always taking the smallest available index.
/// Throws GraphError when the edge set has a cycle.
inline std::vector<Node> topological_sort(int n, std::span<const Edge> edges) {
  std::vector<std::vector<Node>> out(static_cast<std::size_t>(n));
  std::vector<int> indegree(static_cast<std::size_t>(n), 0);
  for (const Edge& e : edges) {
    detail::check_node(e.from, n);
    detail::check_node(e.to, n);
    out[static_cast<std::size_t>(e.from)].push_back(e.to);
    ++indegree[static_cast<std::size_t>(e.to)];
  }
  std::priority_queue<Node, std::vector<Node>, std::greater<>> ready;
  for (Node v = 0; v < n; ++v) {
    if (indegree[static_cast<std::size_t>(v)] == 0) ready.push(v);
  }
  std::vector<Node> order;
  order.reserve(static_cast<std::size_t>(n));
  while (!ready.empty()) {
    Node u = ready.top();
    ready.pop();
    order.push_back(u);
    for (Node v : out[static_cast<std::size_t>(u)]) {
      if (--indegree[static_cast<std::size_t>(v)] == 0) ready.push(v);
    }
  }
  if (static_cast<int>(order.size()) != n) throw GraphError("cycle detected in directed graph");
  return order;
}

inline std::vector<Node> topological_sort(const Dag& g) {
  auto edges = g.edges();
  return topological_sort(g.size(), edges);
}

/// True iff `to` is reachable from `from` along directed edges.
inline bool reachable(const Dag& g, Node from, Node to) {
  if (from == to) return true;
  std::vector<char> seen(static_cast<std::size_t>(g.size()), 0);
  std::vector<Node> stack{from};
  seen[static_cast<std::size_t>(from)] = 1;
  while (!stack.empty()) {
    Node u = stack.back();
    stack.pop_back();
    for (Node v : g.children(u)) {
      if (v == to) return true;
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        stack.push_back(v);
      }
    }
  }
  return false;
}

/// True iff adding u -> v to g closes a directed cycle.
inline bool would_create_cycle(const Dag& g, Node u, Node v) {
  detail::check_node(u, g.size());
  detail::check_node(v, g.size());
  if (u == v) throw std::invalid_argument("would_create_cycle: u == v");
  return reachable(g, v, u);
}

inline void Dag::add_edge(Node u, Node v) {
  detail::check_node(u, size());
  detail::check_node(v, size());
  if (u == v) throw std::invalid_argument("self-loop on node " + std::to_string(u));
  if (has_edge(u, v)) {
    throw std::invalid_argument("duplicate edge " + std::to_string(u) + " -> " + std::to_string(v));
  }
  if (reachable(*this, v, u)) {
    throw GraphError("edge " + std::to_string(u) + " -> " + std::to_string(v) + " closes a cycle");
  }
  detail::sorted_insert(children_[static_cast<std::size_t>(u)], v);
  detail::sorted_insert(parents_[static_cast<std::size_t>(v)], u);
  ++edge_count_;
}

inline void Dag::remove_edge(Node u, Node v) {
  if (!detail::sorted_erase(children_[static_cast<std::size_t>(u)], v)) {
    throw std::invalid_argument("no edge " + std::to_string(u) + " -> " + std::to_string(v));
  }
  detail::sorted_erase(parents_[static_cast<std::size_t>(v)], u);
  --edge_count_;
}

inline Dag Dag::from_edges(int n, std::span<const Edge> edges) {
  topological_sort(n, edges);  // validates ranges and acyclicity up front
  Dag g(n);
  for (const Edge& e : edges) {
    if (e.from == e.to) throw std::invalid_argument("self-loop on node " + std::to_string(e.from));
    if (g.has_edge(e.from, e.to)) {
      throw std::invalid_argument("duplicate edge " + std::to_string(e.from) + " -> " +
                                  std::to_string(e.to));
    }
    detail::sorted_insert(g.children_[static_cast<std::size_t>(e.from)], e.to);
    detail::sorted_insert(g.parents_[static_cast<std::size_t>(e.to)], e.from);
    ++g.edge_count_;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Equivalence classes

/// Unshielded colliders a -> c <- b (a < b), as (a, c, b) triples sorted.
struct VStructure {
  Node left;
  Node collider;
  Node right;
  friend auto operator<=>(const VStructure&, const VStructure&) = default;
};

inline std::vector<VStructure> v_structures(const Dag& g) {
  std::vector<VStructure> out;
  for (Node c = 0; c < g.size(); ++c) {
    const auto& pa = g.parents(c);
    for (std::size_t i = 0; i < pa.size(); ++i) {
      for (std::size_t j = i + 1; j < pa.size(); ++j) {
        if (!g.adjacent(pa[i], pa[j])) out.push_back({pa[i], c, pa[j]});
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Directed unshielded colliders of a PDAG (both arms directed).
inline std::vector<VStructure> v_structures(const Pdag& p) {
  std::vector<VStructure> out;
  for (Node c = 0; c < p.size(); ++c) {
    const auto& pa = p.parents(c);
    for (std::size_t i = 0; i < pa.size(); ++i) {
      for (std::size_t j = i + 1; j < pa.size(); ++j) {
        if (!p.adjacent(pa[i], pa[j])) out.push_back({pa[i], c, pa[j]});
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Skeleton as canonical (u < v) pairs.
inline std::vector<Edge> skeleton(const Dag& g) {
  std::vector<Edge> out;
  for (const Edge& e : g.edges()) out.push_back({std::min(e.from, e.to), std::max(e.from, e.to)});
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<Edge> skeleton(const Pdag& p) {
  std::vector<Edge> out = p.undirected_edges();
  for (const Edge& e : p.directed_edges()) out.push_back({std::min(e.from, e.to), std::max(e.from, e.to)});
  std::sort(out.begin(), out.end());
  return out;
}

/// Same skeleton and same v-structures.
inline bool markov_equivalent(const Dag& a, const Dag& b) {
  return a.size() == b.size() && skeleton(a) == skeleton(b) && v_structures(a) == v_structures(b);
}

/// CPDAG of g's equivalence class by compelled-edge labelling over a fixed
/// edge ordering (Chickering 1995).
inline Cpdag dag_to_cpdag(const Dag& g) {
  const int n = g.size();
  auto order = topological_sort(g);
  std::vector<int> pos(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pos[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i;

  // Edge order: children in topological order, and for each child its parents
  // from the highest-ordered down.
  std::vector<Edge> ordered;
  ordered.reserve(g.edge_count());
  for (Node y : order) {
    std::vector<Node> pa = g.parents(y);
    std::sort(pa.begin(), pa.end(), [&](Node a, Node b) {
      return pos[static_cast<std::size_t>(a)] > pos[static_cast<std::size_t>(b)];
    });
    for (Node x : pa) ordered.push_back({x, y});
  }

  enum : std::int8_t { kUnknown = 0, kCompelled = 1, kReversible = 2 };
  // label[y][k] belongs to the edge parents(y)[k] -> y.
  std::vector<std::vector<std::int8_t>> label(static_cast<std::size_t>(n));
  for (Node y = 0; y < n; ++y) label[static_cast<std::size_t>(y)].assign(g.parents(y).size(), kUnknown);
  auto slot = [&](Node x, Node y) -> std::int8_t& {
    const auto& pa = g.parents(y);
    auto k = std::lower_bound(pa.begin(), pa.end(), x) - pa.begin();
    return label[static_cast<std::size_t>(y)][static_cast<std::size_t>(k)];
  };
  auto label_all_into = [&](Node y, std::int8_t value, bool only_unknown) {
    for (auto& l : label[static_cast<std::size_t>(y)]) {
      if (!only_unknown || l == kUnknown) l = value;
    }
  };

  for (const Edge& e : ordered) {
    const Node x = e.from;
    const Node y = e.to;
    if (slot(x, y) != kUnknown) continue;
    bool done = false;
    for (Node w : g.parents(x)) {
      if (slot(w, x) != kCompelled) continue;
      if (!g.has_edge(w, y)) {
        label_all_into(y, kCompelled, false);
        done = true;
        break;
      }
      slot(w, y) = kCompelled;
    }
    if (done) continue;
    bool other_parent = false;
    for (Node z : g.parents(y)) {
      if (z != x && !g.has_edge(z, x)) {
        other_parent = true;
        break;
      }
    }
    label_all_into(y, other_parent ? kCompelled : kReversible, true);
  }

  Cpdag out(n);
  for (Node y = 0; y < n; ++y) {
    const auto& pa = g.parents(y);
    for (std::size_t k = 0; k < pa.size(); ++k) {
      if (label[static_cast<std::size_t>(y)][k] == kCompelled) {
        out.add_directed(pa[k], y);
      } else {
        out.add_undirected(pa[k], y);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Meek orientation rules

enum class ConflictPolicy {
  kThrow,           // raise InconsistencyError
  kLeaveUndirected  // keep the contested edge undirected and continue
};

namespace detail {

// Does some Meek rule force a -> b, given the undirected edge a -- b?
inline bool meek_forces(const Pdag& p, Node a, Node b) {
  // R1: c -> a -- b, c and b non-adjacent.
  for (Node c : p.parents(a)) {
    if (!p.adjacent(c, b)) return true;
  }
  // R2: a -> c -> b.
  for (Node c : p.children(a)) {
    if (p.has_directed(c, b)) return true;
  }
  // R3: a -- c -> b, a -- d -> b, c and d non-adjacent.
  const auto& pb = p.parents(b);
  for (std::size_t i = 0; i < pb.size(); ++i) {
    if (!p.has_undirected(a, pb[i])) continue;
    for (std::size_t j = i + 1; j < pb.size(); ++j) {
      if (p.has_undirected(a, pb[j]) && !p.adjacent(pb[i], pb[j])) return true;
    }
  }
  // R4: c -> d -> b with a adjacent to c and d, and c, b non-adjacent.
  for (Node d : pb) {
    if (!p.adjacent(a, d)) continue;
    for (Node c : p.parents(d)) {
      if (c != a && c != b && p.adjacent(a, c) && !p.adjacent(c, b)) return true;
    }
  }
  return false;
}

}  // namespace detail

/// Applies Meek rules R1-R4 until no undirected edge changes.
///
/// Only undirected edges are ever oriented; the skeleton and existing
/// directed edges are untouched.
inline Pdag apply_meek_rules(Pdag p, ConflictPolicy policy = ConflictPolicy::kThrow) {
  std::vector<Edge> contested;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const Edge& e : p.undirected_edges()) {
      if (!p.has_undirected(e.from, e.to)) continue;
      if (std::binary_search(contested.begin(), contested.end(), e)) continue;
      const bool forward = detail::meek_forces(p, e.from, e.to);
      const bool backward = detail::meek_forces(p, e.to, e.from);
      if (forward && backward) {
        if (policy == ConflictPolicy::kThrow) {
          throw InconsistencyError("orientation rules force both directions of " +
                                   std::to_string(e.from) + " -- " + std::to_string(e.to));
        }
        contested.insert(std::lower_bound(contested.begin(), contested.end(), e), e);
      } else if (forward) {
        p.orient(e.from, e.to);
        changed = true;
      } else if (backward) {
        p.orient(e.to, e.from);
        changed = true;
      }
    }
  }
  return p;
}

/// DAG with the same skeleton and directed edges as p and no v-structures
/// beyond p's own (Dor and Tarsi 1992). Repeatedly removes a sink whose
/// undirected neighbours are adjacent to all its other neighbours, lowest
/// index first. Throws ExtensionError if p has no extension.
inline Dag consistent_extension(const Pdag& p) {
  const int n = p.size();
  Pdag work = p;
  std::vector<char> removed(static_cast<std::size_t>(n), 0);
  std::vector<Edge> edges = p.directed_edges();
  edges.reserve(p.edge_count());

  for (int remaining = n; remaining > 0; --remaining) {
    Node sink = -1;
    for (Node x = 0; x < n && sink < 0; ++x) {
      if (removed[static_cast<std::size_t>(x)] || !work.children(x).empty()) continue;
      const auto adj = work.adjacents(x);
      bool ok = true;
      for (Node y : work.neighbors(x)) {
        for (Node z : adj) {
          if (z != y && !work.adjacent(y, z)) {
            ok = false;
            break;
          }
        }
        if (!ok) break;
      }
      if (ok) sink = x;
    }
    if (sink < 0) throw ExtensionError("partially directed graph admits no consistent extension");

    const std::vector<Node> nbrs = work.neighbors(sink);
    for (Node y : nbrs) edges.push_back({y, sink});
    for (Node y : work.adjacents(sink)) work.remove_edge(sink, y);
    removed[static_cast<std::size_t>(sink)] = 1;
  }
  return Dag::from_edges(n, edges);
}

/// Like consistent_extension, but never fails: when no extension exists it
/// keeps directed edges greedily while they stay acyclic and orients the
/// remaining skeleton edges along a topological order.
inline Dag extend_or_approximate(const Pdag& p) {
  try {
    return consistent_extension(p);
  } catch (const ExtensionError&) {
  }
  Dag g(p.size());
  for (const Edge& e : p.directed_edges()) {
    if (!would_create_cycle(g, e.from, e.to)) g.add_edge(e.from, e.to);
  }
  auto order = topological_sort(g);
  std::vector<int> pos(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) pos[static_cast<std::size_t>(order[i])] = static_cast<int>(i);
  for (const Edge& e : skeleton(p)) {
    if (g.adjacent(e.from, e.to)) continue;
    if (pos[static_cast<std::size_t>(e.from)] < pos[static_cast<std::size_t>(e.to)]) {
      g.add_edge(e.from, e.to);
    } else {
      g.add_edge(e.to, e.from);
    }
  }
  return g;
}

/// CPDAG of the equivalence class that p extends to.
inline Cpdag complete_pdag(const Pdag& p) { return dag_to_cpdag(consistent_extension(p)); }

}  // namespace slearn
