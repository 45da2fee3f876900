#pragma once

#include <stdexcept>

#include "slearn/graph.hpp"

namespace slearn {

namespace detail {

inline void check_same_size(const Pdag& a, const Pdag& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("graphs have different node counts (" + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  }
}

// 2TP / (2TP + FP + FN); 1 when both sides are empty.
inline double f1(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 1.0 : static_cast<double>(2 * tp) / static_cast<double>(denom);
}

}  // namespace detail

/// F1 over skeleton adjacencies, ignoring edge marks.
inline double f1_adjacent(const Cpdag& truth, const Cpdag& est) {
  detail::check_same_size(truth, est);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const Edge& e : skeleton(est)) (truth.adjacent(e.from, e.to) ? tp : fp) += 1;
  for (const Edge& e : skeleton(truth)) {
    if (!est.adjacent(e.from, e.to)) ++fn;
  }
  return detail::f1(tp, fp, fn);
}

/// F1 over arrowheads: A -> B is shared only when directed the same way in
/// both graphs. A reversed, undirected or missing counterpart counts against.
inline double f1_arrowhead(const Cpdag& truth, const Cpdag& est) {
  detail::check_same_size(truth, est);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const Edge& e : est.directed_edges()) (truth.has_directed(e.from, e.to) ? tp : fp) += 1;
  for (const Edge& e : truth.directed_edges()) {
    if (!est.has_directed(e.from, e.to)) ++fn;
  }
  return detail::f1(tp, fp, fn);
}

/// Structural Hamming distance between two CPDAGs: one per pair adjacent in
/// only one graph, one per shared adjacency whose marks differ.
inline std::size_t shd(const Cpdag& truth, const Cpdag& est) {
  detail::check_same_size(truth, est);
  std::size_t distance = 0;
  auto mark = [](const Cpdag& g, Node u, Node v) {
    if (g.has_directed(u, v)) return 1;
    if (g.has_directed(v, u)) return 2;
    return 3;  // undirected
  };
  for (const Edge& e : skeleton(truth)) {
    if (!est.adjacent(e.from, e.to)) {
      ++distance;
    } else if (mark(truth, e.from, e.to) != mark(est, e.from, e.to)) {
      ++distance;
    }
  }
  for (const Edge& e : skeleton(est)) {
    if (!truth.adjacent(e.from, e.to)) ++distance;
  }
  return distance;
}

struct Scores {
  double f1_adjacent = 0.0;
  double f1_arrowhead = 0.0;
  std::size_t shd = 0;
};

inline Scores evaluate(const Cpdag& truth, const Cpdag& est) {
  return {f1_adjacent(truth, est), f1_arrowhead(truth, est), shd(truth, est)};
}

}  // namespace slearn
