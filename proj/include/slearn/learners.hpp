#pragma once

#include <variant>

#include "slearn/config.hpp"
#include "slearn/ges.hpp"
#include "slearn/pc_stable.hpp"
#include "slearn/scoring.hpp"

namespace slearn {

/// Runs the learner named by `config`. Deterministic.
inline Cpdag run_config(const SufficientStats& stats, const AlgorithmConfig& config) {
  return std::visit(
      [&](const auto& c) -> Cpdag {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, GesConfig>) {
          return run_ges(stats, c.lambda, c.max_parents, c.faithfulness);
        } else {
          return run_pc_stable(stats, c.alpha, c.max_depth);
        }
      },
      config);
}

}  // namespace slearn
