#pragma once

#include <cstdio>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "slearn/errors.hpp"
#include "slearn/rng.hpp"

namespace slearn {

struct GesConfig {
  double lambda = 1.0;       // BIC structural penalty, [1, 1000]
  int max_parents = 1000;    // [1, 1000]
  bool faithfulness = false;
  friend bool operator==(const GesConfig&, const GesConfig&) = default;
};

struct PcConfig {
  double alpha = 0.05;  // CI significance, [0.01, 0.2]
  int max_depth = 1000; // [1, 1000]
  friend bool operator==(const PcConfig&, const PcConfig&) = default;
};

/// One fully parameterised member algorithm.
using AlgorithmConfig = std::variant<GesConfig, PcConfig>;

struct ParameterBounds {
  static constexpr double kLambdaMin = 1.0;
  static constexpr double kLambdaMax = 1000.0;
  static constexpr double kAlphaMin = 0.01;
  static constexpr double kAlphaMax = 0.2;
  static constexpr int kIntMin = 1;
  static constexpr int kIntMax = 1000;
};

inline void validate(const AlgorithmConfig& config) {
  using B = ParameterBounds;
  if (const auto* g = std::get_if<GesConfig>(&config)) {
    if (!(g->lambda >= B::kLambdaMin && g->lambda <= B::kLambdaMax)) throw std::invalid_argument("ges lambda outside [1, 1000]");
    if (g->max_parents < B::kIntMin || g->max_parents > B::kIntMax) throw std::invalid_argument("ges max_parents outside [1, 1000]");
  } else {
    const auto& p = std::get<PcConfig>(config);
    if (!(p.alpha >= B::kAlphaMin && p.alpha <= B::kAlphaMax)) throw std::invalid_argument("pc_stable alpha outside [0.01, 0.2]");
    if (p.max_depth < B::kIntMin || p.max_depth > B::kIntMax) throw std::invalid_argument("pc_stable max_depth outside [1, 1000]");
  }
}

inline nlohmann::json to_json(const AlgorithmConfig& config) {
  if (const auto* g = std::get_if<GesConfig>(&config)) {
    return {{"kind", "ges"}, {"lambda", g->lambda}, {"max_parents", g->max_parents}, {"faithfulness", g->faithfulness}};
  }
  const auto& p = std::get<PcConfig>(config);
  return {{"kind", "pc_stable"}, {"alpha", p.alpha}, {"max_depth", p.max_depth}};
}

/// Parses {"kind": "ges" | "pc_stable", ...}. Missing parameters take the
/// TETRAD defaults; out-of-range values are rejected.
inline AlgorithmConfig config_from_json(const nlohmann::json& j) {
  AlgorithmConfig out;
  try {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "ges") {
      GesConfig g;
      g.lambda = j.value("lambda", g.lambda);
      g.max_parents = j.value("max_parents", g.max_parents);
      g.faithfulness = j.value("faithfulness", g.faithfulness);
      out = g;
    } else if (kind == "pc_stable") {
      PcConfig p;
      p.alpha = j.value("alpha", p.alpha);
      p.max_depth = j.value("max_depth", p.max_depth);
      out = p;
    } else {
      throw std::invalid_argument("unknown algorithm kind '" + kind + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad algorithm config: ") + e.what());
  }
  validate(out);
  return out;
}

/// Canonical text key: kind plus every parameter at full precision.
inline std::string fingerprint(const AlgorithmConfig& config) {
  char buf[128];
  if (const auto* g = std::get_if<GesConfig>(&config)) {
    std::snprintf(buf, sizeof buf, "ges:%.17g:%d:%d", g->lambda, g->max_parents, g->faithfulness ? 1 : 0);
  } else {
    const auto& p = std::get<PcConfig>(config);
    std::snprintf(buf, sizeof buf, "pc_stable:%.17g:%d", p.alpha, p.max_depth);
  }
  return buf;
}

inline std::string describe(const AlgorithmConfig& config) {
  char buf[128];
  if (const auto* g = std::get_if<GesConfig>(&config)) {
    std::snprintf(buf, sizeof buf, "GES(lambda=%g, max_parents=%d%s)", g->lambda, g->max_parents,
                  g->faithfulness ? ", faithfulness" : "");
  } else {
    const auto& p = std::get<PcConfig>(config);
    std::snprintf(buf, sizeof buf, "PC-Stable(alpha=%g, max_depth=%d)", p.alpha, p.max_depth);
  }
  return buf;
}

/// TETRAD defaults used as the single-config baselines.
inline AlgorithmConfig default_ges() { return GesConfig{1.0, 1000, false}; }
inline AlgorithmConfig default_pc() { return PcConfig{0.05, 1000}; }

}  // namespace slearn
