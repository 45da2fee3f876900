#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "slearn/config.hpp"
#include "slearn/datagen.hpp"
#include "slearn/diagnostics.hpp"
#include "slearn/learners.hpp"
#include "slearn/metrics.hpp"
#include "slearn/parallel.hpp"

namespace slearn {

/// A training instance: correlation statistics plus the true CPDAG.
struct TrainingProblem {
  std::string id;
  SufficientStats stats;
  Cpdag truth;
};

inline TrainingProblem training_problem(const Problem& p) {
  return {p.id, SufficientStats::from_data(p.data), p.truth_cpdag};
}

/// Stable hex digest of a training set's problem ids and shapes.
inline std::string training_fingerprint(std::span<const TrainingProblem> problems) {
  std::string text;
  for (const auto& p : problems) {
    text += p.id + ':' + std::to_string(p.stats.variables()) + ':' + std::to_string(p.stats.samples()) + '\n';
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(text)));
  return buf;
}

/// Q(theta, D) = F1 adjacent + F1 arrowhead of the learner's output, in [0, 2].
/// A learner failure scores 0 and is reported through diagnostic().
inline double quality(const AlgorithmConfig& config, const TrainingProblem& problem) {
  try {
    const Cpdag out = run_config(problem.stats, config);
    return f1_adjacent(problem.truth, out) + f1_arrowhead(problem.truth, out);
  } catch (const std::exception& e) {
    diagnostic(describe(config) + " failed on " + problem.id + ": " + e.what());
    return 0.0;
  }
}

/// Memo of Q keyed by (config fingerprint, problem id). Thread-safe.
class QualityCache {
 public:
  std::optional<double> find(const std::string& config, const std::string& problem) const {
    std::lock_guard lock(mutex_);
    auto it = table_.find({config, problem});
    if (it == table_.end()) return std::nullopt;
    ++hits_;
    return it->second;
  }

  void store(const std::string& config, const std::string& problem, double q) {
    std::lock_guard lock(mutex_);
    table_.insert_or_assign({config, problem}, q);
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return table_.size();
  }

  std::size_t hits() const {
    std::lock_guard lock(mutex_);
    return hits_;
  }

 private:
  mutable std::mutex mutex_;
  std::map<std::pair<std::string, std::string>, double> table_;
  mutable std::size_t hits_ = 0;
};

// Evaluators expose problem_count() and qualities(candidate), the latter
// returning one Q value per training problem. The greedy machinery below is
// written against that pair so it runs the same on stub tables and on real
// learners.

/// Precomputed table: table[c][d] is the quality of candidate c on problem d.
class TableEvaluator {
 public:
  using Candidate = std::size_t;

  explicit TableEvaluator(std::vector<std::vector<double>> table) : table_(std::move(table)) {}

  std::size_t problem_count() const { return table_.empty() ? 0 : table_.front().size(); }
  std::size_t candidate_count() const { return table_.size(); }
  std::vector<double> qualities(Candidate c) const { return table_.at(c); }

 private:
  std::vector<std::vector<double>> table_;
};

/// Runs learners on training problems, optionally through a cache.
class ProblemEvaluator {
 public:
  using Candidate = AlgorithmConfig;

  ProblemEvaluator(std::span<const TrainingProblem> problems, QualityCache* cache = nullptr, int jobs = 1)
      : problems_(problems), cache_(cache), jobs_(jobs) {}

  std::size_t problem_count() const { return problems_.size(); }

  std::vector<double> qualities(const AlgorithmConfig& config) const {
    const std::string key = fingerprint(config);
    std::vector<double> out(problems_.size());
    parallel_for(problems_.size(), jobs_, [&](std::size_t d) {
      const auto& p = problems_[d];
      if (cache_) {
        if (auto hit = cache_->find(key, p.id)) {
          out[d] = *hit;
          return;
        }
      }
      out[d] = quality(config, p);
      if (cache_) cache_->store(key, p.id, out[d]);
    });
    return out;
  }

 private:
  std::span<const TrainingProblem> problems_;
  QualityCache* cache_;
  int jobs_;
};

namespace detail {

// Ordered left-to-right sum divided by the count; 0 for no problems.
inline double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

template <class Eval, class C>
std::vector<double> best_per_problem(const Eval& eval, std::span<const C> members) {
  std::vector<double> best(eval.problem_count(), 0.0);
  for (const C& m : members) {
    const auto q = eval.qualities(m);
    for (std::size_t d = 0; d < best.size(); ++d) best[d] = std::max(best[d], q[d]);
  }
  return best;
}

}  // namespace detail

/// Q(A, T): mean over problems of the best member quality; 0 when A is empty.
template <class Eval, class C>
double ensemble_quality(std::span<const C> members, const Eval& eval) {
  if (members.empty()) return 0.0;
  return detail::mean(detail::best_per_problem(eval, members));
}

/// Delta(theta | A) from A's per-problem best values and theta's qualities.
/// Summing clipped per-problem increments keeps the result monotone in
/// `best` under floating point, so diminishing returns hold bit-exactly.
inline double marginal_gain(const std::vector<double>& best, const std::vector<double>& q) {
  if (best.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t d = 0; d < best.size(); ++d) s += std::max(0.0, q[d] - best[d]);
  return s / static_cast<double>(best.size());
}

template <class Eval, class C>
double marginal_gain(std::span<const C> members, const C& candidate, const Eval& eval) {
  return marginal_gain(detail::best_per_problem(eval, members), eval.qualities(candidate));
}

/// Finite candidate set.
template <class C>
struct DiscreteSpace {
  std::vector<C> candidates;
};

/// Default and reference configurations tried first by the parameter search.
inline std::vector<AlgorithmConfig> seed_configs() {
  return {
      default_ges(),
      default_pc(),
      GesConfig{5.87273, 185, false},
      GesConfig{20.6045, 17, false},
      GesConfig{2.53767, 91, false},
      GesConfig{5.62460, 11, false},
      PcConfig{0.08399, 850},
      GesConfig{797.255, 871, false},
      PcConfig{0.10745, 980},
      GesConfig{792.835, 456, true},
  };
}

/// The continuous space: GES and PC-Stable over their parameter boxes.
struct ParameterSpace {
  std::vector<AlgorithmConfig> seeds = seed_configs();
  bool ges = true;
  bool pc = true;
};

template <class C>
struct GainSearch {
  C config{};
  double gain = 0.0;
  bool found = false;
  /// Every evaluated candidate and its gain, in evaluation order.
  std::vector<std::pair<C, double>> log;
};

namespace detail {

template <class C>
void consider(GainSearch<C>& s, const C& c, double gain) {
  s.log.emplace_back(c, gain);
  if (!s.found || gain > s.gain) {
    s.config = c;
    s.gain = gain;
    s.found = true;
  }
}

inline double log_uniform(Rng& rng, double lo, double hi) { return std::exp(rng.uniform(std::log(lo), std::log(hi))); }

inline int clamp_int(double x) {
  return static_cast<int>(std::clamp<long long>(std::llround(x), ParameterBounds::kIntMin, ParameterBounds::kIntMax));
}

inline AlgorithmConfig random_config(const ParameterSpace& space, Rng& rng) {
  using B = ParameterBounds;
  const bool ges = space.ges && (!space.pc || rng.coin());
  if (ges) {
    GesConfig g;
    g.lambda = std::clamp(log_uniform(rng, B::kLambdaMin, B::kLambdaMax), B::kLambdaMin, B::kLambdaMax);
    g.max_parents = clamp_int(log_uniform(rng, B::kIntMin, B::kIntMax));
    g.faithfulness = rng.coin();
    return g;
  }
  PcConfig p;
  p.alpha = rng.uniform(B::kAlphaMin, B::kAlphaMax);
  p.max_depth = clamp_int(log_uniform(rng, B::kIntMin, B::kIntMax));
  return p;
}

// Gaussian step with standard deviation 10% of each parameter's range,
// measured on the log scale where the search samples log-uniformly.
inline AlgorithmConfig perturb(const AlgorithmConfig& base, Rng& rng) {
  using B = ParameterBounds;
  const double int_sd = 0.1 * std::log(static_cast<double>(B::kIntMax) / B::kIntMin);
  if (const auto* g = std::get_if<GesConfig>(&base)) {
    GesConfig out = *g;
    const double lsd = 0.1 * std::log(B::kLambdaMax / B::kLambdaMin);
    out.lambda = std::clamp(std::exp(std::log(g->lambda) + lsd * rng.normal()), B::kLambdaMin, B::kLambdaMax);
    out.max_parents = clamp_int(std::exp(std::log(static_cast<double>(g->max_parents)) + int_sd * rng.normal()));
    if (rng.uniform() < 0.1) out.faithfulness = !out.faithfulness;
    return out;
  }
  const auto& p = std::get<PcConfig>(base);
  PcConfig out = p;
  out.alpha = std::clamp(p.alpha + 0.1 * (B::kAlphaMax - B::kAlphaMin) * rng.normal(), B::kAlphaMin, B::kAlphaMax);
  out.max_depth = clamp_int(std::exp(std::log(static_cast<double>(p.max_depth)) + int_sd * rng.normal()));
  return out;
}

inline bool kind_allowed(const ParameterSpace& space, const AlgorithmConfig& c) {
  return std::holds_alternative<GesConfig>(c) ? space.ges : space.pc;
}

}  // namespace detail

/// Approximate argmax of Delta(theta | A) over a finite space. A budget that
/// covers the space evaluates every candidate in order; a smaller one
/// evaluates a seeded random subset. Ties keep the earliest evaluation.
template <class Eval, class C>
GainSearch<C> optimize_marginal_gain(std::span<const C> current, const Eval& eval, const DiscreteSpace<C>& space,
                                     std::size_t budget, Rng& rng) {
  if (budget < 1) throw std::invalid_argument("budget must be at least 1");
  const auto best = detail::best_per_problem(eval, current);
  std::vector<std::size_t> order(space.candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (budget < order.size()) {
    rng.shuffle(std::span<std::size_t>(order));
    order.resize(budget);
  }
  GainSearch<C> s;
  for (std::size_t i : order) {
    const C& c = space.candidates[i];
    detail::consider(s, c, marginal_gain(best, eval.qualities(c)));
  }
  return s;
}

/// Budgeted search over the parameter space: a quarter of the budget on
/// seed configurations, half on uniform draws and the last quarter on
/// Gaussian perturbations of the best candidate so far.
template <class Eval>
GainSearch<AlgorithmConfig> optimize_marginal_gain(std::span<const AlgorithmConfig> current, const Eval& eval,
                                                   const ParameterSpace& space, std::size_t budget, Rng& rng) {
  if (budget < 1) throw std::invalid_argument("budget must be at least 1");
  if (!space.ges && !space.pc) throw std::invalid_argument("parameter space allows no algorithm");
  const auto best = detail::best_per_problem(eval, current);
  std::vector<AlgorithmConfig> seeds;
  for (const auto& c : space.seeds) {
    if (detail::kind_allowed(space, c)) seeds.push_back(c);
  }
  const std::size_t n_seed = std::min(seeds.size(), std::max<std::size_t>(1, budget / 4));
  const std::size_t n_perturb = std::min(budget - std::min(budget, n_seed), budget / 4);
  const std::size_t n_random = budget - std::min(budget, n_seed) - n_perturb;

  GainSearch<AlgorithmConfig> s;
  auto eval_one = [&](const AlgorithmConfig& c) { detail::consider(s, c, marginal_gain(best, eval.qualities(c))); };
  for (std::size_t i = 0; i < n_seed && i < budget; ++i) eval_one(seeds[i]);
  for (std::size_t i = 0; i < n_random; ++i) eval_one(detail::random_config(space, rng));
  for (std::size_t i = 0; i < n_perturb; ++i) {
    AlgorithmConfig c = detail::perturb(s.config, rng);
    eval_one(c);
  }
  return s;
}

template <class C>
struct GreedyResult {
  std::vector<C> members;
  /// Q of the ensemble after each appended member.
  std::vector<double> q_trace;
  std::vector<std::vector<std::pair<C, double>>> logs;
  bool stopped_early = false;
};

inline constexpr double kGainTolerance = 1e-12;

/// Greedy ensemble construction: up to k rounds, each appending the
/// configuration with the largest marginal gain found by the inner search,
/// stopping early once the best gain is not positive.
template <class Eval, class Space>
auto greedy_ensemble(const Eval& eval, const Space& space, std::size_t k, std::size_t budget, std::uint64_t seed) {
  using C = typename Eval::Candidate;
  if (k < 1) throw std::invalid_argument("ensemble size k must be at least 1");
  GreedyResult<C> out;
  double q = 0.0;
  for (std::size_t round = 0; round < k; ++round) {
    Rng rng = Rng::substream(seed, "auto-sle/" + std::to_string(round));
    auto found = optimize_marginal_gain(std::span<const C>(out.members), eval, space, budget, rng);
    out.logs.push_back(std::move(found.log));
    if (!found.found || found.gain <= kGainTolerance) {
      out.stopped_early = true;
      if (out.members.empty()) diagnostic("no configuration has positive quality; ensemble is empty");
      break;
    }
    out.members.push_back(found.config);
    q = ensemble_quality(std::span<const C>(out.members), eval);
    out.q_trace.push_back(q);
  }
  return out;
}

/// A structure learning ensemble and the metadata of the run that built it.
struct Sle {
  std::vector<AlgorithmConfig> members;
  std::string training_fingerprint;
  std::uint64_t seed = 0;
  std::vector<double> q_trace;
};

inline nlohmann::json to_json(const Sle& sle) {
  nlohmann::json members = nlohmann::json::array();
  for (const auto& m : sle.members) members.push_back(to_json(m));
  return {{"members", members},
          {"training_fingerprint", sle.training_fingerprint},
          {"seed", sle.seed},
          {"q_trace", sle.q_trace}};
}

/// Accepts the object form written by to_json or a bare list of configs.
inline Sle sle_from_json(const nlohmann::json& j) {
  Sle out;
  try {
    const nlohmann::json& members = j.is_array() ? j : j.at("members");
    if (!members.is_array()) throw std::invalid_argument("ensemble members must be a list");
    for (const auto& m : members) out.members.push_back(config_from_json(m));
    if (j.is_object()) {
      out.training_fingerprint = j.value("training_fingerprint", std::string());
      out.seed = j.value("seed", std::uint64_t{0});
      out.q_trace = j.value("q_trace", std::vector<double>{});
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad ensemble file: ") + e.what());
  }
  return out;
}

inline Sle load_sle(const std::string& path) {
  try {
    return sle_from_json(nlohmann::json::parse(read_text_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

/// Greedy ensemble over real learners on a training set.
inline Sle auto_sle(std::span<const TrainingProblem> training, const ParameterSpace& space, std::size_t k,
                    std::size_t budget, std::uint64_t seed, int jobs = 1, QualityCache* cache = nullptr,
                    GreedyResult<AlgorithmConfig>* run = nullptr) {
  QualityCache local;
  ProblemEvaluator eval(training, cache ? cache : &local, jobs);
  auto result = greedy_ensemble(eval, space, k, budget, seed);
  Sle sle{result.members, training_fingerprint(training), seed, result.q_trace};
  if (run) *run = std::move(result);
  return sle;
}

struct SleSolution {
  Cpdag graph;
  std::size_t chosen = 0;
  /// Selection BIC per member; empty when the member failed.
  std::vector<std::optional<double>> member_bic;
};

/// Runs every member and keeps the output whose consistent extension has the
/// highest BIC at `selection_lambda`. Ties go to the lowest member index.
inline SleSolution solve_with_sle(std::span<const AlgorithmConfig> members, const SufficientStats& stats,
                                  double selection_lambda = 2.0, int jobs = 1) {
  if (members.empty()) throw std::invalid_argument("ensemble has no members");
  std::vector<std::optional<Cpdag>> outputs(members.size());
  std::vector<std::optional<double>> bic(members.size());
  std::vector<std::string> errors(members.size());
  parallel_for(members.size(), jobs, [&](std::size_t i) {
    try {
      Cpdag out = run_config(stats, members[i]);
      bic[i] = total_bic(stats, extend_or_approximate(out), selection_lambda);
      outputs[i] = std::move(out);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  std::optional<std::size_t> chosen;
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (!bic[i]) {
      diagnostic("member " + std::to_string(i) + " (" + describe(members[i]) + ") excluded: " + errors[i]);
      continue;
    }
    if (!chosen || *bic[i] > *bic[*chosen]) chosen = i;
  }
  if (!chosen) throw InferenceError("every ensemble member failed");
  return {std::move(*outputs[*chosen]), *chosen, std::move(bic)};
}

inline SleSolution solve_with_sle(const Sle& sle, const SufficientStats& stats, double selection_lambda = 2.0,
                                  int jobs = 1) {
  return solve_with_sle(std::span<const AlgorithmConfig>(sle.members), stats, selection_lambda, jobs);
}

}  // namespace slearn
