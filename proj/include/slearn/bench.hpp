#pragma once

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "slearn/datagen.hpp"
#include "slearn/ensemble.hpp"
#include "slearn/metrics.hpp"
#include "slearn/pef.hpp"

namespace slearn {

/// Benchmark sweep: train an ensemble, then compare P/SLE against the
/// partition-estimate-fuse pipeline with default GES and default PC-Stable.
struct BenchConfig {
  std::vector<std::string> networks{"asia8", "alarm37"};
  std::vector<int> sizes{200, 500};
  Eigen::Index m = 1000;
  int replicates = 10;
  std::uint64_t seed = 0;

  /// Training problem sizes as whole copies of each base network.
  std::vector<int> train_copies{2, 3};
  int train_replicates = 1;
  Eigen::Index train_m = 1000;
  std::size_t k = 4;
  std::size_t budget = 24;

  PefOptions pef;
};

struct BenchRow {
  std::string problem_id;
  std::string network;
  int n = 0;
  std::string method;
  Scores scores;
  double runtime_s = 0.0;
  std::uint64_t seed = 0;
};

/// One solve_with_sle call inside a P/SLE run.
struct SelectionAudit {
  std::string problem_id;
  std::size_t cluster = 0;
  std::size_t chosen = 0;
  double chosen_bic = 0.0;
  double max_member_bic = 0.0;
  /// BIC of the returned graph recomputed from scratch.
  double recomputed_bic = 0.0;
};

struct BenchResult {
  Sle sle;
  std::vector<BenchRow> rows;
  std::vector<SelectionAudit> audits;
};

inline std::uint64_t bench_problem_seed(std::uint64_t seed, const std::string& tag) {
  return Rng::substream(seed, "bench/" + tag)();
}

inline std::vector<TrainingProblem> bench_training_set(const BenchConfig& c) {
  std::vector<TrainingProblem> out;
  for (const auto& net : c.networks) {
    const Dag base = load_base_network(net);
    for (int copies : c.train_copies) {
      const int n = copies * static_cast<int>(base.size());
      for (int r = 0; r < c.train_replicates; ++r) {
        const auto s = bench_problem_seed(c.seed, "train/" + net + "/" + std::to_string(n) + "/" + std::to_string(r));
        out.push_back(training_problem(generate_problem(base, net, n, c.train_m, s)));
      }
    }
  }
  return out;
}

inline std::vector<SelectionAudit> audit_selection(const std::string& problem_id, const PefResult& r,
                                                   const SufficientStats& stats, double selection_lambda) {
  std::vector<SelectionAudit> out;
  for (std::size_t c = 0; c < r.estimates.size(); ++c) {
    const auto& e = r.estimates[c];
    if (!e.chosen) continue;
    SelectionAudit a;
    a.problem_id = problem_id;
    a.cluster = c;
    a.chosen = *e.chosen;
    a.chosen_bic = e.member_bic.at(a.chosen).value();
    a.max_member_bic = -std::numeric_limits<double>::infinity();
    for (const auto& b : e.member_bic) {
      if (b) a.max_member_bic = std::max(a.max_member_bic, *b);
    }
    a.recomputed_bic = total_bic(stats.restrict(e.cluster), extend_or_approximate(e.graph), selection_lambda);
    out.push_back(a);
  }
  return out;
}

/// Runs the sweep. `sle` overrides training when given. `progress` receives
/// one line per finished problem.
inline BenchResult run_bench(const BenchConfig& c, const Sle* sle = nullptr,
                             const std::function<void(const std::string&)>& progress = {}) {
  BenchResult out;
  if (sle) {
    out.sle = *sle;
  } else {
    const auto training = bench_training_set(c);
    out.sle = auto_sle(training, ParameterSpace{}, c.k, c.budget, c.seed, c.pef.jobs);
    if (progress) progress("trained ensemble of " + std::to_string(out.sle.members.size()) + " members");
  }
  if (out.sle.members.empty()) throw InferenceError("training produced an empty ensemble");

  struct Method {
    std::string name;
    Solver solver;
  };
  const std::vector<Method> methods{
      {"P/SLE", Solver(out.sle)}, {"P/GES", Solver(default_ges())}, {"P/PC", Solver(default_pc())}};

  for (const auto& net : c.networks) {
    const Dag base = load_base_network(net);
    for (int n : c.sizes) {
      for (int r = 0; r < c.replicates; ++r) {
        const auto s = bench_problem_seed(c.seed, "test/" + net + "/" + std::to_string(n) + "/" + std::to_string(r));
        const Problem p = generate_problem(base, net, n, c.m, s);
        const auto stats = SufficientStats::from_data(p.data);
        for (const auto& method : methods) {
          const auto start = std::chrono::steady_clock::now();
          const PefResult result = p_sle(stats, method.solver, c.pef);
          const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
          out.rows.push_back({p.id, net, n, method.name, evaluate(p.truth_cpdag, result.graph), elapsed, s});
          if (std::holds_alternative<Sle>(method.solver)) {
            auto audits = audit_selection(p.id, result, stats, c.pef.selection_lambda);
            out.audits.insert(out.audits.end(), audits.begin(), audits.end());
          }
        }
        if (progress) progress("finished " + p.id);
      }
    }
  }
  return out;
}

namespace detail {

inline std::string fmt(const char* pattern, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, x);
  return buf;
}

}  // namespace detail

inline std::string format_results_csv(const BenchResult& r) {
  std::string out = "problem_id,method,f1_adj,f1_arr,shd,seed\n";
  for (const auto& row : r.rows) {
    out += row.problem_id + ',' + row.method + ',' + detail::fmt("%.10f", row.scores.f1_adjacent) + ',' +
           detail::fmt("%.10f", row.scores.f1_arrowhead) + ',' + std::to_string(row.scores.shd) + ',' +
           std::to_string(row.seed) + '\n';
  }
  return out;
}

inline std::string format_timings_csv(const BenchResult& r) {
  std::string out = "problem_id,method,runtime_s\n";
  for (const auto& row : r.rows) out += row.problem_id + ',' + row.method + ',' + detail::fmt("%.6f", row.runtime_s) + '\n';
  return out;
}

inline std::string format_audit_csv(const BenchResult& r) {
  std::string out = "problem_id,cluster,chosen,chosen_bic,max_member_bic,recomputed_bic\n";
  for (const auto& a : r.audits) {
    out += a.problem_id + ',' + std::to_string(a.cluster) + ',' + std::to_string(a.chosen) + ',' +
           detail::fmt("%.17g", a.chosen_bic) + ',' + detail::fmt("%.17g", a.max_member_bic) + ',' +
           detail::fmt("%.17g", a.recomputed_bic) + '\n';
  }
  return out;
}

/// results.csv, audit.csv and sle.json are deterministic; timings.csv is not.
inline void write_bench(const std::filesystem::path& dir, const BenchResult& r) {
  std::filesystem::create_directories(dir);
  write_text_file((dir / "results.csv").string(), format_results_csv(r));
  write_text_file((dir / "audit.csv").string(), format_audit_csv(r));
  write_text_file((dir / "timings.csv").string(), format_timings_csv(r));
  write_text_file((dir / "sle.json").string(), to_json(r.sle).dump(2) + "\n");
}

}  // namespace slearn
