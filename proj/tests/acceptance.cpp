// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "oracles.hpp"
#include "slearn/slearn.hpp"

using namespace slearn;
namespace fs = std::filesystem;

namespace {

// Tolerances and sizes, pinned.
constexpr double kCriterion1Seconds = 60.0;
constexpr int kCriterion1DagCount = 29281;
constexpr int kCriterion2Tables = 1000;
constexpr int kCriterion3Instances = 200;
constexpr double kCriterion3Seconds = 30.0;
constexpr int kCriterion4Permutations = 50;
constexpr int kCriterion5Instances = 50;
constexpr int kCriterion5Required = 45;
constexpr double kCriterion6TolSmall = 0.15;
constexpr double kCriterion6TolLarge = 0.05;
constexpr double kCriterion7Margin = 0.02;
constexpr double kCriterion7Seconds = 20.0 * 60.0;
constexpr int kCriterion9Pairs = 500;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* pattern, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, x);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

SufficientStats strong_stats(const Dag& g, Eigen::Index m, std::uint64_t seed) {
  Rng wrng = Rng::substream(seed, "acceptance-weights");
  SemWeights w = draw_sem_weights(g, wrng);
  w.noise_std.assign(static_cast<std::size_t>(g.size()), 1.0);
  Rng nrng = Rng::substream(seed, "acceptance-noise");
  return SufficientStats::from_data(standardize(simulate_sem(g, w, m, nrng)));
}

void equivalence_classes() {
  const auto start = Clock::now();
  const auto dags = oracle::all_dags(5);
  std::map<oracle::MecKey, std::set<std::string>> by_key;
  std::map<std::string, std::set<oracle::MecKey>> by_cpdag;
  for (const auto& m : dags) {
    const auto key = oracle::mec_key(m);
    const std::string cpdag = format_graph(dag_to_cpdag(oracle::to_dag(m)));
    by_key[key].insert(cpdag);
    by_cpdag[cpdag].insert(key);
  }
  std::size_t mismatches = 0;
  for (const auto& [key, cpdags] : by_key) mismatches += cpdags.size() - 1;
  for (const auto& [cpdag, keys] : by_cpdag) mismatches += keys.size() - 1;
  const double t = seconds_since(start);
  const bool ok = static_cast<int>(dags.size()) == kCriterion1DagCount && mismatches == 0 && t < kCriterion1Seconds;
  report(1, ok,
         std::to_string(dags.size()) + " DAGs, " + std::to_string(by_key.size()) + " classes, " +
             std::to_string(mismatches) + " mismatches, " + fmt("%.1f s", t));
}

std::vector<std::vector<double>> random_table(Rng& rng, std::size_t configs, std::size_t problems) {
  std::vector<std::vector<double>> t(configs, std::vector<double>(problems));
  for (auto& row : t)
    for (double& x : row) x = rng.uniform(0.0, 2.0);
  return t;
}

double table_q(const std::vector<std::vector<double>>& t, const std::vector<std::size_t>& rows) {
  if (rows.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t d = 0; d < t.front().size(); ++d) {
    double best = 0.0;
    for (std::size_t r : rows) best = std::max(best, t[r][d]);
    s += best;
  }
  return s / static_cast<double>(t.front().size());
}

void submodularity() {
  Rng rng = Rng::substream(2, "acceptance/tables");
  std::size_t checks = 0, violations = 0;
  for (int trial = 0; trial < kCriterion2Tables; ++trial) {
    const std::size_t configs = 1 + rng.below(8);
    const TableEvaluator eval(random_table(rng, configs, 1 + rng.below(6)));
    // Every nested pair a subset of b drawn from one random three-way split,
    // checked against every candidate.
    std::vector<std::size_t> a, b;
    for (std::size_t c = 0; c < configs; ++c) {
      const auto r = rng.below(3);
      if (r == 0) a.push_back(c);
      if (r <= 1) b.push_back(c);
    }
    const double qa = ensemble_quality(std::span<const std::size_t>(a), eval);
    const double qb = ensemble_quality(std::span<const std::size_t>(b), eval);
    ++checks;
    if (qa > qb) ++violations;
    for (std::size_t theta = 0; theta < configs; ++theta) {
      ++checks;
      if (marginal_gain(std::span<const std::size_t>(b), theta, eval) >
          marginal_gain(std::span<const std::size_t>(a), theta, eval)) {
        ++violations;
      }
      auto a_plus = a;
      a_plus.push_back(theta);
      ++checks;
      if (ensemble_quality(std::span<const std::size_t>(a_plus), eval) < qa) ++violations;
    }
  }
  report(2, violations == 0, std::to_string(checks) + " inequalities, " + std::to_string(violations) + " violations");
}

void greedy_bound() {
  const auto start = Clock::now();
  Rng rng = Rng::substream(3, "acceptance/greedy");
  int violations = 0;
  double worst_ratio = 1.0;
  const double factor = 1.0 - 1.0 / std::exp(1.0);
  for (int trial = 0; trial < kCriterion3Instances; ++trial) {
    const std::size_t configs = 1 + rng.below(8);
    const std::size_t k = 1 + rng.below(3);
    const auto t = random_table(rng, configs, 1 + rng.below(6));
    const TableEvaluator eval(t);
    DiscreteSpace<std::size_t> space;
    for (std::size_t i = 0; i < configs; ++i) space.candidates.push_back(i);
    const auto g = greedy_ensemble(eval, space, k, configs, static_cast<std::uint64_t>(trial));
    double opt = 0.0;
    for (std::uint32_t mask = 1; mask < (1u << configs); ++mask) {
      std::vector<std::size_t> rows;
      for (std::size_t i = 0; i < configs; ++i)
        if (mask & (1u << i)) rows.push_back(i);
      if (rows.size() <= k) opt = std::max(opt, table_q(t, rows));
    }
    const double q = table_q(t, g.members);
    if (q < factor * opt) ++violations;
    if (opt > 0.0) worst_ratio = std::min(worst_ratio, q / opt);
  }
  const double t = seconds_since(start);
  report(3, violations == 0 && t < kCriterion3Seconds,
         std::to_string(violations) + " violations, worst ratio " + fmt("%.4f", worst_ratio) + ", " + fmt("%.2f s", t));
}

void pc_order_independence() {
  Rng rng = Rng::substream(4, "acceptance/pc");
  const Dag g = oracle::random_dag(20, 0.15, rng);
  auto [raw, w] = sample_sem(g, 1000, 4);
  const Dataset data = standardize(raw);
  const auto base = skeleton(run_config(SufficientStats::from_data(data), default_pc()));
  int mismatches = 0;
  for (int trial = 0; trial < kCriterion4Permutations; ++trial) {
    std::vector<Node> perm(20);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span<Node>(perm));
    Eigen::MatrixXd x(data.samples(), 20);
    for (int k = 0; k < 20; ++k) x.col(k) = data.values().col(perm[static_cast<std::size_t>(k)]);
    const Cpdag out = run_config(SufficientStats::from_data(Dataset(x)), default_pc());
    std::vector<Edge> back;
    for (const Edge& e : skeleton(out)) {
      const Node a = perm[static_cast<std::size_t>(e.from)];
      const Node b = perm[static_cast<std::size_t>(e.to)];
      back.push_back({std::min(a, b), std::max(a, b)});
    }
    std::sort(back.begin(), back.end());
    if (back != base) ++mismatches;
  }
  report(4, mismatches == 0,
         std::to_string(kCriterion4Permutations) + " permutations, " + std::to_string(base.size()) +
             " skeleton edges, " + std::to_string(mismatches) + " mismatches");
}

void ges_optimality() {
  const auto dags = oracle::all_dags(4);
  Rng rng = Rng::substream(5, "acceptance/ges");
  int hits = 0;
  for (int trial = 0; trial < kCriterion5Instances; ++trial) {
    const Dag truth = oracle::random_dag(4, 0.5, rng);
    const auto stats = strong_stats(truth, 1000, static_cast<std::uint64_t>(trial));
    double best = -std::numeric_limits<double>::infinity();
    const oracle::Matrix* arg = nullptr;
    for (const auto& m : dags) {
      const double s = total_bic(stats, oracle::to_dag(m), 2.0);
      if (s > best) {
        best = s;
        arg = &m;
      }
    }
    if (run_ges(stats, 2.0, 1000, false) == dag_to_cpdag(oracle::to_dag(*arg))) ++hits;
  }
  report(5, hits >= kCriterion5Required,
         std::to_string(hits) + "/" + std::to_string(kCriterion5Instances) + " instances reach the optimal class");
}

// Expected Frobenius error of a Gaussian sample covariance, from
// Var(S_ij) = (s_ii s_jj + s_ij^2) / m.
double expected_sampling_error(const Eigen::MatrixXd& sigma, Eigen::Index m) {
  const Eigen::VectorXd d = sigma.diagonal();
  const double total = (d * d.transpose()).sum() + sigma.squaredNorm();
  return std::sqrt(total / static_cast<double>(m));
}

void sem_covariance() {
  std::vector<double> small, large, expect_small, expect_large;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng = Rng::substream(seed, "acceptance/sem");
    const Dag g = oracle::random_dag(10, 0.3, rng);
    for (auto [m, out, expect] : {std::tuple<Eigen::Index, std::vector<double>*, std::vector<double>*>{1000, &small, &expect_small},
                                  {10000, &large, &expect_large}}) {
      auto [d, w] = sample_sem(g, m, seed);
      const Eigen::MatrixXd sigma = implied_covariance(g, w);
      out->push_back((covariance_matrix(d) - sigma).norm());
      expect->push_back(expected_sampling_error(sigma, m));
    }
  }
  const double ms = median(small), ml = median(large);
  report(6, ms < kCriterion6TolSmall && ml < kCriterion6TolLarge,
         "median Frobenius error " + fmt("%.4f", ms) + " at m=1000, " + fmt("%.4f", ml) +
             " at m=10000 (sampling theory predicts " + fmt("%.4f", median(expect_small)) + ", " +
             fmt("%.4f", median(expect_large)) + ")");
}

void metrics_oracle() {
  Rng rng = Rng::substream(9, "acceptance/metrics");
  int mismatches = 0;
  for (int trial = 0; trial < kCriterion9Pairs; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(8));
    const Cpdag a = dag_to_cpdag(oracle::random_dag(n, rng.uniform(), rng));
    const Cpdag b = dag_to_cpdag(oracle::random_dag(n, rng.uniform(), rng));
    const auto ref = oracle::metrics(a, b);
    const Scores s = evaluate(a, b);
    if (s.f1_adjacent != ref.f1_adj || s.f1_arrowhead != ref.f1_arr || s.shd != ref.shd) ++mismatches;
  }
  report(9, mismatches == 0, std::to_string(kCriterion9Pairs) + " pairs, " + std::to_string(mismatches) + " mismatches");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void bench_criteria(const fs::path& workdir) {
  const BenchConfig config;
  const auto start = Clock::now();
  const BenchResult first = run_bench(config);
  const double elapsed = seconds_since(start);
  write_bench(workdir / "run1", first);

  // 7: pooled medians per method, then the margin in every (network, n) group.
  std::map<std::string, std::vector<double>> pooled;
  std::map<std::string, std::map<std::string, std::vector<double>>> grouped;
  for (const auto& row : first.rows) {
    pooled[row.method].push_back(row.scores.f1_adjacent);
    grouped[row.network + "/" + std::to_string(row.n)][row.method].push_back(row.scores.f1_adjacent);
  }
  const double sle = median(pooled["P/SLE"]), ges = median(pooled["P/GES"]), pc = median(pooled["P/PC"]);
  bool ok = sle >= ges && sle >= pc && elapsed < kCriterion7Seconds;
  std::string detail = "pooled median F1adj SLE " + fmt("%.4f", sle) + " GES " + fmt("%.4f", ges) + " PC " +
                       fmt("%.4f", pc) + ";";
  for (auto& [group, by_method] : grouped) {
    const double s = median(by_method["P/SLE"]);
    const double better = std::max(median(by_method["P/GES"]), median(by_method["P/PC"]));
    if (s < better - kCriterion7Margin) ok = false;
    detail += " " + group + " " + fmt("%+.4f", s - better);
  }
  detail += "; " + fmt("%.0f s", elapsed);
  report(7, ok, detail);

  // 8: every selection in the P/SLE runs returned the best member BIC.
  std::size_t bad = 0;
  for (const auto& a : first.audits) {
    if (a.chosen_bic != a.max_member_bic || a.recomputed_bic != a.chosen_bic) ++bad;
  }
  report(8, !first.audits.empty() && bad == 0,
         std::to_string(first.audits.size()) + " selections audited, " + std::to_string(bad) + " mismatches");

  metrics_oracle();

  // 10: a second full run writes the same bytes.
  const BenchResult second = run_bench(config);
  write_bench(workdir / "run2", second);
  std::vector<std::string> differing;
  for (const char* f : {"results.csv", "audit.csv", "sle.json"}) {
    if (slurp(workdir / "run1" / f) != slurp(workdir / "run2" / f)) differing.push_back(f);
  }
  std::string which;
  for (const auto& f : differing) which += " " + f;
  report(10, differing.empty(), differing.empty() ? "results.csv, audit.csv, sle.json identical" : "differ:" + which);
}

}  // namespace

int main(int argc, char** argv) {
  set_diagnostic_sink({});
  const fs::path workdir = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "slearn_acceptance";
  fs::remove_all(workdir);
  fs::create_directories(workdir);

  equivalence_classes();
  submodularity();
  greedy_bound();
  pc_order_independence();
  ges_optimality();
  sem_covariance();
  bench_criteria(workdir);

  std::printf("%d criteria failed\n", failures);
  return failures;
}
