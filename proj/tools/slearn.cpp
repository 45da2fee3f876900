// slearn: generate problems, train ensembles, learn and score structures.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "slearn/slearn.hpp"

namespace fs = std::filesystem;
using namespace slearn;

namespace {

enum Exit { kOk = 0, kArgument = 2, kData = 3, kInternal = 4 };

// A JSON object with "kind" is one config; a list or an object with
// "members" is an ensemble. "ges-default" and "pc-default" are built in.
Solver load_solver(const std::string& arg) {
  if (arg == "ges-default") return default_ges();
  if (arg == "pc-default") return default_pc();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(arg));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(arg + ": " + e.what());
  }
  if (j.is_object() && j.contains("kind")) return config_from_json(j);
  return sle_from_json(j);
}

// Short label used in CSV rows, matching the bench's method names.
std::string solver_label(const Solver& s) {
  if (const auto* c = std::get_if<AlgorithmConfig>(&s)) return std::holds_alternative<GesConfig>(*c) ? "GES" : "PC";
  return "SLE";
}

std::string solver_description(const Solver& s) {
  if (const auto* c = std::get_if<AlgorithmConfig>(&s)) return describe(*c);
  return "SLE(" + std::to_string(std::get<Sle>(s).members.size()) + ")";
}

std::vector<fs::path> bundle_dirs(const fs::path& root) {
  std::vector<fs::path> out;
  if (fs::exists(root / "meta.json")) return {root};
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::exists(entry.path() / "meta.json")) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw FormatError("no problem bundles under " + root.string());
  return out;
}

std::vector<std::string> parse_name_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(',', start), text.size());
    out.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

struct GenArgs {
  std::string base;
  int n = 0;
  long m = 1000;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_gen(const GenArgs& a) {
  const Problem p = generate_problem(load_base_network(a.base), a.base, a.n, a.m, a.seed);
  write_problem(a.out, p);
  std::cout << p.id << ": " << p.truth.size() << " variables, " << p.copies << " copies, " << p.cross_edges
            << " cross edges, " << p.data.samples() << " samples\n";
  return kOk;
}

struct TrainArgs {
  std::string problems;
  std::size_t k = 4;
  std::size_t budget = 200;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out;
};

int cmd_train(const TrainArgs& a) {
  std::vector<TrainingProblem> training;
  for (const auto& dir : bundle_dirs(a.problems)) training.push_back(training_problem(read_problem(dir)));
  GreedyResult<AlgorithmConfig> run;
  const Sle sle = auto_sle(training, ParameterSpace{}, a.k, a.budget, a.seed, a.jobs, nullptr, &run);
  for (std::size_t i = 0; i < sle.members.size(); ++i) {
    std::cout << "iteration " << i + 1 << ": + " << describe(sle.members[i]) << "  Q = " << sle.q_trace[i] << '\n';
  }
  if (run.stopped_early) std::cout << "stopped early: no positive marginal gain\n";
  if (sle.members.empty()) std::cerr << "warning: ensemble is empty\n";
  write_text_file(a.out, to_json(sle).dump(2) + "\n");
  return kOk;
}

struct RunArgs {
  std::string bundle;
  std::string solver;
  std::string mode = "pef";
  std::string out;
  std::string trace;
  double max_frac = 0.10;
  double min_frac = 0.05;
  double fuse_lambda = 2.0;
  double selection_lambda = 2.0;
  int jobs = 1;
};

int cmd_run(const RunArgs& a) {
  const Problem p = read_problem(a.bundle);
  const Solver solver = load_solver(a.solver);
  const auto stats = SufficientStats::from_data(p.data);
  const auto start = std::chrono::steady_clock::now();
  Cpdag graph;
  nlohmann::json trace;
  if (a.mode == "pef") {
    const PefResult r = p_sle(stats, solver, {a.max_frac, a.min_frac, a.fuse_lambda, a.selection_lambda, a.jobs});
    graph = r.graph;
    trace = trace_json(r);
  } else {
    SolverOutput s = solve(solver, stats, a.selection_lambda, a.jobs);
    graph = std::move(s.graph);
    if (s.chosen) trace["chosen_member"] = *s.chosen;
  }
  const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_text_file(a.out, format_graph(graph));
  const std::string method = (a.mode == "pef" ? "P/" : "") + solver_label(solver);
  const nlohmann::json meta{{"problem_id", p.id}, {"method", method}, {"solver", solver_description(solver)}, {"mode", a.mode},
                            {"runtime_s", runtime},  {"seed", p.seed},   {"edges", graph.edge_count()}};
  write_text_file(a.out + ".meta.json", meta.dump(2) + "\n");
  if (!a.trace.empty()) write_text_file(a.trace, trace.dump(2) + "\n");
  std::cout << method << " on " << p.id << ": " << graph.edge_count() << " edges in " << runtime << " s\n";
  return kOk;
}

struct EvalArgs {
  std::string bundle;
  std::string graph;
  std::string method;
  std::string format = "csv";
};

int cmd_eval(const EvalArgs& a) {
  const Problem p = read_problem(a.bundle);
  const std::string text = read_text_file(a.graph);
  // A DAG is scored through its equivalence class.
  const Cpdag est = detail::parse_graph_text(text).is_dag ? dag_to_cpdag(parse_dag(text)) : parse_pdag(text);
  if (est.size() != p.truth.size()) {
    throw FormatError("learned graph has " + std::to_string(est.size()) + " nodes, truth has " +
                      std::to_string(p.truth.size()));
  }
  std::string method = a.method;
  double runtime = 0.0;
  if (fs::exists(a.graph + ".meta.json")) {
    const auto meta = nlohmann::json::parse(read_text_file(a.graph + ".meta.json"));
    if (method.empty()) method = meta.value("method", std::string());
    runtime = meta.value("runtime_s", 0.0);
  }
  if (method.empty()) method = "unknown";
  const Scores s = evaluate(p.truth_cpdag, est);
  if (a.format == "json") {
    const nlohmann::json row{{"problem_id", p.id}, {"method", method}, {"f1_adj", s.f1_adjacent},
                             {"f1_arr", s.f1_arrowhead}, {"shd", s.shd}, {"runtime_s", runtime}, {"seed", p.seed}};
    std::cout << row.dump() << '\n';
  } else {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.10f,%.10f,%zu,%.6f,", s.f1_adjacent, s.f1_arrowhead, s.shd, runtime);
    std::cout << "problem_id,method,f1_adj,f1_arr,shd,runtime_s,seed\n"
              << p.id << ',' << method << ',' << buf << p.seed << '\n';
  }
  return kOk;
}

struct BenchArgs {
  std::string out;
  std::uint64_t seed = 0;
  int replicates = 10;
  std::string sizes = "200,500";
  std::string networks = "asia8,alarm37";
  long m = 1000;
  std::size_t k = 4;
  std::size_t budget = 24;
  std::string sle;
  int jobs = 1;
  bool quiet = false;
};

int cmd_bench(const BenchArgs& a) {
  BenchConfig c;
  c.seed = a.seed;
  c.replicates = a.replicates;
  c.sizes.clear();
  for (const auto& item : parse_name_list(a.sizes)) c.sizes.push_back(std::stoi(item));
  c.networks = parse_name_list(a.networks);
  c.m = a.m;
  c.k = a.k;
  c.budget = a.budget;
  c.pef.jobs = a.jobs;
  std::optional<Sle> sle;
  if (!a.sle.empty()) sle = load_sle(a.sle);
  auto progress = [&](const std::string& line) {
    if (!a.quiet) std::cerr << line << '\n';
  };
  const BenchResult r = run_bench(c, sle ? &*sle : nullptr, progress);
  write_bench(a.out, r);
  std::cout << "wrote " << r.rows.size() << " rows to " << (fs::path(a.out) / "results.csv").string() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structure learning ensembles with partition-estimate-fuse"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a replicated-network problem bundle");
  g->add_option("--base", gen.base, "Base network fixture name (asia8, alarm37, ...)")->required();
  g->add_option("--n", gen.n, "Target number of variables")->required();
  g->add_option("--m", gen.m, "Samples")->capture_default_str();
  g->add_option("--seed", gen.seed)->capture_default_str();
  g->add_option("--out", gen.out, "Output bundle directory")->required();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Build an ensemble on a directory of bundles");
  t->add_option("--problems", train.problems, "Bundle directory or directory of bundles")->required();
  t->add_option("--k", train.k, "Ensemble size")->capture_default_str();
  t->add_option("--budget", train.budget, "Evaluations per iteration")->capture_default_str();
  t->add_option("--seed", train.seed)->capture_default_str();
  t->add_option("--jobs", train.jobs)->capture_default_str();
  t->add_option("--out", train.out, "Output ensemble JSON")->required();

  RunArgs run;
  auto* r = app.add_subcommand("run", "Learn a structure for one bundle");
  r->add_option("--bundle", run.bundle)->required();
  r->add_option("--solver", run.solver, "Config or ensemble JSON, or ges-default / pc-default")->required();
  r->add_option("--mode", run.mode)->check(CLI::IsMember({"pef", "direct"}))->capture_default_str();
  r->add_option("--out", run.out, "Learned graph file")->required();
  r->add_option("--trace", run.trace, "Write partition / selection / fusion log as JSON");
  r->add_option("--max-frac", run.max_frac)->capture_default_str();
  r->add_option("--min-frac", run.min_frac)->capture_default_str();
  r->add_option("--fuse-lambda", run.fuse_lambda)->capture_default_str();
  r->add_option("--selection-lambda", run.selection_lambda)->capture_default_str();
  r->add_option("--jobs", run.jobs)->capture_default_str();

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Score a learned graph against a bundle's truth");
  e->add_option("--bundle", eval.bundle)->required();
  e->add_option("--graph", eval.graph)->required();
  e->add_option("--method", eval.method, "Method label (defaults to the run metadata)");
  e->add_option("--format", eval.format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Train, run P/SLE and baselines on a seeded sweep");
  b->add_option("--out", bench.out, "Output directory")->required();
  b->add_option("--seed", bench.seed)->capture_default_str();
  b->add_option("--replicates", bench.replicates)->capture_default_str();
  b->add_option("--sizes", bench.sizes)->capture_default_str();
  b->add_option("--networks", bench.networks)->capture_default_str();
  b->add_option("--m", bench.m)->capture_default_str();
  b->add_option("--k", bench.k)->capture_default_str();
  b->add_option("--budget", bench.budget)->capture_default_str();
  b->add_option("--sle", bench.sle, "Use this ensemble instead of training one");
  b->add_option("--jobs", bench.jobs)->capture_default_str();
  b->add_flag("--quiet", bench.quiet);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kArgument;
  }

  try {
    if (*g) return cmd_gen(gen);
    if (*t) return cmd_train(train);
    if (*r) return cmd_run(run);
    if (*e) return cmd_eval(eval);
    if (*b) return cmd_bench(bench);
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kArgument;
  } catch (const FormatError& err) {
    std::cerr << "data error: " << err.what() << '\n';
    return kData;
  } catch (const DegenerateColumnError& err) {
    std::cerr << "data error: " << err.what() << '\n';
    return kData;
  } catch (const GraphError& err) {
    std::cerr << "data error: " << err.what() << '\n';
    return kData;
  } catch (const ConditioningError& err) {
    std::cerr << "data error: " << err.what() << '\n';
    return kData;
  } catch (const TestError& err) {
    std::cerr << "data error: " << err.what() << '\n';
    return kData;
  } catch (const fs::filesystem_error& err) {
    std::cerr << "data error: " << err.what() << '\n';
    return kData;
  } catch (const std::exception& err) {
    std::cerr << "internal error: " << err.what() << '\n';
    return kInternal;
  }
  return kInternal;
}
