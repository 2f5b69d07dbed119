// Command-line front end: `pgls run ...` executes seeded experiments,
// `pgls compare a.csv b.csv` runs the Mann-Whitney comparison of two result sets.

#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pgls/experiment.hpp"

namespace {

template <typename E>
CLI::Option* add_enum(CLI::App* app, const std::string& name, E& var, std::map<std::string, E> m,
                      const std::string& desc) {
  auto* opt = app->add_option_function<std::string>(
      name, [&var, m](const std::string& v) { var = m.at(v); }, desc);
  std::vector<std::string> keys;
  for (const auto& kv : m) keys.push_back(kv.first);
  opt->check(CLI::IsMember(keys));
  return opt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Guided local search for the symmetric TSP with cooperative parallel workers"};
  app.require_subcommand(1);

  pgls::ExperimentConfig cfg;
  std::string target = "none";
  double max_seconds = 0.0;
  std::size_t max_iterations = 0;

  auto* run = app.add_subcommand("run", "run GLS / EBGLS / a parallel variant on a TSPLIB instance");
  run->add_option("--instance", cfg.instance_path, "TSPLIB .tsp file")->required()->check(CLI::ExistingFile);
  run->add_option("--optima", cfg.optima_path, "optima registry ('name optimum' per line); default: built-in");
  add_enum<pgls::Algorithm>(run, "--algo", cfg.algo,
                            {{"gls", pgls::Algorithm::gls}, {"ebgls", pgls::Algorithm::ebgls}, {"parallel", pgls::Algorithm::parallel}},
                            "gls | ebgls | parallel");
  add_enum<pgls::Strategy>(run, "--strategy", cfg.strategy, {{"independent", pgls::Strategy::independent},
                                            {"elite_biased", pgls::Strategy::elite_biased},
                                            {"restart", pgls::Strategy::restart},
                                            {"restart_elite_biased", pgls::Strategy::restart_elite_biased}}, "independent | elite_biased | restart | restart_elite_biased");
  add_enum<pgls::TopologyKind>(run, "--topology", cfg.topology, {{"ring", pgls::TopologyKind::ring}, {"torus", pgls::TopologyKind::torus}}, "ring | torus");
  run->add_option("--k", cfg.k, "number of workers (parallel)");
  run->add_option("--seed-base", cfg.seed_base, "worker w of repetition r uses seed base + r*K + w");
  run->add_option("--lambda-coeff", cfg.gls.lambda_coeff, "lambda = coeff * g(first local optimum) / n");
  run->add_option("--w", cfg.gls.w, "utility multiplier for edges outside the elite tour");
  run->add_option("--u-cycle", cfg.gls.u_cycle, "elite refresh / exchange period in iterations");
  run->add_option("--nn-k", cfg.nn_k, "neighbour list length");
  run->add_option("--max-seconds", max_seconds, "wall-clock limit per run");
  run->add_option("--max-iterations", max_iterations, "iteration limit per worker");
  run->add_option("--target", target, "none | optimum | <cost>");
  run->add_option("--reps", cfg.reps, "number of runs");
  run->add_option("--out", cfg.out, "output prefix for <out>.csv, <out>.json, <out>.trace.jsonl");
  run->add_flag("--trace", cfg.trace, "write the full per-worker event log");
  add_enum<pgls::Scheduler>(run, "--scheduler", cfg.scheduler,
                            {{"threads", pgls::Scheduler::threads}, {"round_robin", pgls::Scheduler::round_robin}},
                            "threads | round_robin");
  add_enum<pgls::InitialTour>(run, "--init", cfg.gls.init, {{"random", pgls::InitialTour::random}, {"nn", pgls::InitialTour::nearest_neighbor}}, "random | nn");
  run->add_option("--save-tour", cfg.save_best_tour, "write the best tour found as a TSPLIB .tour file");

  std::string csv_a, csv_b, compare_json;
  auto* cmp = app.add_subcommand("compare", "Mann-Whitney U test on the per-run best excess of two result CSVs");
  cmp->add_option("a", csv_a, "first result CSV")->required();
  cmp->add_option("b", csv_b, "second result CSV")->required();
  cmp->add_option("--json", compare_json, "also write the comparison as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      if (run->count("--max-seconds")) cfg.max_seconds = max_seconds;
      if (run->count("--max-iterations")) cfg.max_iterations = max_iterations;
      cfg.target = pgls::TargetSpec::parse(target);
      const auto out = pgls::run_experiment(cfg, &std::cerr);
      std::cout << out.summary.dump(2) << '\n';
    } else {
      const auto a = pgls::load_csv(csv_a);
      const auto b = pgls::load_csv(csv_b);
      const auto c = pgls::compare_results(a, b);
      std::cout << "instance        " << a.instance << '\n'
                << "runs            " << c.runs_a << " vs " << c.runs_b << '\n'
                << "median excess   " << pgls::detail::fixed(c.median_a, 4) << " vs "
                << pgls::detail::fixed(c.median_b, 4) << '\n'
                << "mean excess     " << pgls::detail::fixed(c.mean_a, 4) << " vs " << pgls::detail::fixed(c.mean_b, 4)
                << '\n'
                << "U               " << c.test.u << '\n'
                << "p-value         " << c.test.p_value << '\n';
      if (!compare_json.empty()) {
        std::ofstream js(compare_json);
        js << c.to_json().dump(2) << '\n';
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
