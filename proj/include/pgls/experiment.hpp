#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pgls/coop.hpp"
#include "pgls/gls.hpp"
#include "pgls/metrics.hpp"
#include "pgls/tsp_instance.hpp"

namespace pgls {

enum class Algorithm { gls, ebgls, parallel };

inline std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::gls: return "gls";
    case Algorithm::ebgls: return "ebgls";
    case Algorithm::parallel: return "parallel";
  }
  return "?";
}

struct TargetSpec {
  enum class Kind { none, optimum, cost } kind = Kind::none;
  Cost cost = 0;

  /// "none", "optimum" or a non-negative integer cost.
  static TargetSpec parse(std::string_view s) {
    if (s == "none") return {};
    if (s == "optimum") return {Kind::optimum, 0};
    Cost c = 0;
    if (!detail::parse_number(s, c) || c < 0) throw ConfigError("target must be 'none', 'optimum' or a cost");
    return {Kind::cost, c};
  }
};

struct ExperimentConfig {
  std::string instance_path;
  std::optional<std::string> optima_path;
  Algorithm algo = Algorithm::ebgls;
  Strategy strategy = Strategy::elite_biased;
  TopologyKind topology = TopologyKind::ring;
  std::size_t k = 1;
  std::uint64_t seed_base = 1;
  GlsParams gls;
  std::size_t nn_k = 10;
  std::optional<double> max_seconds;
  std::optional<std::size_t> max_iterations;
  TargetSpec target;
  std::size_t reps = 1;
  std::string out;  // output prefix: <out>.csv, <out>.json, <out>.trace.jsonl
  bool trace = false;
  Scheduler scheduler = Scheduler::threads;
  std::optional<std::string> save_best_tour;

  /// Worker count actually used (sequential algorithms run one worker).
  std::size_t workers() const { return algo == Algorithm::parallel ? k : 1; }

  void validate() const {
    if (reps < 1) throw ConfigError("--reps must be >= 1");
    if (nn_k < 1) throw ConfigError("--nn-k must be >= 1");
    if (!max_seconds && !max_iterations && target.kind == TargetSpec::Kind::none) {
      throw ConfigError("no stop criterion: give --max-seconds, --max-iterations or --target");
    }
    if (max_seconds && !(*max_seconds > 0.0)) throw ConfigError("--max-seconds must be positive");
    if (algo == Algorithm::parallel) {
      if (k < 2) throw ConfigError("parallel runs need --k >= 2");
      if (exchanges_solutions(strategy)) build_topology(topology, k);
    }
    gls.validate();
  }
};

/// Seed of worker w in repetition r: base + r * K + w.
inline std::uint64_t worker_seed(std::uint64_t base, std::size_t rep, std::size_t k, std::size_t worker) {
  return base + rep * k + worker;
}

struct RunRow {
  std::size_t run_id = 0;
  std::size_t worker_id = 0;
  std::uint64_t seed = 0;
  Cost final_cost = 0;
  std::optional<double> excess_pct;
  bool success = false;
  double wall_seconds = 0.0;
  std::size_t iterations = 0;
  std::size_t sends = 0;
  std::size_t receives = 0;
  std::size_t penalizations = 0;
};

struct ResultTable {
  std::string instance;
  std::optional<Cost> optimum;
  std::vector<RunRow> rows;
};

inline constexpr std::string_view kCsvHeader =
    "run_id,worker_id,seed,final_cost,excess_pct,success,wall_seconds,iterations,sends,receives,penalizations";

namespace detail {

inline std::string fixed(double v, int precision) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, precision);
  return std::string(buf, end);
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace detail

/// Per-run CSV. A leading `# instance=... optimum=...` line identifies the
/// instance; numbers use '.' and fixed precision (excess: 4 decimals).
inline void write_csv(std::ostream& out, const ResultTable& t) {
  out << "# instance=" << t.instance << " optimum=" << (t.optimum ? std::to_string(*t.optimum) : "none") << '\n';
  out << kCsvHeader << '\n';
  for (const RunRow& r : t.rows) {
    out << r.run_id << ',' << r.worker_id << ',' << r.seed << ',' << r.final_cost << ','
        << (r.excess_pct ? detail::fixed(*r.excess_pct, 4) : "") << ',' << (r.success ? 1 : 0) << ','
        << detail::fixed(r.wall_seconds, 6) << ',' << r.iterations << ',' << r.sends << ',' << r.receives << ','
        << r.penalizations << '\n';
  }
}

inline ResultTable read_csv(std::istream& in) {
  ResultTable t;
  std::string raw;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = detail::trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      for (auto tok : detail::tokens(line.substr(1))) {
        const auto eq = tok.find('=');
        if (eq == std::string_view::npos) continue;
        const auto key = tok.substr(0, eq), value = tok.substr(eq + 1);
        if (key == "instance") {
          t.instance = std::string(value);
        } else if (key == "optimum" && value != "none") {
          Cost c = 0;
          if (!detail::parse_number(value, c)) throw ParseError(lineno, "malformed optimum");
          t.optimum = c;
        }
      }
      continue;
    }
    if (!header_seen) {
      if (line != kCsvHeader) throw ParseError(lineno, "unexpected CSV header");
      header_seen = true;
      continue;
    }
    const auto f = detail::split_csv(line);
    if (f.size() != 11) throw ParseError(lineno, "expected 11 CSV fields");
    RunRow r;
    int success = 0;
    bool ok = detail::parse_number(f[0], r.run_id) && detail::parse_number(f[1], r.worker_id) &&
              detail::parse_number(f[2], r.seed) && detail::parse_number(f[3], r.final_cost) &&
              detail::parse_number(f[5], success) && detail::parse_number(f[6], r.wall_seconds) &&
              detail::parse_number(f[7], r.iterations) && detail::parse_number(f[8], r.sends) &&
              detail::parse_number(f[9], r.receives) && detail::parse_number(f[10], r.penalizations);
    if (!f[4].empty()) {
      double e = 0.0;
      ok = ok && detail::parse_number(f[4], e);
      r.excess_pct = e;
    }
    if (!ok) throw ParseError(lineno, "malformed CSV row");
    r.success = success != 0;
    t.rows.push_back(r);
  }
  if (!header_seen) throw ParseError(0, "missing CSV header");
  return t;
}

inline ResultTable load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return read_csv(in);
}

/// Run-level view of the per-worker rows: best cost over workers, longest
/// worker wall time, success if any worker succeeded.
struct RunOutcome {
  std::size_t run_id = 0;
  Cost best_cost = 0;
  std::optional<double> best_excess;
  double wall_seconds = 0.0;
  bool success = false;
};

inline std::vector<RunOutcome> run_outcomes(const ResultTable& t) {
  std::map<std::size_t, RunOutcome> by_run;
  for (const RunRow& r : t.rows) {
    auto [it, fresh] = by_run.try_emplace(r.run_id);
    RunOutcome& o = it->second;
    if (fresh || r.final_cost < o.best_cost) {
      o.best_cost = r.final_cost;
      o.best_excess = r.excess_pct;
    }
    o.run_id = r.run_id;
    o.wall_seconds = std::max(o.wall_seconds, r.wall_seconds);
    o.success = o.success || r.success;
  }
  std::vector<RunOutcome> out;
  for (auto& [id, o] : by_run) out.push_back(o);
  return out;
}

inline std::vector<double> best_excesses(const ResultTable& t) {
  std::vector<double> xs;
  for (const auto& o : run_outcomes(t)) {
    if (!o.best_excess) throw std::runtime_error("result table has no excess values (unknown optimum)");
    xs.push_back(*o.best_excess);
  }
  return xs;
}

/// Summary statistics; every value is derived from the table alone.
inline nlohmann::json summarize(const ResultTable& t) {
  const auto outcomes = run_outcomes(t);
  nlohmann::json j;
  j["instance"] = t.instance;
  j["optimum"] = t.optimum ? nlohmann::json(*t.optimum) : nlohmann::json(nullptr);
  j["runs"] = outcomes.size();
  std::size_t successes = 0;
  std::vector<double> times, success_times, excesses;
  Cost best = std::numeric_limits<Cost>::max();
  for (const auto& o : outcomes) {
    successes += o.success;
    times.push_back(o.wall_seconds);
    if (o.success) success_times.push_back(o.wall_seconds);
    if (o.best_excess) excesses.push_back(*o.best_excess);
    best = std::min(best, o.best_cost);
  }
  j["success_count"] = successes;
  j["best_cost"] = outcomes.empty() ? nlohmann::json(nullptr) : nlohmann::json(best);
  j["mean_runtime"] = times.empty() ? nlohmann::json(nullptr) : nlohmann::json(mean(times));
  j["mean_runtime_success"] = success_times.empty() ? nlohmann::json(nullptr) : nlohmann::json(mean(success_times));
  if (!excesses.empty()) {
    j["mean_excess"] = mean(excesses);
    j["median_excess"] = median(excesses);
  } else {
    j["mean_excess"] = nullptr;
    j["median_excess"] = nullptr;
  }
  return j;
}

struct Comparison {
  double median_a = 0.0, median_b = 0.0, mean_a = 0.0, mean_b = 0.0;
  MannWhitneyResult test;
  std::size_t runs_a = 0, runs_b = 0;

  nlohmann::json to_json() const {
    return {{"runs_a", runs_a},     {"runs_b", runs_b},     {"median_excess_a", median_a},
            {"median_excess_b", median_b}, {"mean_excess_a", mean_a}, {"mean_excess_b", mean_b},
            {"u", test.u},          {"p_value", test.p_value}};
  }
};

/// Mann-Whitney comparison of the per-run best excess of two result tables.
inline Comparison compare_results(const ResultTable& a, const ResultTable& b) {
  if (a.instance != b.instance || a.optimum != b.optimum) {
    throw std::runtime_error("result tables are for different instances ('" + a.instance + "' vs '" + b.instance +
                             "')");
  }
  const auto xa = best_excesses(a), xb = best_excesses(b);
  if (xa.empty() || xb.empty()) throw std::runtime_error("cannot compare an empty result table");
  Comparison c;
  c.runs_a = xa.size();
  c.runs_b = xb.size();
  c.median_a = median(xa);
  c.median_b = median(xb);
  c.mean_a = mean(xa);
  c.mean_b = mean(xb);
  c.test = mann_whitney_u(xa, xb);
  return c;
}

inline nlohmann::json event_json(std::size_t run_id, const Event& e, std::size_t worker) {
  nlohmann::json j{{"run_id", run_id},       {"worker_id", worker}, {"time", e.time},
                   {"iteration", e.iteration}, {"kind", to_string(e.kind)}, {"cost", e.cost}};
  if (e.peer != Event::kNoPeer) j["peer"] = e.peer;
  if (!e.edges.empty()) {
    auto& edges = j["edges"] = nlohmann::json::array();
    for (const Edge& x : e.edges) edges.push_back({x.a, x.b});
  }
  return j;
}

struct ExperimentOutput {
  ResultTable table;
  nlohmann::json summary;
  std::vector<ParallelResult> runs;
};

inline std::optional<Cost> resolve_optimum(const TspInstance& inst, const ExperimentConfig& cfg) {
  if (cfg.optima_path) return OptimaRegistry::load(*cfg.optima_path).find(inst.name());
  return known_optimum(inst.name());
}

/// Executes cfg.reps runs and, when cfg.out is set, writes the CSV, the
/// summary JSON and (with cfg.trace) the event log.
inline ExperimentOutput run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
  cfg.validate();
  TspInstance inst = load_tsplib(cfg.instance_path);
  inst.set_known_optimum(resolve_optimum(inst, cfg));
  const auto& optimum = inst.known_optimum();

  StopCriterion stop;
  stop.max_seconds = cfg.max_seconds;
  stop.max_iterations = cfg.max_iterations;
  if (cfg.target.kind == TargetSpec::Kind::optimum) {
    if (!optimum) throw ConfigError("no known optimum for instance '" + inst.name() + "'");
    stop.target = *optimum;
  } else if (cfg.target.kind == TargetSpec::Kind::cost) {
    stop.target = cfg.target.cost;
  }

  const std::size_t k = cfg.workers();
  ParallelConfig pc;
  pc.gls = cfg.gls;
  pc.scheduler = cfg.scheduler;
  pc.trace_penalties = cfg.trace;
  switch (cfg.algo) {
    case Algorithm::gls:
      pc.strategy = Strategy::independent;
      pc.use_elite = false;
      break;
    case Algorithm::ebgls:
      pc.strategy = Strategy::independent;
      pc.use_elite = true;
      break;
    case Algorithm::parallel:
      pc.strategy = cfg.strategy;
      pc.use_elite = true;
      break;
  }
  const Topology topo = (cfg.algo == Algorithm::parallel && exchanges_solutions(cfg.strategy))
                            ? build_topology(cfg.topology, k)
                            : Topology::isolated(k);
  const NeighborLists nl(inst, cfg.nn_k);

  ExperimentOutput out;
  out.table.instance = inst.name();
  out.table.optimum = optimum;
  const std::optional<Cost> success_at = stop.target ? stop.target : optimum;

  std::ofstream trace;
  if (cfg.trace && !cfg.out.empty()) {
    trace.open(cfg.out + ".trace.jsonl");
    if (!trace) throw std::runtime_error("cannot write '" + cfg.out + ".trace.jsonl'");
  }

  std::optional<std::pair<Cost, std::vector<City>>> overall_best;
  for (std::size_t r = 0; r < cfg.reps; ++r) {
    std::vector<std::uint64_t> seeds(k);
    for (std::size_t w = 0; w < k; ++w) seeds[w] = worker_seed(cfg.seed_base, r, k, w);
    ParallelResult res = run_parallel(inst, nl, topo, pc, seeds, stop);
    for (const RunRecord& rec : res.records) {
      RunRow row;
      row.run_id = r;
      row.worker_id = rec.worker_id;
      row.seed = rec.seed;
      row.final_cost = rec.final_cost;
      if (optimum) row.excess_pct = excess(rec.final_cost, *optimum);
      row.success = success_at && rec.final_cost <= *success_at;
      row.wall_seconds = rec.wall_seconds;
      row.iterations = rec.iterations;
      row.sends = rec.sends;
      row.receives = rec.receives;
      row.penalizations = rec.penalizations;
      out.table.rows.push_back(row);
      if (trace.is_open()) {
        for (const Event& e : rec.events) trace << event_json(r, e, rec.worker_id).dump() << '\n';
      }
    }
    if (!overall_best || res.best_cost < overall_best->first) overall_best.emplace(res.best_cost, res.best_order);
    if (log) {
      *log << "run " << r << ": best " << res.best_cost;
      if (optimum) *log << " (excess " << detail::fixed(excess(res.best_cost, *optimum), 4) << "%)";
      *log << " in " << detail::fixed(res.wall_seconds, 2) << " s\n";
    }
    out.runs.push_back(std::move(res));
  }

  // Summarize what the CSV holds so the JSON is recomputable from it.
  std::stringstream csv_text;
  write_csv(csv_text, out.table);
  out.summary = summarize(read_csv(csv_text));
  out.summary["algo"] = to_string(cfg.algo);
  out.summary["workers"] = k;
  if (cfg.algo == Algorithm::parallel) {
    out.summary["strategy"] = to_string(cfg.strategy);
    out.summary["topology"] = to_string(topo.kind());
  }

  if (!cfg.out.empty()) {
    std::ofstream csv(cfg.out + ".csv");
    if (!csv) throw std::runtime_error("cannot write '" + cfg.out + ".csv'");
    csv << csv_text.str();
    std::ofstream js(cfg.out + ".json");
    js << out.summary.dump(2) << '\n';
  }
  if (cfg.save_best_tour && overall_best) {
    std::ofstream tour(*cfg.save_best_tour);
    if (!tour) throw std::runtime_error("cannot write '" + *cfg.save_best_tour + "'");
    write_tour_file(tour, inst.name() + ".tour", overall_best->second, overall_best->first);
  }
  return out;
}

}  // namespace pgls
