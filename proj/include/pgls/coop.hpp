#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <exception>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include "pgls/gls.hpp"
#include "pgls/metrics.hpp"
#include "pgls/tour.hpp"
#include "pgls/tsp_instance.hpp"

namespace pgls {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class TopologyKind { isolated, ring, torus };

inline std::string_view to_string(TopologyKind k) {
  switch (k) {
    case TopologyKind::isolated: return "isolated";
    case TopologyKind::ring: return "ring";
    case TopologyKind::torus: return "torus";
  }
  return "?";
}

/// Fixed neighbourhood graph over K workers (0-based ids).
class Topology {
 public:
  TopologyKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return neighbors_.size(); }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  const std::vector<std::size_t>& neighbors(std::size_t worker) const { return neighbors_.at(worker); }

  /// Workers with no neighbours at all.
  static Topology isolated(std::size_t k) {
    if (k < 1) throw ConfigError("at least one worker is required");
    Topology t;
    t.kind_ = TopologyKind::isolated;
    t.neighbors_.assign(k, {});
    return t;
  }

  /// Bidirectional ring: worker i talks to i-1 and i+1 (mod K).
  static Topology ring(std::size_t k) {
    if (k < 3) throw ConfigError("ring topology needs K >= 3");
    Topology t;
    t.kind_ = TopologyKind::ring;
    t.neighbors_.resize(k);
    for (std::size_t i = 0; i < k; ++i) t.neighbors_[i] = {(i + 1) % k, (i + k - 1) % k};
    return t;
  }

  /// Row-major rows x cols grid with wraparound; rows is the largest divisor
  /// of K not above sqrt(K), and both sides must be at least 3.
  static Topology torus(std::size_t k) {
    std::size_t rows = 0;
    for (std::size_t r = 1; r * r <= k; ++r) {
      if (k % r == 0) rows = r;
    }
    if (rows < 3) throw ConfigError("torus topology needs K = rows x cols with rows, cols >= 3; got K = " +
                                    std::to_string(k));
    const std::size_t cols = k / rows;
    Topology t;
    t.kind_ = TopologyKind::torus;
    t.rows_ = rows;
    t.cols_ = cols;
    t.neighbors_.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t r = i / cols, c = i % cols;
      t.neighbors_[i] = {r * cols + (c + 1) % cols, ((r + 1) % rows) * cols + c, r * cols + (c + cols - 1) % cols,
                         ((r + rows - 1) % rows) * cols + c};
    }
    return t;
  }

 private:
  TopologyKind kind_ = TopologyKind::isolated;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::vector<std::size_t>> neighbors_;
};

inline Topology build_topology(TopologyKind kind, std::size_t k) {
  switch (kind) {
    case TopologyKind::isolated: return Topology::isolated(k);
    case TopologyKind::ring: return Topology::ring(k);
    case TopologyKind::torus: return Topology::torus(k);
  }
  throw ConfigError("unknown topology");
}

enum class Strategy { independent, elite_biased, restart, restart_elite_biased };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::independent: return "independent";
    case Strategy::elite_biased: return "elite_biased";
    case Strategy::restart: return "restart";
    case Strategy::restart_elite_biased: return "restart_elite_biased";
  }
  return "?";
}

inline bool exchanges_solutions(Strategy s) { return s != Strategy::independent; }

struct SolutionMsg {
  std::size_t sender = 0;
  std::shared_ptr<const Tour> tour;
  Cost cost = 0;
  std::size_t send_iteration = 0;
  double send_time = 0.0;
};

struct StopMsg {
  std::size_t sender = 0;
};

using Message = std::variant<SolutionMsg, StopMsg>;

/// Unbounded multi-producer inbox. Neither posting nor draining waits for the
/// peer; the lock is only held for the queue operation itself.
class Mailbox {
 public:
  void post(Message m) {
    std::lock_guard lock(mu_);
    if (!closed_) queue_.push_back(std::move(m));
  }

  std::vector<Message> drain() {
    std::lock_guard lock(mu_);
    std::vector<Message> out(std::make_move_iterator(queue_.begin()), std::make_move_iterator(queue_.end()));
    queue_.clear();
    return out;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
  }

  bool closed() const {
    std::lock_guard lock(mu_);
    return closed_;
  }

 private:
  mutable std::mutex mu_;
  std::deque<Message> queue_;
  bool closed_ = false;
};

/// One mailbox per worker.
class Network {
 public:
  explicit Network(std::size_t k) {
    boxes_.reserve(k);
    for (std::size_t i = 0; i < k; ++i) boxes_.push_back(std::make_unique<Mailbox>());
  }

  std::size_t size() const noexcept { return boxes_.size(); }
  Mailbox& mailbox(std::size_t worker) { return *boxes_.at(worker); }
  void post(std::size_t to, Message m) { boxes_.at(to)->post(std::move(m)); }

  void broadcast_stop(std::size_t from) {
    for (std::size_t i = 0; i < boxes_.size(); ++i) {
      if (i != from) boxes_[i]->post(StopMsg{from});
    }
  }

 private:
  std::vector<std::unique_ptr<Mailbox>> boxes_;
};

/// Elite bookkeeping of one worker.
struct EliteState {
  /// Newest solution from each neighbour, indexed like Topology::neighbors().
  std::vector<std::optional<SolutionMsg>> received;
  std::shared_ptr<const Tour> elite;
  Cost elite_cost = 0;
  std::size_t elite_source = 0;
  /// s_hb improved since the last send.
  bool dirty = false;
};

struct RankedSolution {
  Cost cost = 0;
  std::size_t source = 0;
  std::shared_ptr<const Tour> tour;
};

/// S_r together with the worker's own best, ascending by (cost, source id).
inline std::vector<RankedSolution> rank_solutions(const EliteState& st, std::size_t self,
                                                  std::shared_ptr<const Tour> own_best) {
  std::vector<RankedSolution> out;
  out.push_back({own_best->cost(), self, std::move(own_best)});
  for (const auto& slot : st.received) {
    if (slot) out.push_back({slot->cost, slot->sender, slot->tour});
  }
  std::sort(out.begin(), out.end(), [](const RankedSolution& x, const RankedSolution& y) {
    return x.cost != y.cost ? x.cost < y.cost : x.source < y.source;
  });
  return out;
}

/// Strategy-specific use of the ranked set on a U-cycle. `use_elite` chooses
/// elite-biased utilities for the independent strategy (P-I-EBGLS / EBGLS);
/// without it the independent strategy is plain GLS.
inline void apply_strategy(Strategy strategy, bool use_elite, std::span<const RankedSolution> ranked,
                           std::size_t self, EliteState& st, GlsEngine& engine) {
  auto set_elite = [&](const RankedSolution& r) {
    st.elite = r.tour;
    st.elite_cost = r.cost;
    st.elite_source = r.source;
    engine.set_elite(r.tour);
  };
  const RankedSolution* own = nullptr;
  for (const auto& r : ranked) {
    if (r.source == self) own = &r;
  }
  switch (strategy) {
    case Strategy::independent:
      if (use_elite) {
        set_elite(*own);
      } else {
        engine.clear_elite();
      }
      break;
    case Strategy::elite_biased:
      set_elite(ranked.front());
      break;
    case Strategy::restart:
      engine.clear_elite();
      st.elite.reset();
      engine.restart_from(*ranked.front().tour);
      break;
    case Strategy::restart_elite_biased:
      engine.restart_from(*ranked.front().tour);
      set_elite(ranked.size() > 1 ? ranked[1] : *own);
      break;
  }
}

struct StopCriterion {
  std::optional<double> max_seconds;
  std::optional<Cost> target;
  std::optional<std::size_t> max_iterations;

  bool empty() const noexcept { return !max_seconds && !target && !max_iterations; }
};

struct WorkerConfig {
  Strategy strategy = Strategy::elite_biased;
  bool use_elite = true;
  GlsParams gls;
  StopCriterion stop;
  /// Keep penalize events (with their edges) in the record.
  bool trace_penalties = false;
};

/// Monotonic clock shared by all workers of a run.
class RunClock {
 public:
  RunClock() : start_(std::chrono::steady_clock::now()) {}
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

/// A search process: GLS engine plus the exchange protocol around it.
class Worker {
 public:
  Worker(std::size_t id, const TspInstance& inst, const NeighborLists& nl, const Topology& topo, Network& net,
         WorkerConfig cfg, std::uint64_t seed, const RunClock& clock)
      : id_(id),
        topo_(&topo),
        net_(&net),
        cfg_(std::move(cfg)),
        clock_(&clock),
        engine_(inst, nl, cfg_.gls, GlsEngine::initial_tour(inst, cfg_.gls.init, seed)) {
    state_.received.resize(topo.neighbors(id).size());
    record_.worker_id = id;
    record_.seed = seed;
    record_.final_cost = engine_.best_cost();
  }

  Worker(const Worker&) = delete;
  Worker& operator=(const Worker&) = delete;

  /// Runs one loop pass (receive, U-cycle exchange, GLS iteration, stop
  /// checks). Returns false once the worker has stopped.
  bool iterate() {
    if (stopped_) return false;
    if (!drain_inbox()) {
      finish(StopReason::stop_message);
      return false;
    }
    if (engine_.iteration() % cfg_.gls.u_cycle == 0) exchange_cycle();

    const IterationReport rep = engine_.step();
    ++record_.penalizations;
    const double now = clock_->elapsed();
    if (cfg_.trace_penalties) {
      record_.events.push_back({now, rep.iteration, EventKind::penalize, rep.local_optimum_cost, Event::kNoPeer,
                                rep.penalized});
    }
    if (rep.best_improved) {
      state_.dirty = true;
      record_.events.push_back({now, rep.iteration, EventKind::improvement, rep.best_cost, Event::kNoPeer, {}});
    }

    if (cfg_.stop.target && engine_.best_cost() <= *cfg_.stop.target) {
      net_->broadcast_stop(id_);
      finish(StopReason::target);
    } else if (cfg_.stop.max_iterations && engine_.iteration() >= *cfg_.stop.max_iterations) {
      finish(StopReason::iteration_limit);
    } else if (cfg_.stop.max_seconds && now >= *cfg_.stop.max_seconds) {
      finish(StopReason::time_limit);
    }
    return !stopped_;
  }

  /// Moves pending messages into S_r, newest per neighbour. Returns false when
  /// a stop message arrived or the mailbox was closed.
  bool drain_inbox() {
    Mailbox& box = net_->mailbox(id_);
    bool keep_going = !box.closed();
    for (Message& m : box.drain()) {
      if (std::holds_alternative<StopMsg>(m)) {
        keep_going = false;
        continue;
      }
      auto& sol = std::get<SolutionMsg>(m);
      if (!sol.tour || sol.tour->full_cost() != sol.cost) {
        throw std::runtime_error("worker " + std::to_string(id_) + ": received tour does not match its cost");
      }
      const auto& nbrs = topo_->neighbors(id_);
      const auto it = std::find(nbrs.begin(), nbrs.end(), sol.sender);
      if (it == nbrs.end()) throw std::logic_error("message from a non-neighbour");
      ++record_.receives;
      record_.events.push_back(
          {clock_->elapsed(), engine_.iteration(), EventKind::receive, sol.cost, sol.sender, {}});
      state_.received[static_cast<std::size_t>(it - nbrs.begin())] = std::move(sol);
    }
    return keep_going;
  }

  /// The j % U == 0 branch: pick s_e per strategy, send own s_hb if it
  /// changed since the last send.
  void exchange_cycle() {
    auto ranked = rank_solutions(state_, id_, own_best());
    apply_strategy(cfg_.strategy, cfg_.use_elite, ranked, id_, state_, engine_);
    if (exchanges_solutions(cfg_.strategy) && state_.dirty) send_own_best();
  }

  void send_own_best() {
    const auto& nbrs = topo_->neighbors(id_);
    auto best = own_best();
    const double now = clock_->elapsed();
    for (std::size_t peer : nbrs) net_->post(peer, SolutionMsg{id_, best, best->cost(), engine_.iteration(), now});
    state_.dirty = false;
    ++record_.sends;
    record_.events.push_back({now, engine_.iteration(), EventKind::send, best->cost(), nbrs.size(), {}});
  }

  /// Records the final state; idempotent.
  void finish(StopReason why) {
    if (stopped_) return;
    stopped_ = true;
    record_.stop_reason = why;
    record_.wall_seconds = clock_->elapsed();
    record_.final_cost = engine_.best_cost();
    record_.iterations = engine_.iteration();
    record_.lambda = engine_.lambda();
    record_.first_local_optimum = engine_.first_local_optimum();
    record_.events.push_back({record_.wall_seconds, engine_.iteration(), EventKind::stop, record_.final_cost,
                              Event::kNoPeer, {}});
  }

  std::shared_ptr<const Tour> own_best() {
    if (!own_best_ || own_best_->cost() != engine_.best_cost()) {
      own_best_ = std::make_shared<const Tour>(engine_.best_tour());
    }
    return own_best_;
  }

  std::size_t id() const noexcept { return id_; }
  bool stopped() const noexcept { return stopped_; }
  const RunRecord& record() const noexcept { return record_; }
  const EliteState& elite_state() const noexcept { return state_; }
  GlsEngine& engine() noexcept { return engine_; }
  const GlsEngine& engine() const noexcept { return engine_; }

 private:
  std::size_t id_;
  const Topology* topo_;
  Network* net_;
  WorkerConfig cfg_;
  const RunClock* clock_;
  GlsEngine engine_;
  EliteState state_;
  std::shared_ptr<const Tour> own_best_;
  RunRecord record_;
  bool stopped_ = false;
};

enum class Scheduler {
  /// One thread per worker.
  threads,
  /// All workers interleaved on the calling thread, one iteration each per
  /// round in id order. Fully deterministic for every strategy.
  round_robin,
};

struct ParallelConfig {
  Strategy strategy = Strategy::elite_biased;
  bool use_elite = true;
  GlsParams gls;
  Scheduler scheduler = Scheduler::threads;
  bool trace_penalties = false;
};

struct ParallelResult {
  std::vector<RunRecord> records;
  std::vector<PenaltyTable> final_penalties;
  std::vector<City> best_order;
  Cost best_cost = 0;
  std::size_t best_worker = 0;
  /// Time of the improvement that first reached best_cost.
  double best_time = 0.0;
  double wall_seconds = 0.0;
  bool reached_target = false;
};

/// Runs one worker per seed over `topo` until the stop criterion fires. A
/// worker reaching the target broadcasts a stop message to all others.
inline ParallelResult run_parallel(const TspInstance& inst, const NeighborLists& nl, const Topology& topo,
                                   const ParallelConfig& cfg, std::span<const std::uint64_t> seeds,
                                   const StopCriterion& stop) {
  const std::size_t k = topo.size();
  if (k < 1) throw ConfigError("at least one worker is required");
  if (seeds.size() != k) throw ConfigError("need exactly one seed per worker");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != k) throw ConfigError("worker seeds must be distinct");
  if (stop.empty()) throw ConfigError("no stop criterion given");
  if (exchanges_solutions(cfg.strategy) && k > 1 && topo.kind() == TopologyKind::isolated) {
    throw ConfigError("cooperative strategies need a ring or torus topology");
  }
  cfg.gls.validate();

  RunClock clock;
  Network net(k);
  WorkerConfig wc{cfg.strategy, cfg.use_elite, cfg.gls, stop, cfg.trace_penalties};
  std::vector<std::unique_ptr<Worker>> workers;
  workers.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    workers.push_back(std::make_unique<Worker>(i, inst, nl, topo, net, wc, seeds[i], clock));
  }

  if (cfg.scheduler == Scheduler::round_robin || k == 1) {
    bool any = true;
    while (any) {
      any = false;
      for (auto& w : workers) any = w->iterate() || any;
    }
  } else {
    std::vector<std::exception_ptr> errors(k);
    {
      std::vector<std::jthread> threads;
      threads.reserve(k);
      for (std::size_t i = 0; i < k; ++i) {
        threads.emplace_back([&, i] {
          try {
            while (workers[i]->iterate()) {
            }
          } catch (...) {
            errors[i] = std::current_exception();
            net.broadcast_stop(i);
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  ParallelResult res;
  res.wall_seconds = clock.elapsed();
  res.best_cost = std::numeric_limits<Cost>::max();
  res.best_time = std::numeric_limits<double>::infinity();
  for (auto& w : workers) {
    const RunRecord& rec = w->record();
    double reached_at = 0.0;
    for (const Event& e : rec.events) {
      if (e.kind == EventKind::improvement && e.cost == rec.final_cost) {
        reached_at = e.time;
        break;
      }
    }
    if (rec.final_cost < res.best_cost || (rec.final_cost == res.best_cost && reached_at < res.best_time)) {
      res.best_cost = rec.final_cost;
      res.best_time = reached_at;
      res.best_worker = rec.worker_id;
    }
    if (rec.stop_reason == StopReason::target) res.reached_target = true;
  }
  res.best_order = workers[res.best_worker]->engine().best_tour().order();
  for (auto& w : workers) {
    res.records.push_back(w->record());
    res.final_penalties.push_back(w->engine().penalties());
  }
  return res;
}

/// Seeds base, base + 1, ... for the K workers of one run.
inline std::vector<std::uint64_t> consecutive_seeds(std::uint64_t base, std::size_t k) {
  std::vector<std::uint64_t> s(k);
  for (std::size_t i = 0; i < k; ++i) s[i] = base + i;
  return s;
}

}  // namespace pgls
