#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pgls/penalty.hpp"
#include "pgls/tour.hpp"
#include "pgls/tsp_instance.hpp"

namespace pgls {

enum class InitialTour { random, nearest_neighbor };

struct GlsParams {
  double lambda_coeff = 0.3;
  /// Utility multiplier for features outside the elite tour (elite-biased modes).
  double w = 2.0;
  /// Elite refresh / exchange period in iterations.
  std::size_t u_cycle = 100;
  /// Fixed penalty weight; when empty it is derived from the first local optimum.
  std::optional<double> lambda;
  InitialTour init = InitialTour::random;

  void validate() const {
    if (!(lambda_coeff > 0.0)) throw std::invalid_argument("lambda coefficient must be > 0");
    if (!(w >= 1.0)) throw std::invalid_argument("w must be >= 1");
    if (u_cycle < 1) throw std::invalid_argument("U must be >= 1");
    if (lambda && !(*lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  }
};

/// lambda = coeff * g(first local optimum) / n
inline double compute_lambda(Cost first_local_opt_cost, std::size_t n, double coeff) {
  if (first_local_opt_cost <= 0) throw std::invalid_argument("compute_lambda: cost must be positive");
  if (n < 3) throw std::invalid_argument("compute_lambda: n must be >= 3");
  if (!(coeff > 0.0)) throw std::invalid_argument("compute_lambda: coefficient must be positive");
  return coeff * static_cast<double>(first_local_opt_cost) / static_cast<double>(n);
}

/// h(s) = g(s) + lambda * sum of penalties of the edges in s.
inline double augmented_cost(const Tour& t, const PenaltyTable& pen, double lambda) {
  std::int64_t penalty_sum = 0;
  for (std::size_t i = 0; i < t.size(); ++i) penalty_sum += pen.get(t.edge_at(i));
  return static_cast<double>(t.cost()) + lambda * static_cast<double>(penalty_sum);
}

/// Penalizing utility of `e` at local optimum `t`: c / (1 + p), multiplied by
/// `w` when an elite tour is given and does not contain `e`. Zero for edges
/// outside `t`.
inline double utility(const Edge& e, const Tour& t, const PenaltyTable& pen, const Tour* elite, double w) {
  if (!t.has_edge(e.a, e.b)) return 0.0;
  const double base = static_cast<double>(t.instance().cost(e.a, e.b)) / (1.0 + pen.get(e));
  if (elite && !elite->has_edge(e.a, e.b)) return w * base;
  return base;
}

/// Relative slack under which two utilities count as tied for the maximum.
inline constexpr double kUtilityTieTolerance = 1e-12;

/// Increments the penalty of every edge of `t` with maximal utility and wakes
/// their endpoints. Returns the penalized edges in tour order.
inline std::vector<Edge> penalize(const Tour& t, PenaltyTable& pen, const Tour* elite, double w,
                                  ActivationBits& bits) {
  const std::size_t n = t.size();
  std::vector<double> util(n);
  double max_util = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    util[i] = utility(t.edge_at(i), t, pen, elite, w);
    max_util = std::max(max_util, util[i]);
  }
  const double threshold = max_util * (1.0 - kUtilityTieTolerance);
  std::vector<Edge> chosen;
  for (std::size_t i = 0; i < n; ++i) {
    if (util[i] >= threshold) chosen.push_back(t.edge_at(i));
  }
  for (const Edge& e : chosen) {
    pen.increment(e);
    bits.set(e.a);
    bits.set(e.b);
  }
  return chosen;
}

struct IterationReport {
  std::size_t iteration = 0;  // value of j after the increment
  Cost local_optimum_cost = 0;
  Cost best_cost = 0;
  bool best_improved = false;
  std::vector<Edge> penalized;
  LocalSearchStats search;
};

/// State of one GLS trajectory: current tour, penalties, don't-look bits,
/// lambda, optional elite tour and the historical best with respect to g.
class GlsEngine {
 public:
  GlsEngine(const TspInstance& inst, const NeighborLists& nl, GlsParams params, Tour start)
      : inst_(&inst),
        nl_(&nl),
        params_(std::move(params)),
        current_(std::move(start)),
        bits_(inst.size(), true),
        best_(current_),
        lambda_(params_.lambda.value_or(0.0)) {
    params_.validate();
    if (&current_.instance() != &inst) throw std::invalid_argument("start tour belongs to another instance");
  }

  static Tour initial_tour(const TspInstance& inst, InitialTour kind, std::uint64_t seed) {
    Rng rng(seed);
    return kind == InitialTour::random ? Tour::random(inst, rng) : Tour::nearest_neighbor(inst, rng);
  }

  /// One GLS iteration: descend to a local optimum of h, then penalize.
  IterationReport step() {
    IterationReport rep;
    const std::size_t before = best_.improvements();
    rep.search = local_search(current_, *nl_, penalties_, lambda_, bits_, &best_);
    if (!lambda_resolved()) {
      first_local_optimum_ = current_.cost();
      lambda_ = compute_lambda(current_.cost(), inst_->size(), params_.lambda_coeff);
    }
    rep.local_optimum_cost = current_.cost();
    rep.penalized = penalize(current_, penalties_, elite_.get(), params_.w, bits_);
    ++iteration_;
    rep.iteration = iteration_;
    rep.best_cost = best_.cost();
    rep.best_improved = best_.improvements() != before;
    return rep;
  }

  void set_elite(std::shared_ptr<const Tour> elite) { elite_ = std::move(elite); }
  void clear_elite() { elite_.reset(); }
  const Tour* elite() const noexcept { return elite_.get(); }

  /// Continues the search from `t`. Penalties and lambda are kept; every city
  /// becomes active.
  void restart_from(const Tour& t) {
    best_.detach(current_);
    current_ = t;
    bits_.set_all();
  }

  const Tour& current() const noexcept { return current_; }
  const PenaltyTable& penalties() const noexcept { return penalties_; }
  const ActivationBits& activation() const noexcept { return bits_; }
  const GlsParams& params() const noexcept { return params_; }
  double lambda() const noexcept { return lambda_; }
  bool lambda_resolved() const noexcept { return params_.lambda.has_value() || first_local_optimum_.has_value(); }
  std::optional<Cost> first_local_optimum() const noexcept { return first_local_optimum_; }
  std::size_t iteration() const noexcept { return iteration_; }
  Cost best_cost() const noexcept { return best_.cost(); }
  std::size_t best_improvements() const noexcept { return best_.improvements(); }
  Tour best_tour() { return Tour(*inst_, best_.order(current_)); }
  const TspInstance& instance() const noexcept { return *inst_; }

 private:
  const TspInstance* inst_;
  const NeighborLists* nl_;
  GlsParams params_;
  Tour current_;
  PenaltyTable penalties_;
  ActivationBits bits_;
  IncumbentTracker best_;
  std::shared_ptr<const Tour> elite_;
  double lambda_;
  std::optional<Cost> first_local_optimum_;
  std::size_t iteration_ = 0;
};

enum class SequentialVariant { gls, ebgls };

/// Sequential GLS, or EBGLS where every U iterations the elite tour is reset
/// to the historical best. `on_iteration(engine, report)` runs after each
/// iteration and returns false to stop.
template <typename OnIteration>
void run_sequential(GlsEngine& engine, SequentialVariant variant, OnIteration&& on_iteration) {
  for (;;) {
    if (variant == SequentialVariant::ebgls && engine.iteration() % engine.params().u_cycle == 0) {
      engine.set_elite(std::make_shared<const Tour>(engine.best_tour()));
    }
    const IterationReport rep = engine.step();
    if (!on_iteration(static_cast<const GlsEngine&>(engine), rep)) break;
  }
}

}  // namespace pgls
