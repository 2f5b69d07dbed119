#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "pgls/penalty.hpp"
#include "pgls/tour.hpp"
#include "pgls/tsp_instance.hpp"

namespace pgls {

enum class EventKind { improvement, send, receive, penalize, stop };

inline std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::improvement: return "improvement";
    case EventKind::send: return "send";
    case EventKind::receive: return "receive";
    case EventKind::penalize: return "penalize";
    case EventKind::stop: return "stop";
  }
  return "?";
}

enum class StopReason { none, target, time_limit, iteration_limit, stop_message };

inline std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::none: return "none";
    case StopReason::target: return "target";
    case StopReason::time_limit: return "time_limit";
    case StopReason::iteration_limit: return "iteration_limit";
    case StopReason::stop_message: return "stop_message";
  }
  return "?";
}

struct Event {
  static constexpr std::size_t kNoPeer = std::numeric_limits<std::size_t>::max();

  double time = 0.0;  // seconds since the run started, common to all workers
  std::size_t iteration = 0;
  EventKind kind = EventKind::improvement;
  Cost cost = 0;                // improvement: new best; send/receive: tour cost
  std::size_t peer = kNoPeer;   // receive: sender; send: number of recipients
  std::vector<Edge> edges;      // penalize only
};

/// Per-worker history of one run.
struct RunRecord {
  std::size_t worker_id = 0;
  std::uint64_t seed = 0;
  std::vector<Event> events;
  Cost final_cost = 0;
  double wall_seconds = 0.0;
  std::size_t iterations = 0;
  std::size_t sends = 0;
  std::size_t receives = 0;
  std::size_t penalizations = 0;
  double lambda = 0.0;
  std::optional<Cost> first_local_optimum;
  StopReason stop_reason = StopReason::none;
};

/// 100 * (cost - optimum) / optimum
inline double excess(Cost cost, Cost optimum) {
  if (optimum <= 0) throw std::invalid_argument("excess: optimum must be positive");
  if (cost < optimum) throw std::domain_error("excess: cost below the registered optimum");
  return 100.0 * static_cast<double>(cost - optimum) / static_cast<double>(optimum);
}

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of an empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

inline double median(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("median of an empty sample");
  std::vector<double> v(xs.begin(), xs.end());
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

namespace detail {
inline double checked_time_mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("speedup: empty runtime sample");
  for (double x : xs) {
    if (!(x > 0.0)) throw std::invalid_argument("speedup: runtimes must be positive");
  }
  return mean(xs);
}
}  // namespace detail

/// E[T_1,1] / E[T_K,K]: parallel runtime against the sequential algorithm.
inline double speedup_s1(std::span<const double> seq_times, std::span<const double> par_times) {
  return detail::checked_time_mean(seq_times) / detail::checked_time_mean(par_times);
}

/// E[T_K,1] / E[T_K,K]: the same K-worker algorithm on one processor and on K.
inline double speedup_s2(std::span<const double> par1_times, std::span<const double> park_times) {
  return detail::checked_time_mean(par1_times) / detail::checked_time_mean(park_times);
}

inline double efficiency(double speedup, std::size_t k) {
  if (k == 0) throw std::invalid_argument("efficiency: K must be positive");
  return speedup / static_cast<double>(k);
}

struct MannWhitneyResult {
  double u = 0.0;        // U of the first sample: pairs with a > b, ties count 1/2
  double p_value = 1.0;  // two-sided, normal approximation
  double z = 0.0;
};

/// Mann-Whitney U test. U comes from the rank sum with average ranks for ties;
/// the p-value uses the normal approximation with tie and continuity
/// corrections.
inline MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("mann_whitney_u: empty sample");
  const std::size_t n1 = a.size(), n2 = b.size(), n = n1 + n2;

  std::vector<std::pair<double, bool>> pooled;  // value, from_a
  pooled.reserve(n);
  for (double x : a) pooled.emplace_back(x, true);
  for (double x : b) pooled.emplace_back(x, false);
  std::sort(pooled.begin(), pooled.end(), [](const auto& l, const auto& r) { return l.first < r.first; });

  double rank_sum_a = 0.0;
  double tie_term = 0.0;  // sum of t^3 - t over tie groups
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && pooled[j].first == pooled[i].first) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks i+1 .. j
    for (std::size_t k = i; k < j; ++k) {
      if (pooled[k].second) rank_sum_a += avg_rank;
    }
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }

  MannWhitneyResult res;
  const double dn1 = static_cast<double>(n1), dn2 = static_cast<double>(n2), dn = static_cast<double>(n);
  res.u = rank_sum_a - dn1 * (dn1 + 1.0) / 2.0;
  const double mu = dn1 * dn2 / 2.0;
  const double var = n > 1 ? dn1 * dn2 / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0))) : 0.0;
  if (var <= 0.0) return res;
  const double dev = std::max(0.0, std::abs(res.u - mu) - 0.5);
  res.z = dev / std::sqrt(var);
  res.p_value = std::min(1.0, std::erfc(res.z / std::sqrt(2.0)));
  return res;
}

using EdgeSet = std::unordered_set<std::uint64_t>;

/// Union of the edges of the given reference tours.
inline EdgeSet golden_edges(std::span<const Tour> tours) {
  EdgeSet out;
  for (const Tour& t : tours) {
    for (std::size_t i = 0; i < t.size(); ++i) out.insert(t.edge_at(i).key());
  }
  return out;
}

/// Share of all penalty mass that sits on golden edges; 0 without penalties.
inline double undesirable_penalty_ratio(const PenaltyTable& pen, const EdgeSet& golden) {
  if (pen.total() == 0) return 0.0;
  std::int64_t on_golden = 0;
  pen.for_each([&](const Edge& e, PenaltyTable::Count c) {
    if (golden.count(e.key())) on_golden += c;
  });
  return static_cast<double>(on_golden) / static_cast<double>(pen.total());
}

struct ContributorStats {
  std::size_t contributors = 0;
  /// One entry per worker, sorted from largest to smallest.
  std::vector<double> leading_ratios;
  /// Leading time per worker id.
  std::vector<double> leading_time;
};

/// Replays the merged improvement events of one run. The worker whose
/// improvement strictly lowers the overall best becomes the leader until
/// another worker beats it. The span before the first improvement has no
/// leader. `total_time` defaults to the longest worker wall time.
inline ContributorStats best_contributor_stats(std::span<const RunRecord> records,
                                               std::optional<double> total_time = std::nullopt) {
  struct Imp {
    double time;
    std::size_t worker;
    std::size_t seq;
    Cost cost;
  };
  std::vector<Imp> imps;
  double total = 0.0;
  for (std::size_t w = 0; w < records.size(); ++w) {
    total = std::max(total, records[w].wall_seconds);
    std::size_t seq = 0;
    for (const Event& e : records[w].events) {
      if (e.kind == EventKind::improvement) imps.push_back({e.time, w, seq++, e.cost});
    }
  }
  if (total_time) total = *total_time;
  // Identical timestamps: lower worker index first, then event order.
  std::stable_sort(imps.begin(), imps.end(), [](const Imp& x, const Imp& y) {
    if (x.time != y.time) return x.time < y.time;
    if (x.worker != y.worker) return x.worker < y.worker;
    return x.seq < y.seq;
  });

  ContributorStats st;
  st.leading_time.assign(records.size(), 0.0);
  std::vector<char> led(records.size(), 0);
  std::optional<std::size_t> leader;
  Cost best = std::numeric_limits<Cost>::max();
  double since = 0.0;
  for (const Imp& imp : imps) {
    if (imp.cost >= best) continue;
    if (leader) st.leading_time[*leader] += imp.time - since;
    best = imp.cost;
    leader = imp.worker;
    led[imp.worker] = 1;
    since = imp.time;
  }
  if (leader) st.leading_time[*leader] += std::max(0.0, total - since);

  st.contributors = static_cast<std::size_t>(std::count(led.begin(), led.end(), 1));
  st.leading_ratios.resize(records.size());
  for (std::size_t w = 0; w < records.size(); ++w) {
    st.leading_ratios[w] = total > 0.0 ? st.leading_time[w] / total : 0.0;
  }
  std::sort(st.leading_ratios.begin(), st.leading_ratios.end(), std::greater<>());
  return st;
}

}  // namespace pgls
