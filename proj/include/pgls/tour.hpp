#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pgls/penalty.hpp"
#include "pgls/tsp_instance.hpp"

namespace pgls {

using Rng = std::mt19937_64;

/// Unbiased draw from [0, bound). Spelled out so that seeded runs do not
/// depend on the standard library's distribution implementation.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % bound;
}

/// A Hamiltonian cycle over the cities of one instance: the visiting order,
/// its inverse and the cached cyclic length.
class Tour {
 public:
  Tour(const TspInstance& inst, std::vector<City> order) : inst_(&inst), order_(std::move(order)) {
    const std::size_t n = inst.size();
    if (order_.size() != n) throw std::invalid_argument("tour length does not match instance size");
    pos_.assign(n, static_cast<City>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const City c = order_[i];
      if (c >= n || pos_[c] != n) throw std::invalid_argument("tour is not a permutation of the cities");
      pos_[c] = static_cast<City>(i);
    }
    cost_ = full_cost();
  }

  static Tour identity(const TspInstance& inst) {
    std::vector<City> order(inst.size());
    std::iota(order.begin(), order.end(), City{0});
    return Tour(inst, std::move(order));
  }

  static Tour random(const TspInstance& inst, Rng& rng) {
    std::vector<City> order(inst.size());
    std::iota(order.begin(), order.end(), City{0});
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::swap(order[i], order[uniform_below(rng, i + 1)]);
    }
    return Tour(inst, std::move(order));
  }

  /// Greedy nearest-neighbour construction from a random start city.
  static Tour nearest_neighbor(const TspInstance& inst, Rng& rng) {
    const std::size_t n = inst.size();
    std::vector<char> used(n, 0);
    std::vector<City> order;
    order.reserve(n);
    City cur = static_cast<City>(uniform_below(rng, n));
    order.push_back(cur);
    used[cur] = 1;
    while (order.size() < n) {
      City best = 0;
      Cost best_cost = std::numeric_limits<Cost>::max();
      for (City c = 0; c < n; ++c) {
        if (used[c]) continue;
        const Cost d = inst.cost(cur, c);
        if (d < best_cost) {
          best_cost = d;
          best = c;
        }
      }
      order.push_back(best);
      used[best] = 1;
      cur = best;
    }
    return Tour(inst, std::move(order));
  }

  const TspInstance& instance() const noexcept { return *inst_; }
  std::size_t size() const noexcept { return order_.size(); }
  const std::vector<City>& order() const noexcept { return order_; }
  City at(std::size_t position) const { return order_[position]; }
  std::size_t position(City c) const { return pos_[c]; }
  Cost cost() const noexcept { return cost_; }

  City next(City c) const noexcept {
    const std::size_t p = pos_[c] + 1;
    return order_[p == order_.size() ? 0 : p];
  }
  City prev(City c) const noexcept {
    const std::size_t p = pos_[c];
    return order_[p == 0 ? order_.size() - 1 : p - 1];
  }

  bool has_edge(City u, City v) const noexcept { return next(u) == v || prev(u) == v; }

  /// Edge leaving position i in tour direction.
  Edge edge_at(std::size_t i) const { return Edge(order_[i], order_[i + 1 == size() ? 0 : i + 1]); }

  Cost full_cost() const {
    Cost total = 0;
    for (std::size_t i = 0; i < order_.size(); ++i) total += inst_->cost(order_[i], order_[i + 1 == size() ? 0 : i + 1]);
    return total;
  }

  /// Same cycle, possibly rotated or reflected.
  bool same_cycle(const Tour& other) const {
    if (other.size() != size()) return false;
    for (City c = 0; c < size(); ++c) {
      if (!other.has_edge(c, next(c))) return false;
    }
    return true;
  }

  /// Reverses the cyclic position range [from, to] (inclusive).
  void reverse_positions(std::size_t from, std::size_t to) {
    const std::size_t n = size();
    std::size_t len = (to + n - from) % n + 1;
    std::size_t i = from;
    std::size_t j = to;
    for (std::size_t k = 0; k < len / 2; ++k) {
      std::swap(order_[i], order_[j]);
      pos_[order_[i]] = static_cast<City>(i);
      pos_[order_[j]] = static_cast<City>(j);
      i = (i + 1 == n) ? 0 : i + 1;
      j = (j == 0) ? n - 1 : j - 1;
    }
  }

  void add_to_cost(Cost delta) noexcept { cost_ += delta; }

 private:
  const TspInstance* inst_;
  std::vector<City> order_;
  std::vector<City> pos_;
  Cost cost_ = 0;
};

inline Cost tour_cost(const Tour& t) { return t.full_cost(); }

/// k nearest cities of every city, ascending by edge cost (ties by index).
class NeighborLists {
 public:
  NeighborLists(const TspInstance& inst, std::size_t k) {
    const std::size_t n = inst.size();
    if (k == 0) throw std::invalid_argument("neighbor list size must be positive");
    width_ = std::min(k, n - 1);
    flat_.resize(n * width_);
    std::vector<std::pair<Cost, City>> cand(n - 1);
    for (City a = 0; a < n; ++a) {
      std::size_t m = 0;
      for (City b = 0; b < n; ++b) {
        if (b != a) cand[m++] = {inst.cost(a, b), b};
      }
      std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(width_), cand.end());
      for (std::size_t i = 0; i < width_; ++i) flat_[a * width_ + i] = cand[i].second;
    }
  }

  std::span<const City> of(City c) const { return {flat_.data() + c * width_, width_}; }
  std::size_t width() const noexcept { return width_; }
  std::size_t cities() const noexcept { return width_ ? flat_.size() / width_ : 0; }

 private:
  std::size_t width_ = 0;
  std::vector<City> flat_;
};

/// Don't-look bits: a set bit marks a city whose neighbourhood must be scanned.
class ActivationBits {
 public:
  explicit ActivationBits(std::size_t n, bool all_active = true) : n_(n), words_((n + 63) / 64, 0) {
    if (all_active) set_all();
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t count() const noexcept { return count_; }
  bool any() const noexcept { return count_ != 0; }

  bool test(City c) const noexcept { return (words_[c >> 6] >> (c & 63)) & 1u; }

  void set(City c) noexcept {
    auto& w = words_[c >> 6];
    const std::uint64_t m = std::uint64_t{1} << (c & 63);
    if (!(w & m)) {
      w |= m;
      ++count_;
    }
  }
  void clear(City c) noexcept {
    auto& w = words_[c >> 6];
    const std::uint64_t m = std::uint64_t{1} << (c & 63);
    if (w & m) {
      w &= ~m;
      --count_;
    }
  }
  void set_all() noexcept {
    std::fill(words_.begin(), words_.end(), ~std::uint64_t{0});
    if (n_ % 64) words_.back() = (std::uint64_t{1} << (n_ % 64)) - 1;
    count_ = n_;
  }
  void clear_all() noexcept {
    std::fill(words_.begin(), words_.end(), 0);
    count_ = 0;
  }

  /// First active city at or after `from`, wrapping around. Requires any().
  City next_active(City from) const noexcept {
    if (from >= n_) from = 0;
    std::size_t wi = from >> 6;
    std::uint64_t w = words_[wi] & (~std::uint64_t{0} << (from & 63));
    for (std::size_t scanned = 0; scanned <= words_.size(); ++scanned) {
      if (w) return static_cast<City>((wi << 6) + static_cast<std::size_t>(std::countr_zero(w)));
      wi = (wi + 1 == words_.size()) ? 0 : wi + 1;
      w = words_[wi];
    }
    return static_cast<City>(n_);
  }

 private:
  std::size_t n_;
  std::size_t count_ = 0;
  std::vector<std::uint64_t> words_;
};

struct MoveDelta {
  Cost delta_g = 0;
  double delta_h = 0.0;
};

namespace detail {

inline std::pair<std::size_t, std::size_t> check_two_opt_positions(const Tour& t, std::size_t i, std::size_t j) {
  const std::size_t n = t.size();
  if (i >= n || j >= n) throw std::out_of_range("2-opt position out of range");
  if (i > j) std::swap(i, j);
  if (i == j) throw std::invalid_argument("2-opt move needs two distinct edges");
  if (j - i == 1 || (i == 0 && j == n - 1)) throw std::invalid_argument("2-opt move on adjacent edges");
  return {i, j};
}

}  // namespace detail

/// Cost change of replacing tour edges at positions i and j, (t[i],t[i+1]) and
/// (t[j],t[j+1]), by (t[i],t[j]) and (t[i+1],t[j+1]). The tour is not touched.
inline MoveDelta two_opt_delta(const Tour& t, std::size_t i, std::size_t j, const PenaltyTable& pen, double lambda) {
  std::tie(i, j) = detail::check_two_opt_positions(t, i, j);
  const auto& inst = t.instance();
  const std::size_t n = t.size();
  const City a = t.at(i), b = t.at(i + 1), c = t.at(j), d = t.at((j + 1) % n);
  const Cost dg = inst.cost(a, c) + inst.cost(b, d) - inst.cost(a, b) - inst.cost(c, d);
  const std::int64_t dp = std::int64_t{pen.get(a, c)} + pen.get(b, d) - pen.get(a, b) - pen.get(c, d);
  return {dg, static_cast<double>(dg) + lambda * static_cast<double>(dp)};
}

/// Applies the 2-opt move at positions i, j, reversing whichever of the two
/// arcs between the cut points is shorter. Returns delta_g.
inline Cost apply_two_opt(Tour& t, std::size_t i, std::size_t j) {
  std::tie(i, j) = detail::check_two_opt_positions(t, i, j);
  const auto& inst = t.instance();
  const std::size_t n = t.size();
  const City a = t.at(i), b = t.at(i + 1), c = t.at(j), d = t.at((j + 1) % n);
  const Cost dg = inst.cost(a, c) + inst.cost(b, d) - inst.cost(a, b) - inst.cost(c, d);
  const std::size_t inner = j - i;  // positions i+1 .. j
  if (inner <= n - inner) {
    t.reverse_positions(i + 1, j);
  } else {
    t.reverse_positions((j + 1) % n, i);
  }
  t.add_to_cost(dg);
  return dg;
}

/// Historical best tour with respect to g. While the best is the current tour
/// itself no copy is taken; the order is captured just before a move would
/// leave it.
class IncumbentTracker {
 public:
  explicit IncumbentTracker(const Tour& start) : order_(start.order()), cost_(start.cost()) {}

  Cost cost() const noexcept { return cost_; }

  void before_move(const Tour& current, Cost delta_g) {
    if (at_current_ && delta_g >= 0) capture(current);
  }
  void after_move(const Tour& current) {
    if (current.cost() < cost_) {
      cost_ = current.cost();
      at_current_ = true;
      ++improvements_;
    }
  }
  /// Call before the current tour is replaced from outside the local search.
  void detach(const Tour& current) {
    if (at_current_) capture(current);
  }

  /// The best order; `current` is the live tour this tracker follows.
  const std::vector<City>& order(const Tour& current) {
    if (at_current_) capture(current);
    return order_;
  }

  std::size_t improvements() const noexcept { return improvements_; }

 private:
  void capture(const Tour& current) {
    order_ = current.order();
    at_current_ = false;
  }

  std::vector<City> order_;
  Cost cost_;
  bool at_current_ = true;
  std::size_t improvements_ = 0;
};

struct LocalSearchStats {
  std::size_t moves = 0;
  std::size_t evaluations = 0;
};

namespace detail {

// Tries the 2-opt moves around `a` in both tour directions; applies the first
// one with delta_h < 0.
inline bool improve_city(Tour& t, City a, const NeighborLists& nl, const PenaltyTable& pen, double lambda,
                         ActivationBits& bits, IncumbentTracker* tracker, LocalSearchStats& stats) {
  const auto& inst = t.instance();
  const bool penalized = lambda != 0.0 && !pen.empty();
  for (int dir = 0; dir < 2; ++dir) {
    const City b = dir == 0 ? t.next(a) : t.prev(a);
    const Cost g_ab = inst.cost(a, b);
    const std::int64_t p_ab = penalized ? pen.get(a, b) : 0;
    for (City c : nl.of(a)) {
      if (c == b) continue;
      const City d = dir == 0 ? t.next(c) : t.prev(c);
      if (d == a) continue;
      ++stats.evaluations;
      const Cost dg = inst.cost(a, c) + inst.cost(b, d) - g_ab - inst.cost(c, d);
      double dh = static_cast<double>(dg);
      if (penalized) {
        const std::int64_t dp = std::int64_t{pen.get(a, c)} + pen.get(b, d) - p_ab - pen.get(c, d);
        dh += lambda * static_cast<double>(dp);
      }
      if (dh < 0.0) {
        if (tracker) tracker->before_move(t, dg);
        if (dir == 0) {
          apply_two_opt(t, t.position(a), t.position(c));
        } else {
          apply_two_opt(t, t.position(b), t.position(d));
        }
        if (tracker) tracker->after_move(t);
        ++stats.moves;
        bits.set(a);
        bits.set(b);
        bits.set(c);
        bits.set(d);
        return true;
      }
    }
  }
  return false;
}

}  // namespace detail

/// 2-opt descent on h = g + lambda * penalties with neighbour lists and
/// don't-look bits. Active cities are processed in ascending index order
/// (wrapping), candidates in neighbour-list order, first improvement taken.
/// Returns when no bit is set.
inline LocalSearchStats local_search(Tour& t, const NeighborLists& nl, const PenaltyTable& pen, double lambda,
                                     ActivationBits& bits, IncumbentTracker* tracker = nullptr) {
  LocalSearchStats stats;
  if (t.size() < 4) {
    bits.clear_all();
    return stats;
  }
  City cursor = 0;
  while (bits.any()) {
    const City a = bits.next_active(cursor);
    if (!detail::improve_city(t, a, nl, pen, lambda, bits, tracker, stats)) {
      bits.clear(a);
      cursor = a + 1;
    } else {
      cursor = a;
    }
  }
  return stats;
}

}  // namespace pgls
