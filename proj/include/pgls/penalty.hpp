#pragma once

#include <algorithm>
#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pgls/tsp_instance.hpp"

namespace pgls {

/// Undirected edge stored as (min, max).
struct Edge {
  City a = 0;
  City b = 0;

  Edge() = default;
  Edge(City u, City v) : a(std::min(u, v)), b(std::max(u, v)) {}

  std::uint64_t key() const noexcept { return (static_cast<std::uint64_t>(a) << 32) | b; }
  static Edge from_key(std::uint64_t k) { return Edge(static_cast<City>(k >> 32), static_cast<City>(k & 0xffffffffu)); }

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Sparse per-edge GLS penalty counts. Edges that were never penalized are not
/// stored and read as zero.
class PenaltyTable {
 public:
  using Count = std::int32_t;

  Count get(City u, City v) const {
    if (counts_.empty()) return 0;
    auto it = counts_.find(Edge(u, v).key());
    return it == counts_.end() ? 0 : it->second;
  }
  Count get(const Edge& e) const { return get(e.a, e.b); }

  void increment(const Edge& e) { add(e, 1); }

  void add(const Edge& e, Count amount) {
    if (amount < 0) throw std::invalid_argument("penalties never decrease");
    if (amount == 0) return;
    counts_[e.key()] += amount;
    total_ += amount;
  }

  std::int64_t total() const noexcept { return total_; }
  std::size_t penalized_edges() const noexcept { return counts_.size(); }
  bool empty() const noexcept { return counts_.empty(); }

  /// (edge, count) pairs sorted by edge, for reporting and comparisons.
  std::vector<std::pair<Edge, Count>> entries() const {
    std::vector<std::pair<Edge, Count>> out;
    out.reserve(counts_.size());
    for (const auto& [k, c] : counts_) out.emplace_back(Edge::from_key(k), c);
    std::sort(out.begin(), out.end());
    return out;
  }

  template <typename F>
  void for_each(F&& f) const {
    for (const auto& [k, c] : counts_) f(Edge::from_key(k), c);
  }

  friend bool operator==(const PenaltyTable& x, const PenaltyTable& y) {
    return x.total_ == y.total_ && x.counts_ == y.counts_;
  }

 private:
  std::unordered_map<std::uint64_t, Count> counts_;
  std::int64_t total_ = 0;
};

}  // namespace pgls
