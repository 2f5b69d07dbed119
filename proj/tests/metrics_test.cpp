#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pgls/metrics.hpp"
#include "test_util.hpp"

using namespace pgls;

namespace {

// Pairs (x, y) with x > y, ties counting one half.
double brute_force_u(const std::vector<double>& a, const std::vector<double>& b) {
  double u = 0;
  for (double x : a) {
    for (double y : b) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  }
  return u;
}

// Exact two-sided permutation p-value for tie-free samples of sizes n1, n2:
// the share of all C(n1+n2, n1) rank assignments whose U is at least as far
// from n1*n2/2 as the observed one.
double exact_p(std::size_t n1, std::size_t n2, double u_obs) {
  const std::size_t n = n1 + n2;
  const double mu = static_cast<double>(n1 * n2) / 2.0;
  std::vector<int> pick(n, 0);
  std::fill(pick.begin() + static_cast<std::ptrdiff_t>(n2), pick.end(), 1);
  std::size_t total = 0, extreme = 0;
  do {
    double u = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!pick[i]) continue;
      for (std::size_t j = 0; j < i; ++j) u += pick[j] ? 0 : 1;  // a-rank above a b-rank
    }
    ++total;
    if (std::abs(u - mu) >= std::abs(u_obs - mu) - 1e-9) ++extreme;
  } while (std::next_permutation(pick.begin(), pick.end()));
  return static_cast<double>(extreme) / static_cast<double>(total);
}

RunRecord record_with(std::size_t id, std::vector<std::pair<double, Cost>> improvements, double wall) {
  RunRecord r;
  r.worker_id = id;
  r.wall_seconds = wall;
  for (auto [t, c] : improvements) r.events.push_back({t, 0, EventKind::improvement, c, Event::kNoPeer, {}});
  return r;
}

}  // namespace

TEST(Excess, Examples) {
  EXPECT_EQ(excess(27686, 27686), 0.0);
  EXPECT_DOUBLE_EQ(excess(10100, 10000), 1.0);
  EXPECT_NEAR(excess(27963, 27686), 27700.0 / 27686.0, 1e-12);
  EXPECT_THROW(excess(27685, 27686), std::domain_error);
  EXPECT_THROW(excess(5, 0), std::invalid_argument);
}

TEST(Excess, ScaleCovariant) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    const Cost opt = 1 + static_cast<Cost>(rng() % 100000);
    const Cost cost = opt + static_cast<Cost>(rng() % 5000);
    const Cost m = 1 + static_cast<Cost>(rng() % 1000);
    EXPECT_NEAR(excess(m * cost, m * opt), excess(cost, opt), 1e-12 * (1 + excess(cost, opt)));
  }
}

TEST(Speedup, Examples) {
  const std::vector<double> same{3, 4, 5};
  EXPECT_DOUBLE_EQ(speedup_s1(same, same), 1.0);
  const std::vector<double> seq{400}, par{50};
  EXPECT_DOUBLE_EQ(speedup_s1(seq, par), 8.0);
  EXPECT_DOUBLE_EQ(efficiency(speedup_s1(seq, par), 8), 1.0);
  const std::vector<double> s3{10, 20, 30}, p3{5, 5, 5};
  EXPECT_DOUBLE_EQ(speedup_s1(s3, p3), 4.0);
  EXPECT_DOUBLE_EQ(speedup_s2(s3, p3), 4.0);
  EXPECT_THROW(speedup_s1(std::vector<double>{}, p3), std::invalid_argument);
  EXPECT_THROW(speedup_s2(s3, std::vector<double>{}), std::invalid_argument);
  EXPECT_THROW(efficiency(2.0, 0), std::invalid_argument);
}

TEST(MannWhitney, Examples) {
  const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  EXPECT_EQ(mann_whitney_u(a, b).u, 0.0);
  EXPECT_EQ(mann_whitney_u(b, a).u, 9.0);
  const std::vector<double> odd{1, 3, 5, 7}, even{2, 4, 6, 8};
  EXPECT_EQ(mann_whitney_u(odd, even).u, 6.0);
  EXPECT_EQ(brute_force_u(odd, even), 6.0);

  const std::vector<double> x{0.5, 1.5, 1.5, 2.0, 9.0};
  const auto same = mann_whitney_u(x, x);
  EXPECT_EQ(same.u, 12.5);
  EXPECT_NEAR(same.p_value, 1.0, 1e-12);
  EXPECT_THROW(mann_whitney_u(std::vector<double>{}, x), std::invalid_argument);
}

TEST(MannWhitney, MatchesPairCountingAndIsComplementary) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n1 = 1 + rng() % 12, n2 = 1 + rng() % 12;
    std::vector<double> a(n1), b(n2);
    for (auto& v : a) v = static_cast<double>(rng() % 8);  // small range forces ties
    for (auto& v : b) v = static_cast<double>(rng() % 8);
    const auto ab = mann_whitney_u(a, b), ba = mann_whitney_u(b, a);
    ASSERT_EQ(ab.u, brute_force_u(a, b));
    ASSERT_EQ(ab.u + ba.u, static_cast<double>(n1 * n2));
    ASSERT_NEAR(ab.p_value, ba.p_value, 1e-12);
    ASSERT_GE(ab.p_value, 0.0);
    ASSERT_LE(ab.p_value, 1.0);
  }
}

TEST(MannWhitney, NormalApproximationCloseToExactPermutation) {
  // Every attainable U for all sample-size pairs from 3 to 6.
  for (std::size_t n1 = 3; n1 <= 6; ++n1) {
    for (std::size_t n2 = 3; n2 <= 6; ++n2) {
      for (std::size_t u = 0; u <= n1 * n2; ++u) {
        // Build tie-free samples with exactly u pairs a > b: b = 0..n2-1
        // spread out, each a placed above the right number of b values.
        std::vector<double> b(n2), a(n1);
        for (std::size_t j = 0; j < n2; ++j) b[j] = static_cast<double>(10 * j);
        std::size_t left = u;
        for (std::size_t i = 0; i < n1; ++i) {
          const std::size_t above = std::min(left, n2);
          left -= above;
          a[i] = above == 0 ? -1.0 - static_cast<double>(i) * 0.01 : 10.0 * static_cast<double>(above - 1) + 1.0 + static_cast<double>(i) * 0.01;
        }
        const auto r = mann_whitney_u(a, b);
        ASSERT_EQ(r.u, static_cast<double>(u));
        const double exact = exact_p(n1, n2, r.u);
        EXPECT_LE(std::abs(r.p_value - exact), 0.05) << n1 << "x" << n2 << " U=" << u;
      }
    }
  }
}

TEST(MannWhitney, CompleteSeparationAtSizeFifty) {
  std::vector<double> lo(50), hi(50);
  for (int i = 0; i < 50; ++i) {
    lo[static_cast<std::size_t>(i)] = 0.01 * i;
    hi[static_cast<std::size_t>(i)] = 5.0 + 0.01 * i;
  }
  const auto r = mann_whitney_u(lo, hi);
  EXPECT_EQ(r.u, 0.0);
  EXPECT_LT(r.p_value, 0.001);
}

TEST(PenaltyRatio, Examples) {
  const EdgeSet golden{Edge(0, 1).key(), Edge(1, 2).key()};
  PenaltyTable pen;
  EXPECT_EQ(undesirable_penalty_ratio(pen, golden), 0.0);
  pen.add(Edge(0, 1), 3);
  EXPECT_EQ(undesirable_penalty_ratio(pen, golden), 1.0);
  pen.add(Edge(2, 5), 7);
  EXPECT_DOUBLE_EQ(undesirable_penalty_ratio(pen, golden), 0.3);
  pen.add(Edge(3, 4), 0);
  EXPECT_DOUBLE_EQ(undesirable_penalty_ratio(pen, golden), 0.3);
}

TEST(PenaltyRatio, GoldenEdgesAreUnionOfTours) {
  const TspInstance inst = pgls::testing::random_instance(6, 1);
  const std::vector<Tour> tours{Tour(inst, {0, 1, 2, 3, 4, 5}), Tour(inst, {0, 2, 1, 3, 4, 5})};
  const EdgeSet g = golden_edges(tours);
  // 6 edges of the first tour plus 0-2 and 1-3 from the second.
  EXPECT_EQ(g.size(), 8u);
  EXPECT_TRUE(g.count(Edge(0, 2).key()));
  EXPECT_FALSE(g.count(Edge(0, 3).key()));
}

TEST(Contributors, HandTimeline) {
  const std::vector<RunRecord> recs{record_with(0, {{0.0, 100}}, 10.0), record_with(1, {{4.0, 90}}, 10.0)};
  const ContributorStats st = best_contributor_stats(recs);
  EXPECT_EQ(st.contributors, 2u);
  ASSERT_EQ(st.leading_ratios.size(), 2u);
  EXPECT_DOUBLE_EQ(st.leading_ratios[0], 0.6);
  EXPECT_DOUBLE_EQ(st.leading_ratios[1], 0.4);
}

TEST(Contributors, SingleAndDominantWorker) {
  const std::vector<RunRecord> one{record_with(0, {{0.0, 50}, {1.0, 40}}, 5.0)};
  const ContributorStats s1 = best_contributor_stats(one);
  EXPECT_EQ(s1.contributors, 1u);
  EXPECT_NEAR(s1.leading_ratios[0], 1.0, 1e-12);

  const std::vector<RunRecord> two{record_with(0, {{0.0, 50}, {2.0, 30}}, 5.0), record_with(1, {{1.0, 60}, {3.0, 35}}, 5.0)};
  const ContributorStats s2 = best_contributor_stats(two);
  EXPECT_EQ(s2.contributors, 1u);
  EXPECT_EQ(s2.leading_time[1], 0.0);
}

TEST(Contributors, RatiosSumToLedFraction) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 1 + rng() % 8;
    std::vector<RunRecord> recs;
    double first = 1e9, total = 0;
    for (std::size_t w = 0; w < k; ++w) {
      std::vector<std::pair<double, Cost>> imps;
      double t = static_cast<double>(rng() % 100) / 10.0;
      Cost c = 10000 - static_cast<Cost>(rng() % 500);
      for (int i = 0; i < 5; ++i) {
        imps.emplace_back(t, c);
        first = std::min(first, t);
        t += static_cast<double>(1 + rng() % 30) / 10.0;
        c -= static_cast<Cost>(1 + rng() % 300);
      }
      const double wall = t + 1.0;
      total = std::max(total, wall);
      recs.push_back(record_with(w, imps, wall));
    }
    const ContributorStats st = best_contributor_stats(recs);
    double sum = 0;
    for (double r : st.leading_ratios) {
      ASSERT_GE(r, 0.0);
      ASSERT_LE(r, 1.0);
      sum += r;
    }
    ASSERT_NEAR(sum, 1.0 - first / total, 1e-9);
    ASSERT_TRUE(std::is_sorted(st.leading_ratios.rbegin(), st.leading_ratios.rend()));
    ASSERT_GE(st.contributors, 1u);
  }
}
