#include <gtest/gtest.h>

#include <algorithm>
#include <deque>
#include <random>
#include <numeric>
#include <set>

#include "oracles.hpp"
#include "ponte/clustering.hpp"

namespace ponte {
namespace {

using Points = std::vector<std::vector<double>>;

KMeansConfig raw(std::size_t k, std::uint64_t seed = 0) {
  KMeansConfig c;
  c.k = k;
  c.seed = seed;
  c.normalize = false;
  return c;
}

UniformSource scripted(std::deque<double> draws) {
  return [draws = std::move(draws)]() mutable {
    const double v = draws.front();
    draws.pop_front();
    return v;
  };
}

TEST(KMeans, WellSeparatedBlobs) {
  const Points points{{0, 0}, {0, 1}, {10, 0}, {10, 1}};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = kmeans(points, raw(2, seed));
    EXPECT_EQ(r.assignments[0], r.assignments[1]);
    EXPECT_EQ(r.assignments[2], r.assignments[3]);
    EXPECT_NE(r.assignments[0], r.assignments[2]);
    EXPECT_DOUBLE_EQ(r.inertia, 1.0);
    const auto &left = r.centroids[r.assignments[0]];
    const auto &right = r.centroids[r.assignments[2]];
    EXPECT_EQ(left, (std::vector<double>{0, 0.5}));
    EXPECT_EQ(right, (std::vector<double>{10, 0.5}));
  }
}

TEST(KMeans, KEqualsN) {
  const Points points{{0.3, 1}, {2, -1}, {5, 5}, {-4, 0.5}, {1, 1}};
  const auto r = kmeans(points, raw(5));
  EXPECT_DOUBLE_EQ(r.inertia, 0.0);
  EXPECT_EQ(std::set<std::size_t>(r.assignments.begin(), r.assignments.end()).size(), 5u);
  for (std::size_t i = 0; i < points.size(); ++i) EXPECT_EQ(r.centroids[r.assignments[i]], points[i]);
}

TEST(KMeans, OneDimensionalOptimum) {
  const Points points{{1}, {2}, {3}, {4}};
  ASSERT_DOUBLE_EQ(oracle::brute_force_inertia_1d({1, 2, 3, 4}, 2), 1.0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = kmeans(points, raw(2, seed));
    EXPECT_DOUBLE_EQ(r.inertia, 1.0);
    EXPECT_EQ(r.assignments[0], r.assignments[1]);
    EXPECT_EQ(r.assignments[2], r.assignments[3]);
  }
}

TEST(KMeans, MatchesBruteForceOn1D) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng() % 9;
    const std::size_t k = 1 + rng() % std::min<std::size_t>(3, n);
    std::vector<double> x(n);
    for (auto &v : x) v = trial % 3 == 0 ? double(rng() % 5) : std::uniform_real_distribution<double>(-5, 5)(rng);
    Points points;
    for (double v : x) points.push_back({v});
    const auto r = kmeans(points, raw(k, trial));
    EXPECT_NEAR(r.inertia, oracle::brute_force_inertia_1d(x, k), 1e-9) << "trial " << trial << " k=" << k << " x=" << ::testing::PrintToString(x) << " got " << r.inertia;
  }
}

TEST(KMeans, Errors) {
  const Points points{{0, 0}, {1, 1}};
  try {
    kmeans(points, raw(3));
    ADD_FAILURE();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::KTooLarge);
  }
  try {
    kmeans(Points{{0, 0}, {1}}, raw(1));
    ADD_FAILURE();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(KMeans, DuplicatePointsKeepKClusters) {
  const Points points{{1, 1}, {1, 1}, {1, 1}, {2, 2}};
  const auto r = kmeans(points, raw(3));
  EXPECT_EQ(std::set<std::size_t>(r.assignments.begin(), r.assignments.end()).size(), 3u);
  EXPECT_DOUBLE_EQ(r.inertia, 0.0);
}

TEST(KMeansPlusPlus, FirstCenterUniformThenSquaredDistance) {
  const auto points = DenseRows::from(Points{{0}, {1}, {3}});
  // u=0.5 -> floor(1.5) = point 1; weights then (1, 0, 4), u=0.9 -> 4.5 lands on point 2
  EXPECT_EQ(kmeans_plus_plus(points, 2, scripted({0.5, 0.9})), (std::vector<std::size_t>{1, 2}));
  // u=0.1 -> 0.5 lands on point 0
  EXPECT_EQ(kmeans_plus_plus(points, 2, scripted({0.5, 0.1})), (std::vector<std::size_t>{1, 0}));
  // after {1, 2} only point 0 has weight
  EXPECT_EQ(kmeans_plus_plus(points, 3, scripted({0.5, 0.9, 0.99})), (std::vector<std::size_t>{1, 2, 0}));
  EXPECT_EQ(kmeans_plus_plus(points, 1, scripted({0.99})), (std::vector<std::size_t>{2}));
  // a zero-weight point is never chosen
  const auto dup = DenseRows::from(Points{{0}, {0}, {5}});
  EXPECT_EQ(kmeans_plus_plus(dup, 2, scripted({0.0, 0.0})), (std::vector<std::size_t>{0, 2}));
}

TEST(KMeansPlusPlus, EmpiricalDistribution) {
  // first center fixed at point 0 (u=0); weights of the others are 1, 4, 9
  const auto points = DenseRows::from(Points{{0}, {1}, {2}, {3}});
  std::mt19937_64 rng(9);
  std::vector<int> counts(4, 0);
  const int trials = 28000;
  for (int t = 0; t < trials; ++t) {
    const double u = std::uniform_real_distribution<double>(0, 1)(rng);
    ++counts[kmeans_plus_plus(points, 2, scripted({0.0, u}))[1]];
  }
  EXPECT_EQ(counts[0], 0);
  EXPECT_NEAR(counts[1] / double(trials), 1.0 / 14, 0.01);
  EXPECT_NEAR(counts[2] / double(trials), 4.0 / 14, 0.01);
  EXPECT_NEAR(counts[3] / double(trials), 9.0 / 14, 0.01);
}

TEST(KMeans, InertiaTraceNonIncreasingAndNearestAssignment) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + rng() % 60, dim = 1 + rng() % 5, k = 1 + rng() % std::min<std::size_t>(n, 6);
    Points points(n, std::vector<double>(dim));
    for (auto &p : points)
      for (auto &v : p) v = normal(rng);
    KMeansConfig config = raw(k, trial);
    config.normalize = trial % 2 == 0;
    const auto r = kmeans(points, config);
    for (std::size_t i = 1; i < r.inertia_trace.size(); ++i) {
      EXPECT_LE(r.inertia_trace[i], r.inertia_trace[i - 1] * (1 + 1e-12));
    }
    EXPECT_EQ(r.inertia, r.inertia_trace.back());
    auto dense = DenseRows::from(points);
    if (config.normalize) dense.normalize_rows();
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_LT(r.assignments[i], k);
      const double own = squared_distance(dense.row(i), r.centroids[r.assignments[i]]);
      for (const auto &c : r.centroids) EXPECT_LE(own, squared_distance(dense.row(i), c) + 1e-12);
    }
  }
}

TEST(KMeans, Deterministic) {
  std::mt19937_64 rng(17);
  Points points(40, std::vector<double>(3));
  for (auto &p : points)
    for (auto &v : p) v = std::normal_distribution<double>()(rng);
  const auto a = kmeans(points, raw(4, 99));
  const auto b = kmeans(points, raw(4, 99));
  EXPECT_EQ(a.assignments, b.assignments);
  EXPECT_EQ(a.inertia, b.inertia);
}

TEST(KMeans, VMeasureInvariantToJointPermutation) {
  std::mt19937_64 rng(19);
  std::normal_distribution<double> normal(0, 0.05);
  Points points;
  std::vector<int> gold;
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < 10; ++i) {
      points.push_back({c * 2.0 + normal(rng), -c * 1.5 + normal(rng)});
      gold.push_back(c);
    }
  }
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0u);
  std::shuffle(order.begin(), order.end(), rng);
  Points shuffled;
  std::vector<int> shuffled_gold;
  for (auto i : order) {
    shuffled.push_back(points[i]);
    shuffled_gold.push_back(gold[i]);
  }
  const auto a = multi_seed_cluster(points, gold, 3, {0, 1, 2}, false);
  const auto b = multi_seed_cluster(shuffled, shuffled_gold, 3, {0, 1, 2}, false);
  EXPECT_NEAR(a.mean.v_measure, b.mean.v_measure, 1e-12);
}

TEST(MultiSeed, SeparatedDataScoresOne) {
  const Points points{{0, 0}, {0, 0.1}, {5, 5}, {5, 5.1}, {-5, 5}, {-5, 5.1}};
  const std::vector<std::string> gold{"a", "a", "b", "b", "c", "c"};
  const auto r = multi_seed_cluster(points, gold, 3, {0, 1, 2, 3, 4}, false);
  EXPECT_DOUBLE_EQ(r.mean.v_measure, 1.0);
  EXPECT_EQ(r.runs.size(), 5u);
}

TEST(MultiSeed, SingleSeedEqualsThatRun) {
  std::mt19937_64 rng(23);
  Points points(30, std::vector<double>(2));
  std::vector<int> gold(30);
  for (std::size_t i = 0; i < 30; ++i) {
    points[i] = {std::normal_distribution<double>()(rng), std::normal_distribution<double>()(rng)};
    gold[i] = static_cast<int>(i % 3);
  }
  const auto r = multi_seed_cluster(points, gold, 3, {7});
  KMeansConfig config;
  config.k = 3;
  config.seed = 7;
  const auto single = kmeans(points, config);
  EXPECT_EQ(r.mean.v_measure, v_measure(gold, single.assignments).v_measure);
  EXPECT_EQ(r.runs[0].clustering.assignments, single.assignments);
}

TEST(MultiSeed, ThreeGaussianBlobs) {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> noise(0, 0.05);
  const std::vector<std::vector<double>> centers{{0, 0, 0}, {1.5, 0, 0}, {0, 1.5, 0.5}};
  Points points;
  std::vector<int> gold;
  for (int i = 0; i < 60; ++i) {
    const int c = i % 3;
    std::vector<double> p = centers[c];
    for (auto &v : p) v += noise(rng);
    points.push_back(p);
    gold.push_back(c);
  }
  // construction check: every point is nearest its own blob center
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      if (c == gold[i]) continue;
      EXPECT_LT(squared_distance(points[i], centers[gold[i]]), squared_distance(points[i], centers[c]));
    }
  }
  const auto r = multi_seed_cluster(points, gold, 3, {0, 1, 2, 3, 4}, false);
  EXPECT_NEAR(r.mean.v_measure, 1.0, 1e-9);
}

TEST(MultiSeed, Errors) {
  const Points points{{0, 0}, {1, 1}};
  EXPECT_THROW(multi_seed_cluster(points, std::vector<int>{0, 1}, 2, {}), Error);
  EXPECT_THROW(multi_seed_cluster(points, std::vector<int>{0}, 2, {0}), Error);
  EXPECT_THROW(multi_seed_cluster(points, std::vector<int>{0, 1}, 3, {0}), Error);
}

}  // namespace
}  // namespace ponte
