#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <future>
#include <limits>
#include <vector>

#include "ponte/dense.hpp"
#include "ponte/error.hpp"
#include "ponte/metrics.hpp"
#include "ponte/random.hpp"

namespace ponte {

struct KMeansConfig {
  std::size_t k = 1;
  std::size_t max_iters = 300;
  double tol = 1e-6;  // relative inertia improvement
  std::uint64_t seed = 0;
  bool normalize = true;
  /// k-means++ restarts per run; the lowest-inertia result is kept.
  std::size_t n_init = 10;
};

struct KMeansResult {
  std::vector<std::size_t> assignments;
  std::vector<std::vector<double>> centroids;
  double inertia = 0.0;
  std::size_t iterations_run = 0;
  /// Inertia after the initial assignment, after every Lloyd iteration and
  /// after the final Hartigan refinement.
  std::vector<double> inertia_trace;
};

/// Source of uniform draws on [0, 1).
using UniformSource = std::function<double()>;

/// k-means++ seeding: first center uniform over points, every later center
/// drawn with probability proportional to the squared distance to the nearest
/// center chosen so far. Returns point indices.
inline std::vector<std::size_t> kmeans_plus_plus(const DenseRows &points, std::size_t k, const UniformSource &uniform) {
  const std::size_t n = points.rows();
  if (k == 0 || k > n) fail(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " with " + std::to_string(n) + " points");

  auto pick_uniform = [&] { return std::min(static_cast<std::size_t>(uniform() * static_cast<double>(n)), n - 1); };

  std::vector<std::size_t> centers{pick_uniform()};
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = squared_distance(points.row(i), points.row(centers[0]));

  while (centers.size() < k) {
    double total = 0.0;
    for (double d : nearest) total += d;
    std::size_t chosen;
    if (total == 0.0) {
      chosen = pick_uniform();
    } else {
      const double target = uniform() * total;
      double cumulative = 0.0;
      chosen = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        cumulative += nearest[i];
        if (nearest[i] > 0.0 && cumulative > target) {
          chosen = i;
          break;
        }
      }
      // rounding can leave target >= cumulative; fall back to the last
      // candidate with positive weight
      if (nearest[chosen] == 0.0) {
        for (std::size_t i = n; i-- > 0;) {
          if (nearest[i] > 0.0) {
            chosen = i;
            break;
          }
        }
      }
    }
    centers.push_back(chosen);
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(points.row(i), points.row(chosen)));
    }
  }
  return centers;
}

namespace detail {

inline double assign_points(const DenseRows &points, const DenseRows &centroids, std::vector<std::size_t> &assignments,
                            std::vector<double> &distances) {
  double inertia = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_k = 0;
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
      const double d = squared_distance(points.row(i), centroids.row(c));
      if (d < best) {
        best = d;
        best_k = c;
      }
    }
    assignments[i] = best_k;
    distances[i] = best;
    inertia += best;
  }
  return inertia;
}

/// Moves the point farthest from its centroid into each empty cluster.
/// Returns the inertia change.
inline double repair_empty_clusters(const DenseRows &points, DenseRows &centroids, std::vector<std::size_t> &assignments,
                                    std::vector<double> &distances) {
  const std::size_t k = centroids.rows();
  std::vector<std::size_t> sizes(k, 0);
  for (auto a : assignments) ++sizes[a];
  double delta = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] != 0) continue;
    std::size_t donor = points.rows();
    double farthest = -1.0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
      if (sizes[assignments[i]] > 1 && distances[i] > farthest) {
        farthest = distances[i];
        donor = i;
      }
    }
    if (donor == points.rows()) break;  // unreachable while k <= n
    --sizes[assignments[donor]];
    ++sizes[c];
    assignments[donor] = c;
    delta -= distances[donor];
    distances[donor] = 0.0;
    auto target = centroids.row(c);
    auto source = points.row(donor);
    std::copy(source.begin(), source.end(), target.begin());
  }
  return delta;
}

inline void update_centroids(const DenseRows &points, const std::vector<std::size_t> &assignments, DenseRows &centroids) {
  const std::size_t k = centroids.rows();
  std::vector<std::size_t> sizes(k, 0);
  DenseRows sums(k, points.dim());
  for (std::size_t i = 0; i < points.rows(); ++i) {
    ++sizes[assignments[i]];
    auto s = sums.row(assignments[i]);
    auto p = points.row(i);
    for (std::size_t d = 0; d < p.size(); ++d) s[d] += p[d];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] == 0) continue;
    auto s = sums.row(c);
    auto out = centroids.row(c);
    for (std::size_t d = 0; d < s.size(); ++d) out[d] = s[d] / static_cast<double>(sizes[c]);
  }
}

/// Hartigan single-point moves from a Lloyd fixed point: a point leaves
/// cluster a for b when n_a/(n_a-1) |x-m_a|^2 > n_b/(n_b+1) |x-m_b|^2, which
/// strictly lowers the inertia. Singletons never move, so k stays fixed. On
/// return `centroids` are the cluster means. Returns whether anything moved.
inline bool hartigan_refine(const DenseRows &points, std::vector<std::size_t> &assignments, DenseRows &centroids,
                            std::size_t max_sweeps) {
  const std::size_t k = centroids.rows();
  const std::size_t dim = points.dim();
  std::vector<double> sizes(k, 0.0);
  DenseRows sums(k, dim);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    sizes[assignments[i]] += 1.0;
    auto s = sums.row(assignments[i]);
    auto p = points.row(i);
    for (std::size_t d = 0; d < dim; ++d) s[d] += p[d];
  }
  auto refresh = [&](std::size_t c) {
    for (std::size_t d = 0; d < dim; ++d) centroids(c, d) = sums(c, d) / sizes[c];
  };
  for (std::size_t c = 0; c < k; ++c) refresh(c);

  bool moved_any = false;
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    bool moved = false;
    for (std::size_t i = 0; i < points.rows(); ++i) {
      const std::size_t from = assignments[i];
      if (sizes[from] <= 1.0) continue;
      const auto x = points.row(i);
      const double leave = sizes[from] / (sizes[from] - 1.0) * squared_distance(x, centroids.row(from));
      std::size_t to = from;
      double best_gain = 1e-12 * leave;
      for (std::size_t c = 0; c < k; ++c) {
        if (c == from) continue;
        const double gain = leave - sizes[c] / (sizes[c] + 1.0) * squared_distance(x, centroids.row(c));
        if (gain > best_gain) {
          best_gain = gain;
          to = c;
        }
      }
      if (to == from) continue;
      for (std::size_t d = 0; d < dim; ++d) {
        sums(from, d) -= x[d];
        sums(to, d) += x[d];
      }
      sizes[from] -= 1.0;
      sizes[to] += 1.0;
      refresh(from);
      refresh(to);
      assignments[i] = to;
      moved = moved_any = true;
    }
    if (!moved) break;
  }
  // exact means, free of the running-sum drift
  update_centroids(points, assignments, centroids);
  return moved_any;
}

inline KMeansResult lloyd(const DenseRows &points, const std::vector<std::size_t> &seeds, const KMeansConfig &config) {
  const std::size_t n = points.rows();
  DenseRows centroids(seeds.size(), points.dim());
  for (std::size_t c = 0; c < seeds.size(); ++c) {
    auto src = points.row(seeds[c]);
    std::copy(src.begin(), src.end(), centroids.row(c).begin());
  }

  std::vector<std::size_t> assignments(n), previous;
  std::vector<double> distances(n);
  double inertia = assign_points(points, centroids, assignments, distances);
  inertia += repair_empty_clusters(points, centroids, assignments, distances);

  KMeansResult result;
  result.inertia_trace.push_back(inertia);
  for (std::size_t iter = 0; iter < config.max_iters; ++iter) {
    if (inertia == 0.0) break;
    previous = assignments;
    update_centroids(points, assignments, centroids);
    double next = assign_points(points, centroids, assignments, distances);
    next += repair_empty_clusters(points, centroids, assignments, distances);
    ++result.iterations_run;
    result.inertia_trace.push_back(next);
    const double improvement = (inertia - next) / inertia;
    inertia = next;
    if (assignments == previous || improvement < config.tol) break;
  }

  hartigan_refine(points, assignments, centroids, config.max_iters);
  double final_inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    final_inertia += squared_distance(points.row(i), centroids.row(assignments[i]));
  }
  if (final_inertia != inertia) result.inertia_trace.push_back(final_inertia);
  inertia = final_inertia;

  result.assignments = std::move(assignments);
  result.centroids = centroids.to_nested();
  result.inertia = inertia;
  return result;
}

}  // namespace detail

inline KMeansResult kmeans(DenseRows points, const KMeansConfig &config, const UniformSource &uniform) {
  if (config.k == 0 || config.k > points.rows()) {
    fail(ErrorCode::KTooLarge, "k=" + std::to_string(config.k) + " with " + std::to_string(points.rows()) + " points");
  }
  if (config.n_init == 0) fail(ErrorCode::InvalidArgument, "n_init must be >= 1");
  if (config.normalize) points.normalize_rows();
  KMeansResult best;
  for (std::size_t restart = 0; restart < config.n_init; ++restart) {
    auto result = detail::lloyd(points, kmeans_plus_plus(points, config.k, uniform), config);
    if (restart == 0 || result.inertia < best.inertia) best = std::move(result);
  }
  return best;
}

inline UniformSource seeded_uniform(std::uint64_t seed) {
  return [rng = CounterRng(splitmix64(seed ^ 0x6b6d65616e73ULL))]() mutable { return rng.uniform(); };
}

inline KMeansResult kmeans(const DenseRows &points, const KMeansConfig &config) {
  return kmeans(points, config, seeded_uniform(config.seed));
}

/// Points: any range of equally sized numeric ranges.
template <typename Points>
KMeansResult kmeans(const Points &points, const KMeansConfig &config) {
  return kmeans(DenseRows::from(points), config, seeded_uniform(config.seed));
}

struct SeedRun {
  std::uint64_t seed = 0;
  VMeasureReport score;
  KMeansResult clustering;
};

struct MultiSeedReport {
  VMeasureReport mean;
  std::vector<SeedRun> runs;
};

/// Arithmetic mean of each V-measure component, in run order.
inline VMeasureReport mean_report(const std::vector<SeedRun> &runs) {
  VMeasureReport mean;
  for (const auto &run : runs) {
    mean.homogeneity += run.score.homogeneity;
    mean.completeness += run.score.completeness;
    mean.v_measure += run.score.v_measure;
  }
  const double count = static_cast<double>(runs.size());
  mean.homogeneity /= count;
  mean.completeness /= count;
  mean.v_measure /= count;
  return mean;
}

/// One k-means run per seed, each scored against gold; seeds run
/// concurrently.
template <typename Points, typename Label>
MultiSeedReport multi_seed_cluster(const Points &points, const std::vector<Label> &gold, std::size_t k,
                                   const std::vector<std::uint64_t> &seeds, bool normalize = true) {
  if (seeds.empty()) fail(ErrorCode::InvalidArgument, "at least one seed is required");
  const DenseRows dense = DenseRows::from(points);
  if (gold.size() != dense.rows()) fail(ErrorCode::LengthMismatch, "gold labels and points differ in count");

  std::vector<std::future<SeedRun>> pending;
  pending.reserve(seeds.size());
  for (const auto seed : seeds) {
    pending.push_back(std::async(std::launch::async, [&dense, &gold, k, seed, normalize] {
      KMeansConfig config;
      config.k = k;
      config.seed = seed;
      config.normalize = normalize;
      SeedRun run;
      run.seed = seed;
      run.clustering = kmeans(dense, config, seeded_uniform(seed));
      run.score = v_measure(gold, run.clustering.assignments);
      return run;
    }));
  }
  MultiSeedReport report;
  for (auto &f : pending) report.runs.push_back(f.get());
  report.mean = mean_report(report.runs);
  return report;
}

}  // namespace ponte
