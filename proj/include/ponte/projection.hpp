#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "ponte/dense.hpp"
#include "ponte/error.hpp"
#include "ponte/random.hpp"

namespace ponte {

struct TsneConfig {
  /// Unset means 30, clamped to (n - 1) / 3. An explicit value is used as
  /// given and must be below n.
  std::optional<double> perplexity;
  std::size_t iters = 1000;
  double learning_rate = 200.0;
  double early_exaggeration = 12.0;
  std::size_t exaggeration_iters = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  std::size_t momentum_switch_iter = 250;
  double initial_sd = 1e-4;
  std::uint64_t seed = 0;
};

struct Projection2D {
  std::vector<std::array<double, 2>> coords;
  double kl_initial = 0.0;
  double kl_final = 0.0;
  double perplexity = 0.0;
  /// Shannon entropy (bits) reached by each row's bandwidth search.
  std::vector<double> row_entropies;
};

inline constexpr double kEntropyTolerance = 1e-5;
inline constexpr int kMaxBisectionSteps = 50;

struct CalibratedRow {
  std::vector<double> probabilities;
  double beta = 0.0;  // 1 / (2 sigma^2)
  double entropy_bits = 0.0;
};

namespace detail {

// Row of exp(-beta * shifted) normalised, with its entropy in bits.
inline double gaussian_row(const std::vector<double> &shifted, double beta, std::vector<double> &out) {
  double sum = 0.0;
  for (std::size_t j = 0; j < shifted.size(); ++j) {
    out[j] = std::exp(-beta * shifted[j]);
    sum += out[j];
  }
  double entropy = 0.0;
  for (double &p : out) {
    p /= sum;
    if (p > 0.0) entropy -= p * std::log2(p);
  }
  return entropy;
}

}  // namespace detail

/// Bandwidth search for one point: finds beta so that the row
/// p_j ∝ exp(-d_j^2 * beta) has entropy log2(target_perplexity).
/// `distances` are plain (not squared) distances to every other point.
inline CalibratedRow calibrate_row(const std::vector<double> &distances, double target_perplexity) {
  const std::size_t m = distances.size();
  if (m == 0) fail(ErrorCode::NonPositiveDistanceCount, "affinity row has no neighbours");
  if (!(target_perplexity > 0.0)) fail(ErrorCode::InvalidArgument, "perplexity must be positive");

  // Shifting by the smallest squared distance leaves the normalised row
  // unchanged and keeps exp() away from underflow.
  std::vector<double> shifted(m);
  double min_sq = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < m; ++j) {
    shifted[j] = distances[j] * distances[j];
    min_sq = std::min(min_sq, shifted[j]);
  }
  double mean_gap = 0.0;
  std::size_t nearest_ties = 0;
  for (double &s : shifted) {
    s -= min_sq;
    mean_gap += s;
    if (s == 0.0) ++nearest_ties;
  }
  mean_gap /= static_cast<double>(m);

  const double target = std::log2(target_perplexity);
  CalibratedRow row;
  row.probabilities.resize(m);

  // Entropy is maximal (log2 m) at beta = 0 and falls to log2(nearest_ties)
  // as beta grows. Targets outside that range take the limiting row.
  if (mean_gap == 0.0 || target >= std::log2(static_cast<double>(m))) {
    row.entropy_bits = detail::gaussian_row(shifted, 0.0, row.probabilities);
    return row;
  }
  if (target <= std::log2(static_cast<double>(nearest_ties))) {
    for (std::size_t j = 0; j < m; ++j) row.probabilities[j] = shifted[j] == 0.0 ? 1.0 / nearest_ties : 0.0;
    row.beta = std::numeric_limits<double>::infinity();
    row.entropy_bits = std::log2(static_cast<double>(nearest_ties));
    return row;
  }

  double lo = 0.0;
  double hi = 1.0 / mean_gap;
  double entropy = detail::gaussian_row(shifted, hi, row.probabilities);
  while (entropy > target && std::isfinite(hi)) {
    lo = hi;
    hi *= 2.0;
    entropy = detail::gaussian_row(shifted, hi, row.probabilities);
  }
  double beta = hi;
  for (int step = 0; step < kMaxBisectionSteps && std::abs(entropy - target) >= kEntropyTolerance; ++step) {
    beta = lo == 0.0 ? 0.5 * hi : std::sqrt(lo * hi);
    entropy = detail::gaussian_row(shifted, beta, row.probabilities);
    if (entropy > target) {
      lo = beta;
    } else {
      hi = beta;
    }
  }
  row.beta = beta;
  row.entropy_bits = entropy;
  return row;
}

inline std::vector<double> perplexity_calibrate(const std::vector<double> &distances_row, double target_perplexity) {
  return calibrate_row(distances_row, target_perplexity).probabilities;
}

/// Symmetrised input affinities P = (P_{j|i} + P_{i|j}) / 2n. Row entropies
/// of the conditional distributions are written to `entropies` if given.
inline DenseRows joint_probabilities(const DenseRows &points, double perplexity,
                                     std::vector<double> *entropies = nullptr) {
  const std::size_t n = points.rows();
  DenseRows conditional(n, n);
  if (entropies) entropies->assign(n, 0.0);
  std::vector<double> distances(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0, c = 0; j < n; ++j) {
      if (j != i) distances[c++] = std::sqrt(squared_distance(points.row(i), points.row(j)));
    }
    const auto row = calibrate_row(distances, perplexity);
    for (std::size_t j = 0, c = 0; j < n; ++j) {
      if (j != i) conditional(i, j) = row.probabilities[c++];
    }
    if (entropies) (*entropies)[i] = row.entropy_bits;
  }
  DenseRows joint(n, n);
  const double scale = 2.0 * static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) joint(i, j) = (conditional(i, j) + conditional(j, i)) / scale;
    }
  }
  return joint;
}

namespace detail {

// Student-t kernel values and their off-diagonal sum.
inline double student_kernel(const DenseRows &layout, DenseRows &kernel) {
  const std::size_t n = layout.rows();
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    kernel(i, i) = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = 1.0 / (1.0 + squared_distance(layout.row(i), layout.row(j)));
      kernel(i, j) = v;
      kernel(j, i) = v;
      z += 2.0 * v;
    }
  }
  return z;
}

}  // namespace detail

/// KL(P || Q) with Q from the Student-t kernel on `layout`.
inline double kl_divergence(const DenseRows &joint, const DenseRows &layout) {
  const std::size_t n = layout.rows();
  DenseRows kernel(n, n);
  const double z = detail::student_kernel(layout, kernel);
  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double p = joint(i, j);
      if (i == j || p <= 0.0) continue;
      kl += p * std::log(p / (kernel(i, j) / z));
    }
  }
  return kl;
}

/// dKL/dy_i = 4 sum_j (exaggeration * p_ij - q_ij) (y_i - y_j) / (1 + |y_i - y_j|^2)
inline DenseRows kl_gradient(const DenseRows &joint, const DenseRows &layout, double exaggeration = 1.0) {
  const std::size_t n = layout.rows();
  const std::size_t dim = layout.dim();
  DenseRows kernel(n, n);
  const double z = detail::student_kernel(layout, kernel);
  DenseRows grad(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    auto g = grad.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double w = (exaggeration * joint(i, j) - kernel(i, j) / z) * kernel(i, j);
      for (std::size_t d = 0; d < dim; ++d) g[d] += 4.0 * w * (layout(i, d) - layout(j, d));
    }
  }
  return grad;
}

inline double effective_perplexity(const TsneConfig &config, std::size_t n) {
  if (config.perplexity) {
    if (!(*config.perplexity > 0.0)) fail(ErrorCode::InvalidArgument, "perplexity must be positive");
    if (*config.perplexity >= static_cast<double>(n)) {
      fail(ErrorCode::PerplexityTooLarge,
           "perplexity " + std::to_string(*config.perplexity) + " needs more than " + std::to_string(n) + " points");
    }
    return *config.perplexity;
  }
  return std::clamp((static_cast<double>(n) - 1.0) / 3.0, 1.0, 30.0);
}

inline DenseRows random_layout(std::size_t n, std::uint64_t seed, double sd) {
  DenseRows layout(n, 2);
  CounterRng rng(splitmix64(seed ^ 0x74736e65ULL));
  for (std::size_t i = 0; i < n; ++i) {
    layout(i, 0) = sd * rng.normal();
    layout(i, 1) = sd * rng.normal();
  }
  return layout;
}

/// Exact t-SNE to two dimensions. `initial` overrides the seeded Gaussian
/// starting layout.
inline Projection2D tsne(const DenseRows &points, const TsneConfig &config,
                         std::optional<DenseRows> initial = std::nullopt) {
  const std::size_t n = points.rows();
  if (n < 2) fail(ErrorCode::DegenerateInput, "t-SNE needs at least two points");
  const double perplexity = effective_perplexity(config, n);

  Projection2D out;
  out.perplexity = perplexity;
  const DenseRows joint = joint_probabilities(points, perplexity, &out.row_entropies);

  DenseRows layout = initial ? std::move(*initial) : random_layout(n, config.seed, config.initial_sd);
  if (layout.rows() != n || layout.dim() != 2) fail(ErrorCode::DimensionMismatch, "initial layout must be n x 2");
  out.kl_initial = kl_divergence(joint, layout);

  DenseRows update(n, 2);
  DenseRows gains(n, 2);
  for (std::size_t i = 0; i < n; ++i) gains(i, 0) = gains(i, 1) = 1.0;

  for (std::size_t iter = 0; iter < config.iters; ++iter) {
    const double exaggeration = iter < config.exaggeration_iters ? config.early_exaggeration : 1.0;
    const double momentum = iter < config.momentum_switch_iter ? config.initial_momentum : config.final_momentum;
    const DenseRows grad = kl_gradient(joint, layout, exaggeration);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < 2; ++d) {
        const bool same_sign = (grad(i, d) > 0.0) == (update(i, d) > 0.0);
        gains(i, d) = std::max(same_sign ? gains(i, d) * 0.8 : gains(i, d) + 0.2, 0.01);
        update(i, d) = momentum * update(i, d) - config.learning_rate * gains(i, d) * grad(i, d);
        layout(i, d) += update(i, d);
      }
    }
    for (std::size_t d = 0; d < 2; ++d) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += layout(i, d);
      mean /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) layout(i, d) -= mean;
    }
  }

  out.kl_final = kl_divergence(joint, layout);
  out.coords.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.coords[i] = {layout(i, 0), layout(i, 1)};
  for (const auto &c : out.coords) {
    if (!std::isfinite(c[0]) || !std::isfinite(c[1])) fail(ErrorCode::DegenerateInput, "t-SNE diverged");
  }
  return out;
}

template <typename Points>
Projection2D tsne(const Points &points, const TsneConfig &config) {
  return tsne(DenseRows::from(points), config);
}

}  // namespace ponte
