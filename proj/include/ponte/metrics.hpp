#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <ranges>
#include <vector>

#include "ponte/error.hpp"

namespace ponte {

template <typename R>
concept NumericRange = std::ranges::sized_range<R> && std::is_arithmetic_v<std::ranges::range_value_t<R>>;

template <NumericRange A, NumericRange B>
double cosine(const A &a, const B &b) {
  if (std::ranges::size(a) != std::ranges::size(b)) {
    fail(ErrorCode::DimensionMismatch, "cosine of vectors with different dimensions");
  }
  double dot = 0.0, aa = 0.0, bb = 0.0;
  auto ib = std::ranges::begin(b);
  for (auto ia = std::ranges::begin(a); ia != std::ranges::end(a); ++ia, ++ib) {
    const double x = static_cast<double>(*ia);
    const double y = static_cast<double>(*ib);
    dot += x * y;
    aa += x * x;
    bb += y * y;
  }
  if (aa == 0.0 || bb == 0.0) fail(ErrorCode::ZeroVector, "cosine with a zero vector");
  return dot / (std::sqrt(aa) * std::sqrt(bb));
}

/// Affine map sending min(values) to lo and max(values) to hi. A constant
/// input maps every value to the midpoint.
inline std::vector<double> min_max_scale(const std::vector<double> &values, double lo = 0.5, double hi = 5.5) {
  if (values.empty()) fail(ErrorCode::EmptyInput, "min_max_scale of an empty list");
  if (!(lo < hi)) fail(ErrorCode::InvalidArgument, "min_max_scale requires lo < hi");
  const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
  const double min = *min_it, max = *max_it;
  std::vector<double> out(values.size());
  if (min == max) {
    std::fill(out.begin(), out.end(), (lo + hi) / 2.0);
    return out;
  }
  const double span = max - min;
  // (v - min) / span is exactly 0 and 1 at the extremes.
  std::transform(values.begin(), values.end(), out.begin(),
                 [&](double v) { return (v - min) / span * (hi - lo) + lo; });
  return out;
}

/// Fractional (average-tie) ranks, 1-based.
inline std::vector<double> fractional_ranks(const std::vector<double> &values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(n);
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start + 1;
    while (end < n && values[order[end]] == values[order[start]]) ++end;
    // positions start..end-1 share the mean of ranks start+1..end
    const double rank = (static_cast<double>(start + 1) + static_cast<double>(end)) / 2.0;
    for (std::size_t i = start; i < end; ++i) ranks[order[i]] = rank;
    start = end;
  }
  return ranks;
}

inline double pearson(const std::vector<double> &x, const std::vector<double> &y) {
  if (x.size() != y.size()) fail(ErrorCode::LengthMismatch, "pearson inputs differ in length");
  if (x.size() < 2) fail(ErrorCode::EmptyInput, "pearson needs at least two samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) fail(ErrorCode::ZeroVariance, "pearson input has zero variance");
  const double r = sxy / (std::sqrt(sxx) * std::sqrt(syy));
  return std::clamp(r, -1.0, 1.0);
}

inline double spearman(const std::vector<double> &x, const std::vector<double> &y) {
  if (x.size() != y.size()) fail(ErrorCode::LengthMismatch, "spearman inputs differ in length");
  return pearson(fractional_ranks(x), fractional_ranks(y));
}

struct CorrelationReport {
  double spearman_rho = 0.0;
  double pearson_r = 0.0;
  std::size_t n = 0;
};

inline CorrelationReport correlate(const std::vector<double> &predicted, const std::vector<double> &gold) {
  return CorrelationReport{spearman(predicted, gold), pearson(predicted, gold), predicted.size()};
}

struct VMeasureReport {
  double homogeneity = 0.0;
  double completeness = 0.0;
  double v_measure = 0.0;
};

namespace detail {

template <typename T>
std::vector<std::size_t> dense_ids(const std::vector<T> &labels, std::size_t &distinct) {
  std::map<T, std::size_t> ids;
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (const auto &label : labels) {
    out.push_back(ids.try_emplace(label, ids.size()).first->second);
  }
  distinct = ids.size();
  return out;
}

inline double entropy(const std::vector<std::size_t> &counts, double total) {
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log(p);
  }
  return h;
}

}  // namespace detail

/// Homogeneity, completeness and their harmonic mean, from natural-log
/// contingency entropies. Labels of either side only need operator<.
template <typename Gold, typename Pred>
VMeasureReport v_measure(const std::vector<Gold> &gold, const std::vector<Pred> &pred) {
  if (gold.size() != pred.size()) fail(ErrorCode::LengthMismatch, "v_measure inputs differ in length");
  if (gold.empty()) fail(ErrorCode::EmptyInput, "v_measure of an empty labelling");

  std::size_t n_classes = 0, n_clusters = 0;
  const auto classes = detail::dense_ids(gold, n_classes);
  const auto clusters = detail::dense_ids(pred, n_clusters);
  const double total = static_cast<double>(gold.size());

  std::vector<std::size_t> joint(n_classes * n_clusters, 0);
  std::vector<std::size_t> class_sizes(n_classes, 0), cluster_sizes(n_clusters, 0);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++joint[classes[i] * n_clusters + clusters[i]];
    ++class_sizes[classes[i]];
    ++cluster_sizes[clusters[i]];
  }

  const double h_class = detail::entropy(class_sizes, total);
  const double h_cluster = detail::entropy(cluster_sizes, total);
  double h_class_given_cluster = 0.0, h_cluster_given_class = 0.0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t k = 0; k < n_clusters; ++k) {
      const auto nck = joint[c * n_clusters + k];
      if (nck == 0) continue;
      const double p = static_cast<double>(nck) / total;
      h_class_given_cluster -= p * std::log(static_cast<double>(nck) / static_cast<double>(cluster_sizes[k]));
      h_cluster_given_class -= p * std::log(static_cast<double>(nck) / static_cast<double>(class_sizes[c]));
    }
  }

  VMeasureReport report;
  report.homogeneity = h_class == 0.0 ? 1.0 : 1.0 - h_class_given_cluster / h_class;
  report.completeness = h_cluster == 0.0 ? 1.0 : 1.0 - h_cluster_given_class / h_cluster;
  report.homogeneity = std::clamp(report.homogeneity, 0.0, 1.0);
  report.completeness = std::clamp(report.completeness, 0.0, 1.0);
  const double sum = report.homogeneity + report.completeness;
  report.v_measure = sum == 0.0 ? 0.0 : 2.0 * report.homogeneity * report.completeness / sum;
  return report;
}

}  // namespace ponte
