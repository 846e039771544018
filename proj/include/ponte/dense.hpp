#pragma once

#include <cmath>
#include <cstddef>
#include <ranges>
#include <span>
#include <vector>

#include "ponte/error.hpp"

namespace ponte {

/// Row-major n x dim block of doubles.
class DenseRows {
 public:
  DenseRows() = default;
  DenseRows(std::size_t rows, std::size_t dim) : rows_(rows), dim_(dim), data_(rows * dim, 0.0) {}

  /// Copies a range of equally sized numeric ranges.
  template <typename Points>
  static DenseRows from(const Points &points) {
    const std::size_t rows = std::ranges::size(points);
    if (rows == 0) return DenseRows{};
    const std::size_t dim = std::ranges::size(*std::ranges::begin(points));
    DenseRows out(rows, dim);
    std::size_t r = 0;
    for (const auto &p : points) {
      if (std::ranges::size(p) != dim) {
        fail(ErrorCode::DimensionMismatch, "point " + std::to_string(r) + " has dimension " +
                                               std::to_string(std::ranges::size(p)) + ", expected " +
                                               std::to_string(dim));
      }
      std::size_t c = 0;
      for (const auto v : p) out(r, c++) = static_cast<double>(v);
      ++r;
    }
    return out;
  }

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }

  double &operator()(std::size_t r, std::size_t c) { return data_[r * dim_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * dim_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * dim_, dim_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * dim_, dim_}; }

  void normalize_rows() {
    for (std::size_t r = 0; r < rows_; ++r) {
      auto v = row(r);
      double norm = 0.0;
      for (double x : v) norm += x * x;
      if (norm == 0.0) continue;
      norm = std::sqrt(norm);
      for (double &x : v) x /= norm;
    }
  }

  std::vector<std::vector<double>> to_nested() const {
    std::vector<std::vector<double>> out;
    out.reserve(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out.emplace_back(row(r).begin(), row(r).end());
    return out;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

}  // namespace ponte
