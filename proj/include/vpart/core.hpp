#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "vpart/rng.hpp"

namespace vpart {

using PointId = std::uint64_t;
using PartitionId = std::size_t;

/// Base of every error raised by the library. Precondition violations,
/// malformed input and refused configurations all surface as this type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Owning point. Datasets store coordinates contiguously; this is used where a
/// point must outlive its dataset (tree centers, seeds).
struct Point {
  PointId id = 0;
  std::vector<double> coords;
};

/// Non-owning view of one dataset row.
struct PointView {
  PointId id = 0;
  std::span<const double> coords;

  Point to_point() const { return {id, {coords.begin(), coords.end()}}; }
};

struct Interval {
  double min = 0.0;
  double max = 0.0;

  friend bool operator==(const Interval&, const Interval&) = default;
};

/**
 * Immutable n-dimensional point set stored row-major.
 *
 * Construction validates dimensionality, finiteness and id uniqueness, and
 * computes the per-dimension bounds, so a constructed Dataset is always
 * consistent and safe to share between threads.
 */
class Dataset {
 public:
  Dataset() = default;

  /// `ids` empty means ids are the row indices.
  Dataset(std::size_t dims, std::vector<double> coords, std::vector<PointId> ids = {})
      : dims_(dims), coords_(std::move(coords)), ids_(std::move(ids)) {
    if (dims_ == 0) throw Error("dataset dimensionality must be positive");
    if (coords_.size() % dims_ != 0)
      throw Error("coordinate count " + std::to_string(coords_.size()) +
                  " is not a multiple of dims " + std::to_string(dims_));
    const std::size_t n = coords_.size() / dims_;
    if (ids_.empty()) {
      ids_.resize(n);
      std::iota(ids_.begin(), ids_.end(), PointId{0});
    } else if (ids_.size() != n) {
      throw Error("id count " + std::to_string(ids_.size()) + " does not match point count " +
                  std::to_string(n));
    } else {
      std::unordered_set<PointId> seen;
      seen.reserve(n);
      for (PointId id : ids_)
        if (!seen.insert(id).second) throw Error("duplicate point id " + std::to_string(id));
    }
    bounds_.assign(dims_, Interval{});
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = coords_.data() + i * dims_;
      for (std::size_t j = 0; j < dims_; ++j) {
        const double v = row[j];
        if (!std::isfinite(v))
          throw Error("non-finite coordinate at point " + std::to_string(i) + ", dim " +
                      std::to_string(j));
        if (i == 0) {
          bounds_[j] = {v, v};
        } else {
          bounds_[j].min = std::min(bounds_[j].min, v);
          bounds_[j].max = std::max(bounds_[j].max, v);
        }
      }
    }
  }

  static Dataset from_points(const std::vector<Point>& points) {
    if (points.empty()) throw Error("cannot build a dataset from zero points");
    const std::size_t d = points.front().coords.size();
    std::vector<double> coords;
    std::vector<PointId> ids;
    coords.reserve(points.size() * d);
    ids.reserve(points.size());
    for (const auto& p : points) {
      if (p.coords.size() != d) throw Error("point dimensionality mismatch");
      coords.insert(coords.end(), p.coords.begin(), p.coords.end());
      ids.push_back(p.id);
    }
    return Dataset(d, std::move(coords), std::move(ids));
  }

  std::size_t dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }

  std::span<const double> coords(std::size_t row) const noexcept {
    return {coords_.data() + row * dims_, dims_};
  }
  double coord(std::size_t row, std::size_t dim) const noexcept {
    return coords_[row * dims_ + dim];
  }
  PointId id(std::size_t row) const noexcept { return ids_[row]; }
  PointView point(std::size_t row) const noexcept { return {ids_[row], coords(row)}; }

  std::span<const double> values() const noexcept { return coords_; }
  std::span<const PointId> ids() const noexcept { return ids_; }
  std::span<const Interval> bounds() const noexcept { return bounds_; }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::size_t dims_ = 0;
  std::vector<double> coords_;
  std::vector<PointId> ids_;
  std::vector<Interval> bounds_;
};

/// Row indices 0..n-1.
inline std::vector<std::size_t> all_rows(const Dataset& ds) {
  std::vector<std::size_t> rows(ds.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

// ---------------------------------------------------------------------------
// Distance

namespace detail {

inline double squared_distance_unchecked(const double* a, const double* b, std::size_t n) noexcept {
  // four accumulators, fixed summation order
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const double d0 = a[j] - b[j];
    const double d1 = a[j + 1] - b[j + 1];
    const double d2 = a[j + 2] - b[j + 2];
    const double d3 = a[j + 3] - b[j + 3];
    s0 += d0 * d0;
    s1 += d1 * d1;
    s2 += d2 * d2;
    s3 += d3 * d3;
  }
  for (; j < n; ++j) {
    const double d = a[j] - b[j];
    s0 += d * d;
  }
  return (s0 + s1) + (s2 + s3);
}

}  // namespace detail

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw Error("dimensionality mismatch: " + std::to_string(a.size()) + " vs " +
                std::to_string(b.size()));
  return detail::squared_distance_unchecked(a.data(), b.data(), a.size());
}

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

inline double euclidean_distance(const PointView& a, const PointView& b) {
  return euclidean_distance(a.coords, b.coords);
}

inline double euclidean_distance(const Point& a, const Point& b) {
  return euclidean_distance(a.coords, b.coords);
}

// ---------------------------------------------------------------------------
// Variance

/// Population variance of every coordinate over `rows` (two passes: mean, then
/// squared deviations).
inline std::vector<double> variance_per_dimension(const Dataset& ds,
                                                  std::span<const std::size_t> rows) {
  if (rows.empty()) throw Error("variance of an empty point set");
  const std::size_t d = ds.dims();
  std::vector<double> mean(d, 0.0);
  for (std::size_t r : rows) {
    const double* x = ds.coords(r).data();
    for (std::size_t j = 0; j < d; ++j) mean[j] += x[j];
  }
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  for (double& m : mean) m *= inv_n;

  std::vector<double> var(d, 0.0);
  for (std::size_t r : rows) {
    const double* x = ds.coords(r).data();
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = x[j] - mean[j];
      var[j] += dev * dev;
    }
  }
  for (double& v : var) v *= inv_n;
  return var;
}

inline std::vector<double> variance_per_dimension(const Dataset& ds) {
  if (ds.empty()) throw Error("variance of an empty dataset");
  const auto rows = all_rows(ds);
  return variance_per_dimension(ds, rows);
}

/// Index of the largest variance; ties go to the lowest dimension.
inline std::size_t argmax_dimension(std::span<const double> variances) {
  return static_cast<std::size_t>(std::max_element(variances.begin(), variances.end()) -
                                  variances.begin());
}

// ---------------------------------------------------------------------------
// Synthetic data

inline Dataset generate_uniform(std::size_t n, std::size_t d, double lo, double hi,
                                std::uint64_t seed) {
  if (n == 0 || d == 0) throw Error("generate_uniform needs n >= 1 and d >= 1");
  if (!(lo < hi)) throw Error("generate_uniform needs lo < hi");
  Rng rng(seed);
  std::vector<double> coords(n * d);
  for (double& c : coords) c = rng.uniform(lo, hi);
  return Dataset(d, std::move(coords));
}

/**
 * `k` centers uniform in [0,1)^d, then point i belongs to cluster i mod k and
 * is its center plus isotropic N(0, spread^2) noise. Centers are drawn first,
 * then points in row order, one normal per coordinate.
 */
inline Dataset generate_gaussian_mixture(std::size_t n, std::size_t d, std::size_t k,
                                         double spread, std::uint64_t seed) {
  if (n == 0 || d == 0) throw Error("generate_gaussian_mixture needs n >= 1 and d >= 1");
  if (k == 0) throw Error("generate_gaussian_mixture needs k >= 1");
  if (k > n)
    throw Error("cluster count " + std::to_string(k) + " exceeds point count " +
                std::to_string(n));
  if (!(spread >= 0.0) || !std::isfinite(spread)) throw Error("spread must be finite and >= 0");
  Rng rng(seed);
  std::vector<double> centers(k * d);
  for (double& c : centers) c = rng.uniform01();
  std::vector<double> coords(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    const double* c = centers.data() + (i % k) * d;
    double* x = coords.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) x[j] = c[j] + spread * rng.normal();
  }
  return Dataset(d, std::move(coords));
}

// ---------------------------------------------------------------------------
// Partition output and quality

/**
 * Row-aligned partition labels plus the affected-point flags. Row i of the
 * source dataset (id `ds.id(i)`) is in partition `labels[i]`.
 */
struct PartitionAssignment {
  std::size_t partition_count = 0;
  std::vector<PartitionId> labels;
  std::vector<bool> affected;

  std::size_t affected_count() const {
    return static_cast<std::size_t>(std::count(affected.begin(), affected.end(), true));
  }

  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> s(partition_count, 0);
    for (PartitionId p : labels) ++s.at(p);
    return s;
  }

  /// Throws unless the labels form a total map onto [0, m) over `point_count`
  /// rows and the affected flags line up.
  void validate(std::size_t point_count) const {
    if (partition_count == 0) throw Error("partition count must be positive");
    if (labels.size() != point_count)
      throw Error("assignment covers " + std::to_string(labels.size()) + " of " +
                  std::to_string(point_count) + " points");
    if (affected.size() != point_count) throw Error("affected flags misaligned with labels");
    for (PartitionId p : labels)
      if (p >= partition_count) throw Error("partition id out of range");
  }
};

struct PartitionMetrics {
  std::vector<std::size_t> sizes;
  double bias = 1.0;
  double size_cv = 0.0;
  std::size_t affected_count = 0;
  double wall_time = 0.0;
};

/// Load bias is max(size) / (N/m); size_cv is the population coefficient of
/// variation of the partition sizes.
inline PartitionMetrics compute_metrics(const PartitionAssignment& a, double elapsed_seconds) {
  PartitionMetrics m;
  m.sizes = a.sizes();
  m.affected_count = a.affected_count();
  m.wall_time = elapsed_seconds;
  const std::size_t total = a.labels.size();
  if (total == 0 || a.partition_count == 0) return m;
  const double parts = static_cast<double>(a.partition_count);
  const double n = static_cast<double>(total);
  const std::size_t largest = *std::max_element(m.sizes.begin(), m.sizes.end());
  m.bias = static_cast<double>(largest) * parts / n;
  const double mean = n / parts;
  double ss = 0.0;
  for (std::size_t s : m.sizes) {
    const double dev = static_cast<double>(s) - mean;
    ss += dev * dev;
  }
  m.size_cv = std::sqrt(ss / parts) / mean;
  return m;
}

/// Best achievable bias for N points in m partitions: ceil(N/m) * m / N.
inline double bias_floor(std::size_t n, std::size_t m) {
  const std::size_t ceil_share = (n + m - 1) / m;
  return static_cast<double>(ceil_share) * static_cast<double>(m) / static_cast<double>(n);
}

}  // namespace vpart
