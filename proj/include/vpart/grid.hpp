#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "vpart/core.hpp"
#include "vpart/select.hpp"

namespace vpart {

inline constexpr std::uint64_t kDefaultCubeCap = std::uint64_t{1} << 24;

/// Raised when (Y+1)^dims exceeds the cube cap or does not fit in 64 bits.
class GridRefused : public Error {
 public:
  GridRefused(std::uint64_t base, std::size_t exponent, bool overflowed, std::uint64_t cap)
      : Error(describe(base, exponent, overflowed, cap)),
        base_(base),
        exponent_(exponent),
        overflowed_(overflowed),
        cap_(cap) {}

  std::uint64_t base() const noexcept { return base_; }
  std::size_t exponent() const noexcept { return exponent_; }
  bool overflowed() const noexcept { return overflowed_; }
  std::uint64_t cap() const noexcept { return cap_; }

  /// "M=3^64"-style label.
  std::string cube_count_label() const {
    return "M=" + std::to_string(base_) + "^" + std::to_string(exponent_);
  }

 private:
  static std::string describe(std::uint64_t base, std::size_t exponent, bool overflowed,
                              std::uint64_t cap) {
    std::string msg = "grid refused: M = " + std::to_string(base) + "^" + std::to_string(exponent);
    if (overflowed)
      msg += " overflows a 64-bit cube index";
    else
      msg += " exceeds the cube cap";
    return msg + " (cap " + std::to_string(cap) + ")";
  }

  std::uint64_t base_;
  std::size_t exponent_;
  bool overflowed_;
  std::uint64_t cap_;
};

/// y splits per dimension, refined by multiplier k: Y = k*y, (Y+1) cubes per
/// dimension, M = (Y+1)^dims cubes in total.
struct GridConfig {
  std::size_t splits_y = 1;
  std::size_t multiplier_k = 1;
  std::size_t dims = 1;
  std::size_t effective_Y = 1;
  std::size_t cubes_per_dim = 2;
  std::uint64_t total_cubes_M = 2;

  static GridConfig create(std::size_t dims, std::size_t y, std::size_t k,
                           std::uint64_t cap = kDefaultCubeCap) {
    if (dims == 0) throw Error("grid needs at least one dimension");
    if (y == 0) throw Error("grid needs y >= 1 splits per dimension");
    if (k == 0) throw Error("grid needs multiplier k >= 1");
    GridConfig cfg;
    cfg.splits_y = y;
    cfg.multiplier_k = k;
    cfg.dims = dims;
    if (y > std::numeric_limits<std::size_t>::max() / k - 1)
      throw GridRefused(std::numeric_limits<std::uint64_t>::max(), dims, true, cap);
    cfg.effective_Y = k * y;
    cfg.cubes_per_dim = cfg.effective_Y + 1;
    const std::uint64_t base = cfg.cubes_per_dim;
    std::uint64_t total = 1;
    for (std::size_t i = 0; i < dims; ++i) {
      if (total > std::numeric_limits<std::uint64_t>::max() / base)
        throw GridRefused(base, dims, true, cap);
      total *= base;
    }
    if (total > cap) throw GridRefused(base, dims, false, cap);
    cfg.total_cubes_M = total;
    return cfg;
  }
};

struct Cube {
  std::vector<std::size_t> rows;  // unsorted; the median walk selects within its stopping slab
  std::size_t total_points() const noexcept { return rows.size(); }
};

/**
 * Sparse n-cube occupancy index over a dataset's bounding box. Only occupied
 * cubes are stored. The index keeps a pointer to the dataset it was built
 * from; the dataset must outlive it.
 */
class GridIndex {
 public:
  GridIndex(const Dataset& ds, GridConfig cfg) : data_(&ds), config_(cfg) {
    if (ds.empty()) throw Error("grid over an empty dataset");
    if (cfg.dims != ds.dims())
      throw Error("grid configured for " + std::to_string(cfg.dims) + " dims, dataset has " +
                  std::to_string(ds.dims()));
    bounds_.assign(ds.bounds().begin(), ds.bounds().end());
    widths_.resize(ds.dims());
    for (std::size_t j = 0; j < ds.dims(); ++j)
      widths_[j] = (bounds_[j].max - bounds_[j].min) / static_cast<double>(cfg.cubes_per_dim);
    strides_.resize(ds.dims());
    std::uint64_t stride = 1;
    for (std::size_t j = 0; j < ds.dims(); ++j) {
      strides_[j] = stride;
      if (j + 1 < ds.dims()) stride *= cfg.cubes_per_dim;
    }
    for (std::size_t i = 0; i < ds.size(); ++i) cubes_[locate(ds.coords(i))].rows.push_back(i);
    passes_ = 1;
  }

  GridIndex(Dataset&&, GridConfig) = delete;

  const Dataset& dataset() const noexcept { return *data_; }
  const GridConfig& config() const noexcept { return config_; }
  std::span<const Interval> bounds() const noexcept { return bounds_; }
  const std::unordered_map<std::uint64_t, Cube>& cubes() const noexcept { return cubes_; }
  std::size_t occupied_cubes() const noexcept { return cubes_.size(); }
  std::size_t point_count() const noexcept { return data_->size(); }
  /// Sweeps over the dataset performed by construction.
  std::size_t passes() const noexcept { return passes_; }

  /// Cell index along one dimension; coordinates equal to max land in the
  /// last cell.
  std::size_t cell_of(double x, std::size_t dim) const {
    const Interval b = bounds_[dim];
    if (!(x >= b.min && x <= b.max))
      throw Error("coordinate " + std::to_string(x) + " outside grid bounds on dim " +
                  std::to_string(dim));
    if (widths_[dim] <= 0.0) return 0;
    const double cell = std::floor((x - b.min) / widths_[dim]);
    return std::min(static_cast<std::size_t>(cell), config_.cubes_per_dim - 1);
  }

  /// Row-major flattening with dimension 0 varying fastest.
  std::uint64_t locate(std::span<const double> coords) const {
    if (coords.size() != bounds_.size()) throw Error("point dimensionality does not match grid");
    std::uint64_t index = 0;
    for (std::size_t j = 0; j < coords.size(); ++j) index += cell_of(coords[j], j) * strides_[j];
    return index;
  }

  std::uint64_t flatten(std::span<const std::size_t> cells) const {
    if (cells.size() != bounds_.size()) throw Error("cell tuple dimensionality does not match grid");
    std::uint64_t index = 0;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (cells[j] >= config_.cubes_per_dim) throw Error("cell index out of range");
      index += cells[j] * strides_[j];
    }
    return index;
  }

  std::vector<std::size_t> unflatten(std::uint64_t index) const {
    if (index >= config_.total_cubes_M) throw Error("cube index out of range");
    std::vector<std::size_t> cells(bounds_.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      cells[j] = static_cast<std::size_t>(index % config_.cubes_per_dim);
      index /= config_.cubes_per_dim;
    }
    return cells;
  }

  std::size_t cell_along(std::uint64_t index, std::size_t dim) const {
    return static_cast<std::size_t>((index / strides_[dim]) % config_.cubes_per_dim);
  }

  /// [lo, hi) interval of cell `c` along `dim` (the last cell is closed).
  Interval cell_bounds(std::size_t dim, std::size_t c) const {
    const double lo = bounds_[dim].min + static_cast<double>(c) * widths_[dim];
    const double hi = c + 1 == config_.cubes_per_dim ? bounds_[dim].max : lo + widths_[dim];
    return {lo, hi};
  }

 private:
  const Dataset* data_;
  GridConfig config_;
  std::vector<Interval> bounds_;
  std::vector<double> widths_;
  std::vector<std::uint64_t> strides_;
  std::unordered_map<std::uint64_t, Cube> cubes_;
  std::size_t passes_ = 0;
};

inline GridIndex build_grid(const Dataset& ds, const GridConfig& cfg) { return GridIndex(ds, cfg); }
GridIndex build_grid(Dataset&&, const GridConfig&) = delete;

inline std::uint64_t locate_cube(std::span<const double> coords, const GridIndex& grid) {
  return grid.locate(coords);
}

struct GridMedian {
  double value = 0.0;
  std::size_t slab = 0;             // cell index along the queried dimension
  std::size_t slab_population = 0;  // points in the stopping slab
  std::size_t max_slab_population = 0;
};

/**
 * Slab walk: accumulate per-slab counts along `dim` in ascending order until
 * the running total reaches ceil(P/2), then select the remaining rank among
 * the points of the stopping slab.
 */
inline GridMedian grid_find_median_detail(const GridIndex& grid, std::size_t dim) {
  if (grid.point_count() == 0) throw Error("median of an empty grid");
  if (dim >= grid.config().dims) throw Error("median dimension out of range");
  const std::size_t cpd = grid.config().cubes_per_dim;
  std::vector<std::size_t> slab_counts(cpd, 0);
  for (const auto& [index, cube] : grid.cubes()) slab_counts[grid.cell_along(index, dim)] += cube.total_points();

  const std::size_t target = (grid.point_count() + 1) / 2;  // 1-indexed rank
  std::size_t before = 0;
  std::size_t slab = 0;
  while (before + slab_counts[slab] < target) before += slab_counts[slab++];

  std::vector<double> values;
  values.reserve(slab_counts[slab]);
  for (const auto& [index, cube] : grid.cubes())
    if (grid.cell_along(index, dim) == slab)
      for (std::size_t r : cube.rows) values.push_back(grid.dataset().coord(r, dim));

  GridMedian out;
  out.slab = slab;
  out.slab_population = values.size();
  out.max_slab_population = *std::max_element(slab_counts.begin(), slab_counts.end());
  out.value = select_rank(values, target - before - 1);
  return out;
}

inline double grid_find_median(const GridIndex& grid, std::size_t dim) {
  return grid_find_median_detail(grid, dim).value;
}

struct GridStats {
  std::uint64_t total_cubes = 0;
  std::uint64_t occupied = 0;
  std::uint64_t empty = 0;
  double occupied_fraction = 0.0;
  std::size_t max_load = 0;
  double mean_nonzero_load = 0.0;
};

inline GridStats grid_stats(const GridIndex& grid) {
  GridStats s;
  s.total_cubes = grid.config().total_cubes_M;
  s.occupied = grid.occupied_cubes();
  s.empty = s.total_cubes - s.occupied;
  s.occupied_fraction = static_cast<double>(s.occupied) / static_cast<double>(s.total_cubes);
  for (const auto& [index, cube] : grid.cubes()) s.max_load = std::max(s.max_load, cube.total_points());
  if (s.occupied)
    s.mean_nonzero_load = static_cast<double>(grid.point_count()) / static_cast<double>(s.occupied);
  return s;
}

}  // namespace vpart
