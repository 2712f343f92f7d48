#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vpart/core.hpp"
#include "vpart/kdtree.hpp"
#include "vpart/rng.hpp"
#include "vpart/select.hpp"

namespace vpart {

enum class SeedKind { random, gnat, kmeanspp, median };

inline std::string_view to_string(SeedKind kind) {
  switch (kind) {
    case SeedKind::random: return "random";
    case SeedKind::gnat: return "gnat";
    case SeedKind::kmeanspp: return "kmeanspp";
    case SeedKind::median: return "median";
  }
  return "?";
}

inline SeedKind parse_seed_kind(std::string_view name) {
  if (name == "random") return SeedKind::random;
  if (name == "gnat") return SeedKind::gnat;
  if (name == "kmeanspp") return SeedKind::kmeanspp;
  if (name == "median") return SeedKind::median;
  throw Error("unknown seeding strategy '" + std::string(name) + "'");
}

struct SeedStrategy {
  SeedKind kind = SeedKind::kmeanspp;
  std::uint64_t seed = 0;
};

/**
 * Split points for one Voronoi split. `rows` are the dataset rows the seeds
 * were drawn from; `centers` carry those points' ids and the coordinates used
 * for the split. The two coincide except for median seeding, whose second
 * center is moved onto the axis through the first.
 */
struct SeedSet {
  std::vector<std::size_t> rows;
  std::vector<Point> centers;

  std::size_t k() const noexcept { return centers.size(); }
};

/// Optional side outputs of a seeding run.
struct SeedWork {
  ScanCounters* counters = nullptr;
  /// kmeans++ only: squared distances from every member to center i, for the
  /// centers whose distances the sampler already computed (all but the last).
  std::vector<std::vector<double>>* sq_dist_cache = nullptr;
};

namespace detail {

inline void check_seed_count(std::span<const std::size_t> members, std::size_t k) {
  if (k == 0) throw Error("at least one seed is required");
  if (k > members.size())
    throw Error("cannot choose " + std::to_string(k) + " seeds from " +
                std::to_string(members.size()) + " points");
}

inline SeedSet make_seed_set(const Dataset& ds, std::vector<std::size_t> rows) {
  SeedSet s;
  s.centers.reserve(rows.size());
  for (std::size_t r : rows) s.centers.push_back(ds.point(r).to_point());
  s.rows = std::move(rows);
  return s;
}

inline std::size_t position_of(std::span<const std::size_t> members, std::size_t row) {
  const auto it = std::find(members.begin(), members.end(), row);
  if (it == members.end()) throw Error("requested first seed is not among the points");
  return static_cast<std::size_t>(it - members.begin());
}

}  // namespace detail

/// Number of distinct coordinate vectors among `members`.
inline std::size_t distinct_locations(const Dataset& ds, std::span<const std::size_t> members) {
  std::vector<std::size_t> sorted(members.begin(), members.end());
  auto less = [&](std::size_t a, std::size_t b) {
    const auto x = ds.coords(a), y = ds.coords(b);
    return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
  };
  std::sort(sorted.begin(), sorted.end(), less);
  std::size_t count = sorted.empty() ? 0 : 1;
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (less(sorted[i - 1], sorted[i])) ++count;
  return count;
}

/// k distinct members uniformly without replacement (partial Fisher-Yates).
inline SeedSet seeds_random(const Dataset& ds, std::span<const std::size_t> members,
                            std::size_t k, Rng& rng) {
  detail::check_seed_count(members, k);
  std::vector<std::size_t> pool(members.begin(), members.end());
  for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
  pool.resize(k);
  return detail::make_seed_set(ds, std::move(pool));
}

/**
 * Greedy farthest-point seeding: the first seed is uniform (or `first_row`),
 * each later seed is the unselected member maximizing the sum of distances to
 * the seeds chosen so far. Ties go to the lowest point id.
 */
inline SeedSet seeds_gnat(const Dataset& ds, std::span<const std::size_t> members, std::size_t k,
                          Rng& rng, std::optional<std::size_t> first_row = std::nullopt,
                          SeedWork work = {}) {
  detail::check_seed_count(members, k);
  const std::size_t n = members.size();
  const std::size_t first =
      first_row ? detail::position_of(members, *first_row) : static_cast<std::size_t>(rng.below(n));
  std::vector<std::size_t> chosen{members[first]};
  std::vector<bool> taken(n, false);
  taken[first] = true;
  std::vector<double> sum(n, 0.0);
  while (chosen.size() < k) {
    const auto seed = ds.coords(chosen.back());
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      sum[i] += euclidean_distance(ds.coords(members[i]), seed);
      if (taken[i]) continue;
      if (best == n || sum[i] > sum[best] ||
          (sum[i] == sum[best] && ds.id(members[i]) < ds.id(members[best])))
        best = i;
    }
    if (work.counters) work.counters->sweep(n);
    taken[best] = true;
    chosen.push_back(members[best]);
  }
  return detail::make_seed_set(ds, std::move(chosen));
}

/**
 * Inverse-CDF draw from weights proportional to `weights` using the uniform
 * variate u in [0,1). Zero-weight entries are never returned. Summation runs
 * in index order, so the outcome is a pure function of (weights, u).
 */
inline std::size_t sample_d2(std::span<const double> weights, double u) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw Error("all sampling weights are zero");
  const double target = u * total;
  double acc = 0.0;
  std::size_t last_positive = weights.size();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (target < acc) return i;
  }
  return last_positive;
}

/// D(p)^2 / sum D(q)^2 for every member given the already chosen center rows.
inline std::vector<double> kmeanspp_next_probabilities(const Dataset& ds,
                                                       std::span<const std::size_t> members,
                                                       std::span<const std::size_t> chosen) {
  if (chosen.empty()) throw Error("k-means++ probabilities need at least one chosen center");
  std::vector<double> w(members.size());
  double total = 0.0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    double best = squared_distance(ds.coords(members[i]), ds.coords(chosen[0]));
    for (std::size_t c = 1; c < chosen.size(); ++c)
      best = std::min(best, squared_distance(ds.coords(members[i]), ds.coords(chosen[c])));
    w[i] = best;
    total += best;
  }
  if (!(total > 0.0)) throw Error("all points coincide with the chosen centers");
  for (double& x : w) x /= total;
  return w;
}

/**
 * k-means++ D^2 seeding: first center uniform (or `first_row`); each further
 * center drawn with probability D(p)^2 / sum D(q)^2, D being the distance to
 * the nearest chosen center.
 */
inline SeedSet seeds_kmeanspp(const Dataset& ds, std::span<const std::size_t> members,
                              std::size_t k, Rng& rng,
                              std::optional<std::size_t> first_row = std::nullopt,
                              SeedWork work = {}) {
  detail::check_seed_count(members, k);
  const std::size_t n = members.size();
  const std::size_t first =
      first_row ? detail::position_of(members, *first_row) : static_cast<std::size_t>(rng.below(n));
  std::vector<std::size_t> chosen{members[first]};
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  if (work.sq_dist_cache) work.sq_dist_cache->clear();
  while (chosen.size() < k) {
    const auto center = ds.coords(chosen.back());
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
      dist[i] = detail::squared_distance_unchecked(ds.coords(members[i]).data(), center.data(),
                                                   ds.dims());
      nearest[i] = std::min(nearest[i], dist[i]);
    }
    if (work.counters) work.counters->sweep(n);
    if (work.sq_dist_cache) work.sq_dist_cache->push_back(std::move(dist));
    double total = 0.0;
    for (double v : nearest) total += v;
    if (!(total > 0.0))
      throw Error("k-means++ needs " + std::to_string(k) + " distinct locations, the points have " +
                  std::to_string(distinct_locations(ds, members)));
    chosen.push_back(members[sample_d2(nearest, rng.uniform01())]);
  }
  return detail::make_seed_set(ds, std::move(chosen));
}

/**
 * Two seeds straddling the median of the highest-variance dimension d*: the
 * lower-median point and the member with the next larger coordinate (ties by
 * id). The second center takes the first center's coordinates except along
 * d*, so the Voronoi bisector is the hyperplane perpendicular to d* between
 * the two values and the split reproduces the kd-tree median split.
 */
inline SeedSet seeds_median(const Dataset& ds, std::span<const std::size_t> members,
                            std::size_t k = 2, SeedWork work = {}) {
  if (k != 2) throw Error("median seeding produces exactly 2 seeds, " + std::to_string(k) + " requested");
  if (members.size() < 2) throw Error("median seeding needs at least 2 points");
  const auto var = variance_per_dimension(ds, members);
  const std::size_t dim = argmax_dimension(var);
  std::vector<double> column(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) column[i] = ds.coord(members[i], dim);
  const double v = select_median(column);
  if (work.counters) {
    work.counters->sweep(members.size());
    work.counters->sweep(members.size());
    work.counters->sweep(members.size());
  }

  // lower: largest coordinate <= v; upper: smallest coordinate > v
  constexpr std::size_t none = static_cast<std::size_t>(-1);
  std::size_t lower = none, upper = none, below_v = none;
  auto better = [&](std::size_t cand, std::size_t cur, bool want_larger) {
    if (cur == none) return true;
    const double a = ds.coord(cand, dim), b = ds.coord(cur, dim);
    if (a != b) return want_larger ? a > b : a < b;
    return ds.id(cand) < ds.id(cur);
  };
  for (std::size_t r : members) {
    const double x = ds.coord(r, dim);
    if (x <= v && better(r, lower, true)) lower = r;
    if (x > v && better(r, upper, false)) upper = r;
    if (x < v && better(r, below_v, true)) below_v = r;
  }
  if (work.counters) work.counters->sweep(members.size());
  if (upper == none) {
    // v is the maximum: straddle from below instead
    if (below_v == none)
      throw Error("median seeding: all points share the same coordinate on dimension " +
                  std::to_string(dim));
    upper = lower;
    lower = below_v;
  }

  SeedSet s = detail::make_seed_set(ds, {lower, upper});
  s.centers[1].coords = s.centers[0].coords;
  s.centers[1].coords[dim] = ds.coord(upper, dim);
  return s;
}

inline SeedSet choose_seeds(SeedKind kind, const Dataset& ds, std::span<const std::size_t> members,
                            std::size_t k, Rng& rng, SeedWork work = {}) {
  switch (kind) {
    case SeedKind::random: return seeds_random(ds, members, k, rng);
    case SeedKind::gnat: return seeds_gnat(ds, members, k, rng, std::nullopt, work);
    case SeedKind::kmeanspp: return seeds_kmeanspp(ds, members, k, rng, std::nullopt, work);
    case SeedKind::median: return seeds_median(ds, members, k, work);
  }
  throw Error("unknown seeding strategy");
}

}  // namespace vpart
