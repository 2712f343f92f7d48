#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "vpart/core.hpp"
#include "vpart/kdtree.hpp"
#include "vpart/rng.hpp"
#include "vpart/seeding.hpp"

namespace vpart {

// ---------------------------------------------------------------------------
// Nearest-center assignment

/// What an internal node keeps about each child once its points are released.
struct CenterSummary {
  std::size_t count = 0;
  std::vector<double> centroid;
  std::vector<Interval> bbox;
};

struct CenterAssignment {
  std::vector<std::vector<std::size_t>> members;  // per center, in input order
  std::vector<std::size_t> affected;              // rows within the eps band
};

/**
 * Sends every row to its nearest center (ties: lowest center index). A row
 * assigned to center i is affected when d(p, q_j) - d(p, q_i) <= 2*eps for some
 * j != i. For two centers that margin contains every point within eps of the
 * bisecting hyperplane, so the affected set is a superset of the eps band.
 *
 * `cached[c][i]`, when given, is the squared distance from rows[i] to
 * centers[c] and is used instead of recomputing it.
 */
inline CenterAssignment assign_to_centers(const Dataset& ds, std::span<const std::size_t> rows,
                                          std::span<const Point> centers, double eps,
                                          const std::vector<std::vector<double>>* cached = nullptr,
                                          ScanCounters* counters = nullptr) {
  if (centers.empty()) throw Error("assignment needs at least one center");
  if (!(eps >= 0.0)) throw Error("eps must be non-negative");
  for (const auto& c : centers)
    if (c.coords.size() != ds.dims()) throw Error("center dimensionality does not match dataset");
  const std::size_t k = centers.size();
  const std::size_t d = ds.dims();
  const std::size_t from_cache = cached ? std::min(cached->size(), k) : 0;
  if (cached)
    for (std::size_t c = 0; c < from_cache; ++c)
      if ((*cached)[c].size() != rows.size()) throw Error("distance cache misaligned with rows");

  CenterAssignment out;
  out.members.resize(k);
  std::vector<double> sq(k);
  const double band = 2.0 * eps;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double* x = ds.coords(rows[i]).data();
    for (std::size_t c = 0; c < k; ++c)
      sq[c] = c < from_cache ? (*cached)[c][i]
                             : detail::squared_distance_unchecked(x, centers[c].coords.data(), d);
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c)
      if (sq[c] < sq[best]) best = c;
    out.members[best].push_back(rows[i]);
    const double own = std::sqrt(sq[best]);
    for (std::size_t c = 0; c < k; ++c) {
      if (c != best && std::sqrt(sq[c]) - own <= band) {
        out.affected.push_back(rows[i]);
        break;
      }
    }
  }
  if (counters) counters->sweep(rows.size());
  return out;
}

// ---------------------------------------------------------------------------
// Tree

/// Reference to a child: either another internal node or a leaf partition.
struct VChild {
  bool leaf = true;
  std::size_t index = 0;  // node index, or partition id when leaf

  friend bool operator==(const VChild&, const VChild&) = default;
};

struct VNode {
  std::size_t level = 0;
  std::vector<Point> centers;
  std::vector<std::size_t> child_counts;
  std::size_t overlap_count = 0;
  std::vector<VChild> children;
  std::vector<CenterSummary> summary;
  /// Points held while this node is being split; emptied once they move to
  /// the children.
  std::vector<std::size_t> retained_rows;

  std::size_t fanout() const noexcept { return centers.size(); }
  std::size_t total_count() const {
    std::size_t t = 0;
    for (std::size_t c : child_counts) t += c;
    return t;
  }
};

struct VLeaf {
  std::size_t level = 0;
  std::vector<std::size_t> rows;
  std::size_t parent = kNoChild;  // node index, kNoChild for a root leaf
  std::size_t slot = 0;           // position among the parent's children
};

struct VTreeConfig {
  std::size_t partitions = 8;
  std::size_t fanout = 2;
  /// Fanout for nodes at level i; levels past the end use `fanout`.
  std::vector<std::size_t> fanout_schedule;
  double eps = 0.0;
  SeedKind seeding = SeedKind::kmeanspp;
  std::uint64_t seed = 0;

  std::size_t fanout_at(std::size_t level) const {
    return level < fanout_schedule.size() ? fanout_schedule[level] : fanout;
  }
};

struct VTree {
  VTreeConfig config;
  std::size_t levels = 0;
  VChild root;
  std::vector<VNode> nodes;
  std::vector<VLeaf> leaves;  // indexed by partition id
  PartitionAssignment leaf_assignment;
  ScanCounters counters;
  std::size_t reseeds = 0;  // splits retried because a child came out empty

  std::size_t leaf_count() const noexcept { return leaves.size(); }

  /// Individual point references still held by internal nodes.
  std::size_t internal_point_refs() const {
    std::size_t total = 0;
    for (const auto& n : nodes) total += n.retained_rows.size();
    return total;
  }

  CenterSummary root_summary() const;
};

namespace detail {

inline CenterSummary summarize_rows(const Dataset& ds, std::span<const std::size_t> rows) {
  const std::size_t d = ds.dims();
  CenterSummary s;
  s.count = rows.size();
  s.centroid.assign(d, 0.0);
  std::vector<double> lo(d, std::numeric_limits<double>::infinity());
  std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
  double* sum = s.centroid.data();
  double* lo_p = lo.data();
  double* hi_p = hi.data();
  for (std::size_t r : rows) {
    const double* x = ds.coords(r).data();
    for (std::size_t j = 0; j < d; ++j) {
      sum[j] += x[j];
      lo_p[j] = x[j] < lo_p[j] ? x[j] : lo_p[j];
      hi_p[j] = x[j] > hi_p[j] ? x[j] : hi_p[j];
    }
  }
  if (s.count)
    for (double& c : s.centroid) c /= static_cast<double>(s.count);
  s.bbox.resize(d);
  for (std::size_t j = 0; j < d; ++j) s.bbox[j] = {lo[j], hi[j]};
  return s;
}

inline CenterSummary merge_summaries(std::span<const CenterSummary> parts, std::size_t dims) {
  CenterSummary s;
  s.centroid.assign(dims, 0.0);
  s.bbox.assign(dims, Interval{std::numeric_limits<double>::infinity(),
                               -std::numeric_limits<double>::infinity()});
  for (const auto& p : parts) {
    s.count += p.count;
    if (p.count == 0) continue;
    for (std::size_t j = 0; j < dims; ++j) {
      s.centroid[j] += p.centroid[j] * static_cast<double>(p.count);
      s.bbox[j].min = std::min(s.bbox[j].min, p.bbox[j].min);
      s.bbox[j].max = std::max(s.bbox[j].max, p.bbox[j].max);
    }
  }
  if (s.count)
    for (double& c : s.centroid) c /= static_cast<double>(s.count);
  return s;
}

// Fills node summaries bottom-up from the leaves' rows; returns the summary
// of `child`.
inline CenterSummary fill_summaries(VTree& tree, const Dataset& ds, VChild child) {
  if (child.leaf) return summarize_rows(ds, tree.leaves[child.index].rows);
  std::vector<CenterSummary> parts;
  const std::vector<VChild> children = tree.nodes[child.index].children;
  parts.reserve(children.size());
  for (VChild c : children) parts.push_back(fill_summaries(tree, ds, c));
  CenterSummary merged = merge_summaries(parts, ds.dims());
  tree.nodes[child.index].summary = std::move(parts);
  return merged;
}

}  // namespace detail

inline CenterSummary VTree::root_summary() const {
  if (root.leaf) {
    CenterSummary s;
    s.count = leaves.empty() ? 0 : leaves[root.index].rows.size();
    return s;
  }
  const auto& n = nodes[root.index];
  const std::size_t dims = n.centers.empty() ? 0 : n.centers.front().coords.size();
  return detail::merge_summaries(n.summary, dims);
}

/**
 * Builds the tree by repeatedly splitting the leaf holding the most points
 * (ties: lowest partition id) among `fanout` seeded centers until
 * `config.partitions` leaves exist. Child 0 of a split keeps the split leaf's
 * partition id; the others take the next unused ids. The last split uses a
 * smaller fanout when fewer leaves are missing.
 *
 * A split that leaves a child empty is redrawn once; a second empty result is
 * kept. The affected set is the union over all splits.
 */
inline VTree build_vtree(const Dataset& ds, const VTreeConfig& config) {
  const std::size_t m = config.partitions;
  if (m == 0) throw Error("partition count must be at least 1");
  if (m > ds.size())
    throw Error("partition count " + std::to_string(m) + " exceeds point count " +
                std::to_string(ds.size()));
  if (config.fanout < 2) throw Error("fanout must be at least 2");
  for (std::size_t f : config.fanout_schedule)
    if (f < 2) throw Error("fanout schedule entries must be at least 2");
  if (config.seeding == SeedKind::median) {
    bool binary = config.fanout == 2;
    for (std::size_t f : config.fanout_schedule) binary = binary && f == 2;
    if (!binary) throw Error("median seeding requires fanout 2");
  }
  if (!(config.eps >= 0.0)) throw Error("eps must be non-negative");

  VTree tree;
  tree.config = config;
  tree.leaf_assignment.partition_count = m;
  tree.leaf_assignment.labels.assign(ds.size(), 0);
  tree.leaf_assignment.affected.assign(ds.size(), false);
  tree.leaves.push_back(VLeaf{.level = 0, .rows = all_rows(ds)});
  tree.root = VChild{true, 0};
  Rng rng(config.seed);

  using Key = std::pair<std::size_t, PartitionId>;
  auto order = [](const Key& a, const Key& b) {
    return a.first != b.first ? a.first < b.first : a.second > b.second;
  };
  std::priority_queue<Key, std::vector<Key>, decltype(order)> queue(order);
  queue.push({ds.size(), 0});

  while (tree.leaves.size() < m) {
    const PartitionId target = queue.top().second;
    queue.pop();
    const std::size_t level = tree.leaves[target].level;
    const std::size_t have = tree.leaves[target].rows.size();
    std::size_t fanout = std::min(config.fanout_at(level), m - tree.leaves.size() + 1);
    fanout = std::min(fanout, have);
    if (fanout < 2)
      throw Error("cannot split partition " + std::to_string(target) + " holding " +
                  std::to_string(have) + " point(s)");

    // the node holds the points while they are being distributed
    const std::size_t node_index = tree.nodes.size();
    tree.nodes.emplace_back();
    tree.nodes[node_index].level = level;
    tree.nodes[node_index].retained_rows = std::move(tree.leaves[target].rows);
    const std::vector<std::size_t>& rows = tree.nodes[node_index].retained_rows;

    SeedSet seeds;
    CenterAssignment split;
    for (int attempt = 0; attempt < 2; ++attempt) {
      std::vector<std::vector<double>> cache;
      seeds = choose_seeds(config.seeding, ds, rows, fanout, rng,
                           SeedWork{.counters = &tree.counters, .sq_dist_cache = &cache});
      split = assign_to_centers(ds, rows, seeds.centers, config.eps,
                                config.seeding == SeedKind::kmeanspp ? &cache : nullptr,
                                &tree.counters);
      const bool has_empty = std::any_of(split.members.begin(), split.members.end(),
                                         [](const auto& v) { return v.empty(); });
      if (!has_empty || attempt == 1) break;
      ++tree.reseeds;
    }
    ++tree.counters.splits;

    VNode& node = tree.nodes[node_index];
    node.centers = std::move(seeds.centers);
    node.overlap_count = split.affected.size();
    for (std::size_t r : split.affected) tree.leaf_assignment.affected[r] = true;

    // hook the node in where the leaf used to be
    const VLeaf old = {level, {}, tree.leaves[target].parent, tree.leaves[target].slot};
    const VChild self{false, node_index};
    if (old.parent == kNoChild)
      tree.root = self;
    else
      tree.nodes[old.parent].children[old.slot] = self;

    for (std::size_t c = 0; c < fanout; ++c) {
      const PartitionId id = c == 0 ? target : tree.leaves.size();
      if (c != 0) tree.leaves.emplace_back();
      VLeaf& leaf = tree.leaves[id];
      leaf.level = level + 1;
      leaf.parent = node_index;
      leaf.slot = c;
      leaf.rows = std::move(split.members[c]);
      node.children.push_back(VChild{true, id});
      node.child_counts.push_back(leaf.rows.size());
      queue.push({leaf.rows.size(), id});
    }
    node.retained_rows.clear();
    node.retained_rows.shrink_to_fit();
  }

  for (PartitionId id = 0; id < tree.leaves.size(); ++id) {
    tree.levels = std::max(tree.levels, tree.leaves[id].level);
    for (std::size_t r : tree.leaves[id].rows) tree.leaf_assignment.labels[r] = id;
  }
  if (!tree.root.leaf) detail::fill_summaries(tree, ds, tree.root);
  return tree;
}

// ---------------------------------------------------------------------------
// Queries

struct RouteResult {
  PartitionId leaf = 0;
  std::size_t distance_evals = 0;
};

/// Descends choosing the nearest center at every node (ties: lowest index).
inline RouteResult route_point_detail(const VTree& tree, std::span<const double> p) {
  RouteResult out;
  VChild at = tree.root;
  while (!at.leaf) {
    const VNode& node = tree.nodes[at.index];
    if (p.size() != node.centers.front().coords.size())
      throw Error("point dimensionality does not match tree");
    std::size_t best = 0;
    double best_sq = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < node.centers.size(); ++c) {
      const double sq = detail::squared_distance_unchecked(p.data(), node.centers[c].coords.data(), p.size());
      ++out.distance_evals;
      if (sq < best_sq) {
        best_sq = sq;
        best = c;
      }
    }
    at = node.children[best];
  }
  out.leaf = at.index;
  return out;
}

inline PartitionId route_point(const VTree& tree, std::span<const double> p) {
  return route_point_detail(tree, p).leaf;
}

/**
 * Every leaf reachable by following, at each node, all centers j with
 * d(p, q_j) - min_i d(p, q_i) <= 2*eps. Sorted ascending; always contains
 * route_point(p).
 */
inline std::vector<PartitionId> affected_partitions(const VTree& tree, std::span<const double> p,
                                                    double eps) {
  if (!(eps >= 0.0)) throw Error("eps must be non-negative");
  std::vector<PartitionId> out;
  std::vector<VChild> stack{tree.root};
  std::vector<double> d;
  while (!stack.empty()) {
    const VChild at = stack.back();
    stack.pop_back();
    if (at.leaf) {
      out.push_back(at.index);
      continue;
    }
    const VNode& node = tree.nodes[at.index];
    if (p.size() != node.centers.front().coords.size())
      throw Error("point dimensionality does not match tree");
    d.resize(node.centers.size());
    std::size_t best = 0;
    for (std::size_t c = 0; c < node.centers.size(); ++c) {
      d[c] = detail::squared_distance_unchecked(p.data(), node.centers[c].coords.data(), p.size());
      if (d[c] < d[best]) best = c;
    }
    const double own = std::sqrt(d[best]);
    for (std::size_t c = 0; c < node.centers.size(); ++c)
      if (c == best || std::sqrt(d[c]) - own <= 2.0 * eps) stack.push_back(node.children[c]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Merge order

struct MergeStep {
  std::vector<std::size_t> inputs;  // partition ids (< m) or earlier group ids (>= m)
  std::size_t output = 0;
};

/// Bottom-up combination sequence. Leaves are groups 0..m-1; step i creates
/// group m + i.
struct MergeOrder {
  std::size_t partition_count = 0;
  std::vector<MergeStep> steps;
};

inline MergeOrder merge_order(const VTree& tree) {
  MergeOrder order;
  order.partition_count = tree.leaf_count();
  std::function<std::size_t(VChild)> visit = [&](VChild c) -> std::size_t {
    if (c.leaf) return c.index;
    MergeStep step;
    for (VChild child : tree.nodes[c.index].children) step.inputs.push_back(visit(child));
    step.output = order.partition_count + order.steps.size();
    order.steps.push_back(std::move(step));
    return order.steps.back().output;
  };
  visit(tree.root);
  return order;
}

}  // namespace vpart
