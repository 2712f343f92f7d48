#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <queue>
#include <string>
#include <vector>

#include "vpart/core.hpp"
#include "vpart/select.hpp"

namespace vpart {

inline constexpr std::size_t kNoChild = static_cast<std::size_t>(-1);

struct KdNode {
  bool leaf = true;
  std::size_t point_count = 0;
  std::size_t depth = 0;
  // internal nodes
  std::size_t split_dim = 0;
  double split_value = 0.0;
  std::size_t left = kNoChild;
  std::size_t right = kNoChild;
  // leaves
  PartitionId partition = 0;
};

/// Work counters. A "pass" is one sweep over a node's point subset; touches
/// count points visited summed over all passes.
struct ScanCounters {
  std::size_t splits = 0;
  std::size_t passes = 0;
  std::size_t point_touches = 0;

  void sweep(std::size_t points) {
    ++passes;
    point_touches += points;
  }
};

struct KdPartitionTree {
  std::vector<KdNode> nodes;  // nodes[0] is the root
  std::size_t leaf_count = 0;
  PartitionAssignment assignment;
  ScanCounters counters;

  const KdNode& root() const { return nodes.front(); }
};

namespace detail {

struct KdSplit {
  std::size_t dim = 0;
  double value = 0.0;
  std::vector<std::size_t> left;
  std::vector<std::size_t> right;
};

// Median split of `rows` on their highest-variance dimension. The lower
// ceil(c/2) points by (coordinate, id) go left. Points within eps of the split
// value are flagged affected.
inline KdSplit kd_split(const Dataset& ds, const std::vector<std::size_t>& rows, double eps,
                        std::vector<bool>& affected, ScanCounters& counters) {
  KdSplit s;
  const auto var = variance_per_dimension(ds, rows);
  counters.sweep(rows.size());
  counters.sweep(rows.size());
  s.dim = argmax_dimension(var);

  std::vector<double> column(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) column[i] = ds.coord(rows[i], s.dim);
  counters.sweep(rows.size());
  s.value = select_median(std::move(column));

  const std::size_t half = (rows.size() + 1) / 2;
  std::vector<std::size_t> equal;
  s.left.reserve(half);
  s.right.reserve(rows.size() - half);
  for (std::size_t r : rows) {
    const double x = ds.coord(r, s.dim);
    if (std::abs(x - s.value) <= eps) affected[r] = true;
    if (x < s.value)
      s.left.push_back(r);
    else if (x > s.value)
      s.right.push_back(r);
    else
      equal.push_back(r);
  }
  counters.sweep(rows.size());

  std::sort(equal.begin(), equal.end(),
            [&](std::size_t a, std::size_t b) { return ds.id(a) < ds.id(b); });
  for (std::size_t r : equal) (s.left.size() < half ? s.left : s.right).push_back(r);
  ++counters.splits;
  return s;
}

}  // namespace detail

/**
 * Recursive median partitioning. Each split uses the highest-variance
 * dimension of the node's own points and puts ceil(c/2) points on the left.
 * The largest leaf is split next (ties: lowest partition id) until `m` leaves
 * exist; a split leaf keeps its partition id on the left child and the right
 * child takes the next unused id.
 *
 * A point is affected when it lies within `eps` of a split value on its own
 * root-to-leaf path.
 */
inline KdPartitionTree kd_partition(const Dataset& ds, std::size_t m, double eps = 0.0) {
  if (m == 0) throw Error("partition count must be at least 1");
  if (m > ds.size())
    throw Error("partition count " + std::to_string(m) + " exceeds point count " +
                std::to_string(ds.size()));
  if (!(eps >= 0.0)) throw Error("eps must be non-negative");

  KdPartitionTree tree;
  tree.assignment.partition_count = m;
  tree.assignment.labels.assign(ds.size(), 0);
  tree.assignment.affected.assign(ds.size(), false);

  struct Leaf {
    std::size_t node;
    std::vector<std::size_t> rows;
  };
  std::vector<Leaf> leaves;  // indexed by partition id
  leaves.push_back({0, all_rows(ds)});
  tree.nodes.push_back(KdNode{.leaf = true, .point_count = ds.size(), .depth = 0, .partition = 0});

  using Key = std::pair<std::size_t, PartitionId>;  // (size, id)
  auto order = [](const Key& a, const Key& b) {
    return a.first != b.first ? a.first < b.first : a.second > b.second;
  };
  std::priority_queue<Key, std::vector<Key>, decltype(order)> queue(order);
  queue.push({ds.size(), 0});

  while (leaves.size() < m) {
    const PartitionId target = queue.top().second;
    queue.pop();
    Leaf& leaf = leaves[target];
    if (leaf.rows.size() < 2)
      throw Error("cannot split a partition holding fewer than two points");
    auto split = detail::kd_split(ds, leaf.rows, eps, tree.assignment.affected, tree.counters);

    const std::size_t parent = leaf.node;
    const std::size_t depth = tree.nodes[parent].depth + 1;
    const std::size_t left = tree.nodes.size();
    const std::size_t right = left + 1;
    const PartitionId right_id = leaves.size();
    tree.nodes.push_back(
        KdNode{.leaf = true, .point_count = split.left.size(), .depth = depth, .partition = target});
    tree.nodes.push_back(KdNode{
        .leaf = true, .point_count = split.right.size(), .depth = depth, .partition = right_id});
    KdNode& p = tree.nodes[parent];
    p.leaf = false;
    p.split_dim = split.dim;
    p.split_value = split.value;
    p.left = left;
    p.right = right;

    leaf.node = left;
    leaf.rows = std::move(split.left);
    leaves.push_back({right, std::move(split.right)});
    queue.push({leaves[target].rows.size(), target});
    queue.push({leaves[right_id].rows.size(), right_id});
  }

  for (PartitionId id = 0; id < leaves.size(); ++id)
    for (std::size_t r : leaves[id].rows) tree.assignment.labels[r] = id;
  tree.leaf_count = leaves.size();
  return tree;
}

}  // namespace vpart
