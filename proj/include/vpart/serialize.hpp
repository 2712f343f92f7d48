#pragma once

// JSON views of the partitioners' outputs.

#include <json.hpp>

#include "vpart/core.hpp"
#include "vpart/grid.hpp"
#include "vpart/kdtree.hpp"
#include "vpart/vtree.hpp"

namespace vpart {

using nlohmann::json;

inline json to_json(const ScanCounters& c) {
  return {{"splits", c.splits}, {"passes", c.passes}, {"point_touches", c.point_touches}};
}

inline json to_json(const PartitionMetrics& m) {
  return {{"sizes", m.sizes},
          {"bias", m.bias},
          {"size_cv", m.size_cv},
          {"affected_count", m.affected_count},
          {"wall_time", m.wall_time}};
}

inline json to_json(const GridStats& s) {
  return {{"M", s.total_cubes},
          {"occupied", s.occupied},
          {"empty", s.empty},
          {"occupied_fraction", s.occupied_fraction},
          {"max_load", s.max_load},
          {"mean_nonzero_load", s.mean_nonzero_load}};
}

inline json kd_node_to_json(const KdPartitionTree& tree, std::size_t index) {
  const KdNode& n = tree.nodes[index];
  if (n.leaf) return {{"leaf", n.partition}, {"count", n.point_count}};
  const json left = kd_node_to_json(tree, n.left);
  const json right = kd_node_to_json(tree, n.right);
  return {{"split_dim", n.split_dim},
          {"split_value", n.split_value},
          {"count", n.point_count},
          {"counts", {tree.nodes[n.left].point_count, tree.nodes[n.right].point_count}},
          {"children", {left, right}}};
}

inline json to_json(const KdPartitionTree& tree) {
  return {{"scheme", "kdtree"},
          {"partitions", tree.leaf_count},
          {"counters", to_json(tree.counters)},
          {"root", kd_node_to_json(tree, 0)}};
}

inline json to_json(const CenterSummary& s) {
  json bbox = json::array();
  for (const auto& b : s.bbox) bbox.push_back({b.min, b.max});
  return {{"count", s.count}, {"centroid", s.centroid}, {"bbox", bbox}};
}

inline json vnode_to_json(const VTree& tree, VChild at) {
  if (at.leaf) return {{"leaf", at.index}, {"count", tree.leaves[at.index].rows.size()}};
  const VNode& n = tree.nodes[at.index];
  json centers = json::array();
  for (const auto& c : n.centers) centers.push_back({{"id", c.id}, {"coords", c.coords}});
  json children = json::array();
  for (VChild c : n.children) children.push_back(vnode_to_json(tree, c));
  json summary = json::array();
  for (const auto& s : n.summary) summary.push_back(to_json(s));
  return {{"level", n.level},
          {"centers", centers},
          {"counts", n.child_counts},
          {"total_count", n.total_count()},
          {"overlap_count", n.overlap_count},
          {"summary", summary},
          {"children", children}};
}

inline json to_json(const VTree& tree) {
  json schedule = tree.config.fanout_schedule;
  return {{"scheme", "vtree"},
          {"partitions", tree.leaf_count()},
          {"levels", tree.levels},
          {"fanout", tree.config.fanout},
          {"fanout_schedule", schedule},
          {"eps", tree.config.eps},
          {"seeding", std::string(to_string(tree.config.seeding))},
          {"seed", tree.config.seed},
          {"reseeds", tree.reseeds},
          {"counters", to_json(tree.counters)},
          {"root", vnode_to_json(tree, tree.root)}};
}

inline json to_json(const MergeOrder& order) {
  json steps = json::array();
  for (const auto& s : order.steps) steps.push_back({{"inputs", s.inputs}, {"output", s.output}});
  return {{"partitions", order.partition_count}, {"steps", steps}};
}

}  // namespace vpart
