#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#ifdef __linux__
#include <pthread.h>
#include <sched.h>
#endif

#include "vpart/core.hpp"
#include "vpart/grid.hpp"
#include "vpart/io.hpp"
#include "vpart/kdtree.hpp"
#include "vpart/serialize.hpp"
#include "vpart/vtree.hpp"

namespace vpart {

inline constexpr int kReportSchemaVersion = 1;
/// Datasets at or above this many coordinates need `BenchConfig::large`.
inline constexpr std::size_t kLargeDatasetValues = std::size_t{40000} * 1024;

// ---------------------------------------------------------------------------
// Configuration

struct DatasetSpec {
  std::size_t n = 0;
  std::size_t d = 0;
  std::string path;  // non-empty: load from file instead of generating

  std::string label() const {
    return path.empty() ? std::to_string(n) + "x" + std::to_string(d) : path;
  }

  /// Parses "NxD" or a file path.
  static DatasetSpec parse(const std::string& text) {
    const auto x = text.find('x');
    if (x != std::string::npos && x > 0 && x + 1 < text.size() &&
        std::all_of(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(x), ::isdigit) &&
        std::all_of(text.begin() + static_cast<std::ptrdiff_t>(x) + 1, text.end(), ::isdigit))
      return {std::stoul(text.substr(0, x)), std::stoul(text.substr(x + 1)), {}};
    return {0, 0, text};
  }
};

enum class SchemeKind { kdtree, vtree, grid };

struct SchemeSpec {
  SchemeKind kind = SchemeKind::kdtree;
  SeedKind seeding = SeedKind::kmeanspp;

  std::string label() const {
    switch (kind) {
      case SchemeKind::kdtree: return "kdtree";
      case SchemeKind::grid: return "grid-stats";
      case SchemeKind::vtree: return "vtree(" + std::string(to_string(seeding)) + ")";
    }
    return "?";
  }

  /// "kdtree", "grid-stats", "vtree" (kmeans++), or "vtree:<seeding>".
  static SchemeSpec parse(const std::string& text) {
    if (text == "kdtree") return {SchemeKind::kdtree, SeedKind::kmeanspp};
    if (text == "grid" || text == "grid-stats") return {SchemeKind::grid, SeedKind::kmeanspp};
    if (text == "vtree") return {SchemeKind::vtree, SeedKind::kmeanspp};
    if (text.rfind("vtree:", 0) == 0) return {SchemeKind::vtree, parse_seed_kind(text.substr(6))};
    if (text.rfind("vtree(", 0) == 0 && text.back() == ')')
      return {SchemeKind::vtree, parse_seed_kind(text.substr(6, text.size() - 7))};
    throw Error("unknown scheme '" + text + "'");
  }
};

enum class DataGenerator { gaussian, uniform };

struct BenchConfig {
  std::vector<DatasetSpec> datasets;
  std::vector<SchemeSpec> schemes;
  std::vector<std::size_t> partitions{8};
  double eps = 0.0;
  std::size_t repetitions = 5;
  std::uint64_t seed = 0;
  DataGenerator generator = DataGenerator::gaussian;
  std::size_t clusters = 8;
  double spread = 0.1;
  std::size_t fanout = 2;
  std::size_t grid_y = 2;
  std::size_t grid_k = 1;
  bool large = false;
  bool parallel_cells = false;
  std::string invocation;  // echoed into the report

  void validate() const {
    if (repetitions == 0) throw Error("repetitions must be at least 1");
    if (datasets.empty()) throw Error("at least one dataset is required");
    if (schemes.empty()) throw Error("at least one scheme is required");
    if (partitions.empty()) throw Error("at least one partition count is required");
  }
};

// ---------------------------------------------------------------------------
// Report

struct BenchCell {
  std::string scheme;
  std::string dataset;
  std::size_t partitions = 0;
  std::string seeding;  // empty for non-vtree schemes
  bool ok = false;
  std::string marker;  // CSV text for a failed cell, e.g. "REFUSED(M=3^64)"
  std::string reason;
  std::vector<double> times;
  double median_time = 0.0;
  PartitionMetrics metrics;
  ScanCounters counters;
  std::optional<GridStats> grid;
};

struct BenchReport {
  BenchConfig config;
  std::vector<BenchCell> cells;
  unsigned cores = 0;
  std::string compiler;
  std::string build_flags;
  std::string timestamp;
};

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace detail {

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::array<char, 32> buf{};
  std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf.data();
}

inline void pin_to_core([[maybe_unused]] unsigned core) {
#ifdef __linux__
  cpu_set_t set;
  CPU_ZERO(&set);
  CPU_SET(core, &set);
  pthread_setaffinity_np(pthread_self(), sizeof(set), &set);
#endif
}

inline Dataset materialize(const DatasetSpec& spec, const BenchConfig& cfg) {
  if (!spec.path.empty()) return load_dataset(spec.path);
  if (cfg.generator == DataGenerator::uniform)
    return generate_uniform(spec.n, spec.d, 0.0, 1.0, cfg.seed);
  return generate_gaussian_mixture(spec.n, spec.d, std::min(cfg.clusters, spec.n), cfg.spread,
                                   cfg.seed);
}

template <class Fn>
double time_seconds(Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(stop - start).count();
}

inline BenchCell run_cell(const Dataset& ds, const std::string& dataset_label,
                          const SchemeSpec& scheme, std::size_t m, const BenchConfig& cfg) {
  BenchCell cell;
  cell.scheme = scheme.label();
  cell.dataset = dataset_label;
  cell.partitions = m;
  if (scheme.kind == SchemeKind::vtree) cell.seeding = std::string(to_string(scheme.seeding));
  try {
    if (scheme.kind == SchemeKind::grid) {
      const auto gcfg = GridConfig::create(ds.dims(), cfg.grid_y, cfg.grid_k);
      for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
        std::optional<GridIndex> grid;
        cell.times.push_back(time_seconds([&] { grid.emplace(ds, gcfg); }));
        cell.grid = grid_stats(*grid);
        cell.counters = ScanCounters{0, grid->passes(), grid->passes() * ds.size()};
      }
    } else {
      PartitionAssignment assignment;
      for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
        if (scheme.kind == SchemeKind::kdtree) {
          std::optional<KdPartitionTree> tree;
          cell.times.push_back(time_seconds([&] { tree.emplace(kd_partition(ds, m, cfg.eps)); }));
          assignment = std::move(tree->assignment);
          cell.counters = tree->counters;
        } else {
          VTreeConfig vcfg;
          vcfg.partitions = m;
          vcfg.fanout = scheme.seeding == SeedKind::median ? 2 : cfg.fanout;
          vcfg.eps = cfg.eps;
          vcfg.seeding = scheme.seeding;
          vcfg.seed = cfg.seed;
          std::optional<VTree> tree;
          cell.times.push_back(time_seconds([&] { tree.emplace(build_vtree(ds, vcfg)); }));
          assignment = std::move(tree->leaf_assignment);
          cell.counters = tree->counters;
        }
      }
      cell.metrics = compute_metrics(assignment, 0.0);
    }
    cell.median_time = median_of(cell.times);
    cell.metrics.wall_time = cell.median_time;
    cell.ok = true;
  } catch (const GridRefused& e) {
    cell.marker = "REFUSED(" + e.cube_count_label() + ")";
    cell.reason = e.what();
  } catch (const std::exception& e) {
    cell.marker = "FAILED";
    cell.reason = e.what();
  }
  return cell;
}

}  // namespace detail

/**
 * Runs every (dataset, scheme, m) cell. Each cell times the partitioning call
 * alone, `repetitions` times, and reports the median. Failures are recorded
 * on the cell and the run continues.
 *
 * With `parallel_cells`, cells run on up to one worker per core, each worker
 * pinned to its own core so no two timed regions share a core.
 */
inline BenchReport run_benchmark(const BenchConfig& cfg) {
  cfg.validate();
  BenchReport report;
  report.config = cfg;
  report.cores = std::max(1u, std::thread::hardware_concurrency());
#if defined(__clang__)
  report.compiler = "clang " __clang_version__;
#elif defined(__GNUC__)
  report.compiler = "gcc " __VERSION__;
#endif
#ifdef NDEBUG
  report.build_flags = "NDEBUG";
#else
  report.build_flags = "debug";
#endif
#ifdef __OPTIMIZE__
  report.build_flags += " optimized";
#endif
  report.timestamp = detail::utc_timestamp();

  struct Task {
    std::size_t dataset;
    SchemeSpec scheme;
    std::size_t m;
  };
  std::vector<Task> tasks;
  for (std::size_t d = 0; d < cfg.datasets.size(); ++d)
    for (const auto& scheme : cfg.schemes) {
      if (scheme.kind == SchemeKind::grid) {
        tasks.push_back({d, scheme, 0});
        continue;
      }
      for (std::size_t m : cfg.partitions) tasks.push_back({d, scheme, m});
    }
  report.cells.resize(tasks.size());

  // datasets are materialized up front, outside any timed region
  std::vector<std::optional<Dataset>> data(cfg.datasets.size());
  std::vector<std::string> load_errors(cfg.datasets.size());
  for (std::size_t d = 0; d < cfg.datasets.size(); ++d) {
    const auto& spec = cfg.datasets[d];
    if (spec.path.empty() && spec.n * spec.d >= kLargeDatasetValues && !cfg.large) {
      load_errors[d] = "dataset " + spec.label() + " requires --large";
      continue;
    }
    try {
      data[d].emplace(detail::materialize(spec, cfg));
    } catch (const std::exception& e) {
      load_errors[d] = e.what();
    }
  }

  auto run_task = [&](std::size_t t) {
    const Task& task = tasks[t];
    const std::string label = cfg.datasets[task.dataset].label();
    if (!data[task.dataset]) {
      BenchCell cell;
      cell.scheme = task.scheme.label();
      cell.dataset = label;
      cell.partitions = task.m;
      cell.marker = load_errors[task.dataset].find("--large") != std::string::npos ? "SKIPPED"
                                                                                    : "FAILED";
      cell.reason = load_errors[task.dataset];
      report.cells[t] = std::move(cell);
      return;
    }
    report.cells[t] = detail::run_cell(*data[task.dataset], label, task.scheme, task.m, cfg);
  };

  const unsigned workers = cfg.parallel_cells ? std::min<unsigned>(report.cores, tasks.size()) : 1;
  if (workers <= 1) {
    for (std::size_t t = 0; t < tasks.size(); ++t) run_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        detail::pin_to_core(w);
        for (std::size_t t = next++; t < tasks.size(); t = next++) run_task(t);
      });
    for (auto& th : pool) th.join();
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report output

inline json to_json(const BenchReport& r) {
  const auto& c = r.config;
  json datasets = json::array();
  for (const auto& d : c.datasets) datasets.push_back(d.label());
  json schemes = json::array();
  for (const auto& s : c.schemes) schemes.push_back(s.label());
  json cells = json::array();
  for (const auto& cell : r.cells) {
    json j = {{"scheme", cell.scheme},     {"dataset", cell.dataset}, {"m", cell.partitions},
              {"seeding", cell.seeding},   {"ok", cell.ok},           {"times", cell.times},
              {"median_time", cell.median_time}};
    if (!cell.ok) {
      j["marker"] = cell.marker;
      j["reason"] = cell.reason;
    } else {
      if (cell.scheme != "grid-stats") j["metrics"] = to_json(cell.metrics);
      j["counters"] = to_json(cell.counters);
      if (cell.grid) j["grid"] = to_json(*cell.grid);
    }
    cells.push_back(std::move(j));
  }
  return {{"schema_version", kReportSchemaVersion},
          {"invocation", c.invocation},
          {"environment",
           {{"cores", r.cores},
            {"compiler", r.compiler},
            {"build_flags", r.build_flags},
            {"timestamp", r.timestamp}}},
          {"config",
           {{"datasets", datasets},
            {"schemes", schemes},
            {"partitions", c.partitions},
            {"eps", c.eps},
            {"repetitions", c.repetitions},
            {"seed", c.seed},
            {"generator", c.generator == DataGenerator::uniform ? "uniform" : "gaussian"},
            {"clusters", c.clusters},
            {"spread", c.spread},
            {"fanout", c.fanout},
            {"grid_y", c.grid_y},
            {"grid_k", c.grid_k},
            {"large", c.large},
            {"parallel_cells", c.parallel_cells}}},
          {"cells", cells}};
}

/**
 * Flat table: one row per scheme, one column per dataset (suffixed "/m=<m>"
 * when several partition counts were run). Values are median seconds, or the
 * failure marker.
 */
inline std::string report_csv(const BenchReport& r) {
  const bool many_m = r.config.partitions.size() > 1;
  std::vector<std::string> columns;
  std::vector<std::string> rows;
  std::map<std::pair<std::string, std::string>, std::string> values;
  auto add_unique = [](std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
  };
  for (const auto& d : r.config.datasets) {
    if (many_m) {
      for (std::size_t m : r.config.partitions) add_unique(columns, d.label() + "/m=" + std::to_string(m));
    } else {
      add_unique(columns, d.label());
    }
  }
  for (const auto& cell : r.cells) {
    add_unique(rows, cell.scheme);
    std::string value = cell.marker;
    if (cell.ok) {
      std::array<char, 32> buf{};
      std::snprintf(buf.data(), buf.size(), "%.6g", cell.median_time);
      value = buf.data();
    }
    if (many_m && cell.scheme == "grid-stats") {
      for (std::size_t m : r.config.partitions)
        values[{cell.scheme, cell.dataset + "/m=" + std::to_string(m)}] = value;
    } else {
      const std::string column = many_m ? cell.dataset + "/m=" + std::to_string(cell.partitions) : cell.dataset;
      values[{cell.scheme, column}] = value;
    }
  }
  std::string out = "scheme";
  for (const auto& c : columns) out += "," + c;
  out += "\n";
  for (const auto& row : rows) {
    out += row;
    for (const auto& c : columns) {
      const auto it = values.find({row, c});
      out += "," + (it == values.end() ? std::string() : it->second);
    }
    out += "\n";
  }
  return out;
}

enum class ReportFormat { json, csv };

inline void emit_report(const BenchReport& report, ReportFormat format, const std::string& path) {
  detail::write_file(path, format == ReportFormat::json ? to_json(report).dump(2) + "\n"
                                                        : report_csv(report));
}

// ---------------------------------------------------------------------------
// SVG rendering

inline constexpr std::array<const char*, 12> kPalette{
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#e7ba52"};

/**
 * 2-D scatter plot, one fill color per partition, affected points ringed in
 * black, with a legend listing every partition and its size. Output bytes
 * depend only on the inputs.
 */
inline std::string render_svg(const Dataset& ds, const PartitionAssignment& a) {
  if (ds.dims() != 2) throw Error("rendering needs 2-D data, got " + std::to_string(ds.dims()) + " dims");
  a.validate(ds.size());
  constexpr double plot = 600.0, margin = 20.0, legend_w = 160.0;
  const auto b = ds.bounds();
  auto scale = [&](double v, const Interval& iv) {
    const double span = iv.max - iv.min;
    return span > 0.0 ? (v - iv.min) / span : 0.5;
  };
  auto fmt = [](double v) {
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "%.2f", v);
    return std::string(buf.data());
  };
  const auto sizes = a.sizes();
  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
         fmt(plot + 2 * margin + legend_w) + "\" height=\"" + fmt(plot + 2 * margin) + "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t p = 0; p < a.partition_count; ++p) {
    out += "<g class=\"partition\" id=\"p" + std::to_string(p) + "\" fill=\"" +
           kPalette[p % kPalette.size()] + "\">\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (a.labels[i] != p) continue;
      const double x = margin + plot * scale(ds.coord(i, 0), b[0]);
      const double y = margin + plot * (1.0 - scale(ds.coord(i, 1), b[1]));
      out += "<circle cx=\"" + fmt(x) + "\" cy=\"" + fmt(y) + "\" r=\"3\"";
      if (a.affected[i]) out += " stroke=\"black\" stroke-width=\"1.5\"";
      out += "/>\n";
    }
    out += "</g>\n";
  }
  out += "<g class=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n";
  for (std::size_t p = 0; p < a.partition_count; ++p) {
    const double y = margin + 18.0 * static_cast<double>(p);
    out += "<rect x=\"" + fmt(plot + 2 * margin) + "\" y=\"" + fmt(y) + "\" width=\"12\" height=\"12\" fill=\"" +
           kPalette[p % kPalette.size()] + "\"/>";
    out += "<text x=\"" + fmt(plot + 2 * margin + 18) + "\" y=\"" + fmt(y + 10) + "\">partition " +
           std::to_string(p) + " (" + std::to_string(sizes[p]) + ")</text>\n";
  }
  out += "</g>\n</svg>\n";
  return out;
}

inline void render_2d(const Dataset& ds, const PartitionAssignment& a, const std::string& path) {
  detail::write_file(path, render_svg(ds, a));
}

}  // namespace vpart
