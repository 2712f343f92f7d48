#pragma once

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vpart/bench.hpp"
#include "vpart/core.hpp"
#include "vpart/grid.hpp"
#include "vpart/io.hpp"
#include "vpart/kdtree.hpp"
#include "vpart/serialize.hpp"
#include "vpart/vtree.hpp"

namespace vpart::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

struct InputOptions {
  std::string path;
  std::string format = "auto";
  bool header = false;
  bool id_column = false;

  CsvOptions csv() const { return {header, id_column}; }

  Dataset load() const {
    if (format == "auto") return load_dataset(path, csv());
    return load_dataset(path, format == "csv" ? DataFormat::csv : DataFormat::binary, csv());
  }
};

inline void add_input_options(CLI::App* cmd, InputOptions& in) {
  cmd->add_option("-i,--input", in.path, "dataset file (binary or CSV)")->required();
  cmd->add_option("--input-format", in.format, "dataset format; auto detects the NDPT magic")
      ->check(CLI::IsMember({"auto", "csv", "binary"}));
  cmd->add_flag("--header", in.header, "CSV input has a header row");
  cmd->add_flag("--id-column", in.id_column, "CSV column 0 holds point ids");
}

inline std::string join(const std::vector<std::string>& parts, const char* sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

template <class T>
std::string join_numbers(const std::vector<T>& v) {
  std::vector<std::string> parts;
  for (const auto& x : v) parts.push_back(std::to_string(x));
  return join(parts);
}

inline std::string fmt_real(double v) { return detail::format_double(v); }

/**
 * Parses argv and runs one subcommand. Returns 0 on success, 1 on usage
 * errors, 2 on runtime failures (I/O, refused grid configurations, invalid
 * data). Diagnostics go to `err`; the effective invocation, with every
 * defaulted value spelled out, is echoed to `err` as a "# " line.
 */
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Partition high-dimensional point sets: kd-tree, n-cube grid, Voronoi tree"};
  app.name("vpart");
  app.require_subcommand(1, 1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  bool uniform = false, gaussian = false;
  std::size_t gen_n = 0, gen_d = 0, gen_k = 8;
  double lo = 0.0, hi = 1.0, spread = 0.1;
  std::uint64_t gen_seed = 0;
  std::string gen_out, gen_format = "auto";
  bool gen_header = false, gen_ids = false;
  auto* u_flag = gen->add_flag("--uniform", uniform, "i.i.d. uniform coordinates in [lo, hi)");
  auto* g_flag = gen->add_flag("--gaussian", gaussian, "Gaussian mixture, round-robin over clusters");
  u_flag->excludes(g_flag);
  gen->add_option("-n,--points", gen_n, "point count")->required()->check(CLI::PositiveNumber);
  gen->add_option("-d,--dims", gen_d, "dimensionality")->required()->check(CLI::PositiveNumber);
  gen->add_option("-k,--clusters", gen_k, "mixture cluster count")->check(CLI::PositiveNumber);
  gen->add_option("--spread", spread, "mixture standard deviation");
  gen->add_option("--lo", lo, "uniform lower bound");
  gen->add_option("--hi", hi, "uniform upper bound");
  gen->add_option("--seed", gen_seed, "RNG seed");
  gen->add_option("-o,--output", gen_out, "output file")->required();
  gen->add_option("--format", gen_format, "output format; auto picks csv for *.csv")
      ->check(CLI::IsMember({"auto", "csv", "binary"}));
  gen->add_flag("--header", gen_header, "write a CSV header row");
  gen->add_flag("--id-column", gen_ids, "write ids as CSV column 0");

  // partition
  auto* part = app.add_subcommand("partition", "partition one dataset with one scheme");
  InputOptions part_in;
  add_input_options(part, part_in);
  std::string scheme = "vtree", seeding = "kmeanspp";
  std::size_t part_m = 8, fanout = 2;
  std::vector<std::size_t> schedule;
  double part_eps = 0.0;
  std::uint64_t part_seed = 0;
  std::string part_out, tree_out;
  part->add_option("--scheme", scheme, "partitioner")->check(CLI::IsMember({"kdtree", "vtree"}));
  part->add_option("--seeding", seeding, "vtree seeding strategy")
      ->check(CLI::IsMember({"random", "gnat", "kmeanspp", "median"}));
  part->add_option("-m,--partitions", part_m, "partition count")->check(CLI::PositiveNumber);
  part->add_option("--fanout", fanout, "vtree centers per split")->check(CLI::Range(2, 1 << 20));
  part->add_option("--fanout-schedule", schedule, "vtree fanout per level")->delimiter(',');
  part->add_option("--eps", part_eps, "affected-point margin")->check(CLI::NonNegativeNumber);
  part->add_option("--seed", part_seed, "RNG seed");
  part->add_option("-o,--output", part_out, "assignment CSV (point-id,partition-id,affected); stdout if omitted");
  part->add_option("--tree", tree_out, "tree JSON output");

  // bench
  auto* bench = app.add_subcommand("bench", "run the partitioner benchmark grid");
  std::vector<std::string> datasets{"700x9", "1500x1024", "4000x1024", "40000x1024"};
  std::vector<std::string> schemes{"kdtree", "vtree:kmeanspp", "vtree:median"};
  std::vector<std::size_t> bench_m{8};
  BenchConfig bcfg;
  std::string generator = "gaussian", bench_out = ".", bench_format = "json";
  bench->add_option("--datasets", datasets, "NxD specs or dataset files")->delimiter(',');
  bench->add_option("--schemes", schemes, "kdtree, vtree:<seeding>, grid-stats")->delimiter(',');
  bench->add_option("-m,--partitions", bench_m, "partition counts")->delimiter(',');
  bench->add_option("--eps", bcfg.eps, "affected-point margin")->check(CLI::NonNegativeNumber);
  bench->add_option("--reps", bcfg.repetitions, "repetitions per cell")->check(CLI::PositiveNumber);
  bench->add_option("--seed", bcfg.seed, "RNG seed");
  bench->add_option("--generator", generator, "synthetic data")->check(CLI::IsMember({"gaussian", "uniform"}));
  bench->add_option("--clusters", bcfg.clusters, "mixture cluster count")->check(CLI::PositiveNumber);
  bench->add_option("--spread", bcfg.spread, "mixture standard deviation");
  bench->add_option("--fanout", bcfg.fanout, "vtree fanout")->check(CLI::Range(2, 1 << 20));
  bench->add_option("-y", bcfg.grid_y, "grid splits per dimension")->check(CLI::PositiveNumber);
  bench->add_option("-k", bcfg.grid_k, "grid multiplier")->check(CLI::PositiveNumber);
  bench->add_option("-o,--output", bench_out, "output directory");
  bench->add_option("--format", bench_format, "report format")->check(CLI::IsMember({"json", "csv"}));
  bench->add_flag("--large", bcfg.large, "include datasets of 40000x1024 and above");
  bench->add_flag("--parallel-cells", bcfg.parallel_cells, "run cells concurrently, one per core");

  // render
  auto* render = app.add_subcommand("render", "render a 2-D partitioning as SVG");
  InputOptions render_in;
  add_input_options(render, render_in);
  std::string assignment_path, svg_out;
  render->add_option("-a,--assignment", assignment_path, "assignment CSV from `partition`")->required();
  render->add_option("-o,--output", svg_out, "SVG output")->required();

  // grid-stats
  auto* gstats = app.add_subcommand("grid-stats", "n-cube occupancy statistics");
  InputOptions grid_in;
  add_input_options(gstats, grid_in);
  std::size_t grid_y = 2, grid_k = 1;
  std::uint64_t cap = kDefaultCubeCap;
  std::string grid_out;
  gstats->add_option("-y", grid_y, "splits per dimension")->check(CLI::PositiveNumber);
  gstats->add_option("-k", grid_k, "multiplier")->check(CLI::PositiveNumber);
  gstats->add_option("--cap", cap, "largest accepted cube count")->check(CLI::PositiveNumber);
  gstats->add_option("-o,--output", grid_out, "occupancy JSON; stdout if omitted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "vpart: " << e.what() << "\n";
    if (const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front())
      err << sub->help();
    return kExitUsage;
  }

  try {
    if (*gen) {
      if (!uniform && !gaussian) uniform = true;
      const Dataset ds = uniform ? generate_uniform(gen_n, gen_d, lo, hi, gen_seed)
                                 : generate_gaussian_mixture(gen_n, gen_d, gen_k, spread, gen_seed);
      std::string fmt = gen_format;
      if (fmt == "auto")
        fmt = std::filesystem::path(gen_out).extension() == ".csv" ? "csv" : "binary";
      err << "# vpart gen " << (uniform ? "--uniform" : "--gaussian") << " -n " << gen_n << " -d " << gen_d
          << (uniform ? " --lo " + fmt_real(lo) + " --hi " + fmt_real(hi)
                      : " -k " + std::to_string(gen_k) + " --spread " + fmt_real(spread))
          << " --seed " << gen_seed << " -o " << gen_out << " --format " << fmt << "\n";
      save_dataset(ds, gen_out, fmt == "csv" ? DataFormat::csv : DataFormat::binary, {gen_header, gen_ids});
      return kExitOk;
    }

    if (*part) {
      const Dataset ds = part_in.load();
      err << "# vpart partition --scheme " << scheme << " -m " << part_m << " --eps " << fmt_real(part_eps)
          << (scheme == "vtree" ? " --seeding " + seeding + " --fanout " + std::to_string(fanout) +
                                      (schedule.empty() ? "" : " --fanout-schedule " + join_numbers(schedule))
                                : "")
          << " --seed " << part_seed << " -i " << part_in.path << "\n";
      PartitionAssignment assignment;
      json tree_json;
      double elapsed = 0.0;
      if (scheme == "kdtree") {
        std::optional<KdPartitionTree> tree;
        elapsed = detail::time_seconds([&] { tree.emplace(kd_partition(ds, part_m, part_eps)); });
        assignment = tree->assignment;
        tree_json = to_json(*tree);
      } else {
        VTreeConfig cfg;
        cfg.partitions = part_m;
        cfg.fanout = fanout;
        cfg.fanout_schedule = schedule;
        cfg.eps = part_eps;
        cfg.seeding = parse_seed_kind(seeding);
        cfg.seed = part_seed;
        std::optional<VTree> tree;
        elapsed = detail::time_seconds([&] { tree.emplace(build_vtree(ds, cfg)); });
        assignment = tree->leaf_assignment;
        tree_json = to_json(*tree);
        tree_json["merge_order"] = to_json(merge_order(*tree));
      }
      tree_json["metrics"] = to_json(compute_metrics(assignment, elapsed));
      if (part_out.empty())
        out << encode_assignment_csv(ds, assignment);
      else
        detail::write_file(part_out, encode_assignment_csv(ds, assignment));
      if (!tree_out.empty()) detail::write_file(tree_out, tree_json.dump(2) + "\n");
      err << "# metrics " << tree_json["metrics"].dump() << "\n";
      return kExitOk;
    }

    if (*bench) {
      for (const auto& d : datasets) bcfg.datasets.push_back(DatasetSpec::parse(d));
      for (const auto& s : schemes) bcfg.schemes.push_back(SchemeSpec::parse(s));
      bcfg.partitions = bench_m;
      bcfg.generator = generator == "uniform" ? DataGenerator::uniform : DataGenerator::gaussian;
      std::vector<std::string> scheme_labels;
      for (const auto& s : bcfg.schemes)
        scheme_labels.push_back(s.kind == SchemeKind::vtree ? "vtree:" + std::string(to_string(s.seeding))
                                                            : s.label());
      bcfg.invocation = "vpart bench --datasets " + join(datasets) + " --schemes " + join(scheme_labels) +
                        " -m " + join_numbers(bench_m) + " --eps " + fmt_real(bcfg.eps) + " --reps " +
                        std::to_string(bcfg.repetitions) + " --seed " + std::to_string(bcfg.seed) +
                        " --generator " + generator + " --clusters " + std::to_string(bcfg.clusters) +
                        " --spread " + fmt_real(bcfg.spread) + " --fanout " + std::to_string(bcfg.fanout) +
                        " -y " + std::to_string(bcfg.grid_y) + " -k " + std::to_string(bcfg.grid_k) +
                        " -o " + bench_out + " --format " + bench_format + (bcfg.large ? " --large" : "") +
                        (bcfg.parallel_cells ? " --parallel-cells" : "");
      err << "# " << bcfg.invocation << "\n";
      const BenchReport report = run_benchmark(bcfg);
      std::filesystem::create_directories(bench_out);
      const auto path = std::filesystem::path(bench_out) / ("report." + bench_format);
      emit_report(report, bench_format == "csv" ? ReportFormat::csv : ReportFormat::json, path.string());
      out << report_csv(report);
      return kExitOk;
    }

    if (*render) {
      const Dataset ds = render_in.load();
      const auto assignment = decode_assignment_csv(ds, detail::read_file(assignment_path));
      render_2d(ds, assignment, svg_out);
      return kExitOk;
    }

    if (*gstats) {
      const Dataset ds = grid_in.load();
      err << "# vpart grid-stats -y " << grid_y << " -k " << grid_k << " --cap " << cap << " -i "
          << grid_in.path << "\n";
      const auto cfg = GridConfig::create(ds.dims(), grid_y, grid_k, cap);
      const GridIndex grid(ds, cfg);
      json j = to_json(grid_stats(grid));
      j["dims"] = ds.dims();
      j["points"] = ds.size();
      j["cubes_per_dim"] = cfg.cubes_per_dim;
      j["passes"] = grid.passes();
      const std::string text = j.dump(2) + "\n";
      if (grid_out.empty())
        out << text;
      else
        detail::write_file(grid_out, text);
      return kExitOk;
    }
  } catch (const std::exception& e) {
    err << "vpart: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace vpart::cli
