#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "vpart/bench.hpp"

using namespace vpart;
using nlohmann::json;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("vpart_bench_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

BenchConfig small_config() {
  BenchConfig cfg;
  cfg.datasets = {DatasetSpec::parse("300x4"), DatasetSpec::parse("200x64")};
  cfg.schemes = {SchemeSpec::parse("kdtree"), SchemeSpec::parse("vtree:kmeanspp"), SchemeSpec::parse("vtree:median"),
                 SchemeSpec::parse("grid-stats")};
  cfg.partitions = {4};
  cfg.repetitions = 3;
  cfg.seed = 11;
  return cfg;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

// report JSON with run-dependent fields removed
json stable_part(const BenchReport& r) {
  json j = to_json(r);
  j.erase("environment");
  for (auto& cell : j["cells"]) {
    cell.erase("times");
    cell.erase("median_time");
    if (cell.contains("metrics")) cell["metrics"].erase("wall_time");
  }
  return j;
}

}  // namespace

TEST(BenchSpecs, Parsing) {
  const auto d = DatasetSpec::parse("700x9");
  EXPECT_EQ(d.n, 700u);
  EXPECT_EQ(d.d, 9u);
  EXPECT_EQ(d.label(), "700x9");
  EXPECT_EQ(DatasetSpec::parse("data/points.bin").path, "data/points.bin");
  EXPECT_EQ(SchemeSpec::parse("vtree:median").label(), "vtree(median)");
  EXPECT_EQ(SchemeSpec::parse("vtree(gnat)").seeding, SeedKind::gnat);
  EXPECT_EQ(SchemeSpec::parse("grid").label(), "grid-stats");
  EXPECT_THROW(SchemeSpec::parse("quadtree"), Error);
  EXPECT_THROW(SchemeSpec::parse("vtree:lloyd"), Error);
}

TEST(BenchConfig, Validation) {
  BenchConfig cfg = small_config();
  cfg.repetitions = 0;
  EXPECT_THROW(run_benchmark(cfg), Error);
  cfg = small_config();
  cfg.schemes.clear();
  EXPECT_THROW(run_benchmark(cfg), Error);
  cfg = small_config();
  cfg.datasets.clear();
  EXPECT_THROW(run_benchmark(cfg), Error);
}

TEST(RunBenchmark, EveryCellPresent) {
  const auto cfg = small_config();
  const auto report = run_benchmark(cfg);
  ASSERT_EQ(report.cells.size(), 8u);
  for (const auto& cell : report.cells) {
    if (cell.scheme == "grid-stats" && cell.dataset == "200x64") {
      EXPECT_FALSE(cell.ok);
      EXPECT_EQ(cell.marker, "REFUSED(M=3^64)");
      continue;
    }
    ASSERT_TRUE(cell.ok) << cell.scheme << " " << cell.dataset << ": " << cell.reason;
    EXPECT_EQ(cell.times.size(), 3u);
    EXPECT_EQ(cell.median_time, median_of(cell.times));
    if (cell.scheme != "grid-stats") EXPECT_EQ(cell.metrics.sizes.size(), 4u);
  }
  EXPECT_GE(report.cores, 1u);
  EXPECT_FALSE(report.timestamp.empty());
}

TEST(RunBenchmark, OutputsReproducibleExceptTimes) {
  const auto cfg = small_config();
  EXPECT_EQ(stable_part(run_benchmark(cfg)), stable_part(run_benchmark(cfg)));
  auto par = cfg;
  par.parallel_cells = true;
  auto a = stable_part(run_benchmark(cfg)), b = stable_part(run_benchmark(par));
  b["config"]["parallel_cells"] = false;
  EXPECT_EQ(a, b);
}

TEST(RunBenchmark, LargeDatasetsNeedTheFlag) {
  BenchConfig cfg = small_config();
  cfg.datasets = {DatasetSpec::parse("40000x1024")};
  cfg.schemes = {SchemeSpec::parse("kdtree")};
  const auto report = run_benchmark(cfg);
  ASSERT_EQ(report.cells.size(), 1u);
  EXPECT_EQ(report.cells[0].marker, "SKIPPED");
  EXPECT_NE(report.cells[0].reason.find("--large"), std::string::npos);
}

TEST(RunBenchmark, FailedCellDoesNotStopTheRun) {
  BenchConfig cfg = small_config();
  cfg.datasets = {DatasetSpec::parse("3x2"), DatasetSpec::parse("50x2")};
  cfg.schemes = {SchemeSpec::parse("kdtree")};
  const auto report = run_benchmark(cfg);
  ASSERT_EQ(report.cells.size(), 2u);
  EXPECT_EQ(report.cells[0].marker, "FAILED");
  EXPECT_NE(report.cells[0].reason.find("exceeds"), std::string::npos);
  EXPECT_TRUE(report.cells[1].ok);
}

TEST(RunBenchmark, SmallCellIsFast) {
  BenchConfig cfg;
  cfg.datasets = {DatasetSpec::parse("700x9")};
  cfg.schemes = {SchemeSpec::parse("kdtree"), SchemeSpec::parse("vtree:kmeanspp"), SchemeSpec::parse("vtree:median")};
  for (const auto& cell : run_benchmark(cfg).cells) {
    ASSERT_TRUE(cell.ok);
    EXPECT_LT(cell.median_time, 1.0);
  }
}

TEST(EmitReport, JsonRoundTrip) {
  const auto report = run_benchmark(small_config());
  const auto dir = scratch_dir("json");
  const auto path = (dir / "report.json").string();
  emit_report(report, ReportFormat::json, path);
  const json j = json::parse(detail::read_file(path));
  EXPECT_EQ(j["schema_version"], kReportSchemaVersion);
  ASSERT_EQ(j["cells"].size(), report.cells.size());
  for (std::size_t i = 0; i < report.cells.size(); ++i) {
    const auto& c = report.cells[i];
    const auto& jc = j["cells"][i];
    EXPECT_EQ(jc["scheme"], c.scheme);
    EXPECT_EQ(jc["dataset"], c.dataset);
    EXPECT_EQ(jc["m"], c.partitions);
    EXPECT_EQ(jc["ok"], c.ok);
    EXPECT_EQ(jc["times"].get<std::vector<double>>(), c.times);
    EXPECT_EQ(jc["median_time"].get<double>(), c.median_time);
    if (!c.ok) EXPECT_EQ(jc["marker"], c.marker);
    if (c.ok && c.scheme != "grid-stats") {
      EXPECT_EQ(jc["metrics"]["bias"].get<double>(), c.metrics.bias);
      EXPECT_EQ(jc["metrics"]["sizes"].get<std::vector<std::size_t>>(), c.metrics.sizes);
      EXPECT_EQ(jc["counters"]["point_touches"].get<std::size_t>(), c.counters.point_touches);
    }
  }
  EXPECT_THROW(emit_report(report, ReportFormat::json, (dir / "missing" / "r.json").string()), Error);
}

TEST(EmitReport, CsvLayout) {
  const auto report = run_benchmark(small_config());
  const auto rows = lines(report_csv(report));
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0], "scheme,300x4,200x64");
  EXPECT_EQ(rows[1].rfind("kdtree,", 0), 0u);
  EXPECT_EQ(rows[2].rfind("vtree(kmeanspp),", 0), 0u);
  EXPECT_EQ(rows[3].rfind("vtree(median),", 0), 0u);
  EXPECT_EQ(rows[4].rfind("grid-stats,", 0), 0u);
  EXPECT_NE(rows[4].find(",REFUSED(M=3^64)"), std::string::npos);
  for (const auto& r : rows) EXPECT_EQ(std::count(r.begin(), r.end(), ','), 2);
}

TEST(EmitReport, CsvColumnsPerPartitionCount) {
  BenchConfig cfg = small_config();
  cfg.datasets = {DatasetSpec::parse("100x2")};
  cfg.schemes = {SchemeSpec::parse("kdtree")};
  cfg.partitions = {2, 4};
  cfg.repetitions = 1;
  const auto rows = lines(report_csv(run_benchmark(cfg)));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], "scheme,100x2/m=2,100x2/m=4");
}

TEST(RenderSvg, SinglePartitionUsesOneColor) {
  const Dataset ds = generate_uniform(50, 2, 0, 1, 1);
  PartitionAssignment a{1, std::vector<PartitionId>(50, 0), std::vector<bool>(50, false)};
  const auto svg = render_svg(ds, a);
  std::size_t colored = 0;
  for (const char* c : kPalette) colored += svg.find(c) != std::string::npos;
  EXPECT_EQ(colored, 1u);
  EXPECT_NE(svg.find("version=\"1.1\""), std::string::npos);
}

TEST(RenderSvg, EmptyPartitionKeepsLegendEntry) {
  const Dataset ds(2, {0, 0, 1, 1, 2, 2});
  PartitionAssignment a{3, {0, 0, 2}, {false, true, false}};
  const auto svg = render_svg(ds, a);
  EXPECT_NE(svg.find("partition 1 (0)"), std::string::npos);
  const auto start = svg.find("id=\"p1\"");
  const auto stop = svg.find("</g>", start);
  EXPECT_EQ(svg.substr(start, stop - start).find("<circle"), std::string::npos);
  EXPECT_NE(svg.find("stroke=\"black\""), std::string::npos);
}

TEST(RenderSvg, ErrorsAndDeterminism) {
  const Dataset ds3 = generate_uniform(10, 3, 0, 1, 1);
  PartitionAssignment a{1, std::vector<PartitionId>(10, 0), std::vector<bool>(10, false)};
  EXPECT_THROW(render_svg(ds3, a), Error);
  const Dataset ds = generate_uniform(300, 2, 0, 1, 9);
  const auto vt = build_vtree(ds, {.partitions = 4, .eps = 0.02, .seed = 1});
  EXPECT_EQ(render_svg(ds, vt.leaf_assignment), render_svg(ds, vt.leaf_assignment));
  const auto dir = scratch_dir("svg");
  render_2d(ds, vt.leaf_assignment, (dir / "a.svg").string());
  render_2d(ds, vt.leaf_assignment, (dir / "b.svg").string());
  EXPECT_EQ(detail::read_file((dir / "a.svg").string()), detail::read_file((dir / "b.svg").string()));
}

TEST(RenderSvg, KdQuadrantsDoNotInterleave) {
  // axis-aligned kd cells: partition bounding boxes overlap at most on a boundary line
  const Dataset ds = generate_uniform(400, 2, 0, 1, 3);
  const auto kd = kd_partition(ds, 4);
  std::vector<std::vector<Interval>> box(4, {{INFINITY, -INFINITY}, {INFINITY, -INFINITY}});
  for (std::size_t r = 0; r < ds.size(); ++r)
    for (std::size_t j = 0; j < 2; ++j) {
      auto& iv = box[kd.assignment.labels[r]][j];
      iv.min = std::min(iv.min, ds.coord(r, j));
      iv.max = std::max(iv.max, ds.coord(r, j));
    }
  for (std::size_t p = 0; p < 4; ++p)
    for (std::size_t q = p + 1; q < 4; ++q) {
      bool separated = false;
      for (std::size_t j = 0; j < 2; ++j)
        separated = separated || box[p][j].max <= box[q][j].min || box[q][j].max <= box[p][j].min;
      EXPECT_TRUE(separated) << p << " vs " << q;
    }
}

TEST(ScanCounters, KdTouchesMoreThanVTreeAtHighDimension) {
  BenchConfig cfg;
  cfg.datasets = {DatasetSpec::parse("1000x64"), DatasetSpec::parse("500x128")};
  cfg.schemes = {SchemeSpec::parse("kdtree"), SchemeSpec::parse("vtree:kmeanspp")};
  cfg.repetitions = 1;
  const auto report = run_benchmark(cfg);
  ASSERT_EQ(report.cells.size(), 4u);
  for (std::size_t d = 0; d < 2; ++d)
    EXPECT_GT(report.cells[2 * d].counters.point_touches, report.cells[2 * d + 1].counters.point_touches);
}
