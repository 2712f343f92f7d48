// Acceptance suite: prints one PASS/FAIL line per criterion and exits non-zero
// when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "vpart/bench.hpp"
#include "vpart/cli.hpp"
#include "vpart/grid.hpp"
#include "vpart/kdtree.hpp"
#include "vpart/seeding.hpp"
#include "vpart/select.hpp"
#include "vpart/vtree.hpp"

using namespace vpart;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Records the first few mismatches so a failure line says what went wrong.
struct Checker {
  Outcome out;
  std::size_t failures = 0;
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    out.pass = false;
    if (++failures <= 3) out.detail += (out.detail.empty() ? "" : "; ") + what;
  }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Dataset random_dataset(Rng& rng, std::size_t n, std::size_t d) {
  switch (rng.below(3)) {
    case 0:
      return generate_uniform(n, d, -1, 1, rng.next());
    case 1:
      return generate_gaussian_mixture(n, d, 1 + rng.below(10), 0.05 + 0.2 * rng.uniform01(), rng.next());
    default: {
      // anisotropic: per-dimension scales so variance rankings vary
      Dataset base = generate_uniform(n, d, 0, 1, rng.next());
      std::vector<double> values(base.values().begin(), base.values().end());
      std::vector<double> scale(d);
      for (double& s : scale) s = 0.1 + 10 * rng.uniform01();
      for (std::size_t i = 0; i < values.size(); ++i) values[i] *= scale[i % d];
      return Dataset(d, std::move(values));
    }
  }
}

std::size_t ceil_log2(std::size_t m) {
  std::size_t l = 0;
  while ((std::size_t{1} << l) < m) ++l;
  return l;
}

bool total_map(const PartitionAssignment& a, std::size_t n, std::size_t m) {
  if (a.partition_count != m || a.labels.size() != n) return false;
  for (PartitionId l : a.labels)
    if (l >= m) return false;
  const auto sizes = a.sizes();
  return std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}) == n;
}

// ---------------------------------------------------------------------------

Outcome partition_totality() {
  Checker c;
  const auto start = std::chrono::steady_clock::now();
  Rng rng(1);
  std::size_t cases = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = trial < 4 ? 10000 : 2 + rng.below(trial % 2 ? 200 : 3000);
    const std::size_t d = trial < 4 ? 64 : 1 + rng.below(64);
    const Dataset ds = random_dataset(rng, n, d);
    const std::size_t m = trial % 5 == 4 && n <= 120 ? n : 1 + rng.below(std::min<std::size_t>(n, 64));
    const std::string tag = std::to_string(n) + "x" + std::to_string(d) + " m=" + std::to_string(m);

    c.expect(total_map(kd_partition(ds, m, 0.01).assignment, n, m), "kdtree " + tag);
    for (auto kind : {SeedKind::random, SeedKind::gnat, SeedKind::kmeanspp, SeedKind::median}) {
      const VTreeConfig cfg{.partitions = m,
                            .fanout = kind == SeedKind::median ? 2 : 2 + rng.below(3),
                            .eps = 0.01,
                            .seeding = kind,
                            .seed = rng.next()};
      c.expect(total_map(build_vtree(ds, cfg).leaf_assignment, n, m),
               "vtree(" + std::string(to_string(kind)) + ") " + tag);
    }
    if (d <= 12) {
      // grid: every point lands in exactly one cube of [0, M)
      const GridIndex grid(ds, GridConfig::create(d, 2, 1, std::uint64_t{1} << 24));
      std::size_t total = 0;
      for (const auto& [index, cube] : grid.cubes()) {
        c.expect(index < grid.config().total_cubes_M, "grid index " + tag);
        total += cube.rows.size();
      }
      c.expect(total == n, "grid total " + tag);
    }
    cases += 6;
  }
  const double elapsed = seconds_since(start);
  c.expect(elapsed < 60.0, "runtime " + fmt("%.1f s", elapsed));
  if (c.out.pass) c.out.detail = std::to_string(cases) + " scheme/dataset cases in " + fmt("%.1f s", elapsed);
  return c.out;
}

Outcome kd_balance() {
  Checker c;
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(3000), d = 1 + rng.below(16);
    // a third of the datasets use small integers to force coordinate ties
    Dataset ds = trial % 3 == 0 ? [&] {
      std::vector<double> v(n * d);
      for (double& x : v) x = static_cast<double>(rng.below(5));
      return Dataset(d, std::move(v));
    }()
                                : random_dataset(rng, n, d);
    std::size_t m = std::size_t{1} << rng.below(7);
    while (m > n) m /= 2;
    const auto tree = kd_partition(ds, m);
    for (const auto& node : tree.nodes) {
      if (node.leaf) continue;
      const auto l = tree.nodes[node.left].point_count, r = tree.nodes[node.right].point_count;
      c.expect((l > r ? l - r : r - l) <= 1, "split " + std::to_string(l) + "/" + std::to_string(r));
    }
    const auto sizes = tree.assignment.sizes();
    const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
    c.expect(*hi - *lo <= ceil_log2(m), "leaf spread m=" + std::to_string(m));
  }
  if (c.out.pass) c.out.detail = "200 datasets";
  return c.out;
}

Outcome voronoi_invariant() {
  Checker c;
  Rng rng(3);
  std::size_t checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 10 + rng.below(1500), d = 1 + rng.below(32);
    const Dataset ds = random_dataset(rng, n, d);
    for (auto kind : {SeedKind::random, SeedKind::gnat, SeedKind::kmeanspp, SeedKind::median}) {
      const VTreeConfig cfg{.partitions = 1 + rng.below(std::min<std::size_t>(n, 24)),
                            .fanout = kind == SeedKind::median ? 2 : 2 + rng.below(4),
                            .seeding = kind,
                            .seed = rng.next()};
      const auto tree = build_vtree(ds, cfg);
      for (std::size_t ni = 0; ni < tree.nodes.size(); ++ni) {
        const VNode& node = tree.nodes[ni];
        for (std::size_t slot = 0; slot < node.children.size(); ++slot)
          for (PartitionId leaf : oracle::vtree_leaves_under(tree, node.children[slot]))
            for (std::size_t r : tree.leaves[leaf].rows) {
              const double own = squared_distance(ds.coords(r), node.centers[slot].coords);
              bool ok = true;
              for (std::size_t j = 0; j < node.centers.size(); ++j) {
                const double other = squared_distance(ds.coords(r), node.centers[j].coords);
                ok = ok && (j < slot ? own < other : own <= other);
              }
              ++checked;
              c.expect(ok, "row " + std::to_string(r) + " at node " + std::to_string(ni));
            }
      }
    }
  }
  if (c.out.pass) c.out.detail = std::to_string(checked) + " point/node memberships";
  return c.out;
}

Outcome median_oracles() {
  Checker c;
  Rng rng(4);
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<double> v(1 + rng.below(300));
    for (double& x : v) x = trial % 4 == 0 ? static_cast<double>(rng.below(7)) : rng.normal();
    c.expect(select_median(v) == oracle::sorted_median(v), "select_median trial " + std::to_string(trial));
  }
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t d = 1 + rng.below(2), n = 1 + rng.below(500);
    std::vector<double> coords(n * d);
    for (double& x : coords) x = trial % 3 == 0 ? static_cast<double>(rng.below(12)) : rng.uniform(-5, 5);
    const Dataset ds(d, coords);
    const GridIndex grid(ds, GridConfig::create(d, 1 + rng.below(10), 1 + rng.below(3)));
    for (std::size_t dim = 0; dim < d; ++dim) {
      const auto med = grid_find_median_detail(grid, dim);
      std::vector<double> col(n);
      for (std::size_t i = 0; i < n; ++i) col[i] = ds.coord(i, dim);
      std::sort(col.begin(), col.end());
      const std::size_t target = (n + 1) / 2 - 1;
      const auto lo = static_cast<std::size_t>(std::lower_bound(col.begin(), col.end(), med.value) - col.begin());
      const auto hi = static_cast<std::size_t>(std::upper_bound(col.begin(), col.end(), med.value) - col.begin());
      std::size_t err = n;
      if (hi > lo) err = target < lo ? lo - target : target >= hi ? target - (hi - 1) : 0;
      c.expect(err <= med.max_slab_population, "grid median trial " + std::to_string(trial));
    }
  }
  if (c.out.pass) c.out.detail = "10^4 select vectors, 10^3 grid datasets";
  return c.out;
}

Outcome seeding_oracles() {
  Checker c;
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(499), d = 1 + rng.below(10);
    const Dataset ds = random_dataset(rng, n, d);
    const auto rows = all_rows(ds);
    const std::size_t k = std::min<std::size_t>(n, 2 + rng.below(7));
    const auto s = seeds_gnat(ds, rows, k, rng);
    std::vector<bool> chosen(n, false);
    chosen[s.rows[0]] = true;
    for (std::size_t i = 1; i < k; ++i) {
      // exhaustive scan with the library's own distance so ties compare exactly
      double best = -1;
      std::size_t best_row = 0;
      for (std::size_t r = 0; r < n; ++r) {
        if (chosen[r]) continue;
        double sum = 0;
        for (std::size_t j = 0; j < i; ++j) sum += euclidean_distance(ds.coords(r), ds.coords(s.rows[j]));
        if (sum > best || (sum == best && ds.id(r) < ds.id(best_row))) {
          best = sum;
          best_row = r;
        }
      }
      c.expect(s.rows[i] == best_row, "gnat step " + std::to_string(i) + " trial " + std::to_string(trial));
      chosen[s.rows[i]] = true;
    }
  }
  const Dataset line(1, {0, 1, 2});
  const auto rows = all_rows(line);
  Rng draw(6);
  std::vector<int> counts(3, 0);
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) ++counts[seeds_kmeanspp(line, rows, 2, draw, 0).rows[1]];
  const double f1 = counts[1] / double(trials), f2 = counts[2] / double(trials);
  c.expect(counts[0] == 0, "kmeans++ picked a zero-weight point");
  c.expect(std::fabs(f1 - 0.2) <= 0.02 && std::fabs(f2 - 0.8) <= 0.02,
           "kmeans++ frequencies " + fmt("%.4f", f1) + "/" + fmt("%.4f", f2));
  if (c.out.pass) c.out.detail = "gnat 100 sets; kmeans++ frequencies " + fmt("%.4f", f1) + ", " + fmt("%.4f", f2);
  return c.out;
}

Outcome cross_scheme_equivalence() {
  Checker c;
  Rng rng(7);
  int accepted = 0;
  while (accepted < 100) {
    const std::size_t n = 2 + rng.below(2000), d = 1 + rng.below(32);
    const Dataset ds = random_dataset(rng, n, d);
    const auto var = variance_per_dimension(ds);
    const std::size_t top = argmax_dimension(var);
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = ds.coord(i, top);
    std::sort(col.begin(), col.end());
    if (std::adjacent_find(col.begin(), col.end()) != col.end()) continue;
    ++accepted;
    const auto vt = build_vtree(ds, {.partitions = 2, .seeding = SeedKind::median});
    const auto kd = kd_partition(ds, 2);
    c.expect(vt.leaf_assignment.labels == kd.assignment.labels, std::to_string(n) + "x" + std::to_string(d));
  }
  if (c.out.pass) c.out.detail = "100 datasets";
  return c.out;
}

Outcome affected_set_oracle() {
  Checker c;
  Rng rng(8);
  std::size_t queries = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 16 + rng.below(600), d = 1 + rng.below(8);
    const Dataset ds = random_dataset(rng, n, d);
    const auto kind = static_cast<SeedKind>(rng.below(4));
    const auto tree = build_vtree(ds, {.partitions = 1 + rng.below(16),
                                       .fanout = kind == SeedKind::median ? 2 : 2 + rng.below(3),
                                       .seeding = kind,
                                       .seed = rng.next()});
    const auto bounds = ds.bounds();
    for (int q = 0; q < 30; ++q) {
      std::vector<double> p(d);
      // half the queries are build points, half are arbitrary locations
      if (q % 2 == 0) {
        const auto row = ds.coords(rng.below(n));
        p.assign(row.begin(), row.end());
      } else {
        for (std::size_t j = 0; j < d; ++j) p[j] = rng.uniform(bounds[j].min, bounds[j].max);
      }
      const double span = bounds[0].max - bounds[0].min;
      const double eps = q % 5 == 0 ? 0.0 : rng.uniform01() * 0.1 * (span > 0 ? span : 1.0);
      const auto got = affected_partitions(tree, p, eps);
      const auto want = oracle::affected_by_paths(tree, p, eps);
      c.expect(std::set<PartitionId>(got.begin(), got.end()) == want, "trial " + std::to_string(trial));
      ++queries;
    }
  }
  if (c.out.pass) c.out.detail = std::to_string(queries) + " queries on 100 trees";
  return c.out;
}

// Both timing criteria share one benchmark run.
struct TimingCells {
  std::vector<std::string> datasets;
  std::vector<double> kd, vt_kmeanspp, vt_median;
  std::string error;
};

const TimingCells& timing_cells() {
  static const TimingCells cells = [] {
    TimingCells t;
    BenchConfig cfg;
    cfg.datasets = {DatasetSpec::parse("1500x1024"), DatasetSpec::parse("4000x1024")};
    cfg.schemes = {SchemeSpec::parse("kdtree"), SchemeSpec::parse("vtree:kmeanspp"),
                   SchemeSpec::parse("vtree:median")};
    cfg.partitions = {8};
    cfg.repetitions = 5;
    const auto report = run_benchmark(cfg);
    for (std::size_t d = 0; d < cfg.datasets.size(); ++d) {
      t.datasets.push_back(cfg.datasets[d].label());
      const auto& kd = report.cells[3 * d];
      const auto& km = report.cells[3 * d + 1];
      const auto& md = report.cells[3 * d + 2];
      for (const auto* cell : {&kd, &km, &md})
        if (!cell->ok) t.error += cell->scheme + " " + cell->dataset + ": " + cell->reason + " ";
      t.kd.push_back(kd.median_time);
      t.vt_kmeanspp.push_back(km.median_time);
      t.vt_median.push_back(md.median_time);
    }
    return t;
  }();
  return cells;
}

Outcome kmeanspp_speedup() {
  const auto& t = timing_cells();
  if (!t.error.empty()) return {false, t.error};
  Outcome o;
  for (std::size_t i = 0; i < t.datasets.size(); ++i) {
    const double ratio = t.vt_kmeanspp[i] / t.kd[i];
    o.pass = o.pass && ratio <= 0.5;
    o.detail += (i ? "; " : "") + t.datasets[i] + " vtree(kmeanspp)/kdtree = " + fmt("%.4f", t.vt_kmeanspp[i]) +
                "/" + fmt("%.4f", t.kd[i]) + " s = " + fmt("%.2f", ratio) + " (need <= 0.50)";
  }
  return o;
}

Outcome median_not_faster() {
  const auto& t = timing_cells();
  if (!t.error.empty()) return {false, t.error};
  Outcome o;
  for (std::size_t i = 0; i < t.datasets.size(); ++i) {
    const double ratio = t.vt_median[i] / t.kd[i];
    o.pass = o.pass && ratio >= 0.9;
    o.detail += (i ? "; " : "") + t.datasets[i] + " vtree(median)/kdtree = " + fmt("%.4f", t.vt_median[i]) + "/" +
                fmt("%.4f", t.kd[i]) + " s = " + fmt("%.2f", ratio) + " (need >= 0.90)";
  }
  return o;
}

Outcome grid_infeasibility() {
  Checker c;
  const auto start = std::chrono::steady_clock::now();
  const auto dir = std::filesystem::temp_directory_path() / "vpart_acceptance_grid";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  auto run = [](std::vector<std::string> args, std::string& out, std::string& err) {
    args.insert(args.begin(), "vpart");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream o, e;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), o, e);
    out = o.str();
    err = e.str();
    return code;
  };
  std::string out, err;
  const auto d8 = (dir / "d8.bin").string(), d64 = (dir / "d64.bin").string();
  c.expect(run({"gen", "--uniform", "-n", "1000", "-d", "8", "--seed", "1", "-o", d8}, out, err) == 0, "gen d=8");
  c.expect(run({"grid-stats", "-i", d8, "-y", "2", "-k", "1"}, out, err) == 0, "grid-stats d=8: " + err);
  std::uint64_t cubes = 0;
  double fraction = 1.0;
  try {
    const auto j = nlohmann::json::parse(out);
    cubes = j["M"].get<std::uint64_t>();
    fraction = j["occupied_fraction"].get<double>();
  } catch (const std::exception& e) {
    c.expect(false, std::string("report: ") + e.what());
  }
  c.expect(cubes == 6561, "M = " + std::to_string(cubes));
  c.expect(fraction < 0.15, "occupied fraction " + fmt("%.4f", fraction));

  c.expect(run({"gen", "--uniform", "-n", "1000", "-d", "64", "--seed", "1", "-o", d64}, out, err) == 0, "gen d=64");
  const int refused = run({"grid-stats", "-i", d64, "-y", "2", "-k", "1"}, out, err);
  c.expect(refused == 2, "d=64 exit code " + std::to_string(refused));
  c.expect(err.find("overflow") != std::string::npos, "d=64 diagnostic lacks overflow: " + err);
  const double elapsed = seconds_since(start);
  c.expect(elapsed < 10.0, "runtime " + fmt("%.1f s", elapsed));
  if (c.out.pass) {
    std::string diag = err.substr(err.rfind("vpart: "));
    if (!diag.empty() && diag.back() == '\n') diag.pop_back();
    c.out.detail = "d=8: M=6561, occupied " + fmt("%.4f", fraction) + "; d=64: exit 2 (" + diag + "); " +
                   fmt("%.2f s", elapsed);
  }
  return c.out;
}

Outcome bias_trend() {
  Checker c;
  double bias4 = 0, bias8 = 0;
  const int seeds = 5;
  for (int s = 0; s < seeds; ++s) {
    const Dataset ds = generate_gaussian_mixture(2000, 2, 8, 0.1, static_cast<std::uint64_t>(s));
    bias4 += compute_metrics(build_vtree(ds, {.partitions = 4, .seed = static_cast<std::uint64_t>(s)}).leaf_assignment, 0).bias;
    bias8 += compute_metrics(build_vtree(ds, {.partitions = 8, .seed = static_cast<std::uint64_t>(s)}).leaf_assignment, 0).bias;
  }
  bias4 /= seeds;
  bias8 /= seeds;
  c.expect(bias8 >= bias4, "mean bias m=8 " + fmt("%.4f", bias8) + " < m=4 " + fmt("%.4f", bias4));

  std::string uniform;
  for (std::size_t n : {1000, 1003}) {
    const Dataset ds = generate_uniform(n, 2, 0, 1, 42);
    const double kd = compute_metrics(kd_partition(ds, 4).assignment, 0).bias;
    const double vt = compute_metrics(build_vtree(ds, {.partitions = 4, .seed = 42}).leaf_assignment, 0).bias;
    c.expect(kd == bias_floor(n, 4), "kd bias " + fmt("%.6f", kd) + " at N=" + std::to_string(n));
    uniform += "; uniform N=" + std::to_string(n) + ": kd " + fmt("%.4f", kd) + " (floor " +
               fmt("%.4f", bias_floor(n, 4)) + "), vtree " + fmt("%.4f", vt);
  }
  if (c.out.pass) c.out.detail = "mean vtree(kmeanspp) bias m=4 " + fmt("%.4f", bias4) + ", m=8 " + fmt("%.4f", bias8) + uniform;
  return c.out;
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "partition totality", partition_totality},
      {2, "kd-tree balance", kd_balance},
      {3, "Voronoi invariant", voronoi_invariant},
      {4, "median oracles", median_oracles},
      {5, "seeding oracles", seeding_oracles},
      {6, "median v_tree equals kd-tree at m=2", cross_scheme_equivalence},
      {7, "affected-partition oracle", affected_set_oracle},
      {8, "v_tree(kmeanspp) at most half the kd-tree time", kmeanspp_speedup},
      {9, "v_tree(median) at least 0.9x the kd-tree time", median_not_faster},
      {10, "grid infeasibility", grid_infeasibility},
      {11, "bias trend", bias_trend},
  };
  int failed = 0;
  for (const auto& crit : criteria) {
    Outcome o;
    try {
      o = crit.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %2d %s: %s (%s)\n", crit.number, o.pass ? "PASS" : "FAIL", crit.name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
