// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// fails. Runs the twin CLI on the default config's 50-building town, then
// checks every criterion against independent oracles.

#include <fcntl.h>
#include <spawn.h>
#include <sys/resource.h>
#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <thread>

#include <httplib.h>

#include "support/oracles.hpp"
#include "support/pipeline_fixture.hpp"
#include "support/scenes.hpp"
#include "twin/flood/flood.hpp"
#include "twin/lidar/las.hpp"
#include "twin/scene/dem.hpp"
#include "twin/server/http.hpp"

extern char** environ;

using namespace twin;
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Run {
  int code = -1;
  double seconds = 0;
  double peak_mb = 0;
};

/// Runs the CLI as a child process; stdout is discarded.
Run run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> argv_s{TWIN_CLI};
  argv_s.insert(argv_s.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_s) argv.push_back(a.data());
  argv.push_back(nullptr);
  posix_spawn_file_actions_t fa;
  posix_spawn_file_actions_init(&fa);
  posix_spawn_file_actions_addopen(&fa, 1, "/dev/null", O_WRONLY, 0);
  Run r;
  const auto t0 = Clock::now();
  pid_t pid;
  if (posix_spawn(&pid, argv[0], &fa, nullptr, argv.data(), environ) != 0) return r;
  posix_spawn_file_actions_destroy(&fa);
  int status = 0;
  rusage ru{};
  ::wait4(pid, &status, 0, &ru);
  r.seconds = seconds_since(t0);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.peak_mb = static_cast<double>(ru.ru_maxrss) / 1024.0;  // kilobytes on Linux
  return r;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

server::HttpRequest get(const std::string& path, std::map<std::string, std::string> headers = {}) {
  server::HttpRequest r;
  r.path = path.substr(0, path.find('?'));
  r.headers = std::move(headers);
  if (const auto q = path.find('?'); q != std::string::npos) {
    const auto kv = path.substr(q + 1);
    r.query[kv.substr(0, kv.find('='))] = kv.substr(kv.find('=') + 1);
  }
  return r;
}

// --- shared state ------------------------------------------------------------

struct Town {
  fs::path dir;
  pipeline::PipelineConfig cfg;
  Run synth, all;
};

Town& town() {
  static Town t = [] {
    Town t;
    t.dir = twin::testing::scratch_dir("acceptance");
    const auto config = twin::testing::default_config_path().string();
    t.cfg = pipeline::load_config(config);
    t.cfg.paths.work_dir = t.dir;
    t.synth = run_cli({"synth", "--config", config, "--out", t.dir.string()});
    t.all = run_cli({"all", "--config", config, "--out", t.dir.string()});
    return t;
  }();
  return t;
}

const server::SceneBundle& bundle() {
  static const server::SceneBundle b = server::load_bundle(town().cfg);
  return b;
}

// --- criteria ----------------------------------------------------------------

Outcome scenario_grid() {
  const auto& t = town();
  if (t.all.code != 0) return {false, "pipeline failed with exit " + std::to_string(t.all.code)};
  const auto t0 = Clock::now();
  const auto& c = t.cfg;
  flood::ScenarioGrid axes{c.time_horizons, c.weather_conditions, {}};
  axes.validate_axes();
  const bool shape = c.time_horizons.size() == 3 && c.weather_conditions.size() == 8 && axes.size() == 24;
  const bool anchors = axes.contains(2022, "EWL10R") && axes.contains(2070, "Cat1");

  server::SceneBundle b = server::load_bundle(c);
  const server::Service svc(b);
  const auto sc = ojson::parse(svc.handle(get("/api/scenarios")).body);
  const bool api = sc["count"] == 24 && sc["time_horizons"].size() * sc["weather_conditions"].size() == 24;
  std::size_t summaries = 0;
  for (const auto& y : sc["time_horizons"])
    for (const auto& w : sc["weather_conditions"]) {
      const auto r = svc.handle(get("/api/summary/" + y.dump() + "/" + w.get<std::string>()));
      summaries += r.status == 200 && fs::exists(pipeline::summary_path(c, y.get<int>(), w.get<std::string>()));
    }
  const auto index = pipeline::read_json(c.paths.resolve(c.paths.summaries_dir) / "index.json");
  std::size_t rows_ok = 0;
  for (const auto& bl : b.buildings)
    rows_ok += ojson::parse(svc.handle(get("/api/feature/" + std::to_string(bl.id))).body)["depths"].size() == 24;
  const double secs = seconds_since(t0);
  const bool pass = shape && anchors && api && summaries == 24 && index.size() == 24 &&
                    rows_ok == b.buildings.size() && !b.buildings.empty() && secs < 1.0;
  return {pass, std::to_string(c.time_horizons.size()) + "x" + std::to_string(c.weather_conditions.size()) +
                    " scenarios, anchors " + (anchors ? "present" : "MISSING") + ", api count " + sc["count"].dump() +
                    ", summaries " + std::to_string(summaries) + ", index " + std::to_string(index.size()) +
                    ", feature rows 24 for " + std::to_string(rows_ok) + "/" + std::to_string(b.buildings.size()) +
                    " buildings, " + fmt("%.2f s", secs)};
}

Outcome reconstruction() {
  const auto& t = town();
  if (t.synth.code != 0 || t.all.code != 0)
    return {false, "CLI exit codes synth=" + std::to_string(t.synth.code) + " all=" + std::to_string(t.all.code)};
  const auto& c = t.cfg;
  const auto truth = io::parse_truth_json(pipeline::read_text(c.paths.resolve(c.paths.truth)));
  const auto fps = io::parse_footprints(pipeline::read_json(c.paths.resolve(c.paths.footprints)), c.anchor);
  const auto bs = pipeline::load_buildings(c);

  std::size_t matched = 0, area_bad = 0, iou_bad = 0, flat = 0, gable = 0, vol_bad = 0, ridge_bad = 0;
  double worst_area = 0, worst_iou = 1, worst_vol = 0, worst_ridge = 0;
  const double step = 0.05;
  for (const auto& tb : truth) {
    const scene::Lod2Building* rec = nullptr;
    for (const auto& b : bs)
      if (geo::point_in_polygon(tb.center, b.footprint.polygon)) rec = &b;
    if (!rec) continue;
    ++matched;
    const double ta = geo::polygon_area(tb.footprint);
    const double ae = std::abs(rec->footprint.area - ta) / ta;
    const double i = twin::testing::iou(rec->footprint.polygon, tb.footprint, step);
    worst_area = std::max(worst_area, ae);
    worst_iou = std::min(worst_iou, i);
    area_bad += ae > 0.10;
    iou_bad += i < 0.85;
    if (tb.roof == synth::RoofType::Flat) {
      // Truth volume: flat roof over the analytic terrain, integrated on a lattice.
      geo::Vec2 lo, hi;
      geo::ring_bounds(tb.footprint.exterior, lo, hi);
      double v = 0;
      for (double y = lo.y + step / 2; y < hi.y; y += step)
        for (double x = lo.x + step / 2; x < hi.x; x += step)
          if (geo::point_in_polygon({x, y}, tb.footprint))
            v += (tb.eave_z - synth::terrain_z(x, y, c.synth.extent_m)) * step * step;
      const double ve = std::abs(scene::mesh_volume(rec->closed_mesh()) - v) / v;
      worst_vol = std::max(worst_vol, ve);
      vol_bad += ve > 0.05;
      ++flat;
    } else {
      const double re = std::abs(rec->max_roof_z() - tb.ridge_z);
      worst_ridge = std::max(worst_ridge, re);
      ridge_bad += re > 0.25;
      ++gable;
    }
  }
  const bool pass = fps.size() == 50 && bs.size() == 50 && truth.size() == 50 && matched == 50 && area_bad == 0 &&
                    iou_bad == 0 && vol_bad == 0 && ridge_bad == 0 && flat > 0 && gable > 0 && t.all.seconds < 60 &&
                    t.all.peak_mb < 1024;
  return {pass, "footprints " + std::to_string(fps.size()) + "/50, matched " + std::to_string(matched) +
                    fmt(", worst area error %.3f", worst_area) + fmt(", worst IoU %.3f", worst_iou) +
                    fmt(", worst flat volume error %.3f", worst_vol) + " (" + std::to_string(flat) + " flat)" +
                    fmt(", worst ridge error %.3f m", worst_ridge) + " (" + std::to_string(gable) + " gable)" +
                    fmt(", all %.1f s", t.all.seconds) + fmt(", peak %.0f MB", t.all.peak_mb)};
}

Outcome dem_accuracy() {
  // Tilted plane sampled at 8 pts/m^2 with 3 cm noise, like the synthetic scans.
  synth::Rng rng(606);
  auto plane = [](double x, double y) { return 2.0 + 0.03 * x - 0.015 * y; };
  lidar::PointCloud cloud;
  for (int i = 0; i < 8 * 120 * 120; ++i) {
    const double x = rng.uniform(0, 120), y = rng.uniform(0, 120);
    cloud.points.push_back({{x, y, plane(x, y) + 0.03 * rng.normal()}, lidar::PointClass::Ground, {}});
  }
  const auto dem = scene::build_dem(cloud, 1.0);
  double se = 0;
  std::size_t n = 0;
  for (int r = 0; r < dem.nrows; ++r)
    for (int col = 0; col < dem.ncols; ++col) {
      const auto q = dem.cell_center(col, r);
      if (q.x < 2 || q.y < 2 || q.x > 118 || q.y > 118 || !dem.has_data(col, r)) continue;
      const double e = dem.at(col, r) - plane(q.x, q.y);
      se += e * e;
      ++n;
    }
  const double rmse = std::sqrt(se / static_cast<double>(n));
  return {n > 10000 && rmse <= 0.05, fmt("RMSE %.4f m", rmse) + " over " + std::to_string(n) + " interior cells"};
}

Outcome tiling_properties() {
  twin::testing::TilingViolations total;
  std::size_t tiles = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    synth::Rng rng(seed * 7919);
    const int n = 1 + static_cast<int>(rng.next() % 180);
    const double extent = rng.uniform(40, 600);
    const tiling::TilingParams params{1 + rng.next() % 16, 2 + static_cast<int>(rng.next() % 7)};
    const auto bs = twin::testing::random_buildings(seed, n, extent);
    const auto v = twin::testing::check_tiling(bs, params, seed);
    total.containment += v.containment;
    total.partition += v.partition;
    total.error_halving += v.error_halving;
    total.child_bbox += v.child_bbox;
    total.sse_monotonicity += v.sse_monotonicity;
    total.determinism += v.determinism;
    tiling::for_each_tile(tiling::build_tileset(bs, {0, 0, ""}, params).root, [&](const tiling::Tile&) { ++tiles; });
  }
  return {total.total() == 0,
          "100 scenes, " + std::to_string(tiles) + " tiles; violations: containment " +
              std::to_string(total.containment) + ", partition " + std::to_string(total.partition) +
              ", error halving " + std::to_string(total.error_halving + total.child_bbox) + ", refinement " +
              std::to_string(total.sse_monotonicity) + ", determinism " + std::to_string(total.determinism)};
}

Outcome tile_codec() {
  synth::Rng rng(2024);
  std::size_t round_trips = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto p = twin::testing::random_payload(rng);
    round_trips += tiling::decode_tile(tiling::encode_tile(p)) == p;
  }
  const auto golden = twin::testing::read_hex_fixture(std::string(TWIN_TEST_DATA) + "/ctb1_one_triangle.hex");
  const auto one = twin::testing::one_triangle();
  const bool golden_ok = !golden.empty() && tiling::encode_tile(one) == golden && tiling::decode_tile(golden) == one;
  std::size_t structured = 0;
  for (std::size_t n = 0; n < golden.size(); ++n) {
    try {
      tiling::decode_tile(std::span<const std::uint8_t>(golden.data(), n));
    } catch (const Error& e) {
      structured += e.code() == Errc::decode && !e.section().empty() && e.offset().has_value();
    } catch (...) {
    }
  }
  return {round_trips == 1000 && golden_ok && structured == golden.size(),
          std::to_string(round_trips) + "/1000 round trips, " + std::to_string(golden.size()) + "-byte golden fixture " +
              (golden_ok ? "matches" : "DIFFERS") + ", " + std::to_string(structured) + "/" +
              std::to_string(golden.size()) + " truncations structured"};
}

Outcome flood_oracles() {
  // Closed form on a ramp.
  auto dem = geo::Raster::filled(-60, -40, 0.5, 240, 160, 0.0);
  auto plane = [](geo::Vec2 p) { return 1.1 + 0.011 * p.x - 0.017 * p.y; };
  for (int r = 0; r < dem.nrows; ++r)
    for (int col = 0; col < dem.ncols; ++col) dem.at(col, r) = plane(dem.cell_center(col, r));
  double worst_closed = 0;
  for (double wse : {-1.0, 0.0, 0.9, 2.1336, 3.3528, 5.0}) {
    const auto d = flood::uniform_flood(dem, wse);
    for (int r = 0; r < dem.nrows; ++r)
      for (int col = 0; col < dem.ncols; ++col)
        worst_closed = std::max(worst_closed, std::abs(d.at(col, r) - std::max(0.0, wse - plane(dem.cell_center(col, r)))));
  }

  // Roads against a 0.01 m walk.
  const auto terrain = twin::testing::terrain_dem(250);
  const flood::Thresholds th;
  synth::Rng rng(99);
  double worst_road = 0;
  std::size_t roads = 0;
  for (double wse : {1.6, 2.1336, 2.6}) {
    const auto depth = flood::uniform_flood(terrain, wse);
    for (int i = 0; i < 15; ++i) {
      std::vector<geo::Vec2> pts;
      for (int k = 0; k < 4; ++k) pts.push_back({rng.uniform(-120, 120), rng.uniform(-120, 120)});
      const flood::RoadFeature road{"r" + std::to_string(i), "", geo::Polyline{pts}};
      if (road.line.length() < 100) continue;
      const auto e = flood::assess_road(road, depth, th.sample_spacing, th.flood_threshold);
      worst_road =
          std::max(worst_road, std::abs(e.fraction - twin::testing::brute_force_fraction(road.line, depth, th.flood_threshold)));
      ++roads;
    }
  }

  // Monotone 0..5 m sweep on a synthetic town.
  synth::SynthParams sp;
  sp.n_buildings = 30;
  sp.density = 0.2;
  const auto scene = synth::generate(sp);
  const auto bs = twin::testing::truth_buildings(scene);
  const auto tdem = twin::testing::terrain_dem(sp.extent_m);
  std::size_t violations = 0;
  flood::VulnerabilitySummary prev;
  std::vector<flood::BuildingExposure> prev_ex;
  for (int k = 0; k <= 20; ++k) {
    std::vector<flood::BuildingExposure> ex;
    const auto s = flood::summarize_depth(flood::uniform_flood(tdem, 0.25 * k), bs, scene.roads, scene.assets, th, &ex);
    if (k > 0) {
      violations += s.buildings.flooded < prev.buildings.flooded;
      violations += s.roads.flooded_length < prev.roads.flooded_length;
      violations += s.roads.segments_affected < prev.roads.segments_affected;
      for (std::size_t i = 0; i < s.categories.size(); ++i) violations += s.categories[i].affected < prev.categories[i].affected;
      for (std::size_t i = 0; i < ex.size(); ++i)
        violations += ex[i].max_depth < prev_ex[i].max_depth || ex[i].mean_depth < prev_ex[i].mean_depth;
    }
    prev = s;
    prev_ex = std::move(ex);
  }
  return {worst_closed <= 1e-9 && roads >= 20 && worst_road <= 0.02 && violations == 0,
          fmt("closed-form max error %.1e", worst_closed) + ", " + std::to_string(roads) +
              fmt(" roads worst fraction gap %.4f", worst_road) + ", sweep 0..5 m violations " +
              std::to_string(violations)};
}

Outcome las_round_trip() {
  synth::Rng rng(1e5);
  lidar::PointCloud c;
  c.scale = {0.001, 0.001, 0.01};
  c.offset = {500.0, -250.0, 0.0};
  const lidar::PointClass classes[] = {lidar::PointClass::Unclassified, lidar::PointClass::Ground,
                                       lidar::PointClass::Building, lidar::PointClass::Noise};
  for (int i = 0; i < 100000; ++i)
    c.points.push_back({{rng.uniform(0, 1500), rng.uniform(-800, 300), rng.uniform(-5, 80)}, classes[rng.next() % 4], {}});
  const auto bytes = lidar::write_las(c);
  const auto back = lidar::parse_las(bytes);
  std::size_t bad = back.size() == c.size() ? 0 : c.size();
  std::map<lidar::PointClass, std::size_t> h1, h2;
  for (std::size_t i = 0; i < std::min(back.size(), c.size()); ++i) {
    const auto &a = c.points[i], &b = back.points[i];
    ++h1[a.cls];
    ++h2[b.cls];
    bad += a.cls != b.cls || std::abs(a.p.x - b.p.x) > 0.5 * c.scale[0] + 1e-9 ||
           std::abs(a.p.y - b.p.y) > 0.5 * c.scale[1] + 1e-9 || std::abs(a.p.z - b.p.z) > 0.5 * c.scale[2] + 1e-9;
  }
  auto lasx = bytes;
  std::memcpy(lasx.data(), "LASX", 4);
  bool rejected = false;
  try {
    lidar::parse_las(lasx);
  } catch (const Error& e) {
    rejected = e.code() == Errc::format;
  }
  return {bad == 0 && h1 == h2 && rejected, std::to_string(back.size()) + " points, " + std::to_string(bad) +
                                                " out of tolerance, LASX " + (rejected ? "rejected" : "ACCEPTED")};
}

Outcome server_contract() {
  const auto& b = bundle();
  const server::Service svc(b);

  // Crawl the manifest as a client would.
  std::size_t crawled = 0, crawl_fail = 0;
  const auto manifest = svc.handle(get("/api/tileset.json"));
  tiling::for_each_tile(tiling::parse_manifest(manifest.body).root, [&](const tiling::Tile& t) {
    if (!t.content_uri) return;
    ++crawled;
    crawl_fail += svc.handle(get("/api/" + *t.content_uri)).status != 200;
  });

  // Revalidation.
  const auto first = svc.handle(get("/api/summary/2070/Cat1"));
  const auto etag = first.header("ETag");
  const auto again = svc.handle(get("/api/summary/2070/Cat1", {{"if-none-match", etag}}));
  const bool etag_ok = first.status == 200 && !etag.empty() && again.status == 304 && again.body.empty();

  // 32 concurrent clients over a socket.
  std::vector<std::string> urls{"/api/scenarios", "/api/tileset.json", "/api/flood/legend", "/api/whatif?wse_m=2.1336",
                                "/api/assets/critical-assets.geojson", "/api/assets/roads.geojson"};
  for (const auto& id : b.content_ids) urls.push_back("/api/tiles/" + id + ".ctb");
  for (const auto& [y, w] : b.grid.scenarios()) urls.push_back("/api/summary/" + std::to_string(y) + "/" + w);
  urls.push_back("/api/feature/" + std::to_string(b.buildings.front().id));
  std::vector<std::map<std::string, std::string>> seen(32);
  {
    server::HttpServer srv(b, "127.0.0.1", 0);
    srv.start();
    std::vector<std::thread> threads;
    for (int c = 0; c < 32; ++c)
      threads.emplace_back([&, c] {
        auto order = urls;
        std::shuffle(order.begin(), order.end(), std::mt19937(c));
        httplib::Client cli("127.0.0.1", srv.port());
        cli.set_read_timeout(60, 0);
        for (const auto& u : order)
          if (auto r = cli.Get(u); r && r->status == 200) seen[c][u] = r->body;
      });
    for (auto& th : threads) th.join();
    srv.stop();
  }
  std::size_t mismatched = 0;
  for (const auto& u : urls) {
    const auto ref = svc.handle(get(u)).body;
    for (const auto& m : seen) mismatched += !m.count(u) || m.at(u) != ref;
  }

  // What-if against the batch path for the same uniform raster.
  auto w = ojson::parse(svc.handle(get("/api/whatif?wse_m=2.1336")).body);
  std::istringstream asc(geo::write_ascii_grid(flood::uniform_flood(b.dem, 2.1336)));
  flood::ScenarioGrid g{{2022}, {"whatif"}, {}};
  g.rasters[{2022, "whatif"}] = flood::load_depth_raster(asc, b.dem).raster;
  const auto batch = flood::summarize_scenario(g, 2022, "whatif", b.buildings, b.roads, b.assets, b.config.thresholds);
  const bool echoed = w["wse_m"] == 2.1336;
  for (const char* k : {"wse_m", "year", "weather"}) w.erase(k);
  const bool whatif_ok = echoed && w == flood::summary_body_json(batch);
  const auto neg = svc.handle(get("/api/whatif?wse_m=-1"));

  const bool pass = crawled > 0 && crawl_fail == 0 && etag_ok && mismatched == 0 && whatif_ok && neg.status == 400;
  return {pass, "crawl " + std::to_string(crawled - crawl_fail) + "/" + std::to_string(crawled) + " tiles, ETag/304 " +
                    (etag_ok ? "ok" : "BROKEN") + ", 32 clients x " + std::to_string(urls.size()) + " URLs " +
                    std::to_string(mismatched) + " mismatches, whatif 2.1336 " + (whatif_ok ? "equals" : "DIFFERS FROM") +
                    " batch, wse_m=-1 -> " + std::to_string(neg.status)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"scenario-grid", scenario_grid},         {"reconstruction-fidelity", reconstruction},
      {"dem-accuracy", dem_accuracy},           {"tiling-properties", tiling_properties},
      {"tile-codec", tile_codec},               {"flood-oracles", flood_oracles},
      {"las-round-trip", las_round_trip},       {"server-contract", server_contract}};
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  fs::remove_all(town().dir);
  return failed == 0 ? 0 : 1;
}
