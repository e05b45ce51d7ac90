#pragma once

// Pipeline stages. Each reads its inputs from the configured paths, writes
// its artifacts, and reports a one-line summary.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "twin/flood/flood.hpp"
#include "twin/geo/ascii_grid.hpp"
#include "twin/io/geojson.hpp"
#include "twin/io/scene_json.hpp"
#include "twin/lidar/classify.hpp"
#include "twin/lidar/las.hpp"
#include "twin/pipeline/config.hpp"
#include "twin/pipeline/synth.hpp"
#include "twin/scene/building.hpp"
#include "twin/scene/dem.hpp"
#include "twin/scene/footprints.hpp"
#include "twin/tiling/codec.hpp"
#include "twin/tiling/manifest.hpp"
#include "twin/tiling/tileset.hpp"

namespace twin::pipeline {

/// `stage=<name> key=value ... seconds=<t>` on one line.
struct StageSummary {
  std::string stage;
  std::vector<std::pair<std::string, std::string>> fields;
  double seconds = 0;

  template <typename T>
  void add(const std::string& k, const T& v) {
    std::ostringstream ss;
    ss << v;
    fields.emplace_back(k, ss.str());
  }
  std::string line() const {
    std::ostringstream ss;
    ss << "stage=" << stage;
    for (const auto& [k, v] : fields) ss << ' ' << k << '=' << v;
    ss << " seconds=" << seconds;
    return ss.str();
  }
};

inline std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::missing_input, "missing input: " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  const auto s = read_text(p);
  return {s.begin(), s.end()};
}

inline void write_bytes(const fs::path& p, const void* data, std::size_t n) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::config, "cannot write " + p.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

inline void write_text(const fs::path& p, const std::string& s) { write_bytes(p, s.data(), s.size()); }

inline nlohmann::ordered_json read_json(const fs::path& p) {
  try {
    return nlohmann::ordered_json::parse(read_text(p));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, p.string() + ": " + e.what());
  }
}

inline fs::path depth_raster_path(const PipelineConfig& c, int year, const std::string& weather) {
  return c.paths.resolve(c.paths.flood_dir) / std::to_string(year) / (weather + ".asc");
}

inline fs::path summary_path(const PipelineConfig& c, int year, const std::string& weather) {
  return c.paths.resolve(c.paths.summaries_dir) / std::to_string(year) / (weather + ".json");
}

inline geo::Raster load_dem(const PipelineConfig& c) { return geo::read_ascii_grid(read_text(c.paths.resolve(c.paths.dem))); }

inline std::vector<scene::Lod2Building> load_buildings(const PipelineConfig& c) {
  return io::parse_buildings_json(read_text(c.paths.resolve(c.paths.buildings)));
}

inline std::vector<flood::AssetFeature> load_assets(const PipelineConfig& c) {
  return io::parse_assets(read_json(c.paths.resolve(c.paths.assets)), c.anchor);
}

inline std::vector<flood::RoadFeature> load_roads(const PipelineConfig& c) {
  return io::parse_roads(read_json(c.paths.resolve(c.paths.roads)), c.anchor);
}

/// Loads every scenario raster from the flood directory, checked against the DEM grid.
inline flood::ScenarioGrid load_scenario_grid(const PipelineConfig& c, const geo::Raster& dem,
                                              std::size_t* clamped = nullptr) {
  flood::ScenarioGrid g{c.time_horizons, c.weather_conditions, {}};
  for (const auto& [y, w] : g.scenarios()) {
    const auto path = depth_raster_path(c, y, w);
    std::ifstream in(path);
    if (!in) throw Error(Errc::missing_input, "missing input: " + path.string());
    auto d = flood::load_depth_raster(in, dem);
    if (clamped) *clamped += d.clamped_negative;
    g.rasters[{y, w}] = std::move(d.raster);
  }
  return g;
}

inline io::json adaptations_geojson(const std::vector<synth::AdaptationFeature>& items, const geo::SceneAnchor& a) {
  io::json features = io::json::array();
  for (const auto& f : items)
    features.push_back(
        io::feature(io::polygon_geometry(a, f.area), io::json{{"id", f.id}, {"name", f.name}, {"kind", f.kind}}));
  return io::feature_collection(std::move(features));
}

namespace detail {

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline std::string dump(const io::json& j) { return j.dump(1) + "\n"; }

}  // namespace detail

inline StageSummary run_synth(const PipelineConfig& c) {
  detail::Timer t;
  const auto s = synth::generate(c.synth);
  const auto& p = c.paths;
  const auto las = lidar::write_las(s.cloud);
  write_bytes(p.resolve(p.las), las.data(), las.size());
  write_text(p.resolve(p.truth), io::truth_json(s));
  write_text(p.resolve(p.assets), detail::dump(io::assets_geojson(s.assets, c.anchor)));
  write_text(p.resolve(p.roads), detail::dump(io::roads_geojson(s.roads, c.anchor)));
  write_text(p.resolve(p.adaptations), detail::dump(adaptations_geojson(s.adaptations, c.anchor)));
  StageSummary out{"synth", {}, 0};
  out.add("seed", c.synth.seed);
  out.add("points", s.cloud.size());
  out.add("buildings", s.buildings.size());
  out.add("assets", s.assets.size());
  out.add("roads", s.roads.size());
  out.seconds = t.seconds();
  return out;
}

inline StageSummary run_classify(const PipelineConfig& c) {
  detail::Timer t;
  const auto raw = lidar::read_las_file(c.paths.resolve(c.paths.las).string());
  const auto ground = lidar::classify_ground(raw, c.ground_filter);
  const auto dem = scene::build_dem(ground, c.dem_cell);
  const auto res = lidar::classify_buildings(ground, dem, c.building_filter);
  const auto las = lidar::write_las(res.cloud);
  write_bytes(c.paths.resolve(c.paths.classified), las.data(), las.size());
  StageSummary out{"classify", {}, 0};
  out.add("points", res.cloud.size());
  out.add("ground", res.cloud.count(lidar::PointClass::Ground));
  out.add("building", res.cloud.count(lidar::PointClass::Building));
  out.add("clusters_accepted", res.clusters_accepted);
  out.add("clusters_rejected", res.clusters_rejected);
  out.seconds = t.seconds();
  return out;
}

inline StageSummary run_dem(const PipelineConfig& c) {
  detail::Timer t;
  const auto cloud = lidar::read_las_file(c.paths.resolve(c.paths.classified).string());
  const auto dem = scene::build_dem(cloud, c.dem_cell);
  write_text(c.paths.resolve(c.paths.dem), geo::write_ascii_grid(dem));
  StageSummary out{"dem", {}, 0};
  out.add("ncols", dem.ncols);
  out.add("nrows", dem.nrows);
  out.add("cell", dem.cell);
  out.seconds = t.seconds();
  return out;
}

inline StageSummary run_footprints(const PipelineConfig& c) {
  detail::Timer t;
  const auto cloud = lidar::read_las_file(c.paths.resolve(c.paths.classified).string());
  const auto fps =
      scene::extract_footprints(cloud, c.footprint_cell, c.footprint_min_area, c.footprint_simplify_tol);
  write_text(c.paths.resolve(c.paths.footprints), detail::dump(io::footprints_geojson(fps, c.anchor)));
  double area = 0;
  for (const auto& f : fps) area += f.area;
  StageSummary out{"footprints", {}, 0};
  out.add("footprints", fps.size());
  out.add("total_area", area);
  out.seconds = t.seconds();
  return out;
}

/// Building points whose plan position falls inside each footprint.
inline std::vector<std::vector<geo::ScenePoint>> roof_points_by_footprint(const lidar::PointCloud& cloud,
                                                                          const std::vector<scene::Footprint>& fps) {
  std::vector<std::vector<geo::ScenePoint>> out(fps.size());
  std::vector<std::pair<geo::Vec2, geo::Vec2>> boxes;
  for (const auto& f : fps) {
    geo::Vec2 lo, hi;
    geo::ring_bounds(f.polygon.exterior, lo, hi);
    boxes.emplace_back(lo, hi);
  }
  for (const auto& pt : cloud.points) {
    if (pt.cls != lidar::PointClass::Building) continue;
    const auto q = pt.p.plan();
    for (std::size_t i = 0; i < fps.size(); ++i) {
      const auto& [lo, hi] = boxes[i];
      if (q.x < lo.x || q.x > hi.x || q.y < lo.y || q.y > hi.y) continue;
      if (geo::point_in_polygon(q, fps[i].polygon)) {
        out[i].push_back(pt.p);
        break;
      }
    }
  }
  return out;
}

inline StageSummary run_reconstruct(const PipelineConfig& c) {
  detail::Timer t;
  const auto cloud = lidar::read_las_file(c.paths.resolve(c.paths.classified).string());
  const auto dem = load_dem(c);
  const auto fps = io::parse_footprints(read_json(c.paths.resolve(c.paths.footprints)), c.anchor);
  const auto roofs = roof_points_by_footprint(cloud, fps);
  std::vector<scene::Lod2Building> bs;
  std::size_t fallback = 0;
  for (std::size_t i = 0; i < fps.size(); ++i) {
    bs.push_back(scene::reconstruct_lod2(fps[i], roofs[i], dem, c.attributes));
    fallback += bs.back().attributes.has_tag(scene::kLod1FallbackTag);
  }
  write_text(c.paths.resolve(c.paths.buildings), io::buildings_json(bs));
  StageSummary out{"reconstruct", {}, 0};
  out.add("buildings", bs.size());
  out.add("lod1_fallback", fallback);
  out.seconds = t.seconds();
  return out;
}

inline StageSummary run_tile(const PipelineConfig& c) {
  detail::Timer t;
  const auto bs = load_buildings(c);
  const auto ts = tiling::build_tileset(bs, c.anchor, c.tiling);
  const auto dir = c.paths.resolve(c.paths.tileset_dir);
  fs::remove_all(dir / "tiles");
  write_text(dir / "tileset.json", tiling::tileset_manifest(ts));
  const auto by_id = tiling::index_buildings(bs);
  std::size_t tiles = 0, bytes = 0;
  tiling::for_each_tile(ts.root, [&](const tiling::Tile& tile) {
    if (!tile.content_uri) return;
    const auto payload = tiling::encode_tile(tiling::tile_payload(tile, by_id));
    write_bytes(dir / *tile.content_uri, payload.data(), payload.size());
    ++tiles;
    bytes += payload.size();
  });
  StageSummary out{"tile", {}, 0};
  out.add("buildings", bs.size());
  out.add("tiles", tiles);
  out.add("bytes", bytes);
  out.seconds = t.seconds();
  return out;
}

inline StageSummary run_flood(const PipelineConfig& c) {
  detail::Timer t;
  const auto dem = load_dem(c);
  StageSummary out{"flood", {}, 0};
  if (c.synthetic_water) {
    for (int y : c.time_horizons)
      for (const auto& w : c.weather_conditions) {
        const double wse = c.synthetic_water->base_wse_m.at(w) + c.synthetic_water->rise_m.at(y);
        write_text(depth_raster_path(c, y, w), geo::write_ascii_grid(flood::uniform_flood(dem, wse)));
      }
    out.add("mode", "synthetic");
  } else {
    out.add("mode", "ingest");
  }
  std::size_t clamped = 0;
  const auto grid = load_scenario_grid(c, dem, &clamped);
  out.add("scenarios", grid.size());
  out.add("clamped_negative", clamped);
  out.seconds = t.seconds();
  return out;
}

/// Per-building depths for every scenario, in grid order.
inline nlohmann::ordered_json building_depths_json(const flood::ScenarioGrid& grid,
                                                   const std::vector<std::vector<flood::BuildingExposure>>& per_scenario) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  const auto keys = grid.scenarios();
  if (per_scenario.empty()) return out;
  for (std::size_t b = 0; b < per_scenario.front().size(); ++b) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < keys.size(); ++k) {
      const auto& e = per_scenario[k][b];
      rows.push_back({{"year", keys[k].first},
                      {"weather", keys[k].second},
                      {"max_depth", e.max_depth},
                      {"mean_depth", e.mean_depth},
                      {"flooded", e.flooded},
                      {"coverage", e.coverage}});
    }
    out[std::to_string(per_scenario.front()[b].building_id)] = std::move(rows);
  }
  return out;
}

inline StageSummary run_assess(const PipelineConfig& c) {
  detail::Timer t;
  const auto dem = load_dem(c);
  const auto grid = load_scenario_grid(c, dem);
  const auto bs = load_buildings(c);
  const auto roads = load_roads(c);
  const auto assets = load_assets(c);
  std::vector<std::vector<flood::BuildingExposure>> exposures;
  nlohmann::ordered_json index = nlohmann::ordered_json::array();
  std::size_t flooded_total = 0;
  for (const auto& [y, w] : grid.scenarios()) {
    exposures.emplace_back();
    const auto s = flood::summarize_scenario(grid, y, w, bs, roads, assets, c.thresholds, &exposures.back());
    write_text(summary_path(c, y, w), flood::summary_json(s).dump(1) + "\n");
    index.push_back({{"year", y}, {"weather", w}, {"path", std::to_string(y) + "/" + w + ".json"}});
    flooded_total += s.buildings.flooded;
  }
  const auto dir = c.paths.resolve(c.paths.summaries_dir);
  write_text(dir / "index.json", index.dump(1) + "\n");
  write_text(dir / "building_depths.json", building_depths_json(grid, exposures).dump(1) + "\n");
  StageSummary out{"assess", {}, 0};
  out.add("summaries", grid.size());
  out.add("buildings", bs.size());
  out.add("flooded_building_scenarios", flooded_total);
  out.seconds = t.seconds();
  return out;
}

}  // namespace twin::pipeline
