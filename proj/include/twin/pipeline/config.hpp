#pragma once

// Pipeline configuration: one JSON document, unknown keys rejected.

#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "twin/error.hpp"
#include "twin/flood/flood.hpp"
#include "twin/geo/projection.hpp"
#include "twin/lidar/classify.hpp"
#include "twin/pipeline/synth.hpp"
#include "twin/scene/building.hpp"
#include "twin/tiling/tileset.hpp"

namespace twin::pipeline {

namespace fs = std::filesystem;

struct Paths {
  fs::path work_dir = ".";
  std::string las = "input/town.las";
  std::string truth = "input/truth.json";
  std::string assets = "input/assets.geojson";
  std::string roads = "input/roads.geojson";
  std::string adaptations = "input/adaptations.geojson";
  std::string classified = "classified.las";
  std::string dem = "dem.asc";
  std::string footprints = "footprints.geojson";
  std::string buildings = "buildings.json";
  std::string tileset_dir = "tileset";
  std::string flood_dir = "flood";
  std::string summaries_dir = "summaries";

  /// Artifact path under the working directory (absolute paths pass through).
  fs::path resolve(const std::string& p) const { return fs::path(p).is_absolute() ? fs::path(p) : work_dir / p; }
};

/// One colour stop of the depth legend, RGBA in 0..255.
struct LegendStop {
  double depth_m = 0;
  std::array<int, 4> rgba{};
};

/// Stand-in water surface elevations for scenes without model rasters:
/// wse = base_wse_m[weather] + rise_m[year].
struct SyntheticWaterLevels {
  std::map<std::string, double> base_wse_m;
  std::map<int, double> rise_m;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::vector<std::string> cors_origins;
  int cache_max_age = 300;
};

struct PipelineConfig {
  geo::SceneAnchor anchor{-83.0353, 29.1383, "synthetic coastal town"};
  Paths paths;
  synth::SynthParams synth;
  lidar::GroundFilterParams ground_filter;
  lidar::BuildingFilterParams building_filter;
  double dem_cell = 1.0;
  double footprint_cell = 0.4;
  double footprint_min_area = 10.0;
  double footprint_simplify_tol = 0.25;
  scene::BuildingAttributes attributes;
  tiling::TilingParams tiling;
  std::vector<int> time_horizons;
  std::vector<std::string> weather_conditions;
  std::optional<SyntheticWaterLevels> synthetic_water;
  flood::Thresholds thresholds;
  std::vector<LegendStop> legend;
  ServerOptions server;
};

namespace detail {

using json = nlohmann::json;

/// Walks one JSON object, records every problem and flags unread keys.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path, std::vector<std::string>& problems)
      : j_(j), path_(std::move(path)), problems_(problems) {
    if (!j_.is_object()) problems_.push_back(name() + ": expected an object");
  }
  ~ObjectReader() {
    if (!j_.is_object()) return;
    for (const auto& [k, _] : j_.items())
      if (!seen_.count(k)) problems_.push_back(key_path(k) + ": unknown key");
  }
  ObjectReader(const ObjectReader&) = delete;
  ObjectReader& operator=(const ObjectReader&) = delete;

  bool has(const std::string& k) const { return j_.is_object() && j_.contains(k); }

  template <typename T>
  void get(const std::string& k, T& out) {
    if (!has(k)) return;
    seen_.insert(k);
    try {
      out = j_.at(k).get<T>();
    } catch (const json::exception&) {
      problems_.push_back(key_path(k) + ": wrong type");
    }
  }

  /// Marks the key as read and hands back its value (null when absent).
  const json& raw(const std::string& k) {
    static const json null;
    if (!has(k)) return null;
    seen_.insert(k);
    return j_.at(k);
  }

  std::string key_path(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
  std::string name() const { return path_.empty() ? "<root>" : path_; }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string>& problems_;
  std::set<std::string> seen_;
};

inline void check(bool ok, const std::string& key, const std::string& what, std::vector<std::string>& problems) {
  if (!ok) problems.push_back(key + ": " + what);
}

}  // namespace detail

/// Parses and validates a config document. All offending keys are listed in
/// one Errc::config error.
inline PipelineConfig parse_config(const std::string& text, const fs::path& base_dir = ".") {
  using detail::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::config, std::string("config is not valid JSON: ") + e.what());
  }
  PipelineConfig c;
  std::vector<std::string> problems;
  {
    detail::ObjectReader root(doc, "", problems);
    if (root.has("anchor")) {
      detail::ObjectReader r(root.raw("anchor"), "anchor", problems);
      r.get("lon0", c.anchor.lon0);
      r.get("lat0", c.anchor.lat0);
      r.get("description", c.anchor.description);
    }
    if (root.has("paths")) {
      detail::ObjectReader r(root.raw("paths"), "paths", problems);
      std::string work_dir = ".";
      r.get("work_dir", work_dir);
      c.paths.work_dir = base_dir / work_dir;
      r.get("las", c.paths.las);
      r.get("truth", c.paths.truth);
      r.get("assets", c.paths.assets);
      r.get("roads", c.paths.roads);
      r.get("adaptations", c.paths.adaptations);
      r.get("classified", c.paths.classified);
      r.get("dem", c.paths.dem);
      r.get("footprints", c.paths.footprints);
      r.get("buildings", c.paths.buildings);
      r.get("tileset_dir", c.paths.tileset_dir);
      r.get("flood_dir", c.paths.flood_dir);
      r.get("summaries_dir", c.paths.summaries_dir);
    } else {
      c.paths.work_dir = base_dir;
    }
    if (root.has("synth")) {
      detail::ObjectReader r(root.raw("synth"), "synth", problems);
      r.get("seed", c.synth.seed);
      r.get("n_buildings", c.synth.n_buildings);
      r.get("extent_m", c.synth.extent_m);
      r.get("density", c.synth.density);
      r.get("noise_sigma", c.synth.noise_sigma);
      r.get("n_trees", c.synth.n_trees);
      r.get("n_assets", c.synth.n_assets);
    }
    if (root.has("ground_filter")) {
      detail::ObjectReader r(root.raw("ground_filter"), "ground_filter", problems);
      r.get("cell", c.ground_filter.cell);
      r.get("max_window", c.ground_filter.max_window);
      r.get("slope", c.ground_filter.slope);
      r.get("initial_threshold", c.ground_filter.initial_threshold);
      r.get("max_threshold", c.ground_filter.max_threshold);
    }
    if (root.has("building_filter")) {
      detail::ObjectReader r(root.raw("building_filter"), "building_filter", problems);
      r.get("min_height", c.building_filter.min_height);
      r.get("min_points", c.building_filter.min_points);
      r.get("cluster_cell", c.building_filter.cluster_cell);
      r.get("max_roughness", c.building_filter.max_roughness);
    }
    if (root.has("dem")) {
      detail::ObjectReader r(root.raw("dem"), "dem", problems);
      r.get("cell", c.dem_cell);
    }
    if (root.has("footprints")) {
      detail::ObjectReader r(root.raw("footprints"), "footprints", problems);
      r.get("cell", c.footprint_cell);
      r.get("min_area", c.footprint_min_area);
      r.get("simplify_tol", c.footprint_simplify_tol);
    }
    if (root.has("attributes")) {
      detail::ObjectReader r(root.raw("attributes"), "attributes", problems);
      r.get("county", c.attributes.county);
      r.get("municipality", c.attributes.municipality);
      r.get("hazard_tags", c.attributes.hazard_tags);
    }
    if (root.has("tiling")) {
      detail::ObjectReader r(root.raw("tiling"), "tiling", problems);
      r.get("max_per_leaf", c.tiling.max_per_leaf);
      r.get("max_depth", c.tiling.max_depth);
    }
    {
      detail::ObjectReader r(root.raw("scenarios"), "scenarios", problems);
      r.get("time_horizons", c.time_horizons);
      r.get("weather_conditions", c.weather_conditions);
      if (r.has("synthetic_water_levels")) {
        detail::ObjectReader s(r.raw("synthetic_water_levels"), "scenarios.synthetic_water_levels", problems);
        SyntheticWaterLevels w;
        s.get("base_wse_m", w.base_wse_m);
        std::map<std::string, double> rise;
        s.get("rise_m", rise);
        for (const auto& [k, v] : rise) {
          try {
            std::size_t used = 0;
            const int year = std::stoi(k, &used);
            if (used != k.size()) throw std::invalid_argument(k);
            w.rise_m[year] = v;
          } catch (const std::logic_error&) {
            problems.push_back("scenarios.synthetic_water_levels.rise_m." + k + ": not a year");
          }
        }
        c.synthetic_water = std::move(w);
      }
    }
    if (root.has("thresholds")) {
      detail::ObjectReader r(root.raw("thresholds"), "thresholds", problems);
      r.get("flood_threshold", c.thresholds.flood_threshold);
      r.get("sample_spacing", c.thresholds.sample_spacing);
    }
    {
      const auto& legend = root.raw("legend");
      if (!legend.is_array()) {
        problems.push_back("legend: expected a list of {depth_m, rgba} stops");
      } else {
        for (std::size_t i = 0; i < legend.size(); ++i) {
          detail::ObjectReader r(legend[i], "legend[" + std::to_string(i) + "]", problems);
          LegendStop s;
          r.get("depth_m", s.depth_m);
          r.get("rgba", s.rgba);
          c.legend.push_back(s);
        }
      }
    }
    if (root.has("server")) {
      detail::ObjectReader r(root.raw("server"), "server", problems);
      r.get("host", c.server.host);
      r.get("port", c.server.port);
      r.get("cors_origins", c.server.cors_origins);
      r.get("cache_max_age", c.server.cache_max_age);
    }
  }

  // value checks
  using detail::check;
  check(c.anchor.lon0 >= -180 && c.anchor.lon0 <= 180, "anchor.lon0", "out of range", problems);
  check(c.anchor.lat0 > -85 && c.anchor.lat0 < 85, "anchor.lat0", "out of range", problems);
  check(c.synth.n_buildings >= 0, "synth.n_buildings", "must be >= 0", problems);
  check(c.synth.extent_m > 0, "synth.extent_m", "must be positive", problems);
  check(c.synth.density > 0, "synth.density", "must be positive", problems);
  check(c.synth.noise_sigma >= 0, "synth.noise_sigma", "must be >= 0", problems);
  check(c.synth.n_assets >= 0, "synth.n_assets", "must be >= 0", problems);
  try {
    c.ground_filter.validate();
  } catch (const Error& e) {
    problems.push_back(std::string("ground_filter: ") + e.what());
  }
  try {
    c.building_filter.validate();
  } catch (const Error& e) {
    problems.push_back(std::string("building_filter: ") + e.what());
  }
  check(c.dem_cell > 0, "dem.cell", "must be positive", problems);
  check(c.footprint_cell > 0, "footprints.cell", "must be positive", problems);
  check(c.footprint_min_area >= 0, "footprints.min_area", "must be >= 0", problems);
  check(c.footprint_simplify_tol >= 0, "footprints.simplify_tol", "must be >= 0", problems);
  check(c.tiling.max_per_leaf >= 1, "tiling.max_per_leaf", "must be >= 1", problems);
  check(c.tiling.max_depth >= 0 && c.tiling.max_depth <= 20, "tiling.max_depth", "must be in [0, 20]", problems);
  check(c.thresholds.flood_threshold > 0, "thresholds.flood_threshold", "must be positive", problems);
  check(c.thresholds.sample_spacing > 0, "thresholds.sample_spacing", "must be positive", problems);
  try {
    flood::ScenarioGrid{c.time_horizons, c.weather_conditions, {}}.validate_axes();
  } catch (const Error& e) {
    problems.push_back(std::string("scenarios: ") + e.what());
  }
  if (c.synthetic_water) {
    for (const auto& w : c.weather_conditions)
      check(c.synthetic_water->base_wse_m.count(w) == 1, "scenarios.synthetic_water_levels.base_wse_m." + w,
            "missing", problems);
    for (int y : c.time_horizons)
      check(c.synthetic_water->rise_m.count(y) == 1,
            "scenarios.synthetic_water_levels.rise_m." + std::to_string(y), "missing", problems);
  }
  check(!c.legend.empty(), "legend", "needs at least one stop", problems);
  for (std::size_t i = 0; i < c.legend.size(); ++i) {
    const auto key = "legend[" + std::to_string(i) + "]";
    if (i > 0) check(c.legend[i].depth_m > c.legend[i - 1].depth_m, key + ".depth_m", "must increase", problems);
    for (int ch : c.legend[i].rgba) check(ch >= 0 && ch <= 255, key + ".rgba", "channels must be 0..255", problems);
  }
  check(c.server.port >= 0 && c.server.port <= 65535, "server.port", "out of range", problems);
  check(c.server.cache_max_age >= 0, "server.cache_max_age", "must be >= 0", problems);

  if (!problems.empty()) {
    std::string msg = "invalid config:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw Error(Errc::config, msg);
  }
  return c;
}

inline PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::missing_input, "config file not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

}  // namespace twin::pipeline
