#pragma once

// Read-only state behind the HTTP service, loaded once at startup.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "twin/flood/flood.hpp"
#include "twin/io/geojson.hpp"
#include "twin/pipeline/config.hpp"
#include "twin/pipeline/stages.hpp"
#include "twin/tiling/manifest.hpp"

namespace twin::server {

struct SceneBundle {
  pipeline::PipelineConfig config;
  std::filesystem::path tileset_dir;
  std::string manifest;               // tileset.json as written by the tile stage
  std::set<std::string> content_ids;  // tiles that carry a payload
  geo::Raster dem;
  std::vector<scene::Lod2Building> buildings;
  std::map<std::uint64_t, std::size_t> building_index;
  std::vector<flood::RoadFeature> roads;
  std::vector<flood::AssetFeature> assets;
  std::map<std::string, std::string> layers;  // GeoJSON bodies by layer name
  flood::ScenarioGrid grid;
  std::map<flood::ScenarioKey, flood::VulnerabilitySummary> summaries;
  std::map<flood::ScenarioKey, std::vector<flood::BuildingExposure>> exposures;  // parallel to buildings
};

namespace detail {

inline std::string sorted_layer(nlohmann::ordered_json doc) {
  std::vector<nlohmann::ordered_json> features(doc.at("features").begin(), doc.at("features").end());
  std::stable_sort(features.begin(), features.end(), [](const auto& a, const auto& b) {
    return a.at("properties").at("id").dump() < b.at("properties").at("id").dump();
  });
  doc["features"] = features;
  return doc.dump() + "\n";
}

}  // namespace detail

/// Loads pipeline artifacts and precomputes every scenario summary.
inline SceneBundle load_bundle(const pipeline::PipelineConfig& c) {
  using namespace pipeline;
  SceneBundle b;
  b.config = c;
  b.tileset_dir = c.paths.resolve(c.paths.tileset_dir);
  b.manifest = read_text(b.tileset_dir / "tileset.json");
  const auto ts = tiling::parse_manifest(b.manifest);
  tiling::for_each_tile(ts.root, [&](const tiling::Tile& t) {
    if (t.content_uri) b.content_ids.insert(t.id);
  });
  b.dem = load_dem(c);
  b.buildings = load_buildings(c);
  for (std::size_t i = 0; i < b.buildings.size(); ++i) b.building_index[b.buildings[i].id] = i;
  b.roads = load_roads(c);
  b.assets = load_assets(c);
  b.layers["buildings"] = io::buildings_geojson(b.buildings, c.anchor).dump() + "\n";
  b.layers["roads"] = io::roads_geojson(b.roads, c.anchor).dump() + "\n";
  b.layers["critical-assets"] = io::assets_geojson(b.assets, c.anchor).dump() + "\n";
  b.layers["adaptations"] = detail::sorted_layer(read_json(c.paths.resolve(c.paths.adaptations)));
  b.grid = load_scenario_grid(c, b.dem);
  b.grid.validate(b.dem);
  for (const auto& [y, w] : b.grid.scenarios()) {
    auto& ex = b.exposures[{y, w}];
    b.summaries[{y, w}] = flood::summarize_scenario(b.grid, y, w, b.buildings, b.roads, b.assets, c.thresholds, &ex);
  }
  return b;
}

}  // namespace twin::server
