#pragma once

// GeoJSON layers in lon/lat, converted to and from the scene frame.

#include <algorithm>
#include <string>
#include <vector>

#include <json.hpp>

#include "twin/error.hpp"
#include "twin/flood/features.hpp"
#include "twin/geo/projection.hpp"
#include "twin/scene/building.hpp"

namespace twin::io {

using json = nlohmann::ordered_json;

inline json position(const geo::SceneAnchor& a, geo::Vec2 p) {
  const auto ll = geo::scene_to_lonlat(a, p.x, p.y);
  return json::array({ll.lon, ll.lat});
}

inline json ring_coords(const geo::SceneAnchor& a, const geo::Ring& r) {
  json out = json::array();
  for (const auto& p : r) out.push_back(position(a, p));
  return out;
}

inline json polygon_geometry(const geo::SceneAnchor& a, const geo::Polygon& poly) {
  json rings = json::array({ring_coords(a, poly.exterior)});
  for (const auto& h : poly.holes) rings.push_back(ring_coords(a, h));
  return json{{"type", "Polygon"}, {"coordinates", rings}};
}

inline json feature(json geometry, json properties) {
  return json{{"type", "Feature"}, {"geometry", std::move(geometry)}, {"properties", std::move(properties)}};
}

inline json feature_collection(json features) {
  return json{{"type", "FeatureCollection"}, {"features", std::move(features)}};
}

inline json footprints_geojson(const std::vector<scene::Footprint>& fps, const geo::SceneAnchor& a) {
  json features = json::array();
  for (const auto& f : fps)
    features.push_back(feature(polygon_geometry(a, f.polygon), json{{"id", f.id}, {"area", f.area}}));
  return feature_collection(std::move(features));
}

inline json buildings_geojson(std::vector<const scene::Lod2Building*> bs, const geo::SceneAnchor& a) {
  std::sort(bs.begin(), bs.end(), [](auto* x, auto* y) { return x->id < y->id; });
  json features = json::array();
  for (const auto* b : bs) {
    json props{{"id", b->id},
               {"base_elevation", b->base_elevation},
               {"roof_height", b->max_roof_z() - b->base_elevation},
               {"area", b->footprint.area},
               {"county", b->attributes.county},
               {"municipality", b->attributes.municipality}};
    features.push_back(feature(polygon_geometry(a, b->footprint.polygon), std::move(props)));
  }
  return feature_collection(std::move(features));
}

inline json buildings_geojson(const std::vector<scene::Lod2Building>& bs, const geo::SceneAnchor& a) {
  std::vector<const scene::Lod2Building*> ptrs;
  for (const auto& b : bs) ptrs.push_back(&b);
  return buildings_geojson(std::move(ptrs), a);
}

inline json assets_geojson(std::vector<flood::AssetFeature> assets, const geo::SceneAnchor& a) {
  std::sort(assets.begin(), assets.end(), [](const auto& x, const auto& y) { return x.id < y.id; });
  json features = json::array();
  for (const auto& f : assets)
    features.push_back(feature(json{{"type", "Point"}, {"coordinates", position(a, f.position)}},
                               json{{"id", f.id}, {"name", f.name}, {"category", f.category}}));
  return feature_collection(std::move(features));
}

inline json roads_geojson(std::vector<flood::RoadFeature> roads, const geo::SceneAnchor& a) {
  std::sort(roads.begin(), roads.end(), [](const auto& x, const auto& y) { return x.id < y.id; });
  json features = json::array();
  for (const auto& r : roads)
    features.push_back(feature(json{{"type", "LineString"}, {"coordinates", ring_coords(a, r.line.vertices)}},
                               json{{"id", r.id}, {"name", r.name}}));
  return feature_collection(std::move(features));
}

namespace detail {

inline const json& features_of(const json& doc) {
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
      !doc["features"].is_array()) {
    throw Error(Errc::parse, "expected a GeoJSON FeatureCollection");
  }
  return doc["features"];
}

inline geo::Vec2 to_scene(const geo::SceneAnchor& a, const json& pos) {
  if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number())
    throw Error(Errc::parse, "GeoJSON position must be [lon, lat]");
  return geo::lonlat_to_scene(a, pos[0].get<double>(), pos[1].get<double>());
}

inline std::string id_string(const json& props) {
  if (!props.contains("id")) throw Error(Errc::parse, "feature without an id property");
  const auto& id = props["id"];
  return id.is_string() ? id.get<std::string>() : id.dump();
}

inline const json& geometry_of(const json& f, const char* type) {
  if (!f.contains("geometry") || !f["geometry"].is_object() || f["geometry"].value("type", "") != type)
    throw Error(Errc::parse, std::string("expected ") + type + " geometry");
  return f["geometry"]["coordinates"];
}

}  // namespace detail

inline std::vector<flood::AssetFeature> parse_assets(const json& doc, const geo::SceneAnchor& a) {
  std::vector<flood::AssetFeature> out;
  for (const auto& f : detail::features_of(doc)) {
    const auto& props = f.at("properties");
    flood::AssetFeature af;
    af.id = detail::id_string(props);
    af.name = props.value("name", "");
    if (!props.contains("category") || !props["category"].is_string())
      throw Error(Errc::parse, "asset " + af.id + " has no category");
    af.category = props["category"].get<std::string>();
    af.position = detail::to_scene(a, detail::geometry_of(f, "Point"));
    out.push_back(std::move(af));
  }
  return out;
}

inline std::vector<flood::RoadFeature> parse_roads(const json& doc, const geo::SceneAnchor& a) {
  std::vector<flood::RoadFeature> out;
  for (const auto& f : detail::features_of(doc)) {
    const auto& props = f.at("properties");
    flood::RoadFeature r;
    r.id = detail::id_string(props);
    r.name = props.value("name", "");
    for (const auto& pos : detail::geometry_of(f, "LineString")) r.line.vertices.push_back(detail::to_scene(a, pos));
    if (r.line.vertices.size() < 2) throw Error(Errc::parse, "road " + r.id + " needs at least 2 vertices");
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<scene::Footprint> parse_footprints(const json& doc, const geo::SceneAnchor& a) {
  std::vector<scene::Footprint> out;
  for (const auto& f : detail::features_of(doc)) {
    const auto& props = f.at("properties");
    scene::Footprint fp;
    fp.id = props.at("id").get<std::uint64_t>();
    const auto& rings = detail::geometry_of(f, "Polygon");
    if (!rings.is_array() || rings.empty()) throw Error(Errc::parse, "footprint polygon without rings");
    for (const auto& pos : rings[0]) fp.polygon.exterior.push_back(detail::to_scene(a, pos));
    for (std::size_t h = 1; h < rings.size(); ++h) {
      geo::Ring hole;
      for (const auto& pos : rings[h]) hole.push_back(detail::to_scene(a, pos));
      fp.polygon.holes.push_back(std::move(hole));
    }
    fp.area = props.contains("area") ? props["area"].get<double>() : geo::polygon_area(fp.polygon);
    out.push_back(std::move(fp));
  }
  return out;
}

}  // namespace twin::io
