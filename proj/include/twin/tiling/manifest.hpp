#pragma once

// Tileset manifest: one JSON document with a fixed key order.

#include <string>

#include <json.hpp>

#include "twin/error.hpp"
#include "twin/tiling/tileset.hpp"

namespace twin::tiling {

using ojson = nlohmann::ordered_json;

namespace detail {

inline ojson tile_to_json(const Tile& t) {
  ojson j;
  j["id"] = t.id;
  j["bbox"] = {t.bbox.xmin, t.bbox.ymin, t.bbox.zmin, t.bbox.xmax, t.bbox.ymax, t.bbox.zmax};
  j["geometric_error"] = t.geometric_error;
  j["refine"] = "REPLACE";
  if (t.content_uri) j["content_uri"] = *t.content_uri;
  ojson children = ojson::array();
  for (const auto& c : t.children) children.push_back(tile_to_json(c));
  j["children"] = std::move(children);
  return j;
}

inline Tile tile_from_json(const ojson& j) {
  Tile t;
  try {
    t.id = j.at("id").get<std::string>();
    if (std::sscanf(t.id.c_str(), "%d-%d-%d", &t.level, &t.x, &t.y) != 3)
      throw Error(Errc::parse, "tile id must look like L-X-Y: " + t.id);
    const auto& b = j.at("bbox");
    if (!b.is_array() || b.size() != 6) throw Error(Errc::parse, "tile bbox must have 6 numbers");
    t.bbox = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
              b[3].get<double>(), b[4].get<double>(), b[5].get<double>()};
    t.geometric_error = j.at("geometric_error").get<double>();
    if (j.at("refine").get<std::string>() != "REPLACE") throw Error(Errc::parse, "unknown refine mode");
    if (j.contains("content_uri")) t.content_uri = j["content_uri"].get<std::string>();
    for (const auto& c : j.at("children")) t.children.push_back(tile_from_json(c));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, std::string("malformed tile: ") + e.what());
  }
  return t;
}

}  // namespace detail

inline std::string tileset_manifest(const Tileset& ts) {
  ojson doc;
  doc["asset"] = {{"format", "twin-tileset"}, {"version", "1.0"}};
  doc["anchor"] = {{"lon0", ts.anchor.lon0}, {"lat0", ts.anchor.lat0}, {"description", ts.anchor.description}};
  doc["geometric_error"] = ts.root.geometric_error;
  doc["root"] = detail::tile_to_json(ts.root);
  ojson index = ojson::object();
  for (const auto& [id, leaf] : ts.building_index) index[std::to_string(id)] = leaf;
  doc["building_index"] = std::move(index);
  return doc.dump(1) + "\n";
}

/// Reads a manifest back. Building lists per tile are rebuilt from the index.
inline Tileset parse_manifest(const std::string& text) {
  ojson doc;
  try {
    doc = ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, std::string("manifest is not valid JSON: ") + e.what());
  }
  Tileset ts;
  try {
    const auto& a = doc.at("anchor");
    ts.anchor = {a.at("lon0").get<double>(), a.at("lat0").get<double>(), a.at("description").get<std::string>()};
    ts.root = detail::tile_from_json(doc.at("root"));
    for (const auto& [k, v] : doc.at("building_index").items())
      ts.building_index[std::stoull(k)] = v.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, std::string("malformed manifest: ") + e.what());
  } catch (const std::logic_error& e) {
    throw Error(Errc::parse, std::string("malformed manifest: ") + e.what());
  }
  // building lists: each leaf owns its indexed buildings; parents collect them
  std::map<std::string, std::vector<std::uint64_t>> owned;
  for (const auto& [id, leaf] : ts.building_index) owned[leaf].push_back(id);
  auto fill = [&](auto&& self, Tile& t) -> void {
    if (t.is_leaf()) {
      t.building_ids = owned[t.id];
    } else {
      for (auto& c : t.children) {
        self(self, c);
        t.building_ids.insert(t.building_ids.end(), c.building_ids.begin(), c.building_ids.end());
      }
      std::sort(t.building_ids.begin(), t.building_ids.end());
    }
  };
  fill(fill, ts.root);
  return ts;
}

}  // namespace twin::tiling
