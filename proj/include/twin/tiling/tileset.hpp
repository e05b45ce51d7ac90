#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "twin/error.hpp"
#include "twin/geo/projection.hpp"
#include "twin/scene/building.hpp"
#include "twin/tiling/codec.hpp"

namespace twin::tiling {

enum class Refine { Replace };

struct Tile {
  std::string id;  // "L-X-Y", y grows northwards
  int level = 0, x = 0, y = 0;
  geo::Box bbox;
  double geometric_error = 0.0;
  Refine refine = Refine::Replace;
  std::optional<std::string> content_uri;
  std::vector<Tile> children;
  std::vector<std::uint64_t> building_ids;  // every building in this subtree, ascending

  bool is_leaf() const { return children.empty(); }
};

struct Tileset {
  Tile root;
  geo::SceneAnchor anchor;
  std::map<std::uint64_t, std::string> building_index;  // building id -> leaf tile id
};

struct TilingParams {
  std::size_t max_per_leaf = 16;
  int max_depth = 8;
};

inline std::string tile_id(int level, int x, int y) {
  return std::to_string(level) + "-" + std::to_string(x) + "-" + std::to_string(y);
}
inline std::string content_uri_for(const std::string& id) { return "tiles/" + id + ".ctb"; }

/// Plan-area box of the geometry, widened so that float32 storage of the
/// vertices still falls inside it.
inline geo::Box payload_bounds(const geo::Mesh& m) {
  geo::Box b = geo::Box::empty();
  for (const auto& v : m.vertices) {
    b.expand(v);
    b.expand(geo::ScenePoint{static_cast<float>(v.x), static_cast<float>(v.y), static_cast<float>(v.z)});
  }
  return b;
}

namespace detail {

struct Builder {
  const std::vector<scene::Lod2Building>& buildings;
  TilingParams params;
  std::vector<geo::Vec2> centroids;
  std::vector<geo::Box> bounds;
  std::map<std::uint64_t, std::string> index;

  Tile build(int level, int x, int y, double x0, double y0, double side, double err, std::vector<std::size_t> members,
             double zmin_parent, double zmax_parent) {
    Tile t;
    t.level = level;
    t.x = x;
    t.y = y;
    t.id = tile_id(level, x, y);
    t.geometric_error = err;
    for (auto i : members) t.building_ids.push_back(buildings[i].id);
    std::sort(t.building_ids.begin(), t.building_ids.end());

    geo::Box geom = geo::Box::empty();
    for (auto i : members) geom.expand(bounds[i]);
    const double zmin = members.empty() ? zmin_parent : geom.zmin;
    const double zmax = members.empty() ? zmax_parent : geom.zmax;
    t.bbox = {x0, y0, zmin, x0 + side, y0 + side, zmax};
    t.bbox.expand(geom);

    if (!members.empty()) t.content_uri = content_uri_for(t.id);
    if (members.size() > params.max_per_leaf && level < params.max_depth) {
      const double half = side / 2, mx = x0 + half, my = y0 + half;
      std::vector<std::size_t> quad[4];
      for (auto i : members) {
        const int qx = centroids[i].x < mx ? 0 : 1;
        const int qy = centroids[i].y < my ? 0 : 1;
        quad[qy * 2 + qx].push_back(i);
      }
      for (int q = 0; q < 4; ++q) {
        const int qx = q % 2, qy = q / 2;
        t.children.push_back(build(level + 1, 2 * x + qx, 2 * y + qy, x0 + qx * half, y0 + qy * half, half, err / 2,
                                   std::move(quad[q]), zmin, zmax));
        t.bbox.expand(t.children.back().bbox);  // guards against rounding in the quadrant edges
      }
    } else {
      for (auto i : members) index[buildings[i].id] = t.id;
    }
    return t;
  }
};

}  // namespace detail

/// Quadtree over building footprint centroids. Leaves carry LOD2 content,
/// interior tiles LOD1 blocks of every building below them.
inline Tileset build_tileset(const std::vector<scene::Lod2Building>& buildings, const geo::SceneAnchor& anchor,
                             const TilingParams& params = {}) {
  if (buildings.empty()) throw Error(Errc::empty_scene, "cannot tile an empty scene");
  if (params.max_per_leaf < 1 || params.max_depth < 0) throw Error(Errc::validation, "bad tiling parameters");
  detail::Builder b{buildings, params, {}, {}, {}};
  geo::Box all = geo::Box::empty();
  for (const auto& bl : buildings) {
    b.centroids.push_back(geo::polygon_centroid(bl.footprint.polygon));
    b.bounds.push_back(payload_bounds(bl.closed_mesh()));
    all.expand(b.bounds.back());
  }
  const double side = std::max({all.xmax - all.xmin, all.ymax - all.ymin, 1.0});
  const double x0 = (all.xmin + all.xmax) / 2 - side / 2;
  const double y0 = (all.ymin + all.ymax) / 2 - side / 2;
  std::vector<std::size_t> members(buildings.size());
  for (std::size_t i = 0; i < members.size(); ++i) members[i] = i;

  Tileset ts;
  ts.anchor = anchor;
  ts.root = b.build(0, 0, 0, x0, y0, side, std::sqrt(2.0) * side, std::move(members), all.zmin, all.zmax);
  ts.building_index = std::move(b.index);
  return ts;
}

/// Calls fn(tile) for every tile, parents before children.
template <typename F>
void for_each_tile(const Tile& t, F&& fn) {
  fn(t);
  for (const auto& c : t.children) for_each_tile(c, fn);
}

inline const Tile* find_tile(const Tile& root, const std::string& id) {
  const Tile* found = nullptr;
  for_each_tile(root, [&](const Tile& t) {
    if (!found && t.id == id) found = &t;
  });
  return found;
}

inline std::map<std::uint64_t, const scene::Lod2Building*> index_buildings(const std::vector<scene::Lod2Building>& bs) {
  std::map<std::uint64_t, const scene::Lod2Building*> m;
  for (const auto& b : bs) m[b.id] = &b;
  return m;
}

/// Mesh payload for a tile: LOD2 closed meshes on leaves, LOD1 blocks on
/// interior tiles. Attributes are a JSON object keyed by building id.
inline TilePayload tile_payload(const Tile& t, const std::map<std::uint64_t, const scene::Lod2Building*>& by_id) {
  TilePayload p;
  nlohmann::ordered_json attrs = nlohmann::ordered_json::object();
  for (auto id : t.building_ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw Error(Errc::not_found, "building " + std::to_string(id) + " missing for tile " + t.id);
    const auto& b = *it->second;
    const geo::Mesh m = t.is_leaf() ? b.closed_mesh() : scene::lod1_mesh(scene::simplify_to_lod1(b));
    const auto base = static_cast<std::uint32_t>(p.vertices.size());
    for (const auto& v : m.vertices)
      p.vertices.push_back({static_cast<float>(v.x), static_cast<float>(v.y), static_cast<float>(v.z)});
    TileFeature f{id, static_cast<std::uint32_t>(p.indices.size()), static_cast<std::uint32_t>(m.indices.size())};
    for (auto i : m.indices) p.indices.push_back(base + i);
    p.features.push_back(f);
    attrs[std::to_string(id)] = {{"county", b.attributes.county},
                                 {"municipality", b.attributes.municipality},
                                 {"hazard_tags", b.attributes.hazard_tags},
                                 {"lod", t.is_leaf() ? 2 : 1}};
  }
  p.attributes = attrs.empty() ? std::string() : attrs.dump();
  return p;
}

}  // namespace twin::tiling
