#pragma once

// Small synthetic scenes and tiling property oracles shared by the unit
// tests and the acceptance runner.

#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "twin/pipeline/synth.hpp"
#include "twin/scene/building.hpp"
#include "twin/tiling/codec.hpp"
#include "twin/tiling/manifest.hpp"
#include "twin/tiling/select.hpp"
#include "twin/tiling/tileset.hpp"

namespace twin::testing {

inline geo::Polygon rotated_rect(geo::Vec2 c, double length, double width, double angle) {
  const geo::Vec2 u{std::cos(angle), std::sin(angle)}, v{-u.y, u.x};
  const double a = length / 2, w = width / 2;
  geo::Polygon p;
  p.exterior = {c - a * u - w * v, c + a * u - w * v, c + a * u + w * v, c - a * u + w * v};
  p.exterior.push_back(p.exterior.front());
  return p;
}

/// Rectangular building with a flat (ridge == eave) or gable roof, sampled
/// on a 1.5 m lattice and reconstructed over a flat DEM at `ground`.
inline scene::Lod2Building box_building(std::uint64_t id, geo::Vec2 c, double length, double width, double angle,
                                        double ground, double eave, double ridge) {
  const auto fp = rotated_rect(c, length, width, angle);
  const geo::Vec2 u{std::cos(angle), std::sin(angle)}, v{-u.y, u.x};
  std::vector<geo::ScenePoint> roof;
  for (double s = -length / 2 + 0.5; s <= length / 2 - 0.5; s += 1.5)
    for (double t = -width / 2 + 0.5; t <= width / 2 - 0.5; t += 1.5) {
      const auto p = c + s * u + t * v;
      const double z = eave + (ridge - eave) * (1 - std::abs(t) / (width / 2));
      roof.push_back({p.x, p.y, z});
    }
  geo::Vec2 lo, hi;
  geo::ring_bounds(fp.exterior, lo, hi);
  const auto dem = geo::Raster::filled(std::floor(lo.x) - 2, std::floor(lo.y) - 2, 1.0,
                                       static_cast<int>(hi.x - lo.x) + 6, static_cast<int>(hi.y - lo.y) + 6, ground);
  return scene::reconstruct_lod2({id, fp, geo::polygon_area(fp)}, roof, dem, {"Test County", "Test Town", {}});
}

/// `n` random buildings spread over a square of side `extent`.
inline std::vector<scene::Lod2Building> random_buildings(std::uint64_t seed, int n, double extent) {
  synth::Rng rng(seed);
  std::vector<scene::Lod2Building> out;
  for (int i = 0; i < n; ++i) {
    const double ground = rng.uniform(0, 3);
    const double eave = ground + rng.uniform(3, 8);
    const double ridge = rng.uniform() < 0.5 ? eave : eave + rng.uniform(1, 3);
    out.push_back(box_building(static_cast<std::uint64_t>(i + 1), {rng.uniform(0, extent), rng.uniform(0, extent)},
                               rng.uniform(6, 16), rng.uniform(5, 10), rng.uniform(0, std::numbers::pi), ground, eave,
                               ridge));
  }
  return out;
}

/// LOD2 models built straight from generator truth (no LiDAR involved).
inline std::vector<scene::Lod2Building> truth_buildings(const synth::SynthScene& s) {
  std::vector<scene::Lod2Building> out;
  for (const auto& b : s.buildings)
    out.push_back(box_building(b.id, b.center, b.length, b.width, b.angle, b.ground_z, b.eave_z, b.ridge_z));
  return out;
}

/// The generator's terrain sampled at cell centers over the whole scene.
inline geo::Raster terrain_dem(double extent, double cell = 1.0) {
  const int n = static_cast<int>(std::ceil(extent / cell));
  auto r = geo::Raster::filled(-extent / 2, -extent / 2, cell, n, n, 0.0);
  for (int row = 0; row < n; ++row)
    for (int col = 0; col < n; ++col) {
      const auto c = r.cell_center(col, row);
      r.at(col, row) = synth::terrain_z(c.x, c.y, extent);
    }
  return r;
}

inline std::map<std::uint64_t, const scene::Lod2Building*> index_by_id(const std::vector<scene::Lod2Building>& bs) {
  std::map<std::uint64_t, const scene::Lod2Building*> m;
  for (const auto& b : bs) m[b.id] = &b;
  return m;
}

struct TilingViolations {
  std::size_t containment = 0;
  std::size_t partition = 0;
  std::size_t error_halving = 0;
  std::size_t child_bbox = 0;
  std::size_t sse_monotonicity = 0;
  std::size_t determinism = 0;

  std::size_t total() const {
    return containment + partition + error_halving + child_bbox + sse_monotonicity + determinism;
  }
};

inline bool is_strict_ancestor(const std::string& a, const std::string& d) {
  int la, xa, ya, ld, xd, yd;
  std::sscanf(a.c_str(), "%d-%d-%d", &la, &xa, &ya);
  std::sscanf(d.c_str(), "%d-%d-%d", &ld, &xd, &yd);
  if (la >= ld) return false;
  const int shift = ld - la;
  return (xd >> shift) == xa && (yd >> shift) == ya;
}

inline std::string id_of_uri(const std::string& uri) { return uri.substr(6, uri.size() - 6 - 4); }

/// Scripted dolly from far outside the scene toward its center. Positions are
/// kept outside the scene's extent along the approach direction, where the
/// distance to every box shrinks monotonically.
inline std::vector<tiling::Camera> approach_cameras(const tiling::Tileset& ts, geo::ScenePoint dir, int steps = 40) {
  const auto& b = ts.root.bbox;
  const geo::ScenePoint center{(b.xmin + b.xmax) / 2, (b.ymin + b.ymax) / 2, (b.zmin + b.zmax) / 2};
  dir = (1.0 / geo::norm(dir)) * dir;
  double reach = 0;  // farthest projection of the root box onto the approach axis
  for (int k = 0; k < 8; ++k) {
    const geo::ScenePoint q{k & 1 ? b.xmax : b.xmin, k & 2 ? b.ymax : b.ymin, k & 4 ? b.zmax : b.zmin};
    reach = std::max(reach, geo::dot(q - center, dir));
  }
  const double diag = geo::norm(geo::ScenePoint{b.xmax - b.xmin, b.ymax - b.ymin, b.zmax - b.zmin});
  std::vector<tiling::Camera> cams;
  for (int i = 0; i < steps; ++i) {
    const double t = reach + 0.5 + (60 * diag) * std::pow(0.85, i);
    cams.push_back(tiling::Camera::look_at(center + t * dir, center));
  }
  return cams;
}

/// Checks every structural tiling property for one scene.
inline TilingViolations check_tiling(const std::vector<scene::Lod2Building>& buildings, const tiling::TilingParams& params,
                                     std::uint64_t seed) {
  TilingViolations v;
  const geo::SceneAnchor anchor{-83.03, 29.14, "test"};
  const auto ts = tiling::build_tileset(buildings, anchor, params);
  const auto by_id = index_by_id(buildings);

  std::multiset<std::uint64_t> leaf_ids;
  tiling::for_each_tile(ts.root, [&](const tiling::Tile& t) {
    if (t.content_uri) {
      const auto payload = tiling::decode_tile(tiling::encode_tile(tiling::tile_payload(t, by_id)));
      for (const auto& p : payload.vertices)
        if (!t.bbox.contains(geo::ScenePoint{p[0], p[1], p[2]}, 1e-6)) ++v.containment;
    } else if (!t.building_ids.empty()) {
      ++v.containment;  // a tile owning buildings must have content
    }
    if (t.is_leaf()) leaf_ids.insert(t.building_ids.begin(), t.building_ids.end());
    for (const auto& c : t.children) {
      if (c.geometric_error != t.geometric_error / 2) ++v.error_halving;
      if (!t.bbox.contains(c.bbox)) ++v.child_bbox;
    }
    if (!(t.geometric_error >= 0)) ++v.error_halving;
    if (!t.is_leaf() && t.children.size() != 4) ++v.partition;
  });
  std::set<std::uint64_t> unique(leaf_ids.begin(), leaf_ids.end());
  if (unique.size() != leaf_ids.size()) ++v.partition;
  for (const auto& b : buildings)
    if (!unique.count(b.id) || ts.building_index.count(b.id) != 1) ++v.partition;
  if (unique.size() != buildings.size()) ++v.partition;

  synth::Rng rng(seed);
  for (int path = 0; path < 3; ++path) {
    const geo::ScenePoint dir{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.2, 1.5)};
    std::vector<std::string> prev;
    for (const auto& cam : approach_cameras(ts, dir)) {
      const auto cur = tiling::select_tiles(ts, cam);
      for (const auto& c : cur)
        for (const auto& p : prev)
          if (is_strict_ancestor(id_of_uri(c), id_of_uri(p))) ++v.sse_monotonicity;
      prev = cur;
    }
  }

  const auto again = tiling::build_tileset(buildings, anchor, params);
  const auto m1 = tiling::tileset_manifest(ts);
  if (m1 != tiling::tileset_manifest(again)) ++v.determinism;
  if (tiling::tileset_manifest(tiling::parse_manifest(m1)) != m1) ++v.determinism;
  tiling::for_each_tile(ts.root, [&](const tiling::Tile& t) {
    if (!t.content_uri) return;
    const auto* t2 = tiling::find_tile(again.root, t.id);
    if (!t2 || tiling::encode_tile(tiling::tile_payload(t, by_id)) != tiling::encode_tile(tiling::tile_payload(*t2, by_id)))
      ++v.determinism;
  });
  return v;
}

}  // namespace twin::testing
