#pragma once

// Deterministic synthetic coastal town: gently sloped terrain, rectangular
// flat- and gable-roofed buildings, scattered trees, a street grid and
// critical assets, sampled as an airborne LiDAR cloud with ground truth.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "twin/error.hpp"
#include "twin/flood/features.hpp"
#include "twin/geo/polygon.hpp"
#include "twin/lidar/point_cloud.hpp"

namespace twin::synth {

/// Portable uniform/normal draws on top of mt19937_64 (the standard
/// distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2 * std::numbers::pi * u2);
  }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

enum class RoofType { Flat, Gable };
enum class TruthLabel : std::uint8_t { Ground, Roof, Tree };

struct TruthBuilding {
  std::uint64_t id = 0;
  geo::Vec2 center;
  double width = 0;   // across the ridge
  double length = 0;  // along the ridge
  double angle = 0;   // radians, direction of the length axis
  RoofType roof = RoofType::Flat;
  double ground_z = 0;  // terrain at the center
  double eave_z = 0;
  double ridge_z = 0;  // equals eave_z for flat roofs
  geo::Polygon footprint;

  /// Local (along, across) coordinates of a plan point.
  geo::Vec2 to_local(geo::Vec2 p) const {
    const geo::Vec2 d = p - center;
    const double c = std::cos(angle), s = std::sin(angle);
    return {d.x * c + d.y * s, -d.x * s + d.y * c};
  }
  bool contains(geo::Vec2 p) const {
    const auto l = to_local(p);
    return std::abs(l.x) <= length / 2 && std::abs(l.y) <= width / 2;
  }
  double roof_z(geo::Vec2 p) const {
    if (roof == RoofType::Flat) return eave_z;
    const double across = std::abs(to_local(p).y);
    return eave_z + (ridge_z - eave_z) * (1.0 - across / (width / 2));
  }
  /// Ridge segment endpoints in plan (gable roofs).
  std::pair<geo::Vec2, geo::Vec2> ridge() const {
    const geo::Vec2 dir{std::cos(angle), std::sin(angle)};
    return {center - (length / 2) * dir, center + (length / 2) * dir};
  }
};

struct TruthTree {
  geo::Vec2 center;
  double radius = 0;
  double height = 0;  // above ground
};

struct AdaptationFeature {
  std::string id;
  std::string name;
  std::string kind;
  geo::Polygon area;
};

struct SynthParams {
  std::uint64_t seed = 7;
  int n_buildings = 50;
  double extent_m = 250.0;
  double density = 8.0;  // points per m^2
  double noise_sigma = 0.03;
  int n_trees = -1;  // -1: derived from n_buildings
  int n_assets = 40;
};

struct SynthScene {
  SynthParams params;
  lidar::PointCloud cloud;
  std::vector<TruthLabel> labels;  // parallel to cloud.points
  std::vector<TruthBuilding> buildings;
  std::vector<TruthTree> trees;
  std::vector<flood::AssetFeature> assets;
  std::vector<flood::RoadFeature> roads;
  std::vector<AdaptationFeature> adaptations;

  double half() const { return params.extent_m / 2; }
};

inline const std::vector<std::string>& asset_categories() {
  static const std::vector<std::string> cats{"communications", "emergency-services", "energy", "transportation",
                                             "water-sewer"};
  return cats;
}

/// Terrain elevation of the synthetic town; rises gently inland (north-east).
inline double terrain_z(double x, double y, double extent) {
  const double h = extent / 2;
  return 1.0 + 0.004 * (x + h) + 0.002 * (y + h) + 0.25 * std::sin(x / 40.0) * std::cos(y / 55.0);
}

inline SynthScene generate(const SynthParams& params) {
  if (params.n_buildings < 0 || !(params.extent_m > 0) || !(params.density > 0)) {
    throw Error(Errc::validation, "synth needs n_buildings >= 0, extent > 0, density > 0");
  }
  SynthScene scene;
  scene.params = params;
  Rng rng(params.seed);
  const double E = params.extent_m;
  const double H = E / 2;
  auto terrain = [E](double x, double y) { return terrain_z(x, y, E); };

  // street grid: north-south and east-west polylines with a mid-block jog
  const int ns_streets = std::max(1, static_cast<int>(std::round(E / 90.0)));
  const int ew_streets = std::max(1, static_cast<int>(std::round(E / 120.0)));
  int road_no = 0;
  for (int k = 0; k < ns_streets; ++k) {
    const double x = -H + E * (k + 0.5) / ns_streets;
    const double jog = rng.uniform(-3, 3);
    flood::RoadFeature r;
    r.id = "R" + std::to_string(++road_no);
    r.name = "North-South Street " + std::to_string(k + 1);
    r.line.vertices = {{x, -H}, {x + jog, 0.0}, {x, H}};
    scene.roads.push_back(r);
  }
  for (int k = 0; k < ew_streets; ++k) {
    const double y = -H + E * (k + 0.5) / ew_streets;
    const double jog = rng.uniform(-3, 3);
    flood::RoadFeature r;
    r.id = "R" + std::to_string(++road_no);
    r.name = "East-West Avenue " + std::to_string(k + 1);
    r.line.vertices = {{-H, y}, {0.0, y + jog}, {H, y}};
    scene.roads.push_back(r);
  }
  auto road_distance = [&](geo::Vec2 p) {
    double d = INFINITY;
    for (const auto& r : scene.roads)
      for (std::size_t i = 1; i < r.line.vertices.size(); ++i)
        d = std::min(d, geo::point_segment_distance(p, r.line.vertices[i - 1], r.line.vertices[i]));
    return d;
  };

  // buildings, placed by rejection sampling with clearance to roads and neighbours
  for (int b = 0; b < params.n_buildings; ++b) {
    bool placed = false;
    for (int attempt = 0; attempt < 20000 && !placed; ++attempt) {
      TruthBuilding tb;
      tb.width = rng.uniform(8.0, 14.0);
      tb.length = rng.uniform(tb.width, 18.0);
      tb.angle = rng.uniform(0.0, std::numbers::pi);
      tb.roof = (rng.next() % 2 == 0) ? RoofType::Flat : RoofType::Gable;
      const double radius = 0.5 * std::hypot(tb.width, tb.length);
      tb.center = {rng.uniform(-H + radius + 2, H - radius - 2), rng.uniform(-H + radius + 2, H - radius - 2)};
      const double eave_h = rng.uniform(3.5, 6.0);
      const double rise = rng.uniform(1.5, std::min(3.0, 0.6 * tb.width / 2));
      if (road_distance(tb.center) < radius + 3.0) continue;
      bool clear = true;
      for (const auto& o : scene.buildings) {
        const double ro = 0.5 * std::hypot(o.width, o.length);
        if (geo::distance(o.center, tb.center) < radius + ro + 5.0) {
          clear = false;
          break;
        }
      }
      if (!clear) continue;
      tb.id = static_cast<std::uint64_t>(b + 1);
      tb.ground_z = terrain(tb.center.x, tb.center.y);
      tb.eave_z = tb.ground_z + eave_h;
      tb.ridge_z = tb.roof == RoofType::Gable ? tb.eave_z + rise : tb.eave_z;
      const geo::Vec2 u{std::cos(tb.angle), std::sin(tb.angle)};
      const geo::Vec2 v{-u.y, u.x};
      const double a = tb.length / 2, w = tb.width / 2;
      tb.footprint.exterior = {tb.center - a * u - w * v, tb.center + a * u - w * v, tb.center + a * u + w * v,
                               tb.center - a * u + w * v};
      tb.footprint.exterior.push_back(tb.footprint.exterior.front());
      scene.buildings.push_back(tb);
      placed = true;
    }
    if (!placed) throw Error(Errc::validation, "cannot place " + std::to_string(params.n_buildings) + " buildings");
  }

  const int n_trees = params.n_trees >= 0 ? params.n_trees : params.n_buildings / 5 + 3;
  for (int t = 0; t < n_trees; ++t) {
    for (int attempt = 0; attempt < 20000; ++attempt) {
      TruthTree tree{{rng.uniform(-H + 8, H - 8), rng.uniform(-H + 8, H - 8)}, rng.uniform(2.5, 4.0),
                     rng.uniform(6.0, 10.0)};
      if (road_distance(tree.center) < tree.radius + 2.0) continue;
      bool clear = true;
      for (const auto& b : scene.buildings)
        if (geo::distance(b.center, tree.center) < 0.5 * std::hypot(b.width, b.length) + tree.radius + 4.0) clear = false;
      for (const auto& o : scene.trees)
        if (geo::distance(o.center, tree.center) < o.radius + tree.radius + 2.0) clear = false;
      if (!clear) continue;
      scene.trees.push_back(tree);
      break;
    }
  }

  auto in_any_building = [&](geo::Vec2 p) {
    for (const auto& b : scene.buildings)
      if (geo::distance(b.center, p) <= 0.5 * std::hypot(b.width, b.length) + 2 && b.contains(p)) return true;
    return false;
  };
  const auto& cats = asset_categories();
  for (int a = 0; a < params.n_assets; ++a) {
    geo::Vec2 p;
    do {
      p = {rng.uniform(-H + 2, H - 2), rng.uniform(-H + 2, H - 2)};
    } while (in_any_building(p));
    flood::AssetFeature f;
    char id[16];
    std::snprintf(id, sizeof(id), "A%03d", a + 1);
    f.id = id;
    f.category = cats[static_cast<std::size_t>(a) % cats.size()];
    f.name = f.category + " asset " + std::to_string(a / static_cast<int>(cats.size()) + 1);
    f.position = p;
    scene.assets.push_back(f);
  }

  // adaptation overlays: shoreline strip along the low southern edge and a
  // stormwater park in the lowest quadrant
  {
    AdaptationFeature shore{"ADP1", "Living shoreline", "living-shoreline", {}};
    shore.area.exterior = {{-H, -H}, {H, -H}, {H, -H + 6}, {-H, -H + 6}, {-H, -H}};
    AdaptationFeature park{"ADP2", "Stormwater park", "green-infrastructure", {}};
    park.area.exterior = {{-H + 10, -H + 12}, {-H + 40, -H + 12}, {-H + 40, -H + 35}, {-H + 10, -H + 35}, {-H + 10, -H + 12}};
    scene.adaptations = {shore, park};
  }

  // point sampling: one uniform draw per point, labels by what the pulse hits
  const auto n_points = static_cast<std::size_t>(std::llround(params.density * E * E));
  // bucket buildings and trees on a coarse grid for lookup
  const double bucket = 20.0;
  const int nb = static_cast<int>(std::ceil(E / bucket));
  std::vector<std::vector<int>> b_buckets(static_cast<std::size_t>(nb) * nb), t_buckets(static_cast<std::size_t>(nb) * nb);
  auto bucket_range = [&](geo::Vec2 c, double r, auto&& fn) {
    const int i0 = std::clamp(static_cast<int>((c.x - r + H) / bucket), 0, nb - 1);
    const int i1 = std::clamp(static_cast<int>((c.x + r + H) / bucket), 0, nb - 1);
    const int j0 = std::clamp(static_cast<int>((c.y - r + H) / bucket), 0, nb - 1);
    const int j1 = std::clamp(static_cast<int>((c.y + r + H) / bucket), 0, nb - 1);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) fn(static_cast<std::size_t>(j) * nb + i);
  };
  for (std::size_t i = 0; i < scene.buildings.size(); ++i) {
    const auto& b = scene.buildings[i];
    bucket_range(b.center, 0.5 * std::hypot(b.width, b.length), [&](std::size_t k) { b_buckets[k].push_back(static_cast<int>(i)); });
  }
  for (std::size_t i = 0; i < scene.trees.size(); ++i)
    bucket_range(scene.trees[i].center, scene.trees[i].radius, [&](std::size_t k) { t_buckets[k].push_back(static_cast<int>(i)); });

  scene.cloud.scale = {0.001, 0.001, 0.001};
  scene.cloud.offset = {0.0, 0.0, 0.0};
  scene.cloud.points.reserve(n_points);
  scene.labels.reserve(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    const geo::Vec2 p{rng.uniform(-H, H), rng.uniform(-H, H)};
    const double canopy_draw = rng.uniform();
    const double depth_draw = std::abs(rng.normal());
    const double noise = params.noise_sigma * rng.normal();
    const int bi = std::clamp(static_cast<int>((p.x + H) / bucket), 0, nb - 1);
    const int bj = std::clamp(static_cast<int>((p.y + H) / bucket), 0, nb - 1);
    const std::size_t k = static_cast<std::size_t>(bj) * nb + bi;
    double z = terrain(p.x, p.y);
    TruthLabel label = TruthLabel::Ground;
    for (int b : b_buckets[k]) {
      if (scene.buildings[b].contains(p)) {
        z = scene.buildings[b].roof_z(p);
        label = TruthLabel::Roof;
        break;
      }
    }
    if (label == TruthLabel::Ground) {
      for (int t : t_buckets[k]) {
        const auto& tree = scene.trees[t];
        const double d = geo::distance(p, tree.center);
        if (d > tree.radius || canopy_draw > 0.75) continue;
        // crown above a 2.5 m trunk, returns scattered through the foliage
        const double top = 2.5 + (tree.height - 2.5) * std::sqrt(1.0 - (d / tree.radius) * (d / tree.radius));
        z += std::max(top - 1.2 * depth_draw, 0.5);
        label = TruthLabel::Tree;
        break;
      }
    }
    lidar::LidarPoint lp;
    lp.p = {p.x, p.y, z + noise};
    scene.cloud.points.push_back(lp);
    scene.labels.push_back(label);
  }
  return scene;
}

}  // namespace twin::synth
