#pragma once

// Scenario grid of flood-depth rasters and exposure of buildings, roads and
// point assets to a given depth surface.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "twin/error.hpp"
#include "twin/flood/features.hpp"
#include "twin/geo/ascii_grid.hpp"
#include "twin/geo/polygon.hpp"
#include "twin/geo/raster.hpp"
#include "twin/scene/building.hpp"

namespace twin::flood {

using ScenarioKey = std::pair<int, std::string>;  // (year, weather label)

/// Time horizons × weather conditions, with one depth raster per cell.
/// Labels and years come from configuration.
struct ScenarioGrid {
  std::vector<int> time_horizons;
  std::vector<std::string> weather_conditions;
  std::map<ScenarioKey, geo::Raster> rasters;

  /// Every (year, weather) pair, year-major in configured order.
  std::vector<ScenarioKey> scenarios() const {
    std::vector<ScenarioKey> out;
    for (int y : time_horizons)
      for (const auto& w : weather_conditions) out.emplace_back(y, w);
    return out;
  }
  std::size_t size() const { return time_horizons.size() * weather_conditions.size(); }

  bool contains(int year, const std::string& weather) const {
    return std::find(time_horizons.begin(), time_horizons.end(), year) != time_horizons.end() &&
           std::find(weather_conditions.begin(), weather_conditions.end(), weather) != weather_conditions.end();
  }

  const geo::Raster& raster(int year, const std::string& weather) const {
    const auto it = rasters.find({year, weather});
    if (!contains(year, weather) || it == rasters.end())
      throw Error(Errc::not_found, "no scenario " + std::to_string(year) + "/" + weather);
    return it->second;
  }

  /// Checks the axes: non-empty, no duplicates, labels usable in URLs and paths.
  void validate_axes() const {
    if (time_horizons.empty() || weather_conditions.empty())
      throw Error(Errc::config, "scenario grid needs at least one year and one weather condition");
    if (std::set<int>(time_horizons.begin(), time_horizons.end()).size() != time_horizons.size())
      throw Error(Errc::config, "duplicate year in scenario grid");
    if (std::set<std::string>(weather_conditions.begin(), weather_conditions.end()).size() != weather_conditions.size())
      throw Error(Errc::config, "duplicate weather label in scenario grid");
    for (const auto& w : weather_conditions) {
      const bool ok = !w.empty() && std::all_of(w.begin(), w.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '-' || c == '_';
      });
      if (!ok) throw Error(Errc::config, "weather label '" + w + "' must be letters, digits, '-' or '_'");
    }
  }

  /// Axes valid and every scenario has a raster on the `dem` grid.
  void validate(const geo::Raster& dem) const {
    validate_axes();
    for (const auto& [y, w] : scenarios()) {
      const auto& r = raster(y, w);
      if (!r.same_geometry(dem))
        throw Error(Errc::alignment, "depth raster " + std::to_string(y) + "/" + w + " is not on the DEM grid");
    }
  }
};

struct DepthRaster {
  geo::Raster raster;
  std::size_t clamped_negative = 0;  // cells below zero that were set to 0
};

/// Reads a model depth raster and checks it lies on `expected`'s grid.
inline DepthRaster load_depth_raster(std::istream& in, const geo::Raster& expected) {
  DepthRaster out{geo::read_ascii_grid(in), 0};
  auto& r = out.raster;
  if (!r.same_geometry(expected)) {
    throw Error(Errc::alignment, "depth raster grid (" + std::to_string(r.ncols) + "x" + std::to_string(r.nrows) +
                                     " at " + geo::format_double(r.xll) + "," + geo::format_double(r.yll) +
                                     ", cell " + geo::format_double(r.cell) + ") differs from the DEM grid");
  }
  for (auto& v : r.values) {
    if (!r.is_nodata(v) && v < 0) {
      v = 0;
      ++out.clamped_negative;
    }
  }
  return out;
}

/// Depth of a level water surface at `wse` over the DEM.
inline geo::Raster uniform_flood(const geo::Raster& dem, double wse) {
  geo::Raster r = dem;
  for (auto& v : r.values)
    if (!dem.is_nodata(v)) v = std::max(0.0, wse - v);
  return r;
}

struct Thresholds {
  double flood_threshold = 0.1;  // meters of water that count as affected
  double sample_spacing = 1.0;   // road sampling step, meters
};

struct BuildingExposure {
  std::uint64_t building_id = 0;
  double max_depth = 0;
  double mean_depth = 0;
  bool flooded = false;
  double coverage = 0;   // share of sampled cells with data
  bool flagged = false;  // no data under the footprint

  friend bool operator==(const BuildingExposure&, const BuildingExposure&) = default;
};

/// Samples the depth at every grid cell center inside the footprint. Lattice
/// cells beyond the raster edge count as samples without data.
inline BuildingExposure assess_building(const scene::Lod2Building& b, const geo::Raster& depth,
                                        double flood_threshold = 0.1) {
  BuildingExposure e;
  e.building_id = b.id;
  const auto& poly = b.footprint.polygon;
  geo::Vec2 lo, hi;
  geo::ring_bounds(poly.exterior, lo, hi);
  const int c0 = static_cast<int>(std::floor((lo.x - depth.xll) / depth.cell));
  const int c1 = static_cast<int>(std::floor((hi.x - depth.xll) / depth.cell));
  const int s0 = static_cast<int>(std::floor((lo.y - depth.yll) / depth.cell));
  const int s1 = static_cast<int>(std::floor((hi.y - depth.yll) / depth.cell));
  std::size_t sampled = 0, with_data = 0;
  double sum = 0;
  auto take = [&](std::optional<double> v) {
    ++sampled;
    if (!v) return;
    ++with_data;
    sum += *v;
    e.max_depth = std::max(e.max_depth, *v);
  };
  for (int s = s0; s <= s1; ++s) {
    for (int c = c0; c <= c1; ++c) {
      const geo::Vec2 p{depth.xll + (c + 0.5) * depth.cell, depth.yll + (s + 0.5) * depth.cell};
      if (!geo::point_in_polygon(p, poly)) continue;
      const bool inside = c >= 0 && c < depth.ncols && s >= 0 && s < depth.nrows;
      take(inside ? depth.nearest(p.x, p.y) : std::nullopt);
    }
  }
  if (sampled == 0) {
    const auto ctr = geo::polygon_centroid(poly);
    take(depth.nearest(ctr.x, ctr.y));
  }
  e.coverage = static_cast<double>(with_data) / static_cast<double>(sampled);
  e.mean_depth = with_data ? std::min(sum / static_cast<double>(with_data), e.max_depth) : 0.0;
  e.flagged = with_data == 0;
  e.flooded = with_data > 0 && e.max_depth >= flood_threshold;
  return e;
}

struct RoadExposure {
  std::string road_id;
  double length = 0;
  double flooded_length = 0;
  double fraction = 0;
  double max_depth = 0;
  bool flagged = false;  // no sample had data

  friend bool operator==(const RoadExposure&, const RoadExposure&) = default;
};

/// Arc-length positions 0, spacing, 2*spacing, ... plus the far endpoint.
inline std::vector<geo::Vec2> sample_polyline(const geo::Polyline& line, double spacing) {
  const double total = line.length();
  std::vector<geo::Vec2> out;
  std::size_t seg = 0;
  double seg_start = 0;
  const auto n = static_cast<std::size_t>(std::floor(total / spacing));
  for (std::size_t k = 0; k <= n; ++k) {
    const double s = static_cast<double>(k) * spacing;
    while (seg + 2 < line.vertices.size() &&
           seg_start + geo::distance(line.vertices[seg], line.vertices[seg + 1]) < s) {
      seg_start += geo::distance(line.vertices[seg], line.vertices[seg + 1]);
      ++seg;
    }
    const auto a = line.vertices[seg], b = line.vertices[seg + 1];
    const double len = geo::distance(a, b);
    const double t = len > 0 ? std::clamp((s - seg_start) / len, 0.0, 1.0) : 0.0;
    out.push_back(a + t * (b - a));
  }
  if (static_cast<double>(n) * spacing < total) out.push_back(line.vertices.back());
  return out;
}

inline RoadExposure assess_road(const RoadFeature& road, const geo::Raster& depth, double sample_spacing = 1.0,
                                double flood_threshold = 0.1) {
  if (!(sample_spacing > 0)) throw Error(Errc::validation, "sample spacing must be positive");
  RoadExposure e;
  e.road_id = road.id;
  e.length = road.line.length();
  if (road.line.vertices.size() < 2 || !(e.length > 0))
    throw Error(Errc::degenerate_input, "road " + road.id + " has zero length");
  const auto samples = sample_polyline(road.line, sample_spacing);
  std::size_t flooded = 0, with_data = 0;
  for (const auto& p : samples) {
    const auto v = depth.bilinear(p.x, p.y);
    if (!v) continue;
    ++with_data;
    e.max_depth = std::max(e.max_depth, *v);
    if (*v >= flood_threshold) ++flooded;
  }
  e.fraction = static_cast<double>(flooded) / static_cast<double>(samples.size());
  e.flooded_length = e.fraction * e.length;
  e.flagged = with_data == 0;
  return e;
}

struct CategoryCount {
  std::string name;
  std::size_t total = 0;
  std::size_t affected = 0;
  friend bool operator==(const CategoryCount&, const CategoryCount&) = default;
};

/// Upper edges of the flooded-building depth bins; the last bin is open.
inline constexpr double kDepthBinEdges[] = {0.3, 1.0, 2.0, 3.0};

struct VulnerabilitySummary {
  int year = 0;
  std::string weather;
  std::vector<CategoryCount> categories;  // sorted by name
  struct {
    std::size_t total = 0, flooded = 0;
    double max_depth = 0;
  } buildings;
  struct {
    double total_length = 0, flooded_length = 0, pct = 0;
    std::size_t segments_total = 0, segments_affected = 0;
  } roads;
  std::array<std::size_t, 5> depth_histogram{};
};

/// Aggregates exposures for one depth surface. Per-building results are
/// returned through `exposures` when given.
inline VulnerabilitySummary summarize_depth(const geo::Raster& depth, const std::vector<scene::Lod2Building>& buildings,
                                            const std::vector<RoadFeature>& roads,
                                            const std::vector<AssetFeature>& assets, const Thresholds& th,
                                            std::vector<BuildingExposure>* exposures = nullptr) {
  VulnerabilitySummary s;
  std::map<std::string, CategoryCount> cats;
  for (const auto& a : assets) {
    auto& c = cats[a.category];
    c.name = a.category;
    ++c.total;
    const auto v = depth.bilinear(a.position.x, a.position.y);
    if (v && *v >= th.flood_threshold) ++c.affected;
  }
  for (auto& [_, c] : cats) s.categories.push_back(c);

  for (const auto& b : buildings) {
    const auto e = assess_building(b, depth, th.flood_threshold);
    ++s.buildings.total;
    if (e.flooded) {
      ++s.buildings.flooded;
      const auto bin = std::upper_bound(std::begin(kDepthBinEdges), std::end(kDepthBinEdges), e.max_depth) -
                       std::begin(kDepthBinEdges);
      ++s.depth_histogram[static_cast<std::size_t>(bin)];
    }
    s.buildings.max_depth = std::max(s.buildings.max_depth, e.max_depth);
    if (exposures) exposures->push_back(e);
  }

  for (const auto& r : roads) {
    const auto e = assess_road(r, depth, th.sample_spacing, th.flood_threshold);
    ++s.roads.segments_total;
    if (e.flooded_length > 0) ++s.roads.segments_affected;
    s.roads.total_length += e.length;
    s.roads.flooded_length += e.flooded_length;
  }
  s.roads.pct = s.roads.total_length > 0 ? 100.0 * s.roads.flooded_length / s.roads.total_length : 0.0;
  return s;
}

inline VulnerabilitySummary summarize_scenario(const ScenarioGrid& grid, int year, const std::string& weather,
                                               const std::vector<scene::Lod2Building>& buildings,
                                               const std::vector<RoadFeature>& roads,
                                               const std::vector<AssetFeature>& assets, const Thresholds& th = {},
                                               std::vector<BuildingExposure>* exposures = nullptr) {
  auto s = summarize_depth(grid.raster(year, weather), buildings, roads, assets, th, exposures);
  s.year = year;
  s.weather = weather;
  return s;
}

/// Exposure figures as JSON, without the scenario identity.
inline nlohmann::ordered_json summary_body_json(const VulnerabilitySummary& s) {
  nlohmann::ordered_json cats = nlohmann::ordered_json::array();
  for (const auto& c : s.categories) cats.push_back({{"name", c.name}, {"total", c.total}, {"affected", c.affected}});
  return {{"categories", std::move(cats)},
          {"buildings", {{"total", s.buildings.total}, {"flooded", s.buildings.flooded}, {"max_depth", s.buildings.max_depth}}},
          {"roads",
           {{"total_length", s.roads.total_length},
            {"flooded_length", s.roads.flooded_length},
            {"pct", s.roads.pct},
            {"segments_total", s.roads.segments_total},
            {"segments_affected", s.roads.segments_affected}}},
          {"depth_histogram",
           {{"bins_m", {0.0, 0.3, 1.0, 2.0, 3.0}}, {"counts", s.depth_histogram}}}};
}

inline nlohmann::ordered_json summary_json(const VulnerabilitySummary& s) {
  nlohmann::ordered_json j{{"year", s.year}, {"weather", s.weather}};
  const auto body = summary_body_json(s);
  for (const auto& [k, v] : body.items()) j[k] = v;
  return j;
}

}  // namespace twin::flood
