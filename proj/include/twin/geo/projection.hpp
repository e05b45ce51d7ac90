#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "twin/error.hpp"
#include "twin/geo/types.hpp"

namespace twin::geo {

/// Spherical Web Mercator radius.
inline constexpr double kMercatorRadius = 6378137.0;
/// Mean Earth radius used by the local scene frame.
inline constexpr double kLocalRadius = 6371008.8;
/// Latitude at which Web Mercator y reaches +-pi*R.
inline constexpr double kMercatorMaxLat = 85.051129;
/// Maximum distance from the anchor for which the scene frame is valid.
inline constexpr double kSceneMaxDistance = 50000.0;

inline constexpr double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline constexpr double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

struct LonLat {
  double lon = 0.0;
  double lat = 0.0;
};

inline Vec2 lonlat_to_mercator(double lon, double lat) {
  if (!(std::abs(lat) < kMercatorMaxLat) || !std::isfinite(lon)) {
    throw Error(Errc::domain, "latitude " + std::to_string(lat) + " outside Web Mercator range");
  }
  const double x = kMercatorRadius * deg2rad(lon);
  // atanh(sin(lat)) == ln(tan(pi/4 + lat/2)), and is exactly zero on the equator
  const double y = kMercatorRadius * std::atanh(std::sin(deg2rad(lat)));
  return {x, y};
}

inline LonLat mercator_to_lonlat(double x, double y) {
  const double lon = rad2deg(x / kMercatorRadius);
  const double lat = rad2deg(2.0 * std::atan(std::exp(y / kMercatorRadius)) - std::numbers::pi / 2.0);
  return {lon, lat};
}

/// Geographic origin of the planar scene frame.
struct SceneAnchor {
  double lon0 = 0.0;
  double lat0 = 0.0;
  std::string description;

  void validate() const {
    if (!(lon0 >= -180.0 && lon0 <= 180.0) || !(lat0 > -90.0 && lat0 < 90.0)) {
      throw Error(Errc::validation, "scene anchor out of range");
    }
  }
};

/// Local equirectangular projection about the anchor, without the range check.
inline Vec2 lonlat_to_scene_unchecked(const SceneAnchor& anchor, double lon, double lat) {
  return {kLocalRadius * deg2rad(lon - anchor.lon0) * std::cos(deg2rad(anchor.lat0)),
          kLocalRadius * deg2rad(lat - anchor.lat0)};
}

/// Local equirectangular projection about the anchor.
inline Vec2 lonlat_to_scene(const SceneAnchor& anchor, double lon, double lat) {
  const auto [x, y] = lonlat_to_scene_unchecked(anchor, lon, lat);
  if (!(std::hypot(x, y) <= kSceneMaxDistance)) {
    throw Error(Errc::domain, "point lies more than 50 km from the scene anchor");
  }
  return {x, y};
}

inline LonLat scene_to_lonlat(const SceneAnchor& anchor, double x, double y) {
  if (!(std::hypot(x, y) <= kSceneMaxDistance)) {
    throw Error(Errc::domain, "point lies more than 50 km from the scene anchor");
  }
  const double lon = anchor.lon0 + rad2deg(x / (kLocalRadius * std::cos(deg2rad(anchor.lat0))));
  const double lat = anchor.lat0 + rad2deg(y / kLocalRadius);
  return {lon, lat};
}

}  // namespace twin::geo
