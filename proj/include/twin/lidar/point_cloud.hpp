#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "twin/geo/types.hpp"

namespace twin::lidar {

enum class PointClass : std::uint8_t { Unclassified, Ground, Building, Noise };

struct LidarPoint {
  geo::ScenePoint p;
  PointClass cls = PointClass::Unclassified;
  std::optional<std::uint16_t> intensity;

  friend bool operator==(const LidarPoint&, const LidarPoint&) = default;
};

struct PointCloud {
  std::vector<LidarPoint> points;
  std::array<double, 3> scale{0.01, 0.01, 0.01};
  std::array<double, 3> offset{0.0, 0.0, 0.0};

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  std::size_t count(PointClass c) const {
    std::size_t n = 0;
    for (const auto& p : points) n += p.cls == c;
    return n;
  }

  std::vector<geo::ScenePoint> positions(PointClass c) const {
    std::vector<geo::ScenePoint> out;
    for (const auto& p : points)
      if (p.cls == c) out.push_back(p.p);
    return out;
  }
};

}  // namespace twin::lidar
