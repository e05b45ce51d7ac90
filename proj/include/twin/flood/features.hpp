#pragma once

#include <string>
#include <vector>

#include "twin/geo/polygon.hpp"

namespace twin::flood {

/// Point feature in a thematic category (e.g. "transportation").
struct AssetFeature {
  std::string id;
  std::string name;
  std::string category;
  geo::Vec2 position;
};

struct RoadFeature {
  std::string id;
  std::string name;
  geo::Polyline line;
};

}  // namespace twin::flood
