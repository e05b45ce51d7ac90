#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <tuple>
#include <vector>

#include "twin/error.hpp"
#include "twin/tiling/tileset.hpp"

namespace twin::tiling {

struct Camera {
  geo::ScenePoint position;
  geo::ScenePoint forward{0, 1, 0};
  geo::ScenePoint up{0, 0, 1};
  double fov_y = 1.0471975511965976;  // 60 degrees
  double viewport_height = 1080;
  double viewport_width = 0;  // 0: square viewport

  void validate() const {
    if (std::abs(geo::norm(forward) - 1) > 1e-6 || std::abs(geo::norm(up) - 1) > 1e-6)
      throw Error(Errc::validation, "camera forward and up must be unit vectors");
    if (std::abs(geo::dot(forward, up)) > 1e-6) throw Error(Errc::validation, "camera forward must be perpendicular to up");
    if (!(fov_y > 0 && fov_y < 3.141592653589793)) throw Error(Errc::validation, "fov_y must lie in (0, pi)");
    if (!(viewport_height >= 1)) throw Error(Errc::validation, "viewport_height must be at least 1");
  }
  double aspect() const { return viewport_width > 0 ? viewport_width / viewport_height : 1.0; }

  /// Look-at camera with the given world up hint.
  static Camera look_at(geo::ScenePoint eye, geo::ScenePoint target, geo::ScenePoint world_up = {0, 0, 1}) {
    Camera c;
    c.position = eye;
    auto f = target - eye;
    f = (1.0 / geo::norm(f)) * f;
    auto r = geo::cross(f, world_up);
    if (geo::norm(r) < 1e-9) r = geo::cross(f, geo::ScenePoint{0, 1, 0});
    r = (1.0 / geo::norm(r)) * r;
    c.forward = f;
    c.up = geo::cross(r, f);
    return c;
  }
};

inline double distance_to_box(const geo::ScenePoint& p, const geo::Box& b) {
  return geo::norm(p - b.clamp(p));
}

inline double screen_space_error(const Tile& t, const Camera& cam) {
  const double d = std::max(distance_to_box(cam.position, t.bbox), 1.0);
  return t.geometric_error * cam.viewport_height / (2.0 * d * std::tan(cam.fov_y / 2.0));
}

/// Inward-facing planes through the camera: near plane plus four sides.
/// A point q is inside when dot(n, q - position) >= 0 for every n.
inline std::array<geo::ScenePoint, 5> frustum_normals(const Camera& cam) {
  const auto f = cam.forward;
  const auto u = cam.up;
  const auto r = geo::cross(f, u);
  const double tv = std::tan(cam.fov_y / 2.0);
  const double th = tv * cam.aspect();
  return {f, tv * f - u, tv * f + u, th * f - r, th * f + r};
}

inline bool box_outside_frustum(const geo::Box& b, const Camera& cam) {
  for (const auto& n : frustum_normals(cam)) {
    bool all_out = true;
    for (int k = 0; k < 8 && all_out; ++k) {
      const geo::ScenePoint q{k & 1 ? b.xmax : b.xmin, k & 2 ? b.ymax : b.ymin, k & 4 ? b.zmax : b.zmin};
      if (geo::dot(n, q - cam.position) >= 0) all_out = false;
    }
    if (all_out) return true;
  }
  return false;
}

namespace detail {

inline void select(const Tile& t, const Camera& cam, double threshold, std::vector<const Tile*>& out) {
  if (box_outside_frustum(t.bbox, cam)) return;
  if (!t.is_leaf() && screen_space_error(t, cam) > threshold) {
    for (const auto& c : t.children) select(c, cam, threshold, out);
    return;
  }
  if (t.content_uri) out.push_back(&t);
}

}  // namespace detail

/// Tiles to render for a camera under replace refinement, ordered by
/// (level, x, y).
inline std::vector<const Tile*> select_tile_nodes(const Tileset& ts, const Camera& cam, double sse_threshold = 16.0) {
  cam.validate();
  std::vector<const Tile*> out;
  detail::select(ts.root, cam, sse_threshold, out);
  std::sort(out.begin(), out.end(),
            [](const Tile* a, const Tile* b) { return std::tie(a->level, a->x, a->y) < std::tie(b->level, b->x, b->y); });
  return out;
}

inline std::vector<std::string> select_tiles(const Tileset& ts, const Camera& cam, double sse_threshold = 16.0) {
  std::vector<std::string> uris;
  for (const auto* t : select_tile_nodes(ts, cam, sse_threshold)) uris.push_back(*t->content_uri);
  return uris;
}

}  // namespace twin::tiling
