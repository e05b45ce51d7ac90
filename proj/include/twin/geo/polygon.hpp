#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "twin/error.hpp"
#include "twin/geo/types.hpp"

namespace twin::geo {

/// Closed ring: first vertex repeated as the last one.
using Ring = std::vector<Vec2>;

/// Exterior ring counter-clockwise, holes clockwise.
struct Polygon {
  Ring exterior;
  std::vector<Ring> holes;

  friend bool operator==(const Polygon&, const Polygon&) = default;
};

struct Polyline {
  std::vector<Vec2> vertices;

  double length() const {
    double total = 0.0;
    for (std::size_t i = 1; i < vertices.size(); ++i) total += distance(vertices[i - 1], vertices[i]);
    return total;
  }
};

/// Signed shoelace area of a closed ring, positive when counter-clockwise.
inline double ring_signed_area(const Ring& ring) {
  double a = 0.0;
  for (std::size_t i = 1; i < ring.size(); ++i) a += cross(ring[i - 1], ring[i]);
  return 0.5 * a;
}

inline double polygon_area(const Polygon& poly) {
  double a = std::abs(ring_signed_area(poly.exterior));
  for (const auto& h : poly.holes) a -= std::abs(ring_signed_area(h));
  return a;
}

/// Area centroid of the exterior ring minus its holes.
inline Vec2 polygon_centroid(const Polygon& poly) {
  double cx = 0.0, cy = 0.0, a = 0.0;
  auto accumulate = [&](const Ring& ring, double sign) {
    for (std::size_t i = 1; i < ring.size(); ++i) {
      const double w = cross(ring[i - 1], ring[i]) * sign;
      a += w;
      cx += (ring[i - 1].x + ring[i].x) * w;
      cy += (ring[i - 1].y + ring[i].y) * w;
    }
  };
  const double ext_sign = ring_signed_area(poly.exterior) >= 0 ? 1.0 : -1.0;
  accumulate(poly.exterior, ext_sign);
  for (const auto& h : poly.holes) accumulate(h, ring_signed_area(h) >= 0 ? -1.0 : 1.0);
  if (a == 0.0) return poly.exterior.empty() ? Vec2{} : poly.exterior.front();
  return {cx / (3.0 * a), cy / (3.0 * a)};
}

inline void ring_bounds(const Ring& ring, Vec2& lo, Vec2& hi) {
  lo = {INFINITY, INFINITY};
  hi = {-INFINITY, -INFINITY};
  for (auto p : ring) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
}

inline bool on_segment(Vec2 p, Vec2 a, Vec2 b) {
  const double len = distance(a, b);
  const double tol = 1e-12 * std::max({1.0, std::abs(a.x), std::abs(a.y), std::abs(b.x), std::abs(b.y)});
  if (std::abs(orient(a, b, p)) > tol * std::max(len, 1.0)) return false;
  return p.x >= std::min(a.x, b.x) - tol && p.x <= std::max(a.x, b.x) + tol &&
         p.y >= std::min(a.y, b.y) - tol && p.y <= std::max(a.y, b.y) + tol;
}

/// Even-odd containment; points on any ring boundary count as inside.
inline bool point_in_polygon(Vec2 p, const Polygon& poly) {
  bool inside = false;
  auto scan = [&](const Ring& ring) -> bool {
    for (std::size_t i = 1; i < ring.size(); ++i) {
      const Vec2 a = ring[i - 1], b = ring[i];
      if (on_segment(p, a, b)) return true;
      if ((a.y > p.y) != (b.y > p.y)) {
        const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
        if (p.x < x_cross) inside = !inside;
      }
    }
    return false;
  };
  if (scan(poly.exterior)) return true;
  for (const auto& h : poly.holes)
    if (scan(h)) return true;
  return inside;
}

inline bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const double d1 = orient(c, d, a), d2 = orient(c, d, b);
  const double d3 = orient(a, b, c), d4 = orient(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  if (d1 == 0 && on_segment(a, c, d)) return true;
  if (d2 == 0 && on_segment(b, c, d)) return true;
  if (d3 == 0 && on_segment(c, a, b)) return true;
  if (d4 == 0 && on_segment(d, a, b)) return true;
  return false;
}

/// True when no two non-adjacent edges of the closed ring touch.
inline bool ring_is_simple(const Ring& ring) {
  const std::size_t n = ring.size() - 1;  // edge count
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) {
        // adjacent edges may only share their common vertex, never fold back
        const Vec2 a = ring[i], b = ring[i + 1], c = ring[j], d = ring[j + 1];
        if (j == i + 1 && orient(a, b, d) == 0 && dot(b - a, d - c) < 0) return false;
        if (i == 0 && j == n - 1 && orient(c, d, b) == 0 && dot(d - c, b - a) < 0) return false;
        continue;
      }
      if (segments_intersect(ring[i], ring[i + 1], ring[j], ring[j + 1])) return false;
    }
  }
  return true;
}

inline std::size_t distinct_vertex_count(const Ring& ring) {
  std::vector<Vec2> v(ring.begin(), ring.empty() ? ring.end() : ring.end() - 1);
  std::sort(v.begin(), v.end(), [](Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
}

/// Empty string when valid, otherwise the first violated rule.
inline std::string polygon_problem(const Polygon& poly) {
  auto check_ring = [](const Ring& ring, bool exterior) -> std::string {
    if (ring.size() < 4 || distinct_vertex_count(ring) < 3) return "ring has fewer than 3 distinct vertices";
    if (!(ring.front() == ring.back())) return "ring is not closed";
    const double a = ring_signed_area(ring);
    if (exterior && !(a > 0)) return "exterior ring is not counter-clockwise";
    if (!exterior && !(a < 0)) return "hole ring is not clockwise";
    if (!ring_is_simple(ring)) return "ring self-intersects";
    return {};
  };
  if (auto p = check_ring(poly.exterior, true); !p.empty()) return p;
  for (const auto& h : poly.holes)
    if (auto p = check_ring(h, false); !p.empty()) return p;
  return {};
}

inline bool polygon_is_valid(const Polygon& poly) { return polygon_problem(poly).empty(); }

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + t * ab);
}

namespace detail {
inline void douglas_peucker(const std::vector<Vec2>& pts, std::size_t first, std::size_t last, double tol,
                            std::vector<bool>& keep) {
  double max_d = -1.0;
  std::size_t idx = first;
  for (std::size_t i = first + 1; i < last; ++i) {
    const double d = point_segment_distance(pts[i], pts[first], pts[last]);
    if (d > max_d) {
      max_d = d;
      idx = i;
    }
  }
  if (max_d > tol) {
    keep[idx] = true;
    douglas_peucker(pts, first, idx, tol, keep);
    douglas_peucker(pts, idx, last, tol, keep);
  }
}
}  // namespace detail

/// Douglas-Peucker on an open polyline; endpoints are always kept.
inline std::vector<Vec2> simplify_polyline(const std::vector<Vec2>& pts, double tol) {
  if (pts.size() < 3) return pts;
  std::vector<bool> keep(pts.size(), false);
  keep.front() = keep.back() = true;
  detail::douglas_peucker(pts, 0, pts.size() - 1, tol, keep);
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (keep[i]) out.push_back(pts[i]);
  return out;
}

/// Douglas-Peucker on a closed ring, split at the vertex farthest from the
/// first one. Returns a closed ring.
inline Ring simplify_ring(const Ring& ring, double tol) {
  if (ring.size() < 5 || tol <= 0.0) return ring;
  const std::size_t n = ring.size() - 1;
  std::size_t far = 0;
  double far_d = -1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const double d = distance(ring[0], ring[i]);
    if (d > far_d) {
      far_d = d;
      far = i;
    }
  }
  std::vector<Vec2> a(ring.begin(), ring.begin() + static_cast<std::ptrdiff_t>(far) + 1);
  std::vector<Vec2> b(ring.begin() + static_cast<std::ptrdiff_t>(far), ring.end());
  auto sa = simplify_polyline(a, tol);
  auto sb = simplify_polyline(b, tol);
  Ring out(sa.begin(), sa.end());
  out.insert(out.end(), sb.begin() + 1, sb.end());
  return out;
}

/// Removes vertices that lie on the straight line through their neighbours.
inline Ring drop_collinear(const Ring& ring) {
  if (ring.size() < 5) return ring;
  std::vector<Vec2> v(ring.begin(), ring.end() - 1);
  bool changed = true;
  while (changed && v.size() > 3) {
    changed = false;
    for (std::size_t i = 0; i < v.size() && v.size() > 3; ++i) {
      const Vec2 prev = v[(i + v.size() - 1) % v.size()];
      const Vec2 next = v[(i + 1) % v.size()];
      if (orient(prev, v[i], next) == 0.0) {
        v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
  Ring out(v.begin(), v.end());
  out.push_back(v.front());
  return out;
}

/// Ear-clipping triangulation of a simple counter-clockwise closed ring.
/// Returned indices refer to ring vertices (without the closing duplicate)
/// and are counter-clockwise.
inline std::vector<std::uint32_t> triangulate_ring(const Ring& ring) {
  std::vector<std::uint32_t> out;
  if (ring.size() < 4) return out;
  std::vector<std::uint32_t> idx(ring.size() - 1);
  for (std::uint32_t i = 0; i < idx.size(); ++i) idx[i] = i;
  if (ring_signed_area(ring) < 0) std::reverse(idx.begin(), idx.end());
  auto inside_tri = [&](Vec2 p, Vec2 a, Vec2 b, Vec2 c) {
    return orient(a, b, p) >= 0 && orient(b, c, p) >= 0 && orient(c, a, p) >= 0;
  };
  std::size_t guard = 0;
  while (idx.size() > 3 && guard < 10 * ring.size() * ring.size()) {
    ++guard;
    bool clipped = false;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const auto ia = idx[(i + idx.size() - 1) % idx.size()], ib = idx[i], ic = idx[(i + 1) % idx.size()];
      const Vec2 a = ring[ia], b = ring[ib], c = ring[ic];
      if (orient(a, b, c) <= 0) continue;
      bool ear = true;
      for (auto j : idx) {
        if (j == ia || j == ib || j == ic) continue;
        if (ring[j] == a || ring[j] == b || ring[j] == c) continue;
        if (inside_tri(ring[j], a, b, c)) {
          ear = false;
          break;
        }
      }
      if (!ear) continue;
      out.insert(out.end(), {ia, ib, ic});
      idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(i));
      clipped = true;
      break;
    }
    if (!clipped) {
      // numerically degenerate remainder: fan it
      for (std::size_t i = 1; i + 1 < idx.size(); ++i) out.insert(out.end(), {idx[0], idx[i], idx[i + 1]});
      return out;
    }
  }
  if (idx.size() == 3) out.insert(out.end(), {idx[0], idx[1], idx[2]});
  return out;
}

}  // namespace twin::geo
