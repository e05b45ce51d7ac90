#pragma once

// Sweep-hull Delaunay triangulation: points are inserted in order of distance
// from a seed circumcenter, each one attached to the visible part of the
// convex hull, and illegal edges are flipped until the empty-circumcircle
// property holds again.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "twin/error.hpp"
#include "twin/geo/types.hpp"

namespace twin::geo {

/// Coordinates closer than this are treated as one vertex.
inline constexpr double kDelaunaySnap = 1e-6;

namespace detail {

inline double circumradius2(Vec2 a, Vec2 b, Vec2 c) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double ex = c.x - a.x, ey = c.y - a.y;
  const double bl = dx * dx + dy * dy;
  const double cl = ex * ex + ey * ey;
  const double det = dx * ey - dy * ex;
  if (det == 0.0) return std::numeric_limits<double>::infinity();
  const double d = 0.5 / det;
  const double x = (ey * bl - dy * cl) * d;
  const double y = (dx * cl - ex * bl) * d;
  return x * x + y * y;
}

inline Vec2 circumcenter(Vec2 a, Vec2 b, Vec2 c) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double ex = c.x - a.x, ey = c.y - a.y;
  const double bl = dx * dx + dy * dy;
  const double cl = ex * ex + ey * ey;
  const double d = 0.5 / (dx * ey - dy * ex);
  return {a.x + (ey * bl - dy * cl) * d, a.y + (dx * cl - ex * bl) * d};
}

/// Positive when p lies strictly inside the circumcircle of the
/// counter-clockwise triangle (a, b, c).
inline double in_circle(Vec2 a, Vec2 b, Vec2 c, Vec2 p) {
  const double dx = a.x - p.x, dy = a.y - p.y;
  const double ex = b.x - p.x, ey = b.y - p.y;
  const double fx = c.x - p.x, fy = c.y - p.y;
  const double ap = dx * dx + dy * dy;
  const double bp = ex * ex + ey * ey;
  const double cp = fx * fx + fy * fy;
  return dx * (ey * cp - bp * fy) - dy * (ex * cp - bp * fx) + ap * (ex * fy - ey * fx);
}

inline double pseudo_angle(double dx, double dy) {
  const double p = dx / (std::abs(dx) + std::abs(dy));
  return (dy > 0 ? 3.0 - p : 1.0 + p) / 4.0;
}

class SweepHull {
 public:
  static constexpr std::int64_t kNone = -1;

  explicit SweepHull(std::span<const Vec2> pts) : pts_(pts) {}

  std::vector<std::uint32_t> run() {
    const std::size_t n = pts_.size();
    const std::size_t max_tris = std::max<std::size_t>(2 * n, 1);
    triangles_.reserve(max_tris * 3);
    halfedges_.reserve(max_tris * 3);
    hull_prev_.assign(n, 0);
    hull_next_.assign(n, 0);
    hull_tri_.assign(n, 0);
    hash_size_ = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    hash_.assign(hash_size_, kNone);

    Vec2 lo{INFINITY, INFINITY}, hi{-INFINITY, -INFINITY};
    for (auto p : pts_) {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    const Vec2 c{(lo.x + hi.x) / 2, (lo.y + hi.y) / 2};

    std::size_t i0 = 0, i1 = 0, i2 = 0;
    double best = INFINITY;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = sq(pts_[i] - c);
      if (d < best) {
        i0 = i;
        best = d;
      }
    }
    best = INFINITY;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == i0) continue;
      const double d = sq(pts_[i] - pts_[i0]);
      if (d < best && d > 0) {
        i1 = i;
        best = d;
      }
    }
    double min_r = INFINITY;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == i0 || i == i1) continue;
      const double r = circumradius2(pts_[i0], pts_[i1], pts_[i]);
      if (r < min_r) {
        i2 = i;
        min_r = r;
      }
    }
    if (!std::isfinite(min_r)) throw Error(Errc::degenerate_input, "all points are collinear");
    if (orient(pts_[i0], pts_[i1], pts_[i2]) < 0) std::swap(i1, i2);

    center_ = circumcenter(pts_[i0], pts_[i1], pts_[i2]);
    std::vector<double> dists(n);
    for (std::size_t i = 0; i < n; ++i) dists[i] = sq(pts_[i] - center_);
    std::vector<std::uint32_t> ids(n);
    std::iota(ids.begin(), ids.end(), 0u);
    std::stable_sort(ids.begin(), ids.end(), [&](auto a, auto b) { return dists[a] < dists[b]; });

    hull_start_ = i0;
    hull_next_[i0] = hull_prev_[i2] = i1;
    hull_next_[i1] = hull_prev_[i0] = i2;
    hull_next_[i2] = hull_prev_[i1] = i0;
    hull_tri_[i0] = 0;
    hull_tri_[i1] = 1;
    hull_tri_[i2] = 2;
    hash_[hash_key(pts_[i0])] = static_cast<std::int64_t>(i0);
    hash_[hash_key(pts_[i1])] = static_cast<std::int64_t>(i1);
    hash_[hash_key(pts_[i2])] = static_cast<std::int64_t>(i2);
    add_triangle(i0, i1, i2, kNone, kNone, kNone);

    Vec2 prev{NAN, NAN};
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = ids[k];
      const Vec2 p = pts_[i];
      if (k > 0 && std::abs(p.x - prev.x) <= 0.0 && std::abs(p.y - prev.y) <= 0.0) continue;
      prev = p;
      if (i == i0 || i == i1 || i == i2) continue;

      std::size_t start = 0;
      for (std::size_t j = 0, key = hash_key(p); j < hash_size_; ++j) {
        const auto s = hash_[(key + j) % hash_size_];
        if (s != kNone && static_cast<std::size_t>(s) != hull_next_[static_cast<std::size_t>(s)]) {
          start = static_cast<std::size_t>(s);
          break;
        }
      }
      start = hull_prev_[start];
      std::size_t e = start;
      bool found = true;
      // advance until the hull edge e -> next(e) has p on its outer (right) side
      while (orient(pts_[e], pts_[hull_next_[e]], p) >= 0) {
        e = hull_next_[e];
        if (e == start) {
          found = false;
          break;
        }
      }
      if (!found) continue;

      std::size_t t = add_triangle(e, i, hull_next_[e], kNone, kNone, static_cast<std::int64_t>(hull_tri_[e]));
      hull_tri_[i] = legalize(t + 2);
      hull_tri_[e] = t;

      std::size_t nx = hull_next_[e];
      for (std::size_t q = hull_next_[nx]; orient(pts_[nx], pts_[q], p) < 0; q = hull_next_[nx]) {
        t = add_triangle(nx, i, q, static_cast<std::int64_t>(hull_tri_[i]), kNone,
                         static_cast<std::int64_t>(hull_tri_[nx]));
        hull_tri_[i] = legalize(t + 2);
        hull_next_[nx] = nx;  // removed from hull
        nx = q;
      }
      if (e == start) {
        for (std::size_t q = hull_prev_[e]; orient(pts_[q], pts_[e], p) < 0; q = hull_prev_[e]) {
          t = add_triangle(q, i, e, kNone, static_cast<std::int64_t>(hull_tri_[e]),
                           static_cast<std::int64_t>(hull_tri_[q]));
          legalize(t + 2);
          hull_tri_[q] = t;
          hull_next_[e] = e;
          e = q;
        }
      }
      hull_start_ = hull_prev_[i] = e;
      hull_next_[e] = hull_prev_[nx] = i;
      hull_next_[i] = nx;
      hash_[hash_key(p)] = static_cast<std::int64_t>(i);
      hash_[hash_key(pts_[e])] = static_cast<std::int64_t>(e);
    }
    return std::move(triangles_);
  }

 private:
  static double sq(Vec2 v) { return v.x * v.x + v.y * v.y; }

  std::size_t hash_key(Vec2 p) const {
    const double a = pseudo_angle(p.x - center_.x, p.y - center_.y);
    return static_cast<std::size_t>(std::floor(a * static_cast<double>(hash_size_))) % hash_size_;
  }

  void link(std::size_t a, std::int64_t b) {
    halfedges_[a] = b;
    if (b != kNone) halfedges_[static_cast<std::size_t>(b)] = static_cast<std::int64_t>(a);
  }

  std::size_t add_triangle(std::size_t a, std::size_t b, std::size_t c, std::int64_t ha, std::int64_t hb,
                           std::int64_t hc) {
    const std::size_t t = triangles_.size();
    triangles_.push_back(static_cast<std::uint32_t>(a));
    triangles_.push_back(static_cast<std::uint32_t>(b));
    triangles_.push_back(static_cast<std::uint32_t>(c));
    halfedges_.resize(t + 3, kNone);
    link(t, ha);
    link(t + 1, hb);
    link(t + 2, hc);
    return t;
  }

  // Flips edge `a` and any edges it invalidates. Returns the halfedge that
  // ends up on the hull side of the newest triangle.
  std::size_t legalize(std::size_t a) {
    std::vector<std::size_t>& stack = edge_stack_;
    stack.clear();
    std::size_t ar = 0;
    while (true) {
      const std::int64_t b = halfedges_[a];
      const std::size_t a0 = a - a % 3;
      ar = a0 + (a + 2) % 3;
      if (b == kNone) {
        if (stack.empty()) break;
        a = stack.back();
        stack.pop_back();
        continue;
      }
      const auto bu = static_cast<std::size_t>(b);
      const std::size_t b0 = bu - bu % 3;
      const std::size_t al = a0 + (a + 1) % 3;
      const std::size_t bl = b0 + (bu + 2) % 3;
      const std::uint32_t p0 = triangles_[ar];
      const std::uint32_t pr = triangles_[a];
      const std::uint32_t pl = triangles_[al];
      const std::uint32_t p1 = triangles_[bl];
      // (p0, pr, pl) is counter-clockwise
      const bool illegal = in_circle(pts_[p0], pts_[pr], pts_[pl], pts_[p1]) > 0;
      if (illegal) {
        triangles_[a] = p1;
        triangles_[bu] = p0;
        const std::int64_t hbl = halfedges_[bl];
        if (hbl == kNone) {
          std::size_t e = hull_start_;
          do {
            if (hull_tri_[e] == bl) {
              hull_tri_[e] = a;
              break;
            }
            e = hull_prev_[e];
          } while (e != hull_start_);
        }
        link(a, hbl);
        link(bu, halfedges_[ar]);
        link(ar, static_cast<std::int64_t>(bl));
        const std::size_t br = b0 + (bu + 1) % 3;
        stack.push_back(br);
      } else {
        if (stack.empty()) break;
        a = stack.back();
        stack.pop_back();
      }
    }
    return ar;
  }

  std::span<const Vec2> pts_;
  std::vector<std::uint32_t> triangles_;
  std::vector<std::int64_t> halfedges_;
  std::vector<std::size_t> hull_prev_, hull_next_, hull_tri_;
  std::vector<std::int64_t> hash_;
  std::vector<std::size_t> edge_stack_;
  std::size_t hash_size_ = 1;
  std::size_t hull_start_ = 0;
  Vec2 center_{};
};

}  // namespace detail

/// Delaunay triangulation of 2D points. Returns counter-clockwise triangles as
/// index triples into `points`. Points within kDelaunaySnap of an earlier
/// point are merged into it and never referenced.
inline std::vector<std::uint32_t> delaunay_2d(std::span<const Vec2> points) {
  if (points.size() < 3) throw Error(Errc::degenerate_input, "delaunay_2d needs at least 3 points");
  for (auto p : points)
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw Error(Errc::validation, "non-finite point");

  // snap to the dedupe grid and keep the first occurrence of each key
  std::vector<std::uint32_t> order(points.size());
  std::iota(order.begin(), order.end(), 0u);
  auto key = [&](std::uint32_t i) {
    return std::pair{std::llround(points[i].x / kDelaunaySnap), std::llround(points[i].y / kDelaunaySnap)};
  };
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return key(a) < key(b); });
  std::vector<std::uint32_t> kept;
  kept.reserve(points.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k > 0 && key(order[k]) == key(order[k - 1])) continue;
    kept.push_back(order[k]);
  }
  std::sort(kept.begin(), kept.end());
  if (kept.size() < 3) throw Error(Errc::degenerate_input, "fewer than 3 distinct points");

  std::vector<Vec2> unique_pts;
  unique_pts.reserve(kept.size());
  for (auto i : kept) unique_pts.push_back(points[i]);

  auto tris = detail::SweepHull(unique_pts).run();
  for (auto& t : tris) t = kept[t];
  return tris;
}

inline std::vector<std::uint32_t> delaunay_2d(const std::vector<Vec2>& points) {
  return delaunay_2d(std::span<const Vec2>(points));
}

}  // namespace twin::geo
