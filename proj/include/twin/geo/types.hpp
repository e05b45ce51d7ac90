#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace twin::geo {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

/// Twice the signed area of (a, b, c); positive when counter-clockwise.
inline double orient(Vec2 a, Vec2 b, Vec2 c) { return cross(b - a, c - a); }

/// Point in the planar scene frame: meters east, north, and up.
struct ScenePoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec2 plan() const { return {x, y}; }

  friend ScenePoint operator+(ScenePoint a, ScenePoint b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend ScenePoint operator-(ScenePoint a, ScenePoint b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend ScenePoint operator*(double s, ScenePoint a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(ScenePoint a, ScenePoint b) = default;
};

inline double dot(ScenePoint a, ScenePoint b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline ScenePoint cross(ScenePoint a, ScenePoint b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(ScenePoint a) { return std::sqrt(dot(a, a)); }
inline bool is_finite(ScenePoint p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

/// Indexed triangle mesh in scene coordinates.
struct Mesh {
  std::vector<ScenePoint> vertices;
  std::vector<std::uint32_t> indices;

  std::size_t triangle_count() const { return indices.size() / 3; }
  friend bool operator==(const Mesh&, const Mesh&) = default;

  /// Appends `other`, rebasing its indices.
  void append(const Mesh& other) {
    const auto base = static_cast<std::uint32_t>(vertices.size());
    vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
    for (auto i : other.indices) indices.push_back(base + i);
  }
};

/// Axis-aligned 3D box.
struct Box {
  double xmin = 0, ymin = 0, zmin = 0, xmax = 0, ymax = 0, zmax = 0;

  static Box empty() {
    constexpr double inf = INFINITY;
    return {inf, inf, inf, -inf, -inf, -inf};
  }
  bool is_empty() const { return xmin > xmax || ymin > ymax || zmin > zmax; }

  void expand(ScenePoint p) {
    xmin = std::fmin(xmin, p.x);
    ymin = std::fmin(ymin, p.y);
    zmin = std::fmin(zmin, p.z);
    xmax = std::fmax(xmax, p.x);
    ymax = std::fmax(ymax, p.y);
    zmax = std::fmax(zmax, p.z);
  }
  void expand(const Box& b) {
    if (b.is_empty()) return;
    expand(ScenePoint{b.xmin, b.ymin, b.zmin});
    expand(ScenePoint{b.xmax, b.ymax, b.zmax});
  }
  bool contains(ScenePoint p, double tol = 0.0) const {
    return p.x >= xmin - tol && p.x <= xmax + tol && p.y >= ymin - tol && p.y <= ymax + tol &&
           p.z >= zmin - tol && p.z <= zmax + tol;
  }
  bool contains(const Box& b, double tol = 0.0) const {
    return b.xmin >= xmin - tol && b.xmax <= xmax + tol && b.ymin >= ymin - tol &&
           b.ymax <= ymax + tol && b.zmin >= zmin - tol && b.zmax <= zmax + tol;
  }
  /// Closest point of the box to `p`.
  ScenePoint clamp(ScenePoint p) const {
    return {std::clamp(p.x, xmin, xmax), std::clamp(p.y, ymin, ymax), std::clamp(p.z, zmin, zmax)};
  }
  friend bool operator==(const Box&, const Box&) = default;
};

}  // namespace twin::geo
