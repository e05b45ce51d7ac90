#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "twin/error.hpp"
#include "twin/geo/delaunay.hpp"
#include "twin/geo/polygon.hpp"
#include "twin/geo/projection.hpp"
#include "twin/geo/raster.hpp"
#include "twin/scene/footprints.hpp"

namespace twin::scene {

inline constexpr const char* kLod1FallbackTag = "lod1-fallback";

struct BuildingAttributes {
  std::string county;
  std::string municipality;
  std::vector<std::string> hazard_tags;

  friend bool operator==(const BuildingAttributes&, const BuildingAttributes&) = default;
  bool has_tag(const std::string& t) const {
    return std::find(hazard_tags.begin(), hazard_tags.end(), t) != hazard_tags.end();
  }
};

struct Lod2Building {
  std::uint64_t id = 0;
  Footprint footprint;
  double base_elevation = 0.0;
  geo::Mesh roof_mesh;
  geo::Mesh wall_mesh;
  geo::Mesh base_mesh;  // footprint at base elevation, facing down
  BuildingAttributes attributes;

  /// Roof, walls and base as one mesh.
  geo::Mesh closed_mesh() const {
    geo::Mesh m = roof_mesh;
    m.append(wall_mesh);
    m.append(base_mesh);
    return m;
  }
  double max_roof_z() const {
    double z = -INFINITY;
    for (const auto& v : roof_mesh.vertices) z = std::max(z, v.z);
    return z;
  }
  geo::Box bounds() const {
    geo::Box b = geo::Box::empty();
    for (const auto* m : {&roof_mesh, &wall_mesh, &base_mesh})
      for (const auto& v : m->vertices) b.expand(v);
    return b;
  }
};

struct Lod1Building {
  std::uint64_t id = 0;
  Footprint footprint;
  double base_elevation = 0.0;
  double roof_elevation = 0.0;
};

/// Signed volume enclosed by a mesh (sum of origin tetrahedra); positive for
/// outward-facing counter-clockwise triangles.
inline double mesh_volume(const geo::Mesh& m) {
  double v = 0.0;
  for (std::size_t t = 0; t + 2 < m.indices.size(); t += 3) {
    const auto& a = m.vertices[m.indices[t]];
    const auto& b = m.vertices[m.indices[t + 1]];
    const auto& c = m.vertices[m.indices[t + 2]];
    v += geo::dot(a, geo::cross(b, c)) / 6.0;
  }
  return v;
}

namespace detail {

inline double percentile_nearest_rank(std::vector<double> v, double pct) {
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Flat cap over the footprint at height z, counter-clockwise (facing up).
inline geo::Mesh flat_cap(const geo::Ring& ring, double z) {
  geo::Mesh m;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) m.vertices.push_back({ring[i].x, ring[i].y, z});
  m.indices = geo::triangulate_ring(ring);
  return m;
}

inline geo::Mesh flipped(geo::Mesh m) {
  for (std::size_t t = 0; t + 2 < m.indices.size(); t += 3) std::swap(m.indices[t + 1], m.indices[t + 2]);
  return m;
}

/// Wall quads from the base up to the given top height at each ring vertex.
inline geo::Mesh walls(const geo::Ring& ring, double base, const std::vector<double>& top) {
  geo::Mesh m;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const std::size_t j = (i + 1) % (ring.size() - 1);
    const auto a = ring[i], b = ring[j];
    const auto k = static_cast<std::uint32_t>(m.vertices.size());
    m.vertices.push_back({a.x, a.y, base});
    m.vertices.push_back({b.x, b.y, base});
    m.vertices.push_back({b.x, b.y, top[j]});
    m.vertices.push_back({a.x, a.y, top[i]});
    m.indices.insert(m.indices.end(), {k, k + 1, k + 2, k, k + 2, k + 3});
  }
  return m;
}

inline double base_elevation_under(const geo::Polygon& poly, const geo::Raster& dem) {
  geo::Vec2 lo, hi;
  geo::ring_bounds(poly.exterior, lo, hi);
  std::vector<double> samples;
  const int c0 = std::max(0, static_cast<int>(std::floor((lo.x - dem.xll) / dem.cell)));
  const int c1 = std::min(dem.ncols - 1, static_cast<int>(std::floor((hi.x - dem.xll) / dem.cell)));
  const int s0 = std::max(0, static_cast<int>(std::floor((lo.y - dem.yll) / dem.cell)));
  const int s1 = std::min(dem.nrows - 1, static_cast<int>(std::floor((hi.y - dem.yll) / dem.cell)));
  for (int s = s0; s <= s1; ++s)
    for (int col = c0; col <= c1; ++col) {
      const int row = dem.nrows - 1 - s;
      if (!dem.has_data(col, row)) continue;
      if (geo::point_in_polygon(dem.cell_center(col, row), poly)) samples.push_back(dem.at(col, row));
    }
  if (!samples.empty()) return percentile_nearest_rank(std::move(samples), 5.0);
  const auto c = geo::polygon_centroid(poly);
  if (auto z = dem.bilinear(c.x, c.y)) return *z;
  throw Error(Errc::domain, "DEM does not cover the footprint");
}

}  // namespace detail

/// LOD2 building: roof TIN clipped to the footprint, vertical walls and a
/// closing base. The footprint corners join the TIN (at the height of the
/// nearest roof point) so that roof and walls meet along the outline.
inline Lod2Building reconstruct_lod2(const Footprint& footprint, const std::vector<geo::ScenePoint>& roof_points,
                                     const geo::Raster& dem, BuildingAttributes attributes = {}) {
  if (roof_points.empty()) throw Error(Errc::degenerate_input, "no roof points for building " + std::to_string(footprint.id));
  const auto& ring = footprint.polygon.exterior;
  Lod2Building b;
  b.id = footprint.id;
  b.footprint = footprint;
  b.attributes = std::move(attributes);

  double roof_min = INFINITY;
  for (const auto& p : roof_points) roof_min = std::min(roof_min, p.z);
  b.base_elevation = std::min(detail::base_elevation_under(footprint.polygon, dem), roof_min);

  // ring vertex heights from the nearest roof point
  const std::size_t n_ring = ring.size() - 1;
  std::vector<double> top(n_ring);
  for (std::size_t i = 0; i < n_ring; ++i) {
    double best = INFINITY;
    for (const auto& p : roof_points) {
      const double d2 = (p.x - ring[i].x) * (p.x - ring[i].x) + (p.y - ring[i].y) * (p.y - ring[i].y);
      if (d2 < best) {
        best = d2;
        top[i] = p.z;
      }
    }
  }

  std::vector<geo::Vec2> plan;
  std::vector<geo::ScenePoint> verts;
  for (std::size_t i = 0; i < n_ring; ++i) {
    plan.push_back(ring[i]);
    verts.push_back({ring[i].x, ring[i].y, top[i]});
  }
  for (const auto& p : roof_points) {
    plan.push_back(p.plan());
    verts.push_back(p);
  }

  std::vector<std::uint32_t> tris;
  bool degenerate = roof_points.size() < 3;
  if (!degenerate) {
    try {
      geo::delaunay_2d(std::vector<geo::Vec2>(plan.begin() + static_cast<std::ptrdiff_t>(n_ring), plan.end()));
      tris = geo::delaunay_2d(plan);
    } catch (const Error& e) {
      if (e.code() != Errc::degenerate_input) throw;
      degenerate = true;
    }
  }

  if (degenerate) {
    std::vector<double> zs;
    for (const auto& p : roof_points) zs.push_back(p.z);
    const double z = detail::median(zs);
    b.roof_mesh = detail::flat_cap(ring, z);
    b.wall_mesh = detail::walls(ring, b.base_elevation, std::vector<double>(n_ring, z));
    b.attributes.hazard_tags.push_back(kLod1FallbackTag);
  } else {
    std::vector<std::uint32_t> remap(verts.size(), UINT32_MAX);
    for (std::size_t t = 0; t < tris.size(); t += 3) {
      const geo::Vec2 c = (1.0 / 3.0) * (plan[tris[t]] + plan[tris[t + 1]] + plan[tris[t + 2]]);
      if (!geo::point_in_polygon(c, footprint.polygon)) continue;
      for (int k = 0; k < 3; ++k) {
        auto& r = remap[tris[t + k]];
        if (r == UINT32_MAX) {
          r = static_cast<std::uint32_t>(b.roof_mesh.vertices.size());
          b.roof_mesh.vertices.push_back(verts[tris[t + k]]);
        }
        b.roof_mesh.indices.push_back(r);
      }
    }
    b.wall_mesh = detail::walls(ring, b.base_elevation, top);
  }
  b.base_mesh = detail::flipped(detail::flat_cap(ring, b.base_elevation));
  return b;
}

/// Flat-roofed block at the plan-area-weighted mean roof height.
inline Lod1Building simplify_to_lod1(const Lod2Building& b) {
  Lod1Building out{b.id, b.footprint, b.base_elevation, b.base_elevation};
  double area = 0.0, weighted = 0.0;
  const auto& m = b.roof_mesh;
  for (std::size_t t = 0; t + 2 < m.indices.size(); t += 3) {
    const auto& p = m.vertices[m.indices[t]];
    const auto& q = m.vertices[m.indices[t + 1]];
    const auto& r = m.vertices[m.indices[t + 2]];
    const double a = std::abs(geo::orient(p.plan(), q.plan(), r.plan())) / 2.0;
    area += a;
    weighted += a * (p.z + q.z + r.z) / 3.0;
  }
  if (area > 0) out.roof_elevation = weighted / area;
  return out;
}

inline geo::Mesh lod1_mesh(const Lod1Building& b) {
  const auto& ring = b.footprint.polygon.exterior;
  geo::Mesh m = detail::flat_cap(ring, b.roof_elevation);
  m.append(detail::walls(ring, b.base_elevation, std::vector<double>(ring.size() - 1, b.roof_elevation)));
  m.append(detail::flipped(detail::flat_cap(ring, b.base_elevation)));
  return m;
}

struct GeoPose {
  double lon = 0.0;
  double lat = 0.0;
  double z = 0.0;
  double rotation_deg = 0.0;  // counter-clockwise about the vertical axis
  double scale = 1.0;
};

/// Places a mesh from an external local frame into the scene:
/// p' = Rz(rotation) * (scale * p) + scene(anchor).
inline geo::Mesh georeference_mesh(const geo::Mesh& mesh, const GeoPose& pose, const geo::SceneAnchor& anchor) {
  if (!(pose.scale > 0) || !std::isfinite(pose.scale)) throw Error(Errc::validation, "scale must be positive");
  for (const auto& v : mesh.vertices)
    if (!geo::is_finite(v)) throw Error(Errc::validation, "mesh has non-finite vertices");
  const auto t = geo::lonlat_to_scene(anchor, pose.lon, pose.lat);
  const double th = geo::deg2rad(pose.rotation_deg);
  const double c = std::cos(th), s = std::sin(th);
  geo::Mesh out;
  out.indices = mesh.indices;
  out.vertices.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) {
    const double x = pose.scale * v.x, y = pose.scale * v.y, z = pose.scale * v.z;
    out.vertices.push_back({c * x - s * y + t.x, s * x + c * y + t.y, z + pose.z});
  }
  return out;
}

}  // namespace twin::scene
