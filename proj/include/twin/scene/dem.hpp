#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "twin/error.hpp"
#include "twin/geo/delaunay.hpp"
#include "twin/geo/raster.hpp"
#include "twin/lidar/point_cloud.hpp"

namespace twin::scene {

namespace detail {

/// Nearest-point lookup over a uniform bucket grid, searched ring by ring.
class NearestIndex {
 public:
  NearestIndex(const std::vector<geo::ScenePoint>& pts, double bucket) : pts_(pts), bucket_(bucket) {
    double xmin = INFINITY, ymin = INFINITY, xmax = -INFINITY, ymax = -INFINITY;
    for (const auto& p : pts) {
      xmin = std::min(xmin, p.x);
      ymin = std::min(ymin, p.y);
      xmax = std::max(xmax, p.x);
      ymax = std::max(ymax, p.y);
    }
    x0_ = xmin;
    y0_ = ymin;
    nx_ = static_cast<int>((xmax - xmin) / bucket) + 1;
    ny_ = static_cast<int>((ymax - ymin) / bucket) + 1;
    start_.assign(static_cast<std::size_t>(nx_) * ny_ + 1, 0);
    for (const auto& p : pts) ++start_[key(p.x, p.y) + 1];
    for (std::size_t k = 0; k + 1 < start_.size(); ++k) start_[k + 1] += start_[k];
    items_.resize(pts.size());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < pts.size(); ++i) items_[fill[key(pts[i].x, pts[i].y)]++] = i;
  }

  /// Index of the nearest point; ties go to the lowest index.
  std::size_t nearest(double x, double y) const {
    const int cx = std::clamp(static_cast<int>(std::floor((x - x0_) / bucket_)), 0, nx_ - 1);
    const int cy = std::clamp(static_cast<int>(std::floor((y - y0_) / bucket_)), 0, ny_ - 1);
    std::size_t best = 0;
    double best_d2 = INFINITY;
    for (int r = 0;; ++r) {
      for (int j = cy - r; j <= cy + r; ++j) {
        for (int i = cx - r; i <= cx + r; ++i) {
          if (std::max(std::abs(i - cx), std::abs(j - cy)) != r) continue;
          if (i < 0 || j < 0 || i >= nx_ || j >= ny_) continue;
          const std::size_t k = static_cast<std::size_t>(j) * nx_ + i;
          for (std::size_t s = start_[k]; s < start_[k + 1]; ++s) {
            const auto& p = pts_[items_[s]];
            const double d2 = (p.x - x) * (p.x - x) + (p.y - y) * (p.y - y);
            if (d2 < best_d2 || (d2 == best_d2 && items_[s] < best)) {
              best_d2 = d2;
              best = items_[s];
            }
          }
        }
      }
      // every point outside ring r is at least r * bucket away from the query cell
      if (best_d2 < INFINITY && r * bucket_ >= std::sqrt(best_d2)) return best;
      if (r > nx_ + ny_) return best;
    }
  }

 private:
  std::size_t key(double x, double y) const {
    const int i = std::min(static_cast<int>((x - x0_) / bucket_), nx_ - 1);
    const int j = std::min(static_cast<int>((y - y0_) / bucket_), ny_ - 1);
    return static_cast<std::size_t>(j) * nx_ + i;
  }

  const std::vector<geo::ScenePoint>& pts_;
  double bucket_;
  double x0_ = 0, y0_ = 0;
  int nx_ = 1, ny_ = 1;
  std::vector<std::size_t> start_;
  std::vector<std::size_t> items_;
};

}  // namespace detail

/// DEM from Ground points: Delaunay TIN sampled at cell centers, nearest
/// ground elevation outside the hull. Extent is the ground bounding box
/// padded by one cell on each side.
inline geo::Raster build_dem(const lidar::PointCloud& cloud, double cell) {
  if (!(cell > 0)) throw Error(Errc::validation, "DEM cell size must be positive");
  const auto ground = cloud.positions(lidar::PointClass::Ground);
  if (ground.size() < 3) throw Error(Errc::degenerate_input, "DEM needs at least 3 ground points");

  std::vector<geo::Vec2> plan;
  plan.reserve(ground.size());
  double xmin = INFINITY, ymin = INFINITY, xmax = -INFINITY, ymax = -INFINITY;
  for (const auto& p : ground) {
    plan.push_back(p.plan());
    xmin = std::min(xmin, p.x);
    ymin = std::min(ymin, p.y);
    xmax = std::max(xmax, p.x);
    ymax = std::max(ymax, p.y);
  }
  const auto tris = geo::delaunay_2d(plan);  // throws on collinear input

  geo::Raster dem;
  dem.cell = cell;
  dem.xll = xmin - cell;
  dem.yll = ymin - cell;
  dem.ncols = static_cast<int>(std::floor((xmax - xmin) / cell)) + 3;
  dem.nrows = static_cast<int>(std::floor((ymax - ymin) / cell)) + 3;
  dem.values.assign(static_cast<std::size_t>(dem.ncols) * dem.nrows, dem.nodata);
  std::vector<char> set(dem.values.size(), 0);

  // rasterize each triangle over the cell centers inside its bounding box
  for (std::size_t t = 0; t < tris.size(); t += 3) {
    const auto& a = ground[tris[t]];
    const auto& b = ground[tris[t + 1]];
    const auto& c = ground[tris[t + 2]];
    const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    if (det == 0.0) continue;
    const double tx0 = std::min({a.x, b.x, c.x}), tx1 = std::max({a.x, b.x, c.x});
    const double ty0 = std::min({a.y, b.y, c.y}), ty1 = std::max({a.y, b.y, c.y});
    const int c0 = std::max(0, static_cast<int>(std::ceil((tx0 - dem.xll) / cell - 0.5)));
    const int c1 = std::min(dem.ncols - 1, static_cast<int>(std::floor((tx1 - dem.xll) / cell - 0.5)));
    const int s0 = std::max(0, static_cast<int>(std::ceil((ty0 - dem.yll) / cell - 0.5)));
    const int s1 = std::min(dem.nrows - 1, static_cast<int>(std::floor((ty1 - dem.yll) / cell - 0.5)));
    for (int s = s0; s <= s1; ++s) {
      const int row = dem.nrows - 1 - s;
      for (int col = c0; col <= c1; ++col) {
        const std::size_t k = dem.index(col, row);
        if (set[k]) continue;
        const auto q = dem.cell_center(col, row);
        const double l1 = ((b.x - q.x) * (c.y - q.y) - (c.x - q.x) * (b.y - q.y)) / det;
        const double l2 = ((c.x - q.x) * (a.y - q.y) - (a.x - q.x) * (c.y - q.y)) / det;
        const double l3 = 1.0 - l1 - l2;
        constexpr double eps = -1e-12;
        if (l1 < eps || l2 < eps || l3 < eps) continue;
        dem.values[k] = l1 * a.z + l2 * b.z + l3 * c.z;
        set[k] = 1;
      }
    }
  }

  detail::NearestIndex index(ground, std::max(cell, 1.0));
  for (int row = 0; row < dem.nrows; ++row)
    for (int col = 0; col < dem.ncols; ++col) {
      const std::size_t k = dem.index(col, row);
      if (set[k]) continue;
      const auto q = dem.cell_center(col, row);
      dem.values[k] = ground[index.nearest(q.x, q.y)].z;
    }
  return dem;
}

}  // namespace twin::scene
