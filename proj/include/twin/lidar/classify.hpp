#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <vector>

#include "twin/error.hpp"
#include "twin/geo/raster.hpp"
#include "twin/lidar/point_cloud.hpp"

namespace twin::lidar {

struct GroundFilterParams {
  double cell = 1.0;
  double max_window = 20.0;
  double slope = 0.15;
  double initial_threshold = 0.3;
  double max_threshold = 2.5;

  void validate() const {
    if (!(cell > 0 && max_window > 0 && slope > 0 && initial_threshold > 0 && max_threshold > 0)) {
      throw Error(Errc::validation, "ground filter parameters must be positive");
    }
    if (max_window < cell) throw Error(Errc::validation, "ground filter max_window must be >= cell");
  }
};

struct BuildingFilterParams {
  double min_height = 2.5;
  std::size_t min_points = 50;
  double cluster_cell = 1.0;
  double max_roughness = 0.35;

  void validate() const {
    if (!(min_height > 0 && min_points > 0 && cluster_cell > 0 && max_roughness > 0)) {
      throw Error(Errc::validation, "building filter parameters must be positive");
    }
  }
};

namespace detail {

/// Dense scalar grid with cell (ix, iy), iy growing northwards.
struct Grid {
  double x0 = 0, y0 = 0, cell = 1;
  int nx = 0, ny = 0;
  std::vector<double> v;

  std::size_t idx(int ix, int iy) const { return static_cast<std::size_t>(iy) * nx + ix; }
  int col_of(double x) const { return std::clamp(static_cast<int>(std::floor((x - x0) / cell)), 0, nx - 1); }
  int row_of(double y) const { return std::clamp(static_cast<int>(std::floor((y - y0) / cell)), 0, ny - 1); }

  double bilinear(double x, double y) const {
    const double fx = std::clamp((x - x0) / cell - 0.5, 0.0, static_cast<double>(nx - 1));
    const double fy = std::clamp((y - y0) / cell - 0.5, 0.0, static_cast<double>(ny - 1));
    const int i0 = std::min(static_cast<int>(fx), std::max(nx - 2, 0));
    const int j0 = std::min(static_cast<int>(fy), std::max(ny - 2, 0));
    const int i1 = std::min(i0 + 1, nx - 1), j1 = std::min(j0 + 1, ny - 1);
    const double tx = fx - i0, ty = fy - j0;
    return (1 - tx) * (1 - ty) * v[idx(i0, j0)] + tx * (1 - ty) * v[idx(i1, j0)] +
           (1 - tx) * ty * v[idx(i0, j1)] + tx * ty * v[idx(i1, j1)];
  }
};

/// Copies each unknown cell's value from the nearest known cell (4-connected
/// breadth-first order, ties resolved by scan order).
inline void fill_from_known(Grid& g, std::vector<char>& known) {
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < g.v.size(); ++i)
    if (known[i]) queue.push_back(i);
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    const int ix = static_cast<int>(i % g.nx), iy = static_cast<int>(i / g.nx);
    const int nb[4][2] = {{ix - 1, iy}, {ix + 1, iy}, {ix, iy - 1}, {ix, iy + 1}};
    for (auto& n : nb) {
      if (n[0] < 0 || n[1] < 0 || n[0] >= g.nx || n[1] >= g.ny) continue;
      const std::size_t j = g.idx(n[0], n[1]);
      if (known[j]) continue;
      known[j] = 1;
      g.v[j] = g.v[i];
      queue.push_back(j);
    }
  }
}

/// Separable square min (erode) or max (dilate) filter with half-width `h` cells.
inline std::vector<double> square_filter(const Grid& g, const std::vector<double>& in, int h, bool take_min) {
  std::vector<double> tmp(in.size()), out(in.size());
  auto pick = [take_min](double a, double b) { return take_min ? std::min(a, b) : std::max(a, b); };
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      double acc = in[g.idx(ix, iy)];
      for (int k = std::max(0, ix - h); k <= std::min(g.nx - 1, ix + h); ++k) acc = pick(acc, in[g.idx(k, iy)]);
      tmp[g.idx(ix, iy)] = acc;
    }
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      double acc = tmp[g.idx(ix, iy)];
      for (int k = std::max(0, iy - h); k <= std::min(g.ny - 1, iy + h); ++k) acc = pick(acc, tmp[g.idx(ix, k)]);
      out[g.idx(ix, iy)] = acc;
    }
  return out;
}

/// Window sizes cell*2^k for k >= 1 while <= max_window, closed by max_window
/// itself when the doubling sequence stops short of it.
inline std::vector<double> pmf_windows(const GroundFilterParams& p) {
  std::vector<double> w;
  for (double size = 2 * p.cell; size <= p.max_window + 1e-9; size *= 2) w.push_back(size);
  if (w.empty() || w.back() < p.max_window - 1e-9) w.push_back(p.max_window);
  return w;
}

}  // namespace detail

/// Progressive morphological ground filter. Returns a relabelled copy: points
/// within `initial_threshold` of the approved ground surface become Ground,
/// former Ground points that fail become Unclassified. Noise is ignored.
inline PointCloud classify_ground(const PointCloud& cloud, const GroundFilterParams& params = {}) {
  params.validate();
  PointCloud out = cloud;
  if (cloud.empty()) return out;

  std::vector<std::size_t> cand;
  double xmin = INFINITY, ymin = INFINITY, xmax = -INFINITY, ymax = -INFINITY;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.points[i].cls == PointClass::Noise) continue;
    cand.push_back(i);
    const auto& p = cloud.points[i].p;
    xmin = std::min(xmin, p.x);
    ymin = std::min(ymin, p.y);
    xmax = std::max(xmax, p.x);
    ymax = std::max(ymax, p.y);
  }
  if (cand.empty()) throw Error(Errc::no_ground, "every point is classified as noise");

  detail::Grid g;
  g.x0 = xmin;
  g.y0 = ymin;
  g.cell = params.cell;
  g.nx = static_cast<int>(std::floor((xmax - xmin) / params.cell)) + 1;
  g.ny = static_cast<int>(std::floor((ymax - ymin) / params.cell)) + 1;
  g.v.assign(static_cast<std::size_t>(g.nx) * g.ny, INFINITY);
  std::vector<char> known(g.v.size(), 0);
  for (auto i : cand) {
    const auto& p = cloud.points[i].p;
    const auto k = g.idx(g.col_of(p.x), g.row_of(p.y));
    g.v[k] = std::min(g.v[k], p.z);
    known[k] = 1;
  }
  detail::fill_from_known(g, known);
  const std::vector<double> minimum = g.v;

  std::vector<char> flagged(g.v.size(), 0);
  std::vector<double> surface = minimum;
  double prev_w = params.cell;
  for (double w : detail::pmf_windows(params)) {
    const int h = std::max(1, static_cast<int>(std::lround(w / (2 * params.cell))));
    const auto opened = detail::square_filter(g, detail::square_filter(g, surface, h, true), h, false);
    const double threshold = std::min(params.initial_threshold + params.slope * (w - prev_w), params.max_threshold);
    for (std::size_t k = 0; k < surface.size(); ++k)
      if (surface[k] - opened[k] > threshold) flagged[k] = 1;
    surface = opened;
    prev_w = w;
  }

  // approved surface: cell minima that survived every opening
  detail::Grid approved = g;
  approved.v = minimum;
  std::vector<char> ok(g.v.size());
  for (std::size_t k = 0; k < ok.size(); ++k) ok[k] = !flagged[k];
  detail::fill_from_known(approved, ok);

  for (auto i : cand) {
    auto& pt = out.points[i];
    const double s = approved.bilinear(pt.p.x, pt.p.y);
    if (pt.p.z - s <= params.initial_threshold) {
      pt.cls = PointClass::Ground;
    } else if (pt.cls == PointClass::Ground) {
      pt.cls = PointClass::Unclassified;
    }
  }
  return out;
}

struct BuildingClassification {
  PointCloud cloud;
  std::size_t skipped_no_dem = 0;  // points without DEM coverage
  std::size_t clusters_accepted = 0;
  std::size_t clusters_rejected = 0;
};

namespace detail {

/// Residual RMS of points against least-squares planes fitted over each
/// occupied cell's 3x3 neighbourhood.
inline double local_plane_roughness(const std::vector<int>& cells, const std::vector<std::size_t>& cell_start,
                                    const std::vector<std::size_t>& cell_points, const PointCloud& cloud,
                                    int nx, int ny, double x0, double y0, double cell) {
  double sum_r2 = 0.0;
  std::size_t n_res = 0;
  for (int c : cells) {
    const int ix = c % nx, iy = c / nx;
    const double cx = x0 + (ix + 0.5) * cell, cy = y0 + (iy + 0.5) * cell;
    double s[9] = {0};  // n, x, y, z, xx, xy, yy, xz, yz
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int jx = ix + dx, jy = iy + dy;
        if (jx < 0 || jy < 0 || jx >= nx || jy >= ny) continue;
        const std::size_t j = static_cast<std::size_t>(jy) * nx + jx;
        for (std::size_t k = cell_start[j]; k < cell_start[j + 1]; ++k) {
          const auto& p = cloud.points[cell_points[k]].p;
          const double x = p.x - cx, y = p.y - cy, z = p.z;
          s[0] += 1;
          s[1] += x;
          s[2] += y;
          s[3] += z;
          s[4] += x * x;
          s[5] += x * y;
          s[6] += y * y;
          s[7] += x * z;
          s[8] += y * z;
        }
      }
    if (s[0] < 3) continue;
    // Cramer's rule on the 3x3 normal equations
    const double m[3][3] = {{s[0], s[1], s[2]}, {s[1], s[4], s[5]}, {s[2], s[5], s[6]}};
    const double rhs[3] = {s[3], s[7], s[8]};
    auto det3 = [](const double a[3][3]) {
      return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
             a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    };
    const double det = det3(m);
    if (std::abs(det) < 1e-12 * std::max(1.0, s[0] * s[0] * s[0])) continue;
    double coef[3];
    for (int col = 0; col < 3; ++col) {
      double mm[3][3];
      for (int r = 0; r < 3; ++r)
        for (int q = 0; q < 3; ++q) mm[r][q] = (q == col) ? rhs[r] : m[r][q];
      coef[col] = det3(mm) / det;
    }
    const std::size_t j = static_cast<std::size_t>(c);
    for (std::size_t k = cell_start[j]; k < cell_start[j + 1]; ++k) {
      const auto& p = cloud.points[cell_points[k]].p;
      const double r = p.z - (coef[0] + coef[1] * (p.x - cx) + coef[2] * (p.y - cy));
      sum_r2 += r * r;
      ++n_res;
    }
  }
  if (n_res == 0) return INFINITY;
  return std::sqrt(sum_r2 / static_cast<double>(n_res));
}

}  // namespace detail

/// Marks elevated, planar clusters as Building. Existing Building labels are
/// recomputed; Ground and Noise points are never touched.
inline BuildingClassification classify_buildings(const PointCloud& cloud, const geo::Raster& dem,
                                                 const BuildingFilterParams& params = {}) {
  params.validate();
  BuildingClassification res;
  res.cloud = cloud;
  auto& pts = res.cloud.points;
  for (auto& p : pts)
    if (p.cls == PointClass::Building) p.cls = PointClass::Unclassified;

  std::vector<std::size_t> cand;
  double xmin = INFINITY, ymin = INFINITY, xmax = -INFINITY, ymax = -INFINITY;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].cls != PointClass::Unclassified) continue;
    const auto ground = dem.bilinear(pts[i].p.x, pts[i].p.y);
    if (!ground) {
      ++res.skipped_no_dem;
      continue;
    }
    if (pts[i].p.z - *ground < params.min_height) continue;
    cand.push_back(i);
    xmin = std::min(xmin, pts[i].p.x);
    ymin = std::min(ymin, pts[i].p.y);
    xmax = std::max(xmax, pts[i].p.x);
    ymax = std::max(ymax, pts[i].p.y);
  }
  if (cand.empty()) return res;

  const double cell = params.cluster_cell;
  const int nx = static_cast<int>(std::floor((xmax - xmin) / cell)) + 1;
  const int ny = static_cast<int>(std::floor((ymax - ymin) / cell)) + 1;
  const std::size_t ncell = static_cast<std::size_t>(nx) * ny;
  auto cell_of = [&](const geo::ScenePoint& p) {
    const int ix = std::min(static_cast<int>(std::floor((p.x - xmin) / cell)), nx - 1);
    const int iy = std::min(static_cast<int>(std::floor((p.y - ymin) / cell)), ny - 1);
    return static_cast<std::size_t>(iy) * nx + ix;
  };
  // bucket candidate points by cell (counting sort keeps input order within a cell)
  std::vector<std::size_t> cell_start(ncell + 1, 0);
  for (auto i : cand) ++cell_start[cell_of(pts[i].p) + 1];
  for (std::size_t k = 0; k < ncell; ++k) cell_start[k + 1] += cell_start[k];
  std::vector<std::size_t> cell_points(cand.size());
  {
    std::vector<std::size_t> fill(cell_start.begin(), cell_start.end() - 1);
    for (auto i : cand) cell_points[fill[cell_of(pts[i].p)]++] = i;
  }

  std::vector<int> label(ncell, -1);
  int next_label = 0;
  for (std::size_t seed = 0; seed < ncell; ++seed) {
    if (label[seed] != -1 || cell_start[seed] == cell_start[seed + 1]) continue;
    std::vector<int> comp;
    std::deque<int> queue{static_cast<int>(seed)};
    label[seed] = next_label;
    std::size_t npts = 0;
    while (!queue.empty()) {
      const int c = queue.front();
      queue.pop_front();
      comp.push_back(c);
      npts += cell_start[c + 1] - cell_start[c];
      const int ix = c % nx, iy = c / nx;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int jx = ix + dx, jy = iy + dy;
          if ((dx == 0 && dy == 0) || jx < 0 || jy < 0 || jx >= nx || jy >= ny) continue;
          const int j = jy * nx + jx;
          if (label[j] != -1 || cell_start[j] == cell_start[j + 1]) continue;
          label[j] = next_label;
          queue.push_back(j);
        }
    }
    ++next_label;
    std::sort(comp.begin(), comp.end());
    bool accept = npts >= params.min_points;
    if (accept) {
      const double rough =
          detail::local_plane_roughness(comp, cell_start, cell_points, res.cloud, nx, ny, xmin, ymin, cell);
      accept = rough <= params.max_roughness;
    }
    if (!accept) {
      ++res.clusters_rejected;
      continue;
    }
    ++res.clusters_accepted;
    for (int c : comp)
      for (std::size_t k = cell_start[c]; k < cell_start[c + 1]; ++k) pts[cell_points[k]].cls = PointClass::Building;
  }
  return res;
}

}  // namespace twin::lidar
