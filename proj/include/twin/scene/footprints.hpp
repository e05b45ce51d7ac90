#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <vector>

#include "twin/geo/polygon.hpp"
#include "twin/lidar/point_cloud.hpp"

namespace twin::scene {

struct Footprint {
  std::uint64_t id = 0;
  geo::Polygon polygon;
  double area = 0.0;
};

namespace detail {

/// Binary occupancy grid, column-major from the south-west corner.
struct Mask {
  int nx = 0, ny = 0;
  std::vector<char> v;

  bool get(int i, int j) const { return i >= 0 && j >= 0 && i < nx && j < ny && v[idx(i, j)]; }
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
};

inline Mask morph3(const Mask& m, bool dilate) {
  Mask out = m;
  for (int j = 0; j < m.ny; ++j)
    for (int i = 0; i < m.nx; ++i) {
      bool any = false, all = true;
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          const bool b = m.get(i + di, j + dj);
          any = any || b;
          all = all && b;
        }
      out.v[m.idx(i, j)] = dilate ? any : all;
    }
  return out;
}

/// Fills cells that the outside background cannot reach (holes).
inline bool fill_holes(Mask& m) {
  std::vector<char> outside(m.v.size(), 0);
  std::deque<std::pair<int, int>> q;
  auto push = [&](int i, int j) {
    if (i < 0 || j < 0 || i >= m.nx || j >= m.ny) return;
    const auto k = m.idx(i, j);
    if (m.v[k] || outside[k]) return;
    outside[k] = 1;
    q.emplace_back(i, j);
  };
  for (int i = 0; i < m.nx; ++i) {
    push(i, 0);
    push(i, m.ny - 1);
  }
  for (int j = 0; j < m.ny; ++j) {
    push(0, j);
    push(m.nx - 1, j);
  }
  while (!q.empty()) {
    auto [i, j] = q.front();
    q.pop_front();
    push(i + 1, j);
    push(i - 1, j);
    push(i, j + 1);
    push(i, j - 1);
  }
  bool changed = false;
  for (std::size_t k = 0; k < m.v.size(); ++k)
    if (!m.v[k] && !outside[k]) {
      m.v[k] = 1;
      changed = true;
    }
  return changed;
}

/// Cells touching only diagonally would make the traced boundary touch
/// itself; bridge each such pinch with one extra cell.
inline bool resolve_pinches(Mask& m) {
  bool changed = false;
  for (int j = 0; j + 1 < m.ny; ++j)
    for (int i = 0; i + 1 < m.nx; ++i) {
      const bool a = m.get(i, j), b = m.get(i + 1, j), c = m.get(i, j + 1), d = m.get(i + 1, j + 1);
      if (a && d && !b && !c) {
        m.v[m.idx(i + 1, j)] = 1;
        changed = true;
      } else if (b && c && !a && !d) {
        m.v[m.idx(i, j)] = 1;
        changed = true;
      }
    }
  return changed;
}

/// Traces the single outer boundary of a hole-free, pinch-free mask along
/// cell edges, counter-clockwise, in lattice coordinates.
inline std::vector<std::pair<int, int>> trace_boundary(const Mask& m) {
  // directed edges keep the interior on their left
  std::map<std::pair<int, int>, std::pair<int, int>> next;
  for (int j = 0; j < m.ny; ++j)
    for (int i = 0; i < m.nx; ++i) {
      if (!m.get(i, j)) continue;
      if (!m.get(i, j - 1)) next[{i, j}] = {i + 1, j};
      if (!m.get(i + 1, j)) next[{i + 1, j}] = {i + 1, j + 1};
      if (!m.get(i, j + 1)) next[{i + 1, j + 1}] = {i, j + 1};
      if (!m.get(i - 1, j)) next[{i, j + 1}] = {i, j};
    }
  std::vector<std::pair<int, int>> ring;
  if (next.empty()) return ring;
  const auto start = next.begin()->first;
  auto cur = start;
  do {
    ring.push_back(cur);
    cur = next.at(cur);
  } while (cur != start && ring.size() <= next.size());
  return ring;
}

}  // namespace detail

/// Rasterizes Building points, closes small gaps, and polygonizes each
/// 8-connected component as a simplified counter-clockwise footprint.
/// Interior courtyards are filled: footprints are single rings.
inline std::vector<Footprint> extract_footprints(const lidar::PointCloud& cloud, double cell, double min_area,
                                                 double simplify_tol) {
  if (!(cell > 0)) throw Error(Errc::validation, "footprint cell size must be positive");
  std::vector<Footprint> out;
  const auto pts = cloud.positions(lidar::PointClass::Building);
  if (pts.empty()) return out;

  double xmin = INFINITY, ymin = INFINITY, xmax = -INFINITY, ymax = -INFINITY;
  for (const auto& p : pts) {
    xmin = std::min(xmin, p.x);
    ymin = std::min(ymin, p.y);
    xmax = std::max(xmax, p.x);
    ymax = std::max(ymax, p.y);
  }
  constexpr int pad = 2;
  const double x0 = xmin - pad * cell, y0 = ymin - pad * cell;
  detail::Mask occ;
  occ.nx = static_cast<int>(std::floor((xmax - xmin) / cell)) + 1 + 2 * pad;
  occ.ny = static_cast<int>(std::floor((ymax - ymin) / cell)) + 1 + 2 * pad;
  occ.v.assign(static_cast<std::size_t>(occ.nx) * occ.ny, 0);
  for (const auto& p : pts) {
    const int i = static_cast<int>(std::floor((p.x - x0) / cell));
    const int j = static_cast<int>(std::floor((p.y - y0) / cell));
    occ.v[occ.idx(i, j)] = 1;
  }
  occ = detail::morph3(detail::morph3(occ, true), false);

  std::vector<int> label(occ.v.size(), -1);
  int n_labels = 0;
  for (int j = 0; j < occ.ny; ++j)
    for (int i = 0; i < occ.nx; ++i) {
      if (!occ.get(i, j) || label[occ.idx(i, j)] != -1) continue;
      std::vector<std::pair<int, int>> comp;
      std::deque<std::pair<int, int>> q{{i, j}};
      label[occ.idx(i, j)] = n_labels;
      int ci0 = i, ci1 = i, cj0 = j, cj1 = j;
      while (!q.empty()) {
        auto [a, b] = q.front();
        q.pop_front();
        comp.emplace_back(a, b);
        ci0 = std::min(ci0, a);
        ci1 = std::max(ci1, a);
        cj0 = std::min(cj0, b);
        cj1 = std::max(cj1, b);
        for (int db = -1; db <= 1; ++db)
          for (int da = -1; da <= 1; ++da) {
            if (!occ.get(a + da, b + db)) continue;
            auto& l = label[occ.idx(a + da, b + db)];
            if (l != -1) continue;
            l = n_labels;
            q.emplace_back(a + da, b + db);
          }
      }
      ++n_labels;
      if (static_cast<double>(comp.size()) * cell * cell < min_area) continue;

      // component on its own mask with a one-cell empty margin
      detail::Mask m;
      const int ox = ci0 - 1, oy = cj0 - 1;
      m.nx = ci1 - ci0 + 3;
      m.ny = cj1 - cj0 + 3;
      m.v.assign(static_cast<std::size_t>(m.nx) * m.ny, 0);
      for (auto [a, b] : comp) m.v[m.idx(a - ox, b - oy)] = 1;
      for (int iter = 0; iter < 64; ++iter) {
        const bool p = detail::resolve_pinches(m);
        const bool h = detail::fill_holes(m);
        if (!p && !h) break;
      }

      const auto lattice = detail::trace_boundary(m);
      geo::Ring ring;
      for (auto [a, b] : lattice) ring.push_back({x0 + (a + ox) * cell, y0 + (b + oy) * cell});
      ring.push_back(ring.front());
      ring = geo::drop_collinear(ring);

      geo::Polygon poly;
      for (double tol = simplify_tol; tol > 1e-3 * cell; tol /= 2) {
        geo::Polygon candidate{geo::simplify_ring(ring, tol), {}};
        if (geo::polygon_is_valid(candidate) && geo::ring_signed_area(candidate.exterior) > 0) {
          poly = std::move(candidate);
          break;
        }
      }
      if (poly.exterior.empty()) poly.exterior = ring;

      Footprint f;
      f.id = out.size() + 1;
      f.area = geo::polygon_area(poly);
      f.polygon = std::move(poly);
      out.push_back(std::move(f));
    }
  return out;
}

}  // namespace twin::scene
