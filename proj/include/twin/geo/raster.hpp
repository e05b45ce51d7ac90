#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "twin/error.hpp"
#include "twin/geo/types.hpp"

namespace twin::geo {

struct CellIndex {
  int col = 0;
  int row = 0;
};

/// Row-major grid anchored at its lower-left corner; row 0 is the northernmost row.
struct Raster {
  double xll = 0.0;
  double yll = 0.0;
  double cell = 1.0;
  int ncols = 1;
  int nrows = 1;
  double nodata = -9999.0;
  std::vector<double> values;

  static Raster filled(double xll, double yll, double cell, int ncols, int nrows, double value,
                       double nodata = -9999.0) {
    Raster r{xll, yll, cell, ncols, nrows, nodata, {}};
    r.values.assign(static_cast<std::size_t>(ncols) * static_cast<std::size_t>(nrows), value);
    r.validate();
    return r;
  }

  void validate() const {
    if (!(cell > 0.0) || ncols < 1 || nrows < 1) {
      throw Error(Errc::validation, "raster needs cell > 0 and at least one row and column");
    }
    if (values.size() != static_cast<std::size_t>(ncols) * static_cast<std::size_t>(nrows)) {
      throw Error(Errc::validation, "raster value count does not match ncols*nrows");
    }
  }

  double xmax() const { return xll + ncols * cell; }
  double ymax() const { return yll + nrows * cell; }

  std::size_t index(int col, int row) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(ncols) + static_cast<std::size_t>(col);
  }
  double at(int col, int row) const { return values[index(col, row)]; }
  double& at(int col, int row) { return values[index(col, row)]; }
  bool is_nodata(double v) const { return v == nodata || std::isnan(v); }
  bool has_data(int col, int row) const { return !is_nodata(at(col, row)); }

  Vec2 cell_center(int col, int row) const {
    return {xll + (col + 0.5) * cell, yll + (nrows - 1 - row + 0.5) * cell};
  }

  /// Cell containing (x, y); cells are half-open on their east and north edges
  /// except along the raster's own boundary.
  std::optional<CellIndex> locate(double x, double y) const {
    if (!(x >= xll && x <= xmax() && y >= yll && y <= ymax())) return std::nullopt;
    int col = static_cast<int>(std::floor((x - xll) / cell));
    int row_from_south = static_cast<int>(std::floor((y - yll) / cell));
    col = std::min(col, ncols - 1);
    row_from_south = std::min(row_from_south, nrows - 1);
    return CellIndex{col, nrows - 1 - row_from_south};
  }

  /// Value of the containing cell, or nullopt outside the grid or on nodata.
  std::optional<double> nearest(double x, double y) const {
    auto c = locate(x, y);
    if (!c || !has_data(c->col, c->row)) return std::nullopt;
    return at(c->col, c->row);
  }

  /// Bilinear interpolation between cell centers. Points between the outermost
  /// centers and the raster edge are clamped. When any of the four supporting
  /// cells is nodata the nearest valid one among them is used instead.
  std::optional<double> bilinear(double x, double y) const {
    if (!(x >= xll && x <= xmax() && y >= yll && y <= ymax())) return std::nullopt;
    const double fx = std::clamp((x - xll) / cell - 0.5, 0.0, static_cast<double>(ncols - 1));
    const double fy_south = std::clamp((y - yll) / cell - 0.5, 0.0, static_cast<double>(nrows - 1));
    const int c0 = std::min(static_cast<int>(std::floor(fx)), std::max(ncols - 2, 0));
    const int s0 = std::min(static_cast<int>(std::floor(fy_south)), std::max(nrows - 2, 0));
    const int c1 = std::min(c0 + 1, ncols - 1);
    const int s1 = std::min(s0 + 1, nrows - 1);
    const double tx = fx - c0;
    const double ty = fy_south - s0;
    const int r0 = nrows - 1 - s0;
    const int r1 = nrows - 1 - s1;
    const double v00 = at(c0, r0), v10 = at(c1, r0), v01 = at(c0, r1), v11 = at(c1, r1);
    if (!is_nodata(v00) && !is_nodata(v10) && !is_nodata(v01) && !is_nodata(v11)) {
      return (1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10 + (1 - tx) * ty * v01 + tx * ty * v11;
    }
    struct Candidate {
      double v, tx, ty;
    };
    const Candidate cands[4] = {{v00, 0, 0}, {v10, 1, 0}, {v01, 0, 1}, {v11, 1, 1}};
    std::optional<double> best;
    double best_d = INFINITY;
    for (const auto& c : cands) {
      if (is_nodata(c.v)) continue;
      const double d = (c.tx - tx) * (c.tx - tx) + (c.ty - ty) * (c.ty - ty);
      if (d < best_d) {
        best_d = d;
        best = c.v;
      }
    }
    return best;
  }

  bool same_geometry(const Raster& o, double tol = 1e-6) const {
    return ncols == o.ncols && nrows == o.nrows && std::abs(xll - o.xll) <= tol &&
           std::abs(yll - o.yll) <= tol && std::abs(cell - o.cell) <= tol;
  }

  friend bool operator==(const Raster&, const Raster&) = default;
};

}  // namespace twin::geo
