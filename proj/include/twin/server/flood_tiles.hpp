#pragma once

// XYZ (slippy-map) flood depth tiles: raw float samples and RGBA PNGs.

#include <png.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "twin/error.hpp"
#include "twin/geo/projection.hpp"
#include "twin/geo/raster.hpp"
#include "twin/pipeline/config.hpp"

namespace twin::server {

inline constexpr int kTileSize = 256;
inline constexpr int kMaxZoom = 22;

/// Depths at the pixel centers of tile (z, x, y), row by row from the north.
/// Nearest-cell sampling; 0 outside the raster, the raster's nodata value on
/// nodata cells.
inline std::vector<float> sample_flood_tile(const geo::Raster& r, const geo::SceneAnchor& anchor, int z, int x,
                                            int y) {
  const double world = 2 * std::numbers::pi * geo::kMercatorRadius;
  const double pixel = world / (kTileSize * std::ldexp(1.0, z));
  std::vector<double> lon(kTileSize), lat(kTileSize);
  for (int i = 0; i < kTileSize; ++i) {
    const double mx = -world / 2 + (static_cast<double>(x) * kTileSize + i + 0.5) * pixel;
    const double my = world / 2 - (static_cast<double>(y) * kTileSize + i + 0.5) * pixel;
    lon[i] = geo::mercator_to_lonlat(mx, 0).lon;
    lat[i] = geo::mercator_to_lonlat(0, my).lat;
  }
  std::vector<float> out(static_cast<std::size_t>(kTileSize) * kTileSize, 0.0f);
  for (int j = 0; j < kTileSize; ++j) {
    for (int i = 0; i < kTileSize; ++i) {
      const auto p = geo::lonlat_to_scene_unchecked(anchor, lon[i], lat[j]);
      const auto cell = r.locate(p.x, p.y);
      if (!cell) continue;
      const double v = r.at(cell->col, cell->row);
      out[static_cast<std::size_t>(j) * kTileSize + i] = static_cast<float>(r.is_nodata(v) ? r.nodata : v);
    }
  }
  return out;
}

/// "FGT1", f32 nodata, then the samples; little-endian.
inline std::string encode_flood_bin(const std::vector<float>& samples, double nodata) {
  std::string out = "FGT1";
  auto put = [&out](float f) {
    unsigned char raw[4];
    std::memcpy(raw, &f, 4);
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + 4);
    out.append(reinterpret_cast<const char*>(raw), 4);
  };
  put(static_cast<float>(nodata));
  for (float f : samples) put(f);
  return out;
}

/// Colour for a depth: clamped to the end stops, linear in between.
inline std::array<std::uint8_t, 4> legend_color(const std::vector<pipeline::LegendStop>& stops, double d) {
  std::array<std::uint8_t, 4> c{};
  if (d <= stops.front().depth_m) {
    for (int k = 0; k < 4; ++k) c[k] = static_cast<std::uint8_t>(stops.front().rgba[k]);
    return c;
  }
  for (std::size_t i = 1; i < stops.size(); ++i) {
    if (d <= stops[i].depth_m) {
      const double t = (d - stops[i - 1].depth_m) / (stops[i].depth_m - stops[i - 1].depth_m);
      for (int k = 0; k < 4; ++k)
        c[k] = static_cast<std::uint8_t>(std::lround(stops[i - 1].rgba[k] + t * (stops[i].rgba[k] - stops[i - 1].rgba[k])));
      return c;
    }
  }
  for (int k = 0; k < 4; ++k) c[k] = static_cast<std::uint8_t>(stops.back().rgba[k]);
  return c;
}

/// 8-bit RGBA PNG of the samples; zero depth and nodata are transparent.
inline std::string render_flood_png(const std::vector<float>& samples, double nodata,
                                    const std::vector<pipeline::LegendStop>& legend) {
  std::vector<std::uint8_t> rgba(samples.size() * 4, 0);
  const float nd = static_cast<float>(nodata);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const float d = samples[i];
    if (!(d > 0) || d == nd) continue;
    const auto c = legend_color(legend, d);
    std::memcpy(&rgba[4 * i], c.data(), 4);
  }

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(Errc::range, "cannot create PNG writer");
  png_infop info = png_create_info_struct(png);
  std::string out;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(Errc::range, "PNG encoding failed");
  }
  png_set_write_fn(
      png, &out,
      [](png_structp p, png_bytep data, png_size_t n) {
        static_cast<std::string*>(png_get_io_ptr(p))->append(reinterpret_cast<const char*>(data), n);
      },
      nullptr);
  png_set_IHDR(png, info, kTileSize, kTileSize, 8, PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  std::vector<png_bytep> rows(kTileSize);
  for (int j = 0; j < kTileSize; ++j) rows[j] = &rgba[static_cast<std::size_t>(j) * kTileSize * 4];
  png_set_rows(png, info, rows.data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

inline nlohmann::ordered_json legend_json(const std::vector<pipeline::LegendStop>& stops) {
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const auto& s : stops) list.push_back({{"depth_m", s.depth_m}, {"rgba", s.rgba}});
  return {{"unit", "m"}, {"transparent", "depth 0 and nodata"}, {"stops", std::move(list)}};
}

}  // namespace twin::server
