#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <istream>
#include <map>
#include <sstream>
#include <string>

#include "twin/error.hpp"
#include "twin/geo/raster.hpp"

namespace twin::geo {

/// Shortest decimal text that reads back as exactly `v`.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, const std::string& what) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) throw Error(Errc::parse, "bad number '" + std::string(text) + "' in " + what);
  return v;
}

/// Reads an ESRI ASCII grid. Header keys are case-insensitive; `xllcenter`
/// and `yllcenter` are accepted and converted to corner coordinates.
inline Raster read_ascii_grid(std::istream& in) {
  std::map<std::string, std::string> header;
  std::string token;
  std::string pending_value;
  // header lines are "key value"; the first numeric token ends the header
  while (in >> token) {
    const bool numeric = std::isdigit(static_cast<unsigned char>(token[0])) || token[0] == '-' ||
                         token[0] == '+' || token[0] == '.';
    if (numeric) {
      pending_value = token;
      break;
    }
    std::string key = token;
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
    std::string value;
    if (!(in >> value)) throw Error(Errc::parse, "header key '" + token + "' has no value");
    if (key != "ncols" && key != "nrows" && key != "xllcorner" && key != "yllcorner" && key != "xllcenter" &&
        key != "yllcenter" && key != "cellsize" && key != "nodata_value") {
      throw Error(Errc::parse, "unknown header key '" + token + "'");
    }
    if (header.count(key)) throw Error(Errc::parse, "duplicate header key '" + token + "'");
    header[key] = value;
  }
  auto require = [&](const std::string& key) -> const std::string& {
    auto it = header.find(key);
    if (it == header.end()) throw Error(Errc::parse, "missing header key '" + key + "'");
    return it->second;
  };
  auto require_int = [&](const std::string& key) {
    const double v = parse_double(require(key), key);
    if (v != static_cast<double>(static_cast<int>(v)) || v < 1) throw Error(Errc::parse, "header key '" + key + "' must be a positive integer");
    return static_cast<int>(v);
  };

  Raster r;
  r.ncols = require_int("ncols");
  r.nrows = require_int("nrows");
  r.cell = parse_double(require("cellsize"), "cellsize");
  if (!(r.cell > 0)) throw Error(Errc::parse, "header key 'cellsize' must be positive");
  if (header.count("xllcorner")) {
    r.xll = parse_double(header["xllcorner"], "xllcorner");
  } else if (header.count("xllcenter")) {
    r.xll = parse_double(header["xllcenter"], "xllcenter") - r.cell / 2;
  } else {
    throw Error(Errc::parse, "missing header key 'xllcorner'");
  }
  if (header.count("yllcorner")) {
    r.yll = parse_double(header["yllcorner"], "yllcorner");
  } else if (header.count("yllcenter")) {
    r.yll = parse_double(header["yllcenter"], "yllcenter") - r.cell / 2;
  } else {
    throw Error(Errc::parse, "missing header key 'yllcorner'");
  }
  r.nodata = header.count("nodata_value") ? parse_double(header["nodata_value"], "NODATA_value") : -9999.0;

  const std::size_t count = static_cast<std::size_t>(r.ncols) * static_cast<std::size_t>(r.nrows);
  r.values.reserve(count);
  if (!pending_value.empty()) r.values.push_back(parse_double(pending_value, "grid values"));
  while (r.values.size() < count && in >> token) r.values.push_back(parse_double(token, "grid values"));
  if (r.values.size() != count) {
    throw Error(Errc::parse, "expected " + std::to_string(count) + " values, found " + std::to_string(r.values.size()));
  }
  if (in >> token) throw Error(Errc::parse, "trailing data after grid values");
  return r;
}

inline Raster read_ascii_grid(const std::string& text) {
  std::istringstream in(text);
  return read_ascii_grid(in);
}

inline std::string write_ascii_grid(const Raster& r) {
  r.validate();
  std::string out;
  out.reserve(r.values.size() * 8 + 128);
  out += "ncols " + std::to_string(r.ncols) + "\n";
  out += "nrows " + std::to_string(r.nrows) + "\n";
  out += "xllcorner " + format_double(r.xll) + "\n";
  out += "yllcorner " + format_double(r.yll) + "\n";
  out += "cellsize " + format_double(r.cell) + "\n";
  out += "NODATA_value " + format_double(r.nodata) + "\n";
  for (int row = 0; row < r.nrows; ++row) {
    for (int col = 0; col < r.ncols; ++col) {
      if (col) out += ' ';
      out += format_double(r.at(col, row));
    }
    out += '\n';
  }
  return out;
}

}  // namespace twin::geo
