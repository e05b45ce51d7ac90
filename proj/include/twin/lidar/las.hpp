#pragma once

// ASPRS LAS 1.0-1.4 reader (point formats 0, 1, 2, 3, 6) and a LAS 1.2
// format-0 writer. All multi-byte fields are little-endian.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "twin/error.hpp"
#include "twin/lidar/point_cloud.hpp"

namespace twin::lidar {

namespace las {

inline constexpr std::size_t kHeader12Size = 227;
inline constexpr std::size_t kHeader14Size = 375;

inline std::size_t min_record_length(std::uint8_t format) {
  switch (format) {
    case 0: return 20;
    case 1: return 28;
    case 2: return 26;
    case 3: return 34;
    case 6: return 30;
    default: return 0;
  }
}

inline PointClass from_las_class(std::uint8_t code) {
  switch (code) {
    case 2: return PointClass::Ground;
    case 6: return PointClass::Building;
    case 7: return PointClass::Noise;
    default: return PointClass::Unclassified;
  }
}

inline std::uint8_t to_las_class(PointClass c) {
  switch (c) {
    case PointClass::Ground: return 2;
    case PointClass::Building: return 6;
    case PointClass::Noise: return 7;
    case PointClass::Unclassified: return 1;
  }
  return 1;
}

/// Bounds-checked little-endian cursor over a byte buffer.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T at(std::size_t offset, const char* section) const {
    if (offset + sizeof(T) > bytes_.size()) {
      throw Error(Errc::truncated, std::string("file ends inside ") + section, section, bytes_.size());
    }
    T v;
    std::memcpy(&v, bytes_.data() + offset, sizeof(T));
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
      auto* raw = reinterpret_cast<unsigned char*>(&v);
      std::reverse(raw, raw + sizeof(T));
    }
    return v;
  }

  std::size_t size() const { return bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) std::reverse(raw, raw + sizeof(T));
    out.insert(out.end(), raw, raw + sizeof(T));
  }
  void put_bytes(const char* s, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(s[i]));
  }
  void pad(std::size_t n) { out.insert(out.end(), n, 0); }

  std::vector<std::uint8_t> out;
};

}  // namespace las

inline PointCloud parse_las(std::span<const std::uint8_t> bytes) {
  las::Reader rd(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "LASF", 4) != 0) {
    throw Error(Errc::format, "missing LASF signature");
  }
  const auto major = rd.at<std::uint8_t>(24, "header");
  const auto minor = rd.at<std::uint8_t>(25, "header");
  if (major != 1 || minor > 4) {
    throw Error(Errc::unsupported, "LAS version " + std::to_string(major) + "." + std::to_string(minor));
  }
  const auto header_size = rd.at<std::uint16_t>(94, "header");
  const auto point_offset = rd.at<std::uint32_t>(96, "header");
  const auto format_raw = rd.at<std::uint8_t>(104, "header");
  // bits 6-7 flag LAZ compression
  if (format_raw & 0xC0) throw Error(Errc::unsupported, "compressed point data");
  const std::uint8_t format = format_raw & 0x3F;
  const auto record_length = rd.at<std::uint16_t>(105, "header");
  std::uint64_t count = rd.at<std::uint32_t>(107, "header");
  if (minor >= 4) {
    if (header_size < las::kHeader14Size) throw Error(Errc::format, "LAS 1.4 header too small");
    const auto count64 = rd.at<std::uint64_t>(247, "header");
    if (count64 != 0 || count == 0) count = count64;
  }
  const std::size_t min_len = las::min_record_length(format);
  if (min_len == 0) throw Error(Errc::unsupported, "point data record format " + std::to_string(format));
  if (record_length < min_len) throw Error(Errc::format, "point record length shorter than its format");
  if (point_offset < header_size) throw Error(Errc::format, "point data overlaps the header");

  PointCloud cloud;
  cloud.scale = {rd.at<double>(131, "header"), rd.at<double>(139, "header"), rd.at<double>(147, "header")};
  cloud.offset = {rd.at<double>(155, "header"), rd.at<double>(163, "header"), rd.at<double>(171, "header")};
  for (double s : cloud.scale)
    if (!(s > 0) || !std::isfinite(s)) throw Error(Errc::format, "non-positive coordinate scale");

  // variable-length records between header and point data are skipped
  const std::size_t available = bytes.size() > point_offset ? bytes.size() - point_offset : 0;
  if (count > available / record_length) {
    const std::size_t first_bad = point_offset + (available / record_length) * record_length;
    throw Error(Errc::truncated,
                "expected " + std::to_string(count) + " point records, file holds " +
                    std::to_string(available / record_length),
                "point records", first_bad);
  }

  cloud.points.reserve(static_cast<std::size_t>(count));
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::size_t base = point_offset + static_cast<std::size_t>(i) * record_length;
    const auto xi = rd.at<std::int32_t>(base, "point records");
    const auto yi = rd.at<std::int32_t>(base + 4, "point records");
    const auto zi = rd.at<std::int32_t>(base + 8, "point records");
    const auto intensity = rd.at<std::uint16_t>(base + 12, "point records");
    std::uint8_t code = 0;
    if (format == 6) {
      code = rd.at<std::uint8_t>(base + 16, "point records");
    } else {
      code = rd.at<std::uint8_t>(base + 15, "point records") & 0x1F;
    }
    LidarPoint p;
    p.p = {xi * cloud.scale[0] + cloud.offset[0], yi * cloud.scale[1] + cloud.offset[1],
           zi * cloud.scale[2] + cloud.offset[2]};
    p.cls = las::from_las_class(code);
    p.intensity = intensity;
    cloud.points.push_back(p);
  }
  return cloud;
}

inline PointCloud read_las_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::missing_input, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_las(bytes);
}

/// LAS 1.2, point format 0, using the cloud's scale and offset.
inline std::vector<std::uint8_t> write_las(const PointCloud& cloud) {
  for (double s : cloud.scale)
    if (!(s > 0) || !std::isfinite(s)) throw Error(Errc::range, "scale must be positive");

  std::vector<std::array<std::int32_t, 3>> ints;
  ints.reserve(cloud.size());
  std::array<double, 3> lo{INFINITY, INFINITY, INFINITY}, hi{-INFINITY, -INFINITY, -INFINITY};
  for (const auto& pt : cloud.points) {
    const double c[3] = {pt.p.x, pt.p.y, pt.p.z};
    std::array<std::int32_t, 3> q{};
    for (int a = 0; a < 3; ++a) {
      const double scaled = std::round((c[a] - cloud.offset[a]) / cloud.scale[a]);
      if (!(scaled >= std::numeric_limits<std::int32_t>::min() && scaled <= std::numeric_limits<std::int32_t>::max())) {
        throw Error(Errc::range, "coordinate does not fit a 32-bit scaled integer");
      }
      q[a] = static_cast<std::int32_t>(scaled);
      lo[a] = std::min(lo[a], c[a]);
      hi[a] = std::max(hi[a], c[a]);
    }
    ints.push_back(q);
  }
  if (cloud.empty()) lo = hi = {0, 0, 0};
  if (cloud.size() > std::numeric_limits<std::uint32_t>::max()) throw Error(Errc::range, "too many points for LAS 1.2");

  las::Writer w;
  w.out.reserve(las::kHeader12Size + cloud.size() * 20);
  w.put_bytes("LASF", 4);
  w.put<std::uint16_t>(0);  // file source id
  w.put<std::uint16_t>(0);  // global encoding
  w.pad(16);                // project GUID
  w.put<std::uint8_t>(1);
  w.put<std::uint8_t>(2);
  char system_id[32] = "twin synthetic";
  char software[32] = "twin";
  w.put_bytes(system_id, 32);
  w.put_bytes(software, 32);
  w.put<std::uint16_t>(1);     // creation day of year
  w.put<std::uint16_t>(2024);  // creation year
  w.put<std::uint16_t>(las::kHeader12Size);
  w.put<std::uint32_t>(las::kHeader12Size);
  w.put<std::uint32_t>(0);  // VLRs
  w.put<std::uint8_t>(0);   // point format
  w.put<std::uint16_t>(20);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cloud.size()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cloud.size()));  // all single returns
  for (int i = 0; i < 4; ++i) w.put<std::uint32_t>(0);
  for (double s : cloud.scale) w.put<double>(s);
  for (double o : cloud.offset) w.put<double>(o);
  for (int a = 0; a < 3; ++a) {
    w.put<double>(hi[a]);
    w.put<double>(lo[a]);
  }
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& pt = cloud.points[i];
    w.put<std::int32_t>(ints[i][0]);
    w.put<std::int32_t>(ints[i][1]);
    w.put<std::int32_t>(ints[i][2]);
    w.put<std::uint16_t>(pt.intensity.value_or(0));
    w.put<std::uint8_t>(0x09);  // return 1 of 1
    w.put<std::uint8_t>(las::to_las_class(pt.cls));
    w.put<std::int8_t>(0);
    w.put<std::uint8_t>(0);
    w.put<std::uint16_t>(0);
  }
  return std::move(w.out);
}

inline void write_las_file(const PointCloud& cloud, const std::string& path) {
  const auto bytes = write_las(cloud);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::missing_input, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace twin::lidar
