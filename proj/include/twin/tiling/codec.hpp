#pragma once

// CTB1 tile payload: a little-endian container for one merged triangle mesh
// with a per-building feature table and UTF-8 attribute text.
//
//   "CTB1" | u32 version | u32 vertex_count | u32 index_count
//   | u32 feature_count | u32 attr_len
//   | vertex_count * (f32 x, f32 y, f32 z)
//   | index_count * u32
//   | feature_count * (u64 building_id, u32 first_index, u32 index_count)
//   | attr_len bytes

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "twin/error.hpp"

namespace twin::tiling {

inline constexpr std::uint32_t kCtbVersion = 1;
inline constexpr std::size_t kCtbHeaderSize = 24;

struct TileFeature {
  std::uint64_t building_id = 0;
  std::uint32_t first_index = 0;
  std::uint32_t index_count = 0;
  friend bool operator==(const TileFeature&, const TileFeature&) = default;
};

struct TilePayload {
  std::vector<std::array<float, 3>> vertices;
  std::vector<std::uint32_t> indices;
  std::vector<TileFeature> features;
  std::string attributes;
  friend bool operator==(const TilePayload&, const TilePayload&) = default;
};

namespace detail {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  unsigned char raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

class Cursor {
 public:
  explicit Cursor(std::span<const std::uint8_t> b) : b_(b) {}

  template <typename T>
  T get(const char* section) {
    if (b_.size() - pos_ < sizeof(T)) {
      throw Error(Errc::decode, std::string("payload truncated in ") + section, section, pos_);
    }
    T v;
    std::memcpy(&v, b_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      auto* raw = reinterpret_cast<unsigned char*>(&v);
      std::reverse(raw, raw + sizeof(T));
    }
    pos_ += sizeof(T);
    return v;
  }
  /// Fails early when the declared section cannot fit in the remaining bytes.
  void need(std::uint64_t bytes, const char* section) const {
    if (b_.size() - pos_ < bytes) {
      throw Error(Errc::decode, std::string("payload truncated in ") + section, section, pos_);
    }
  }
  std::size_t pos() const { return pos_; }
  std::size_t size() const { return b_.size(); }
  const std::uint8_t* here() const { return b_.data() + pos_; }
  void skip(std::size_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> encode_tile(const TilePayload& p) {
  if (p.indices.size() % 3 != 0) throw Error(Errc::validation, "index count must be a multiple of 3");
  if (p.vertices.size() >= (1ull << 32) || p.indices.size() >= (1ull << 32) || p.features.size() >= (1ull << 32) ||
      p.attributes.size() >= (1ull << 32)) {
    throw Error(Errc::range, "tile section exceeds 32-bit counts");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kCtbHeaderSize + 12 * p.vertices.size() + 4 * p.indices.size() + 16 * p.features.size() +
              p.attributes.size());
  for (char ch : {'C', 'T', 'B', '1'}) out.push_back(static_cast<std::uint8_t>(ch));
  detail::put_le<std::uint32_t>(out, kCtbVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.vertices.size()));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.indices.size()));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.features.size()));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.attributes.size()));
  for (const auto& v : p.vertices)
    for (float c : v) detail::put_le<float>(out, c);
  for (auto i : p.indices) detail::put_le<std::uint32_t>(out, i);
  for (const auto& f : p.features) {
    detail::put_le<std::uint64_t>(out, f.building_id);
    detail::put_le<std::uint32_t>(out, f.first_index);
    detail::put_le<std::uint32_t>(out, f.index_count);
  }
  out.insert(out.end(), p.attributes.begin(), p.attributes.end());
  return out;
}

/// Inverse of encode_tile. Every failure is an Error(Errc::decode) carrying
/// the section name and byte offset where decoding stopped.
inline TilePayload decode_tile(std::span<const std::uint8_t> bytes) {
  detail::Cursor c(bytes);
  if (bytes.size() < 4) throw Error(Errc::decode, "payload truncated in header", "header", bytes.size());
  if (std::memcmp(bytes.data(), "CTB1", 4) != 0) throw Error(Errc::decode, "bad magic", "header", 0);
  c.skip(4);
  const auto version = c.get<std::uint32_t>("header");
  if (version != kCtbVersion) throw Error(Errc::decode, "unsupported version " + std::to_string(version), "header", 4);
  const auto nv = c.get<std::uint32_t>("header");
  const auto ni = c.get<std::uint32_t>("header");
  const auto nf = c.get<std::uint32_t>("header");
  const auto na = c.get<std::uint32_t>("header");
  if (ni % 3 != 0) throw Error(Errc::decode, "index count not a multiple of 3", "header", 12);

  TilePayload p;
  c.need(12ull * nv, "vertices");
  p.vertices.resize(nv);
  for (auto& v : p.vertices)
    for (float& x : v) x = c.get<float>("vertices");
  c.need(4ull * ni, "indices");
  p.indices.resize(ni);
  for (auto& i : p.indices) {
    const std::size_t at = c.pos();
    i = c.get<std::uint32_t>("indices");
    if (i >= nv) throw Error(Errc::decode, "index out of range", "indices", at);
  }
  c.need(16ull * nf, "features");
  p.features.resize(nf);
  for (auto& f : p.features) {
    const std::size_t at = c.pos();
    f.building_id = c.get<std::uint64_t>("features");
    f.first_index = c.get<std::uint32_t>("features");
    f.index_count = c.get<std::uint32_t>("features");
    if (static_cast<std::uint64_t>(f.first_index) + f.index_count > ni)
      throw Error(Errc::decode, "feature range outside the index buffer", "features", at);
  }
  c.need(na, "attributes");
  p.attributes.assign(reinterpret_cast<const char*>(c.here()), na);
  c.skip(na);
  if (c.pos() != bytes.size()) throw Error(Errc::decode, "trailing bytes after attributes", "trailer", c.pos());
  return p;
}

}  // namespace twin::tiling
