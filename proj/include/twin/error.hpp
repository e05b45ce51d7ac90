#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace twin {

enum class Errc {
  domain,
  degenerate_input,
  format,
  unsupported,
  truncated,
  range,
  parse,
  alignment,
  not_found,
  empty_scene,
  no_ground,
  validation,
  decode,
  config,
  missing_input,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::domain: return "domain";
    case Errc::degenerate_input: return "degenerate_input";
    case Errc::format: return "format";
    case Errc::unsupported: return "unsupported";
    case Errc::truncated: return "truncated";
    case Errc::range: return "range";
    case Errc::parse: return "parse";
    case Errc::alignment: return "alignment";
    case Errc::not_found: return "not_found";
    case Errc::empty_scene: return "empty_scene";
    case Errc::no_ground: return "no_ground";
    case Errc::validation: return "validation";
    case Errc::decode: return "decode";
    case Errc::config: return "config";
    case Errc::missing_input: return "missing_input";
  }
  return "unknown";
}

/// Library-wide exception. `section` and `offset` are set by binary decoders
/// so callers can report where a payload stopped making sense.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Error(Errc code, const std::string& message, std::string section, std::size_t offset)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message + " [section " +
                           section + ", byte " + std::to_string(offset) + "]"),
        code_(code),
        section_(std::move(section)),
        offset_(offset) {}

  Errc code() const noexcept { return code_; }
  const std::string& section() const noexcept { return section_; }
  std::optional<std::size_t> offset() const noexcept { return offset_; }

 private:
  Errc code_;
  std::string section_;
  std::optional<std::size_t> offset_;
};

}  // namespace twin
