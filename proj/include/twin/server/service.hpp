#pragma once

// HTTP routing over a SceneBundle. Requests and responses are plain structs
// so the routing can run with or without a socket.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "twin/flood/flood.hpp"
#include "twin/server/bundle.hpp"
#include "twin/server/flood_tiles.hpp"

namespace twin::server {

struct HttpRequest {
  std::string method = "GET";
  std::string path;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;  // lower-case names
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;

  std::string header(const std::string& name) const {
    for (const auto& [k, v] : headers)
      if (k == name) return v;
    return {};
  }
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string strong_etag(std::string_view body) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "\"%016llx\"", static_cast<unsigned long long>(fnv1a(body)));
  return buf;
}

namespace detail {

inline std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    if (path[i] == '/') {
      ++i;
      continue;
    }
    const auto j = path.find('/', i);
    parts.push_back(path.substr(i, j == std::string::npos ? std::string::npos : j - i));
    if (j == std::string::npos) break;
    i = j;
  }
  return parts;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T v{};
  if (s.empty()) return std::nullopt;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline bool strip_suffix(std::string& s, std::string_view suffix) {
  if (s.size() < suffix.size() || s.compare(s.size() - suffix.size(), suffix.size(), suffix) != 0) return false;
  s.resize(s.size() - suffix.size());
  return true;
}

inline bool etag_matches(const std::string& if_none_match, const std::string& etag) {
  if (if_none_match.empty()) return false;
  std::size_t i = 0;
  while (i < if_none_match.size()) {
    auto j = if_none_match.find(',', i);
    if (j == std::string::npos) j = if_none_match.size();
    std::string tok = if_none_match.substr(i, j - i);
    const auto a = tok.find_first_not_of(" \t"), b = tok.find_last_not_of(" \t");
    tok = a == std::string::npos ? "" : tok.substr(a, b - a + 1);
    if (tok == "*" || tok == etag) return true;
    i = j + 1;
  }
  return false;
}

}  // namespace detail

class Service {
 public:
  explicit Service(const SceneBundle& bundle) : b_(bundle) {}

  HttpResponse handle(const HttpRequest& req) const {
    HttpResponse res;
    if (req.method == "OPTIONS") {
      res.status = 204;
      res.content_type.clear();
      res.headers.emplace_back("Access-Control-Allow-Methods", "GET, OPTIONS");
      res.headers.emplace_back("Access-Control-Allow-Headers", "If-None-Match");
    } else if (req.method != "GET" && req.method != "HEAD") {
      res = error(405, "method_not_allowed", "only GET is supported");
    } else {
      try {
        res = route(req);
      } catch (const Error& e) {
        res = e.code() == Errc::not_found ? error(404, "not_found", e.what()) : error(500, "internal", e.what());
      }
    }
    finish(req, res);
    return res;
  }

  const SceneBundle& bundle() const { return b_; }

 private:
  const SceneBundle& b_;

  static HttpResponse error(int status, const std::string& code, const std::string& detail) {
    HttpResponse r;
    r.status = status;
    r.body = nlohmann::ordered_json{{"error", code}, {"detail", detail}}.dump() + "\n";
    return r;
  }
  static HttpResponse not_found(const std::string& detail) { return error(404, "not_found", detail); }
  static HttpResponse bad_request(const std::string& detail) { return error(400, "bad_request", detail); }

  static HttpResponse ok(std::string body, std::string type = "application/json") {
    HttpResponse r;
    r.body = std::move(body);
    r.content_type = std::move(type);
    return r;
  }
  static HttpResponse ok_json(const nlohmann::ordered_json& j) { return ok(j.dump() + "\n"); }

  void finish(const HttpRequest& req, HttpResponse& res) const {
    const auto& opts = b_.config.server;
    if (const auto it = req.headers.find("origin"); it != req.headers.end()) {
      for (const auto& o : opts.cors_origins) {
        if (o == "*" || o == it->second) {
          res.headers.emplace_back("Access-Control-Allow-Origin", o == "*" ? "*" : it->second);
          res.headers.emplace_back("Vary", "Origin");
          break;
        }
      }
    }
    if (res.status != 200) return;
    const auto etag = strong_etag(res.body);
    res.headers.emplace_back("ETag", etag);
    res.headers.emplace_back("Cache-Control", "public, max-age=" + std::to_string(opts.cache_max_age));
    const auto inm = req.headers.find("if-none-match");
    if (inm != req.headers.end() && detail::etag_matches(inm->second, etag)) {
      res.status = 304;
      res.body.clear();
    }
  }

  HttpResponse route(const HttpRequest& req) const {
    const auto parts = detail::split_path(req.path);
    const auto n = parts.size();
    if (n == 1 && parts[0] == "healthz") return ok("ok", "text/plain");
    if (n < 2 || parts[0] != "api") return not_found("no route for " + req.path);
    const auto& head = parts[1];
    if (n == 2 && head == "scenarios") return scenarios();
    if (n == 2 && head == "tileset.json") return ok(b_.manifest);
    if (n == 3 && head == "tiles") return tile(parts[2]);
    if (n == 3 && head == "assets") return layer(parts[2]);
    if (n == 3 && head == "flood" && parts[2] == "legend") return ok_json(legend_json(b_.config.legend));
    if (n == 7 && head == "flood") return flood_tile(parts[2], parts[3], parts[4], parts[5], parts[6]);
    if (n == 4 && head == "summary") return summary(parts[2], parts[3]);
    if (n == 3 && head == "feature") return feature(parts[2]);
    if (n == 2 && head == "whatif") return whatif(req);
    return not_found("no route for " + req.path);
  }

  HttpResponse scenarios() const {
    const auto& g = b_.grid;
    return ok_json({{"time_horizons", g.time_horizons},
                    {"weather_conditions", g.weather_conditions},
                    {"count", g.size()},
                    {"default", {{"year", g.time_horizons.front()}, {"weather", g.weather_conditions.front()}}}});
  }

  HttpResponse tile(std::string name) const {
    if (!detail::strip_suffix(name, ".ctb") || !b_.content_ids.count(name)) return not_found("unknown tile " + name);
    const auto bytes = pipeline::read_text(b_.tileset_dir / "tiles" / (name + ".ctb"));
    return ok(bytes, "application/octet-stream");
  }

  HttpResponse layer(std::string name) const {
    if (!detail::strip_suffix(name, ".geojson")) return not_found("unknown layer " + name);
    const auto it = b_.layers.find(name);
    if (it == b_.layers.end()) return not_found("unknown layer " + name);
    return ok(it->second, "application/geo+json");
  }

  std::optional<flood::ScenarioKey> scenario_key(const std::string& year, const std::string& weather) const {
    const auto y = detail::parse_number<int>(year);
    if (!y || !b_.grid.contains(*y, weather)) return std::nullopt;
    return flood::ScenarioKey{*y, weather};
  }

  HttpResponse flood_tile(const std::string& year, const std::string& weather, const std::string& zs,
                          const std::string& xs, std::string ys) const {
    const auto key = scenario_key(year, weather);
    if (!key) return not_found("unknown scenario " + year + "/" + weather);
    bool png = false;
    if (detail::strip_suffix(ys, ".png")) {
      png = true;
    } else if (!detail::strip_suffix(ys, ".bin")) {
      return not_found("flood tiles are .png or .bin");
    }
    const auto z = detail::parse_number<int>(zs);
    const auto x = detail::parse_number<long long>(xs), y = detail::parse_number<long long>(ys);
    if (!z || !x || !y || *z < 0 || *z > kMaxZoom) return bad_request("malformed tile address " + zs + "/" + xs + "/" + ys);
    const long long span = 1ll << *z;
    if (*x < 0 || *y < 0 || *x >= span || *y >= span) return bad_request("tile x/y out of range for zoom " + zs);
    const auto& r = b_.grid.raster(key->first, key->second);
    const auto samples = sample_flood_tile(r, b_.config.anchor, *z, static_cast<int>(*x), static_cast<int>(*y));
    if (png) return ok(render_flood_png(samples, r.nodata, b_.config.legend), "image/png");
    return ok(encode_flood_bin(samples, r.nodata), "application/octet-stream");
  }

  HttpResponse summary(const std::string& year, const std::string& weather) const {
    const auto key = scenario_key(year, weather);
    if (!key) return not_found("unknown scenario " + year + "/" + weather);
    return ok_json(flood::summary_json(b_.summaries.at(*key)));
  }

  HttpResponse feature(const std::string& id_text) const {
    const auto id = detail::parse_number<std::uint64_t>(id_text);
    const auto it = id ? b_.building_index.find(*id) : b_.building_index.end();
    if (it == b_.building_index.end()) return not_found("unknown building " + id_text);
    const auto& bl = b_.buildings[it->second];
    nlohmann::ordered_json depths = nlohmann::ordered_json::array();
    for (const auto& key : b_.grid.scenarios()) {
      const auto& e = b_.exposures.at(key)[it->second];
      depths.push_back({{"year", key.first},
                        {"weather", key.second},
                        {"max_depth", e.max_depth},
                        {"mean_depth", e.mean_depth},
                        {"flooded", e.flooded},
                        {"coverage", e.coverage}});
    }
    return ok_json({{"id", bl.id},
                    {"county", bl.attributes.county},
                    {"municipality", bl.attributes.municipality},
                    {"hazard_tags", bl.attributes.hazard_tags},
                    {"base_elevation", bl.base_elevation},
                    {"roof_height", bl.max_roof_z() - bl.base_elevation},
                    {"area", bl.footprint.area},
                    {"depths", std::move(depths)}});
  }

  HttpResponse whatif(const HttpRequest& req) const {
    const auto it = req.query.find("wse_m");
    if (it == req.query.end()) return bad_request("missing wse_m");
    const auto wse = detail::parse_number<double>(it->second);
    if (!wse || !std::isfinite(*wse) || *wse < 0 || *wse > 30)
      return bad_request("wse_m must be a number in [0, 30]");
    const auto s = flood::summarize_depth(flood::uniform_flood(b_.dem, *wse), b_.buildings, b_.roads, b_.assets,
                                          b_.config.thresholds);
    nlohmann::ordered_json j{{"wse_m", *wse}, {"year", nullptr}, {"weather", "whatif"}};
    const auto body = flood::summary_body_json(s);
    for (const auto& [k, v] : body.items()) j[k] = v;
    return ok_json(j);
  }
};

}  // namespace twin::server
