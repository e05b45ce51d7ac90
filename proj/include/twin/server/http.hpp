#pragma once

// Socket front end for Service, on cpp-httplib.

#include <algorithm>
#include <cctype>
#include <memory>
#include <string>
#include <thread>

#include <httplib.h>

#include "twin/error.hpp"
#include "twin/server/service.hpp"

namespace twin::server {

namespace detail {

inline HttpRequest to_request(const httplib::Request& r) {
  HttpRequest out;
  out.method = r.method;
  out.path = r.path;
  for (const auto& [k, v] : r.params) out.query.emplace(k, v);
  for (const auto& [k, v] : r.headers) {
    std::string name = k;
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
    out.headers.emplace(std::move(name), v);
  }
  return out;
}

inline void install(httplib::Server& svr, const Service& service) {
  auto handler = [&service](const httplib::Request& req, httplib::Response& res) {
    const auto out = service.handle(to_request(req));
    res.status = out.status;
    for (const auto& [k, v] : out.headers) res.set_header(k, v);
    if (!out.body.empty() || out.status == 200) res.set_content(out.body, out.content_type);
  };
  svr.Get(".*", handler);
  svr.Options(".*", handler);
  svr.Post(".*", handler);
  svr.Put(".*", handler);
  svr.Delete(".*", handler);
}

}  // namespace detail

/// Serves until stop() on another thread. Binds to `port`, or to any free
/// port when it is 0.
class HttpServer {
 public:
  HttpServer(const SceneBundle& bundle, const std::string& host, int port) : service_(bundle) {
    detail::install(svr_, service_);
    port_ = port == 0 ? svr_.bind_to_any_port(host) : (svr_.bind_to_port(host, port) ? port : -1);
    if (port_ < 0) throw Error(Errc::config, "cannot bind " + host + ":" + std::to_string(port));
  }
  ~HttpServer() { stop(); }
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  int port() const { return port_; }

  /// Blocks while serving.
  void listen() { svr_.listen_after_bind(); }

  /// Serves on a background thread.
  void start() {
    thread_ = std::thread([this] { svr_.listen_after_bind(); });
    svr_.wait_until_ready();
  }

  void stop() {
    svr_.stop();
    if (thread_.joinable()) thread_.join();
  }

 private:
  Service service_;
  httplib::Server svr_;
  int port_ = -1;
  std::thread thread_;
};

}  // namespace twin::server
