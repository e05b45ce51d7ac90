// twin: command-line driver for the pipeline stages and the HTTP server.
//
//   twin <stage> --config <path> [--seed N] [--out DIR]
//   twin serve --config <path> [--out DIR] [--host H] [--port P] [--cors-origin O]... [--max-age S]
//
// Exit codes: 0 success, 1 failure, 2 missing input, 3 invalid config.

#include <csignal>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "twin/pipeline/config.hpp"
#include "twin/pipeline/stages.hpp"
#include "twin/server/bundle.hpp"
#include "twin/server/http.hpp"

namespace {

using namespace twin;

int exit_code(Errc c) {
  switch (c) {
    case Errc::missing_input: return 2;
    case Errc::config: return 3;
    default: return 1;
  }
}

twin::server::HttpServer* g_server = nullptr;

int serve(const pipeline::PipelineConfig& cfg) {
  const auto bundle = server::load_bundle(cfg);
  server::HttpServer http(bundle, cfg.server.host, cfg.server.port);
  g_server = &http;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  std::cout << "stage=serve host=" << cfg.server.host << " port=" << http.port()
            << " buildings=" << bundle.buildings.size() << " scenarios=" << bundle.grid.size() << std::endl;
  http.listen();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coastal digital twin pipeline"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<int> port;
  std::optional<std::string> host;
  std::vector<std::string> cors;
  std::optional<int> max_age;

  const std::vector<std::pair<std::string, std::string>> stages{
      {"synth", "generate a synthetic town (LAS, truth, assets, roads)"},
      {"classify", "label ground and building points"},
      {"dem", "build the terrain model from ground points"},
      {"footprints", "extract building footprints"},
      {"reconstruct", "reconstruct LOD2 buildings"},
      {"tile", "write the tileset manifest and tile payloads"},
      {"flood", "produce or ingest scenario depth rasters"},
      {"assess", "compute exposure summaries for every scenario"},
      {"all", "run classify through assess"},
      {"serve", "serve the artifacts over HTTP"}};
  for (const auto& [name, help] : stages) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "pipeline config file")->required();
    sub->add_option("--seed", seed, "synthetic scene seed (overrides the config)");
    sub->add_option("--out", out_dir, "artifact directory (overrides paths.work_dir)");
    if (name == "serve") {
      sub->add_option("--host", host, "bind address")->envname("TWIN_HOST");
      sub->add_option("--port", port, "listen port")->envname("TWIN_PORT");
      sub->add_option("--cors-origin", cors, "allowed CORS origin (repeatable)")->envname("TWIN_CORS_ORIGINS")->delimiter(',');
      sub->add_option("--max-age", max_age, "Cache-Control max-age in seconds")->envname("TWIN_MAX_AGE")->check(CLI::NonNegativeNumber);
    }
  }
  CLI11_PARSE(app, argc, argv);
  const std::string stage = app.get_subcommands().front()->get_name();

  try {
    auto cfg = pipeline::load_config(config_path);
    if (seed) cfg.synth.seed = *seed;
    if (!out_dir.empty()) cfg.paths.work_dir = out_dir;
    if (host) cfg.server.host = *host;
    if (port) cfg.server.port = *port;
    if (!cors.empty()) cfg.server.cors_origins = cors;
    if (max_age) cfg.server.cache_max_age = *max_age;

    using Runner = pipeline::StageSummary (*)(const pipeline::PipelineConfig&);
    const std::vector<std::pair<std::string, Runner>> runners{
        {"synth", pipeline::run_synth},         {"classify", pipeline::run_classify}, {"dem", pipeline::run_dem},
        {"footprints", pipeline::run_footprints}, {"reconstruct", pipeline::run_reconstruct},
        {"tile", pipeline::run_tile},           {"flood", pipeline::run_flood},       {"assess", pipeline::run_assess}};
    if (stage == "serve") return serve(cfg);
    for (const auto& [name, run] : runners) {
      if (stage == name || (stage == "all" && name != "synth")) std::cout << run(cfg).line() << std::endl;
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "twin " << stage << ": " << e.what() << std::endl;
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "twin " << stage << ": " << e.what() << std::endl;
    return 1;
  }
}
