#pragma once

// Small end-to-end scenes built from the shipped default config.

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "twin/pipeline/config.hpp"
#include "twin/pipeline/stages.hpp"

namespace twin::testing {

namespace fs = std::filesystem;

inline fs::path default_config_path() { return fs::path(TWIN_SOURCE_DIR) / "config" / "default.json"; }

/// Fresh, empty scratch directory unique to this process and label.
inline fs::path scratch_dir(const std::string& label) {
  const auto d = fs::temp_directory_path() / ("twin-" + label + "-" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

/// The default config document with a smaller synthetic town.
inline nlohmann::json small_config_json(const fs::path& work_dir, int n_buildings = 15, double extent = 140) {
  std::ifstream in(default_config_path());
  auto j = nlohmann::json::parse(in);
  j["paths"]["work_dir"] = work_dir.string();
  j["synth"]["n_buildings"] = n_buildings;
  j["synth"]["extent_m"] = extent;
  j["synth"]["n_assets"] = 24;
  return j;
}

/// Writes the config next to the artifacts and returns its path.
inline fs::path write_config(const fs::path& dir, const nlohmann::json& j) {
  const auto p = dir / "config.json";
  std::ofstream(p) << j.dump(1);
  return p;
}

inline pipeline::PipelineConfig small_config(const fs::path& work_dir, int n_buildings = 15, double extent = 140) {
  return pipeline::parse_config(small_config_json(work_dir, n_buildings, extent).dump());
}

/// synth, then every stage through assess.
inline void run_pipeline(const pipeline::PipelineConfig& c) {
  pipeline::run_synth(c);
  pipeline::run_classify(c);
  pipeline::run_dem(c);
  pipeline::run_footprints(c);
  pipeline::run_reconstruct(c);
  pipeline::run_tile(c);
  pipeline::run_flood(c);
  pipeline::run_assess(c);
}

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace twin::testing
