#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <regex>

#include "support/pipeline_fixture.hpp"

using namespace twin;
using namespace twin::pipeline;
namespace fs = std::filesystem;
using twin::testing::slurp;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

/// Runs the twin binary with the given arguments.
CliResult run_cli(const std::string& args, const fs::path& scratch) {
  const auto err_file = scratch / "stderr.txt";
  const std::string cmd = std::string(TWIN_CLI) + " " + args + " 2>" + err_file.string();
  CliResult r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), p)) > 0) r.out.append(buf, n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err_file);
  return r;
}

/// Relative path -> contents for every regular file under `root`.
std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  return out;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream ss(s);
  std::string l;
  while (std::getline(ss, l)) out.push_back(l);
  return out;
}

nlohmann::json default_json() {
  std::ifstream in(twin::testing::default_config_path());
  return nlohmann::json::parse(in);
}

std::string config_error(const nlohmann::json& j) {
  try {
    parse_config(j.dump());
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::config);
    return e.what();
  }
  ADD_FAILURE() << "config accepted";
  return {};
}

}  // namespace

// --- config ------------------------------------------------------------------

TEST(Config, DefaultDeclaresTheScenarioGrid) {
  const auto c = load_config(twin::testing::default_config_path());
  EXPECT_EQ(c.time_horizons, (std::vector<int>{2022, 2040, 2070}));
  EXPECT_EQ(c.weather_conditions,
            (std::vector<std::string>{"EWL1R", "EWL10R", "EWL50R", "EWL100R", "Cat1", "Cat2", "Cat3", "Cat4"}));
  ASSERT_TRUE(c.synthetic_water.has_value());
  EXPECT_EQ(c.legend.size(), 5u);
  EXPECT_EQ(c.synth.seed, 7u);
  EXPECT_EQ(c.synth.n_buildings, 50);
  // Relative work_dir resolves against the config file's directory.
  EXPECT_EQ(c.paths.work_dir.lexically_normal(), (twin::testing::default_config_path().parent_path() / "../out").lexically_normal());
}

TEST(Config, EveryUnknownKeyIsListed) {
  auto j = default_json();
  j["synth"]["bogus"] = 1;
  j["extra_section"] = {};
  j["legend"][1]["colour"] = "red";
  const auto msg = config_error(j);
  EXPECT_NE(msg.find("synth.bogus: unknown key"), std::string::npos) << msg;
  EXPECT_NE(msg.find("extra_section: unknown key"), std::string::npos) << msg;
  EXPECT_NE(msg.find("legend[1].colour: unknown key"), std::string::npos) << msg;
}

TEST(Config, TypeAndValueProblemsAreListedTogether) {
  auto j = default_json();
  j["dem"]["cell"] = "one";
  j["tiling"]["max_per_leaf"] = 0;
  j["legend"][2]["depth_m"] = 0.1;
  j["server"]["port"] = 70000;
  const auto msg = config_error(j);
  for (const char* key : {"dem.cell: wrong type", "tiling.max_per_leaf", "legend[2].depth_m", "server.port"})
    EXPECT_NE(msg.find(key), std::string::npos) << key << "\n" << msg;
}

TEST(Config, ScenarioAxesAreValidated) {
  auto j = default_json();
  j["scenarios"]["weather_conditions"] = {"EWL1R", "EWL1R"};
  EXPECT_NE(config_error(j).find("scenarios"), std::string::npos);
  j = default_json();
  j["scenarios"]["weather_conditions"] = {"bad/label"};
  EXPECT_NE(config_error(j).find("scenarios"), std::string::npos);
  j = default_json();
  j["scenarios"]["synthetic_water_levels"]["base_wse_m"].erase("Cat4");
  EXPECT_NE(config_error(j).find("base_wse_m.Cat4: missing"), std::string::npos);
  j = default_json();
  j.erase("scenarios");
  EXPECT_NE(config_error(j).find("scenarios"), std::string::npos);
  j = default_json();
  j.erase("legend");
  EXPECT_NE(config_error(j).find("legend"), std::string::npos);
}

TEST(Config, MalformedJsonIsAConfigError) {
  try {
    parse_config("{\"anchor\": ");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::config);
  }
}

TEST(Config, MissingFileIsMissingInput) {
  try {
    load_config("/nonexistent/twin.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::missing_input);
  }
}

// --- stages in process -------------------------------------------------------

TEST(Stages, AxesComeFromConfig) {
  const auto dir = twin::testing::scratch_dir("axes");
  auto j = twin::testing::small_config_json(dir, 6, 100);
  j["scenarios"] = {{"time_horizons", {2030, 2050}},
                    {"weather_conditions", {"low", "mid", "high"}},
                    {"synthetic_water_levels",
                     {{"base_wse_m", {{"low", 0.5}, {"mid", 1.5}, {"high", 3.0}}}, {"rise_m", {{"2030", 0.0}, {"2050", 0.4}}}}}};
  const auto c = parse_config(j.dump());
  twin::testing::run_pipeline(c);
  const auto index = read_json(c.paths.resolve(c.paths.summaries_dir) / "index.json");
  ASSERT_EQ(index.size(), 6u);
  EXPECT_EQ(index[0]["year"], 2030);
  EXPECT_EQ(index[0]["weather"], "low");
  EXPECT_EQ(index[5]["year"], 2050);
  EXPECT_EQ(index[5]["weather"], "high");
  EXPECT_TRUE(fs::exists(summary_path(c, 2050, "mid")));
  fs::remove_all(dir);
}

TEST(Stages, IngestModeReadsProvidedRasters) {
  const auto dir = twin::testing::scratch_dir("ingest");
  auto c = twin::testing::small_config(dir, 6, 100);
  twin::testing::run_pipeline(c);
  // Replace one raster with a distinct depth and drop the synthetic levels.
  const auto dem = load_dem(c);
  write_text(depth_raster_path(c, 2040, "Cat2"), geo::write_ascii_grid(flood::uniform_flood(dem, 9.5)));
  c.synthetic_water.reset();
  EXPECT_NE(run_flood(c).line().find("mode=ingest"), std::string::npos);
  run_assess(c);
  const auto s = read_json(summary_path(c, 2040, "Cat2"));
  const auto expected = flood::summarize_depth(flood::uniform_flood(dem, 9.5), load_buildings(c), load_roads(c),
                                               load_assets(c), c.thresholds);
  EXPECT_EQ(s["buildings"]["flooded"], expected.buildings.flooded);
  EXPECT_EQ(s["roads"]["pct"], expected.roads.pct);
  // A missing raster is a missing input.
  fs::remove(depth_raster_path(c, 2070, "Cat4"));
  try {
    run_flood(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::missing_input);
    EXPECT_NE(std::string(e.what()).find("Cat4.asc"), std::string::npos);
  }
  fs::remove_all(dir);
}

TEST(Stages, ZeroBuildingsSynthIsTerrainOnly) {
  const auto dir = twin::testing::scratch_dir("empty");
  const auto c = twin::testing::small_config(dir, 0, 80);
  run_synth(c);
  const auto truth = io::parse_truth_json(read_text(c.paths.resolve(c.paths.truth)));
  EXPECT_TRUE(truth.empty());
  EXPECT_GT(fs::file_size(c.paths.resolve(c.paths.las)), 1000u);
  fs::remove_all(dir);
}

// --- command line ------------------------------------------------------------

TEST(Cli, InvalidConfigExitsThreeListingKeys) {
  const auto dir = twin::testing::scratch_dir("cli-bad");
  auto j = twin::testing::small_config_json(dir);
  j["synth"]["colour"] = "blue";
  j["thresholds"]["flood_threshold"] = -1;
  const auto r = run_cli("dem --config " + twin::testing::write_config(dir, j).string(), dir);
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_NE(r.err.find("synth.colour"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("thresholds.flood_threshold"), std::string::npos) << r.err;
  fs::remove_all(dir);
}

TEST(Cli, MissingConfigExitsTwo) {
  const auto dir = twin::testing::scratch_dir("cli-noconf");
  const auto r = run_cli("all --config " + (dir / "absent.json").string(), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("absent.json"), std::string::npos) << r.err;
  fs::remove_all(dir);
}

TEST(Cli, AssessBeforeFloodExitsTwoNamingThePath) {
  const auto dir = twin::testing::scratch_dir("cli-order");
  const auto cfg = twin::testing::write_config(dir, twin::testing::small_config_json(dir / "work", 6, 100)).string();
  for (const char* stage : {"synth", "classify", "dem", "footprints", "reconstruct", "tile"})
    ASSERT_EQ(run_cli(std::string(stage) + " --config " + cfg, dir).code, 0) << stage;
  const auto r = run_cli("assess --config " + cfg, dir);
  EXPECT_EQ(r.code, 2) << r.err;
  EXPECT_NE(r.err.find((dir / "work" / "flood").string()), std::string::npos) << r.err;
  // Stages with no LAS at all also report the missing path.
  const auto r2 = run_cli("classify --config " + cfg + " --out " + (dir / "elsewhere").string(), dir);
  EXPECT_EQ(r2.code, 2);
  EXPECT_NE(r2.err.find("town.las"), std::string::npos) << r2.err;
  fs::remove_all(dir);
}

TEST(Cli, AllIsDeterministicAndResumable) {
  const auto dir = twin::testing::scratch_dir("cli-det");
  const auto cfg = twin::testing::write_config(dir, twin::testing::small_config_json(dir / "unused")).string();
  const auto a = dir / "a", b = dir / "b";
  for (const auto& out : {a, b}) {
    ASSERT_EQ(run_cli("synth --config " + cfg + " --out " + out.string(), dir).code, 0);
    const auto r = run_cli("all --config " + cfg + " --out " + out.string(), dir);
    ASSERT_EQ(r.code, 0) << r.err;
    // One machine-parseable line per stage, in order.
    const auto ls = lines(r.out);
    const std::vector<std::string> order{"classify", "dem", "footprints", "reconstruct", "tile", "flood", "assess"};
    ASSERT_EQ(ls.size(), order.size()) << r.out;
    const std::regex line_re(R"(stage=([a-z]+)( [a-z0-9_]+=\S+)* seconds=[0-9.e+-]+)");
    for (std::size_t i = 0; i < ls.size(); ++i) {
      std::smatch m;
      ASSERT_TRUE(std::regex_match(ls[i], m, line_re)) << ls[i];
      EXPECT_EQ(m[1], order[i]);
    }
  }
  const auto ta = tree(a);
  EXPECT_EQ(ta, tree(b));
  EXPECT_EQ(ta.count("summaries/index.json"), 1u);
  std::size_t summaries = 0;
  for (const auto& [name, _] : ta) summaries += name.rfind("summaries/20", 0) == 0;
  EXPECT_EQ(summaries, 24u);
  EXPECT_EQ(ta.count("tileset/tileset.json"), 1u);

  // Delete one stage's outputs and rerun just that stage.
  fs::remove(a / "dem.asc");
  fs::remove_all(a / "tileset");
  fs::remove_all(a / "summaries");
  for (const char* stage : {"dem", "tile", "assess"})
    ASSERT_EQ(run_cli(std::string(stage) + " --config " + cfg + " --out " + a.string(), dir).code, 0) << stage;
  EXPECT_EQ(tree(a), ta);

  // A different seed gives a different town.
  const auto c = dir / "c";
  ASSERT_EQ(run_cli("synth --config " + cfg + " --seed 8 --out " + c.string(), dir).code, 0);
  EXPECT_NE(slurp(c / "input/town.las"), ta.at("input/town.las"));
  fs::remove_all(dir);
}
