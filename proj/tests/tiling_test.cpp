#include <gtest/gtest.h>

#include <fstream>
#include <functional>
#include <sstream>

#include "support/oracles.hpp"
#include "support/scenes.hpp"

using namespace twin;
using namespace twin::tiling;

namespace {

const geo::SceneAnchor kAnchor{-83.03, 29.14, "test"};

using twin::testing::one_triangle;
using twin::testing::random_payload;
using twin::testing::read_hex_fixture;

}  // namespace

// --- codec -------------------------------------------------------------------

TEST(Codec, GoldenFixture) {
  const auto golden = read_hex_fixture(std::string(TWIN_TEST_DATA) + "/ctb1_one_triangle.hex");
  ASSERT_EQ(golden.size(), 88u);
  EXPECT_EQ(encode_tile(one_triangle()), golden);
  EXPECT_EQ(decode_tile(golden), one_triangle());
}

TEST(Codec, RandomRoundTrip) {
  synth::Rng rng(77);
  for (int i = 0; i < 1000; ++i) {
    const auto p = random_payload(rng);
    ASSERT_EQ(decode_tile(encode_tile(p)), p) << i;
  }
}

TEST(Codec, EveryTruncationIsStructured) {
  const auto bytes = encode_tile(one_triangle());
  for (std::size_t n = 0; n < bytes.size(); ++n) {
    try {
      decode_tile(std::span<const std::uint8_t>(bytes.data(), n));
      FAIL() << "decoded a " << n << "-byte prefix";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::decode);
      ASSERT_FALSE(e.section().empty());
      ASSERT_TRUE(e.offset().has_value());
      const std::string s = e.section();
      const std::string expect = n < 24 ? "header" : n < 60 ? "vertices" : n < 72 ? "indices" : "features";
      EXPECT_EQ(s, expect) << n;
    }
  }
}

TEST(Codec, MidIndexTruncationNamesIndexSection) {
  const auto bytes = encode_tile(one_triangle());
  try {
    decode_tile(std::span<const std::uint8_t>(bytes.data(), 66));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.section(), "indices");
    EXPECT_EQ(*e.offset(), 60u);
  }
}

TEST(Codec, BadMagicVersionAndIndices) {
  auto bytes = encode_tile(one_triangle());
  auto bad = bytes;
  bad[3] = '2';
  EXPECT_THROW(decode_tile(bad), Error);
  bad = bytes;
  bad[4] = 2;
  try {
    decode_tile(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.section(), "header");
    EXPECT_EQ(*e.offset(), 4u);
  }
  bad = bytes;
  bad[64] = 9;  // second index now points past the vertex buffer
  EXPECT_THROW(decode_tile(bad), Error);
  bad = bytes;
  bad.push_back(0);
  EXPECT_THROW(decode_tile(bad), Error);
  TilePayload odd = one_triangle();
  odd.indices.push_back(0);
  EXPECT_THROW(encode_tile(odd), Error);
}

// --- tileset -----------------------------------------------------------------

TEST(Tileset, SingleBuildingIsRootLeaf) {
  const auto bs = twin::testing::random_buildings(1, 1, 50);
  const auto ts = build_tileset(bs, kAnchor);
  EXPECT_TRUE(ts.root.is_leaf());
  EXPECT_EQ(ts.root.id, "0-0-0");
  ASSERT_TRUE(ts.root.content_uri.has_value());
  EXPECT_EQ(*ts.root.content_uri, "tiles/0-0-0.ctb");
  const auto payload = tile_payload(ts.root, twin::testing::index_by_id(bs));
  EXPECT_EQ(payload.features.size(), 1u);
  EXPECT_NE(payload.attributes.find("\"lod\":2"), std::string::npos);
  const double side = ts.root.bbox.xmax - ts.root.bbox.xmin;
  EXPECT_DOUBLE_EQ(side, ts.root.bbox.ymax - ts.root.bbox.ymin);
  EXPECT_DOUBLE_EQ(ts.root.geometric_error, std::sqrt(2.0) * side);
}

TEST(Tileset, HundredBuildingsPartition) {
  const auto bs = twin::testing::random_buildings(2, 100, 400);
  const auto ts = build_tileset(bs, kAnchor, {10, 8});
  int depth = 0;
  std::set<std::uint64_t> seen;
  std::size_t leaf_total = 0;
  for_each_tile(ts.root, [&](const Tile& t) {
    depth = std::max(depth, t.level);
    if (t.is_leaf()) {
      EXPECT_LE(t.building_ids.size(), 10u);
      leaf_total += t.building_ids.size();
      seen.insert(t.building_ids.begin(), t.building_ids.end());
    } else {
      EXPECT_EQ(t.children.size(), 4u);
      EXPECT_NE(tile_payload(t, twin::testing::index_by_id(bs)).attributes.find("\"lod\":1"), std::string::npos);
    }
  });
  EXPECT_GE(depth, 2);
  EXPECT_EQ(seen.size(), 100u);
  EXPECT_EQ(leaf_total, 100u);
  EXPECT_EQ(ts.building_index.size(), 100u);
}

TEST(Tileset, DepthCapWithCoincidentCentroids) {
  std::vector<scene::Lod2Building> bs;
  for (int i = 0; i < 100; ++i)
    bs.push_back(twin::testing::box_building(static_cast<std::uint64_t>(i + 1), {50, 50}, 10 + i * 0.01, 8, 0, 0, 5, 5));
  // one distant building so the root has room to split
  bs.push_back(twin::testing::box_building(101, {250, 250}, 10, 8, 0, 0, 5, 5));
  const auto ts = build_tileset(bs, kAnchor, {10, 3});
  const Tile* deepest = nullptr;
  for_each_tile(ts.root, [&](const Tile& t) {
    if (t.is_leaf() && t.building_ids.size() >= 100) deepest = &t;
  });
  ASSERT_NE(deepest, nullptr);
  EXPECT_EQ(deepest->level, 3);
  EXPECT_EQ(deepest->building_ids.size(), 100u);
}

TEST(Tileset, EmptySceneIsError) {
  try {
    build_tileset({}, kAnchor);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty_scene);
  }
}

TEST(Tileset, PropertiesOnRandomScenes) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto bs = twin::testing::random_buildings(seed, 20 + static_cast<int>(seed) * 7, 300);
    const auto v = twin::testing::check_tiling(bs, {6, 6}, seed);
    EXPECT_EQ(v.total(), 0u) << "seed " << seed << " containment " << v.containment << " partition " << v.partition
                             << " halving " << v.error_halving << " bbox " << v.child_bbox << " sse "
                             << v.sse_monotonicity << " det " << v.determinism;
  }
}

// --- selection ---------------------------------------------------------------

TEST(Select, BehindAndLookingAway) {
  const auto bs = twin::testing::random_buildings(3, 50, 200);
  const auto ts = build_tileset(bs, kAnchor, {8, 6});
  const auto cam = Camera::look_at({100, -500, 50}, {100, -1000, 50});
  EXPECT_TRUE(select_tiles(ts, cam).empty());
}

TEST(Select, FarAwayGivesRootOnly) {
  const auto bs = twin::testing::random_buildings(4, 50, 200);
  const auto ts = build_tileset(bs, kAnchor, {8, 6});
  const auto cam = Camera::look_at({100, -200000, 1000}, {100, 100, 0});
  EXPECT_LE(screen_space_error(ts.root, cam), 16.0);
  EXPECT_EQ(select_tiles(ts, cam), std::vector<std::string>{"tiles/0-0-0.ctb"});
}

TEST(Select, CloseUpRefinesAndIsSorted) {
  const auto bs = twin::testing::random_buildings(5, 50, 200);
  const auto ts = build_tileset(bs, kAnchor, {8, 6});
  const auto cam = Camera::look_at({100, 100, 150}, {100, 100.01, 0});
  const auto nodes = select_tile_nodes(ts, cam);
  ASSERT_FALSE(nodes.empty());
  for (const auto* t : nodes) EXPECT_GT(t->level, 0);
  for (std::size_t i = 1; i < nodes.size(); ++i)
    EXPECT_LT(std::tie(nodes[i - 1]->level, nodes[i - 1]->x, nodes[i - 1]->y),
              std::tie(nodes[i]->level, nodes[i]->x, nodes[i]->y));
}

TEST(Select, SseFormula) {
  Tile t;
  t.bbox = {0, 0, 0, 10, 10, 10};
  t.geometric_error = 8;
  Camera cam;
  cam.position = {0, -20, 5};
  cam.fov_y = std::numbers::pi / 2;
  cam.viewport_height = 100;
  EXPECT_NEAR(screen_space_error(t, cam), 8 * 100 / (2 * 20 * 1.0), 1e-12);
  cam.position = {5, 5, 5};  // inside: distance floored at 1 m
  EXPECT_NEAR(screen_space_error(t, cam), 8 * 100 / 2.0, 1e-12);
  cam.forward = {0, 0.5, 0};
  EXPECT_THROW(select_tiles(Tileset{}, cam), Error);
}

// --- manifest ----------------------------------------------------------------

TEST(Manifest, SingleLeafDocument) {
  const auto bs = twin::testing::random_buildings(6, 1, 50);
  const auto ts = build_tileset(bs, kAnchor);
  const auto text = tileset_manifest(ts);
  const auto doc = nlohmann::ordered_json::parse(text);
  EXPECT_EQ(doc["root"]["id"], "0-0-0");
  EXPECT_TRUE(doc["root"]["children"].empty());
  EXPECT_EQ(doc["root"]["refine"], "REPLACE");
  std::vector<std::string> keys;
  for (const auto& [k, v] : doc["root"].items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"id", "bbox", "geometric_error", "refine", "content_uri", "children"}));
}

TEST(Manifest, FixedPointAndNodeCount) {
  const auto bs = twin::testing::random_buildings(7, 100, 400);
  const auto ts = build_tileset(bs, kAnchor, {10, 8});
  const auto text = tileset_manifest(ts);
  const auto back = parse_manifest(text);
  EXPECT_EQ(tileset_manifest(back), text);
  std::size_t direct = 0, parsed = 0;
  for_each_tile(ts.root, [&](const Tile&) { ++direct; });
  std::function<void(const nlohmann::ordered_json&)> count = [&](const nlohmann::ordered_json& j) {
    ++parsed;
    for (const auto& c : j["children"]) count(c);
  };
  count(nlohmann::ordered_json::parse(text)["root"]);
  EXPECT_EQ(parsed, direct);
  // rebuilt building lists give the same payloads
  const auto by_id = twin::testing::index_by_id(bs);
  for_each_tile(ts.root, [&](const Tile& t) {
    const auto* t2 = find_tile(back.root, t.id);
    ASSERT_NE(t2, nullptr);
    EXPECT_EQ(t2->building_ids, t.building_ids);
  });
  EXPECT_THROW(parse_manifest("{"), Error);
  EXPECT_THROW(parse_manifest("{}"), Error);
}

TEST(Select, DollyReachesDeeperLevels) {
  const auto bs = twin::testing::random_buildings(8, 80, 300);
  const auto ts = build_tileset(bs, kAnchor, {6, 6});
  const auto cams = twin::testing::approach_cameras(ts, {0.3, -1, 0.8});
  EXPECT_EQ(select_tiles(ts, cams.front()), std::vector<std::string>{"tiles/0-0-0.ctb"});
  int deepest = 0;
  for (const auto* t : select_tile_nodes(ts, cams.back())) deepest = std::max(deepest, t->level);
  EXPECT_GE(deepest, 2);
}
