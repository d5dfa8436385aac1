#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "exosolve/errors.hpp"
#include "exosolve/scenario.hpp"

using namespace exosolve;
namespace fs = std::filesystem;

namespace {

const fs::path kFixture = fs::path(EXOSOLVE_FIXTURES_DIR) / "pig_on_shelf";

nlohmann::json fixture_doc() {
  std::ifstream in(kFixture / "pig_on_shelf.json");
  return nlohmann::json::parse(in);
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("exosolve_scn_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

SuiteGenConfig small_suite() {
  SuiteGenConfig cfg;
  cfg.user_positions = 2;
  cfg.queries_per_position = 3;
  return cfg;
}

}  // namespace

TEST(Scenario, LoadsFixture) {
  const auto ls = load_scenario(kFixture / "pig_on_shelf.json", Lexicon::defaults());
  EXPECT_EQ(ls.scenario.id, "pig_on_shelf");
  EXPECT_EQ(ls.scenario.target, "pig_1");
  EXPECT_EQ(ls.scenario.seed, 7u);
  EXPECT_EQ(ls.scenario.query(QueryLevel::L3), "Bring me that over there.");
  EXPECT_TRUE(ls.map->find("pig_1"));
  const auto obs = ls.scenario.observation();
  EXPECT_TRUE(obs.pointing_available());
  EXPECT_NEAR(obs.true_bearing, 0.5880, 1e-12);
}

TEST(Scenario, JsonRoundTrip) {
  const auto s = scenario_from_json(fixture_doc());
  const auto again = scenario_from_json(scenario_to_json(s));
  EXPECT_EQ(scenario_to_json(again), scenario_to_json(s));
}

TEST(Scenario, SchemaErrors) {
  auto doc = fixture_doc();
  doc.erase("target");
  EXPECT_THROW(scenario_from_json(doc), ParseError);
  doc = fixture_doc();
  doc["user"]["eye"] = {1.0};
  EXPECT_THROW(scenario_from_json(doc), ParseError);
}

TEST(Scenario, SemanticValidation) {
  const auto map = load_map(kFixture / "map.json");
  const auto lx = Lexicon::defaults();
  auto base = scenario_from_json(fixture_doc());
  EXPECT_NO_THROW(validate_scenario(base, map, lx));

  auto s = base;
  s.target = "unicorn_1";
  EXPECT_THROW(validate_scenario(s, map, lx), ValidationError);

  s = base;
  s.queries[2] = "Bring me that book over there.";
  EXPECT_THROW(validate_scenario(s, map, lx), ValidationError);

  s = base;
  s.queries[1] = "Bring me that pink stuffed animal.";
  EXPECT_THROW(validate_scenario(s, map, lx), ValidationError);

  s = base;
  s.queries[1] = "Bring me that cup over there.";
  EXPECT_THROW(validate_scenario(s, map, lx), ValidationError);

  s = base;
  s.queries[0] = "";
  EXPECT_THROW(validate_scenario(s, map, lx), ValidationError);

  s = base;
  s.attributes["ghost"] = {"cup", {}};
  EXPECT_THROW(validate_scenario(s, map, lx), ValidationError);
}

TEST(Scenario, AttributesOverlayMap) {
  const auto map = load_map(kFixture / "map.json");
  auto s = scenario_from_json(fixture_doc());
  s.attributes["pig_1"] = {"stuffed animal", {"pink", "pig"}};
  const auto attrs = scene_attributes(s, map);
  EXPECT_EQ(attrs.size(), map.size());
  EXPECT_EQ(attrs.at("pig_1").features, (std::vector<std::string>{"pink", "pig"}));
  EXPECT_EQ(attrs.at("book_1").class_label, "book");
}

TEST(Scenario, MissingFileIsParseError) {
  EXPECT_THROW(load_scenario(kFixture / "nope.json", Lexicon::defaults()), ParseError);
}

TEST(SuiteGenerator, ShapeAndValidity) {
  const auto cfg = small_suite();
  const auto suite = generate_suite(cfg, 3);
  EXPECT_EQ(suite.map.size(), 114u);
  ASSERT_EQ(suite.scenarios.size(), 6u);
  const auto lx = Lexicon::defaults();
  for (const auto& s : suite.scenarios) {
    EXPECT_NO_THROW(validate_scenario(s, suite.map, lx)) << s.id;
    const auto& target = suite.map.at(*suite.map.find(s.target));
    int lookalikes = 0;
    for (const auto& o : suite.map.objects())
      if (o.id != target.id && o.class_label == target.class_label && o.features == target.features) ++lookalikes;
    EXPECT_GE(lookalikes, cfg.lookalikes_per_target) << s.id;
    EXPECT_NEAR((s.user.wrist - s.user.eye).norm(), cfg.arm_length, 1e-9);
    EXPECT_NEAR(s.user.eye.z, cfg.eye_height, 1e-12);
  }
}

TEST(SuiteGenerator, DeterministicPerSeed) {
  const auto cfg = small_suite();
  const auto a = generate_suite(cfg, 9), b = generate_suite(cfg, 9), c = generate_suite(cfg, 10);
  EXPECT_EQ(a.map, b.map);
  for (std::size_t i = 0; i < a.scenarios.size(); ++i)
    EXPECT_EQ(scenario_to_json(a.scenarios[i]), scenario_to_json(b.scenarios[i]));
  EXPECT_NE(a.map, c.map);
}

TEST(SuiteGenerator, HiddenFlagPropagates) {
  auto cfg = small_suite();
  cfg.visible_initially = false;
  for (const auto& s : generate_suite(cfg, 1).scenarios) EXPECT_FALSE(s.visible_initially);
}

TEST(SuiteGenerator, WriteThenLoad) {
  const auto dir = scratch_dir("suite");
  const auto suite = generate_suite(small_suite(), 4);
  write_suite(suite, dir);
  const auto loaded = load_suite(dir, Lexicon::defaults());
  ASSERT_EQ(loaded.size(), suite.scenarios.size());
  EXPECT_EQ(*loaded.front().map, suite.map);
  EXPECT_EQ(loaded.front().map.get(), loaded.back().map.get());
  for (std::size_t i = 0; i < loaded.size(); ++i)
    EXPECT_EQ(scenario_to_json(loaded[i].scenario), scenario_to_json(suite.scenarios[i]));
  fs::remove_all(dir);
}
