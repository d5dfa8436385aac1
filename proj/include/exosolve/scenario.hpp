#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "exosolve/perception.hpp"
#include "exosolve/query.hpp"
#include "exosolve/resolver.hpp"
#include "exosolve/semantic_map.hpp"

namespace exosolve {

struct Scenario {
  std::string id;
  /// Map file, relative to the scenario file's directory.
  std::string map_ref = "map.json";
  Skeleton user;
  double user_bearing = 0.0;  // radians, robot frame
  bool visible_initially = true;
  bool has_pointing = true;
  Vec3 robot_position;
  /// Query text for levels 1, 2, 3.
  std::array<std::string, 3> queries;
  std::string target;
  /// Oracle ground truth; objects missing here take class/features from the map.
  SceneAttributes attributes;
  std::uint64_t seed = 0;

  const std::string& query(QueryLevel level) const { return queries[static_cast<std::size_t>(level) - 1]; }
  /// Observation as the scenario defines it, before any visibility gating.
  UserObservation observation() const;
};

nlohmann::json scenario_to_json(const Scenario& s);
/// Throws ParseError on schema violations.
Scenario scenario_from_json(const nlohmann::json& doc);

/// Map-derived attributes overlaid with the scenario's own table.
SceneAttributes scene_attributes(const Scenario& s, const SemanticMap& map);

/// Semantic checks against the map: target exists, attribute ids exist, the
/// level-3 query is demonstrative-only and the level-2 query carries no feature
/// words but keeps the level-1 class. Throws ValidationError.
void validate_scenario(const Scenario& s, const SemanticMap& map, const Lexicon& lexicon);

struct LoadedScenario {
  Scenario scenario;
  std::shared_ptr<const SemanticMap> map;
  std::filesystem::path path;
};

/// Single scenario file plus its map.
LoadedScenario load_scenario(const std::filesystem::path& path, const Lexicon& lexicon);

/// Every *.json in the directory that has a "target" field, sorted by file
/// name; maps are loaded once per distinct map_ref.
std::vector<LoadedScenario> load_suite(const std::filesystem::path& dir, const Lexicon& lexicon);

struct SuiteGenConfig {
  SceneGenConfig scene;
  int user_positions = 6;
  int queries_per_position = 5;
  bool visible_initially = true;
  /// Std-dev of the pointing direction around the true target direction.
  double pointing_noise_deg = 8.0;
  double eye_height = 1.5;
  double arm_length = 0.6;
  double robot_height = 1.0;
  /// Objects added per target that share its class and features, placed away
  /// from the target and off its pointing direction. They make language alone
  /// insufficient, so geometry has to narrow the candidates.
  int lookalikes_per_target = 2;
  double lookalike_min_distance = 2.5;   // m, horizontal, from the target
  double lookalike_min_angle_deg = 35.0;  // from the user's line of sight to the target
  /// Same-class objects with a different color placed close to the target, so
  /// that the class alone does not single it out in its neighbourhood.
  int near_distractors_per_target = 1;
  double near_distractor_max_distance = 1.0;  // m, horizontal, from the target
};

struct GeneratedSuite {
  SemanticMap map;
  std::vector<Scenario> scenarios;
};

/// Deterministic for (config, seed). Each user position draws a floor location;
/// each query picks a demonstrative series and a target whose geometry fits it
/// (near the wrist for "this", near the robot for "that", far along the pointing
/// ray for "that ... over there"). The base map is shrunk so that base objects
/// plus look-alikes total scene.object_count when possible; ids are reassigned
/// in shuffled order afterwards.
GeneratedSuite generate_suite(const SuiteGenConfig& config, std::uint64_t seed);

/// Writes map.json plus one file per scenario.
void write_suite(const GeneratedSuite& suite, const std::filesystem::path& dir);

}  // namespace exosolve
