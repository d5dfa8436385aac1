#include "exosolve/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "exosolve/errors.hpp"
#include "exosolve/rng.hpp"

namespace exosolve {
namespace {

nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v.x, v.y, v.z}); }

Vec3 vec_from(const nlohmann::json& j, const char* what) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw ParseError(std::string(what) + " must have 3 components");
  return {v[0], v[1], v[2]};
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace

UserObservation Scenario::observation() const {
  UserObservation obs;
  obs.skeleton = user;
  obs.has_pointing = has_pointing;
  obs.visible_initially = visible_initially;
  obs.true_bearing = user_bearing;
  return obs;
}

nlohmann::json scenario_to_json(const Scenario& s) {
  nlohmann::json attrs = nlohmann::json::object();
  for (const auto& [id, a] : s.attributes) attrs[id] = {{"class", a.class_label}, {"features", a.features}};
  return {{"id", s.id},
          {"map_ref", s.map_ref},
          {"user",
           {{"eye", vec_json(s.user.eye)},
            {"wrist", vec_json(s.user.wrist)},
            {"bearing", s.user_bearing},
            {"visible_initially", s.visible_initially},
            {"has_pointing", s.has_pointing}}},
          {"robot", {{"position", vec_json(s.robot_position)}}},
          {"queries", {{"1", s.queries[0]}, {"2", s.queries[1]}, {"3", s.queries[2]}}},
          {"target", s.target},
          {"attributes", attrs},
          {"seed", s.seed}};
}

Scenario scenario_from_json(const nlohmann::json& doc) {
  Scenario s;
  try {
    s.id = doc.at("id").get<std::string>();
    s.map_ref = doc.value("map_ref", std::string("map.json"));
    const auto& user = doc.at("user");
    s.user.eye = vec_from(user.at("eye"), "user.eye");
    s.user.wrist = vec_from(user.at("wrist"), "user.wrist");
    s.user_bearing = user.value("bearing", 0.0);
    s.visible_initially = user.value("visible_initially", true);
    s.has_pointing = user.value("has_pointing", true);
    s.robot_position = vec_from(doc.at("robot").at("position"), "robot.position");
    const auto& q = doc.at("queries");
    for (int level = 1; level <= 3; ++level)
      s.queries[static_cast<std::size_t>(level - 1)] = q.at(std::to_string(level)).get<std::string>();
    s.target = doc.at("target").get<std::string>();
    if (auto it = doc.find("attributes"); it != doc.end())
      for (const auto& [id, a] : it->items())
        s.attributes[id] = {a.at("class").get<std::string>(), a.value("features", std::vector<std::string>{})};
    s.seed = doc.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("scenario schema: ") + e.what());
  }
  if (!s.user.eye.finite() || !s.user.wrist.finite() || !s.robot_position.finite() || !std::isfinite(s.user_bearing))
    throw ParseError("scenario " + s.id + ": non-finite geometry");
  return s;
}

SceneAttributes scene_attributes(const Scenario& s, const SemanticMap& map) {
  SceneAttributes attrs;
  for (const auto& o : map.objects()) attrs[o.id] = {o.class_label, o.features};
  for (const auto& [id, a] : s.attributes) attrs[id] = a;
  return attrs;
}

void validate_scenario(const Scenario& s, const SemanticMap& map, const Lexicon& lexicon) {
  const auto fail = [&](const std::string& why) { throw ValidationError("scenario " + s.id + ": " + why); };
  if (!map.find(s.target)) fail("target \"" + s.target + "\" is not in the map");
  for (const auto& [id, _] : s.attributes)
    if (!map.find(id)) fail("attribute table names unknown object \"" + id + "\"");

  const auto vocab = map.class_labels();
  const auto terms = [&](const std::string& text) {
    const auto norm = normalize_text(text, lexicon);
    return std::pair{extract_class_term(norm, lexicon, vocab), extract_feature_terms(norm, lexicon)};
  };
  for (const auto& q : s.queries)
    if (tokenize(q).empty()) fail("empty query");
  const auto [c1, f1] = terms(s.queries[0]);
  const auto [c2, f2] = terms(s.queries[1]);
  const auto [c3, f3] = terms(s.queries[2]);
  if (c3 || !f3.empty()) fail("level-3 query must contain only a demonstrative");
  if (!f2.empty()) fail("level-2 query must not contain feature words");
  if (c1 != c2) fail("level-2 query must keep the level-1 class");
}

LoadedScenario load_scenario(const std::filesystem::path& path, const Lexicon& lexicon) {
  Scenario s = scenario_from_json(read_json(path));
  auto map = std::make_shared<const SemanticMap>(load_map(path.parent_path() / s.map_ref));
  validate_scenario(s, *map, lexicon);
  return {std::move(s), std::move(map), path};
}

std::vector<LoadedScenario> load_suite(const std::filesystem::path& dir, const Lexicon& lexicon) {
  if (!std::filesystem::is_directory(dir)) throw ParseError("suite directory " + dir.string() + " does not exist");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  std::map<std::filesystem::path, std::shared_ptr<const SemanticMap>> maps;
  std::vector<LoadedScenario> out;
  for (const auto& f : files) {
    const nlohmann::json doc = read_json(f);
    if (!doc.is_object() || !doc.contains("target")) continue;
    Scenario s = scenario_from_json(doc);
    const auto map_path = std::filesystem::weakly_canonical(dir / s.map_ref);
    auto& map = maps[map_path];
    if (!map) map = std::make_shared<const SemanticMap>(load_map(map_path));
    validate_scenario(s, *map, lexicon);
    out.push_back({std::move(s), map, f});
  }
  if (out.empty()) throw ParseError("suite " + dir.string() + " contains no scenarios");
  return out;
}

namespace {

double horizontal_distance(const Vec3& a, const Vec3& b) { return std::hypot(a.x - b.x, a.y - b.y); }

Vec3 clamp_to_room(Vec3 p, const RoomBounds& room) {
  p.x = std::clamp(p.x, 0.0, room.width);
  p.y = std::clamp(p.y, 0.0, room.depth);
  return p;
}

std::string two_digits(int v) { return (v < 10 ? "0" : "") + std::to_string(v); }

}  // namespace

GeneratedSuite generate_suite(const SuiteGenConfig& config, std::uint64_t seed) {
  if (config.user_positions < 1 || config.queries_per_position < 1)
    throw ConfigError("suite needs at least one user position and one query");
  if (config.lookalikes_per_target < 0) throw ConfigError("lookalikes_per_target must be >= 0");
  if (config.near_distractors_per_target < 0) throw ConfigError("near_distractors_per_target must be >= 0");
  const int n_scenarios = config.user_positions * config.queries_per_position;
  const int added = n_scenarios * (config.lookalikes_per_target + config.near_distractors_per_target);
  SceneGenConfig base_cfg = config.scene;
  base_cfg.object_count = std::max(config.scene.class_count, config.scene.object_count - added);
  const SemanticMap base = generate_synthetic_map(base_cfg, derive_seed(seed, "map"));
  const RoomBounds& room = config.scene.room;
  const double pointing_noise = deg_to_rad(config.pointing_noise_deg);
  Rng rng(derive_seed(seed, "suite"));

  std::vector<Scenario> scenarios;
  std::vector<std::size_t> target_index;
  for (int p = 0; p < config.user_positions; ++p) {
    const Vec3 floor{rng.uniform(0.5, room.width - 0.5), rng.uniform(0.5, room.depth - 0.5), 0.0};
    const Vec3 eye{floor.x, floor.y, config.eye_height};

    for (int q = 0; q < config.queries_per_position; ++q) {
      auto series = static_cast<DemonstrativeSeries>(rng.below(3));  // KO, SO or A

      const auto pick = [&](auto&& keep) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < base.size(); ++i)
          if (keep(horizontal_distance(base.at(i).position, floor))) idx.push_back(i);
        return idx;
      };
      std::vector<std::size_t> candidates;
      if (series == DemonstrativeSeries::KO) candidates = pick([](double h) { return h >= 0.3 && h <= 1.0; });
      if (series == DemonstrativeSeries::A) candidates = pick([](double h) { return h >= 2.5; });
      if (candidates.empty()) {
        series = DemonstrativeSeries::SO;
        candidates = pick([](double h) { return h >= 1.0; });
        if (candidates.empty()) candidates = pick([](double) { return true; });
      }
      const std::size_t ti = candidates[rng.below(candidates.size())];
      const ObjectEntry& target = base.at(ti);

      Vec3 dir = target.position - eye;
      dir = dir * (1.0 / dir.norm());
      dir = {dir.x + pointing_noise * rng.normal(), dir.y + pointing_noise * rng.normal(),
             dir.z + pointing_noise * rng.normal()};
      dir = dir * (1.0 / dir.norm());

      Scenario s;
      s.id = "s" + two_digits(p) + "_" + two_digits(q);
      s.user = {eye, eye + dir * config.arm_length};
      s.visible_initially = config.visible_initially;
      s.has_pointing = true;
      s.target = target.id;
      s.seed = derive_seed(seed, s.id);

      if (series == DemonstrativeSeries::SO) {
        const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double r = rng.uniform(0.4, 0.9);
        s.robot_position = clamp_to_room(
            {target.position.x + r * std::cos(angle), target.position.y + r * std::sin(angle), config.robot_height}, room);
      } else {
        Vec3 robot;
        for (int attempt = 0; attempt < 100; ++attempt) {
          robot = {rng.uniform(0.3, room.width - 0.3), rng.uniform(0.3, room.depth - 0.3), config.robot_height};
          if (horizontal_distance(robot, target.position) >= 1.5 && horizontal_distance(robot, floor) >= 1.0) break;
        }
        s.robot_position = robot;
      }
      s.user_bearing = wrap_angle(std::atan2(floor.y - s.robot_position.y, floor.x - s.robot_position.x));

      const std::string dem = series == DemonstrativeSeries::KO ? "this" : "that";
      const std::string suffix = series == DemonstrativeSeries::A ? " over there" : "";
      const std::string color = target.features.empty() ? std::string() : target.features.front() + " ";
      s.queries = {"Bring me " + dem + " " + color + target.class_label + suffix + ".",
                   "Bring me " + dem + " " + target.class_label + suffix + ".",
                   "Bring me " + dem + suffix + "."};
      scenarios.push_back(std::move(s));
      target_index.push_back(ti);
    }
  }

  // Look-alikes: same class and features, fresh visual noise, placed where
  // neither the target's neighbourhood nor its line of sight reaches. Near
  // distractors: same class, another color, next to the target.
  std::vector<ObjectEntry> objects = base.objects();
  const ToyEmbeddingProvider embedder(config.scene.d_text, config.scene.d_vis);
  const double min_angle = deg_to_rad(config.lookalike_min_angle_deg);
  for (std::size_t k = 0; k < scenarios.size(); ++k) {
    const Scenario& s = scenarios[k];
    const ObjectEntry& target = base.at(target_index[k]);
    const Vec3 sight = target.position - s.user.eye;
    for (int n = 0; n < config.lookalikes_per_target; ++n) {
      ObjectEntry e = target;
      e.id = target.id + "#" + std::to_string(k) + "." + std::to_string(n);
      for (int attempt = 0; attempt < 200; ++attempt) {
        e.position = {rng.uniform(0.0, room.width), rng.uniform(0.0, room.depth), rng.uniform(0.0, 0.8 * room.height)};
        const Vec3 to = e.position - s.user.eye;
        const double c = sight.dot(to) / (sight.norm() * to.norm());
        if (horizontal_distance(e.position, target.position) >= config.lookalike_min_distance &&
            horizontal_distance(e.position, s.robot_position) >= config.lookalike_min_distance &&
            std::acos(std::clamp(c, -1.0, 1.0)) >= min_angle)
          break;
      }
      e.visual_embedding =
          synthetic_visual_embedding(embedder, e.class_label, e.features, config.scene.visual_noise, rng);
      e.image_ref.reset();
      objects.push_back(std::move(e));
    }
    for (int n = 0; n < config.near_distractors_per_target; ++n) {
      ObjectEntry e = target;
      e.id = target.id + "~" + std::to_string(k) + "." + std::to_string(n);
      if (!e.features.empty() && config.scene.colors.size() > 1) {
        std::string color;
        do {
          color = config.scene.colors[rng.below(config.scene.colors.size())];
        } while (color == target.features.front());
        e.features.front() = color;
      }
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double r = rng.uniform(0.3, config.near_distractor_max_distance);
      e.position = clamp_to_room({target.position.x + r * std::cos(angle), target.position.y + r * std::sin(angle),
                                  std::clamp(target.position.z + rng.uniform(-0.3, 0.3), 0.0, 0.8 * room.height)},
                                 room);
      e.visual_embedding =
          synthetic_visual_embedding(embedder, e.class_label, e.features, config.scene.visual_noise, rng);
      e.image_ref.reset();
      objects.push_back(std::move(e));
    }
  }

  // Shuffle and renumber so that ids carry no hint of which objects were added.
  for (std::size_t i = objects.size(); i > 1; --i)
    std::swap(objects[i - 1], objects[static_cast<std::size_t>(rng.below(i))]);
  const int id_width = std::max(3, static_cast<int>(std::to_string(objects.size() - 1).size()));
  std::map<std::string, std::string> renamed;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string num = std::to_string(i);
    const std::string id = "obj_" + std::string(static_cast<std::size_t>(id_width) - num.size(), '0') + num;
    renamed.emplace(objects[i].id, id);
    objects[i].id = id;
  }
  for (auto& s : scenarios) s.target = renamed.at(s.target);

  SemanticMap map(base.frame_id(), base.d_text(), base.d_vis(), std::move(objects));
  return {std::move(map), std::move(scenarios)};
}

void write_suite(const GeneratedSuite& suite, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_map(suite.map, dir / "map.json");
  for (const auto& s : suite.scenarios) {
    std::ofstream out(dir / (s.id + ".json"));
    if (!out) throw std::runtime_error("cannot write scenario " + s.id);
    out << scenario_to_json(s).dump(1) << '\n';
  }
}

}  // namespace exosolve
