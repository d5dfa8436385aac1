#include "exosolve/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "exosolve/errors.hpp"

namespace exosolve {
namespace {

void reject_unknown(const YAML::Node& section, const char* name, const std::set<std::string>& known) {
  if (!section.IsMap()) throw ConfigError(std::string("config section '") + name + "' must be a mapping");
  for (const auto& kv : section) {
    const auto key = kv.first.as<std::string>();
    if (!known.count(key)) throw ConfigError(std::string("unknown key '") + key + "' in section '" + name + "'");
  }
}

template <typename T>
void read(const YAML::Node& section, const char* key, T& out) {
  if (const YAML::Node v = section[key]) {
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
  }
}

}  // namespace

RunConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  RunConfig cfg;
  if (!root || root.IsNull()) return cfg;
  if (!root.IsMap()) throw ConfigError("config root must be a mapping");
  reject_unknown(root, "root", {"estimators", "ssl"});

  if (const YAML::Node est = root["estimators"]) {
    reject_unknown(est, "estimators", {"sigma_ko", "sigma_so", "sigma_a", "lambda_a", "kappa", "topk"});
    auto& d = cfg.estimators.demonstrative;
    read(est, "sigma_ko", d.sigma_ko);
    read(est, "sigma_so", d.sigma_so);
    read(est, "sigma_a", d.sigma_a);
    read(est, "lambda_a", d.pointer_tip_distance);
    read(est, "kappa", cfg.estimators.pointing.kappa);
    int topk = static_cast<int>(cfg.estimators.top_k);
    read(est, "topk", topk);
    if (topk < 1) throw ConfigError("topk must be >= 1");
    cfg.estimators.top_k = static_cast<std::size_t>(topk);
  }
  if (const YAML::Node ssl = root["ssl"]) {
    reject_unknown(ssl, "ssl", {"noise_std_deg", "threshold_deg", "hfov_deg"});
    double noise = rad_to_deg(cfg.ssl.noise_std);
    double hfov = rad_to_deg(cfg.ssl.hfov);
    read(ssl, "noise_std_deg", noise);
    read(ssl, "hfov_deg", hfov);
    cfg.ssl = SSLConfig::from_hfov(deg_to_rad(hfov), deg_to_rad(noise));
    if (ssl["threshold_deg"]) {
      double threshold = 0.0;
      read(ssl, "threshold_deg", threshold);
      cfg.ssl.success_threshold = deg_to_rad(threshold);
    }
  }
  cfg.estimators.validate();
  cfg.ssl.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

}  // namespace exosolve
