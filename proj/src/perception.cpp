#include "exosolve/perception.hpp"

#include <cmath>

#include "exosolve/errors.hpp"
#include "exosolve/rng.hpp"

namespace exosolve {

double wrap_angle(double radians) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(radians, two_pi);
  if (r <= -std::numbers::pi) r += two_pi;
  if (r > std::numbers::pi) r -= two_pi;
  return r;
}

SSLConfig SSLConfig::from_hfov(double hfov_rad, double noise_std_rad) {
  return {noise_std_rad, hfov_rad / 2.0, hfov_rad};
}

void SSLConfig::validate() const {
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw ConfigError("ssl noise_std must be >= 0");
  if (!(success_threshold > 0.0) || success_threshold > std::numbers::pi)
    throw ConfigError("ssl threshold must be in (0, 180] degrees");
  if (!(hfov > 0.0) || hfov > 2.0 * std::numbers::pi) throw ConfigError("ssl hfov must be in (0, 360] degrees");
}

bool ssl_gate(double angular_error, const SSLConfig& cfg) {
  return std::abs(wrap_angle(angular_error)) <= cfg.success_threshold;
}

SSLResult simulate_ssl(double true_bearing, const SSLConfig& cfg, std::uint64_t seed) {
  double error = 0.0;
  if (cfg.noise_std > 0.0) {
    Rng rng(derive_seed(seed, "ssl"));
    error = cfg.noise_std * rng.normal();
  }
  return simulate_ssl_with_error(true_bearing, error, cfg);
}

SSLResult simulate_ssl_with_error(double true_bearing, double injected_error, const SSLConfig& cfg) {
  return {wrap_angle(true_bearing + injected_error), ssl_gate(injected_error, cfg)};
}

UserObservation acquire_observation(const UserObservation& scenario_obs, const SSLConfig& cfg,
                                    bool ssl_enabled, std::uint64_t seed) {
  UserObservation obs = scenario_obs;
  obs.true_bearing = wrap_angle(obs.true_bearing);
  obs.ssl_bearing.reset();
  if (obs.visible_initially) return obs;

  if (ssl_enabled) {
    const SSLResult ssl = simulate_ssl(obs.true_bearing, cfg, seed);
    obs.ssl_bearing = ssl.estimate;
    if (ssl.success) return obs;
  }
  obs.skeleton.reset();
  obs.has_pointing = false;
  return obs;
}

}  // namespace exosolve
