#pragma once

#include <cstdint>
#include <numbers>
#include <optional>

#include "exosolve/vec3.hpp"

namespace exosolve {

struct Skeleton {
  Vec3 eye;
  Vec3 wrist;
  bool operator==(const Skeleton&) const = default;
};

struct UserObservation {
  /// Eye and wrist travel together; absent when the user was never seen.
  std::optional<Skeleton> skeleton;
  bool has_pointing = false;
  bool visible_initially = true;
  /// Direction of the user in the robot frame, radians in (-pi, pi].
  double true_bearing = 0.0;
  std::optional<double> ssl_bearing;

  bool pointing_available() const { return skeleton.has_value() && has_pointing; }
};

constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Wraps to (-pi, pi].
double wrap_angle(double radians);

struct SSLConfig {
  double noise_std = 0.0;                      // radians
  double success_threshold = deg_to_rad(29.0);  // radians
  double hfov = deg_to_rad(58.0);               // radians

  /// Threshold derived as half the camera field of view.
  static SSLConfig from_hfov(double hfov_rad, double noise_std_rad = 0.0);
  void validate() const;  // throws ConfigError
};

struct SSLResult {
  double estimate;  // wrapped bearing
  bool success;
};

/// Success iff the wrapped angular error is within the threshold.
bool ssl_gate(double angular_error, const SSLConfig& cfg);

/// Bearing estimate = true bearing + N(0, noise_std), wrapped. Deterministic per seed;
/// the outcome depends on the bearing only through wrapping.
SSLResult simulate_ssl(double true_bearing, const SSLConfig& cfg, std::uint64_t seed);

/// Same as simulate_ssl but with a fixed, injected bearing error.
SSLResult simulate_ssl_with_error(double true_bearing, double injected_error, const SSLConfig& cfg);

/// Skeleton is kept when the user is visible, or hidden but localized by a
/// successful SSL (reorientation is assumed to succeed). Otherwise the skeleton
/// and pointing flag are stripped.
UserObservation acquire_observation(const UserObservation& scenario_obs, const SSLConfig& cfg,
                                    bool ssl_enabled, std::uint64_t seed);

}  // namespace exosolve
