#include <gtest/gtest.h>

#include "exosolve/config.hpp"
#include "exosolve/errors.hpp"

using namespace exosolve;

TEST(Config, EmptyKeepsDefaults) {
  const auto c = parse_config("");
  EXPECT_EQ(c.estimators.demonstrative.sigma_so, 1.0);
  EXPECT_EQ(c.estimators.pointing.kappa, 4.0);
  EXPECT_EQ(c.estimators.top_k, 5u);
  EXPECT_NEAR(c.ssl.success_threshold, deg_to_rad(29.0), 1e-12);
}

TEST(Config, ReadsSections) {
  const auto c = parse_config(R"(
estimators:
  sigma_ko: 0.5
  sigma_a: 2.0
  lambda_a: 1.5
  kappa: 6
  topk: 3
ssl:
  noise_std_deg: 10
  hfov_deg: 70
)");
  EXPECT_EQ(c.estimators.demonstrative.sigma_ko, 0.5);
  EXPECT_EQ(c.estimators.demonstrative.sigma_a, 2.0);
  EXPECT_EQ(c.estimators.demonstrative.pointer_tip_distance, 1.5);
  EXPECT_EQ(c.estimators.pointing.kappa, 6.0);
  EXPECT_EQ(c.estimators.top_k, 3u);
  EXPECT_NEAR(c.ssl.noise_std, deg_to_rad(10.0), 1e-12);
  EXPECT_NEAR(c.ssl.success_threshold, deg_to_rad(35.0), 1e-12);
}

TEST(Config, ExplicitThresholdWins) {
  const auto c = parse_config("ssl:\n  threshold_deg: 20\n  hfov_deg: 70\n");
  EXPECT_NEAR(c.ssl.success_threshold, deg_to_rad(20.0), 1e-12);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config("estimators:\n  sigmaa: 1\n"), ConfigError);
  EXPECT_THROW(parse_config("unknown: 1\n"), ConfigError);
  EXPECT_THROW(parse_config("estimators:\n  sigma_so: -1\n"), ConfigError);
  EXPECT_THROW(parse_config("estimators: [1, 2"), ConfigError);
  EXPECT_THROW(parse_config("estimators:\n  kappa: abc\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.yaml"), ConfigError);
}

TEST(Config, ExampleFileMatchesDefaults) {
  const auto c = load_config(std::string(EXOSOLVE_FIXTURES_DIR) + "/config/exosolve.yaml");
  const RunConfig d;
  EXPECT_EQ(c.estimators.demonstrative.sigma_ko, d.estimators.demonstrative.sigma_ko);
  EXPECT_EQ(c.estimators.demonstrative.pointer_tip_distance, d.estimators.demonstrative.pointer_tip_distance);
  EXPECT_EQ(c.estimators.pointing.kappa, d.estimators.pointing.kappa);
  EXPECT_NEAR(c.ssl.success_threshold, d.ssl.success_threshold, 1e-12);
}
