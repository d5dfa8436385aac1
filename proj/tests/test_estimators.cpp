#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "exosolve/errors.hpp"
#include "exosolve/estimators.hpp"
#include "exosolve/rng.hpp"
#include "helpers.hpp"

using namespace exosolve;
using exosolve::test::make_map;
using exosolve::test::sum;

namespace {

constexpr double kPi = std::numbers::pi;

UserObservation pointing_user(Vec3 eye, Vec3 wrist) {
  UserObservation obs;
  obs.skeleton = Skeleton{eye, wrist};
  obs.has_pointing = true;
  return obs;
}

ScoreDistribution dist(std::vector<double> p) {
  ScoreDistribution d;
  for (std::size_t i = 0; i < p.size(); ++i) d.object_ids.push_back("o" + std::to_string(i));
  d.p = std::move(p);
  return d;
}

}  // namespace

TEST(Gaussian, PeakValue) {
  const double sigma = 0.5;
  const double oracle = 1.0 / std::pow(2.0 * kPi * sigma * sigma, 1.5);
  EXPECT_NEAR(gaussian3_pdf({1, 2, 3}, {1, 2, 3}, sigma), oracle, 1e-12);
  EXPECT_NEAR(oracle, 0.50795, 1e-5);
}

TEST(Gaussian, IntegratesToOne) {
  const double sigma = 0.4, h = 0.05, L = 6 * sigma;
  double total = 0.0;
  for (double x = -L; x <= L; x += h)
    for (double y = -L; y <= L; y += h)
      for (double z = -L; z <= L; z += h) total += gaussian3_pdf({x, y, z}, {0, 0, 0}, sigma);
  EXPECT_NEAR(total * h * h * h, 1.0, 1e-3);
}

TEST(Gaussian, RejectsBadInputs) {
  EXPECT_THROW(gaussian3_pdf({0, 0, 0}, {0, 0, 0}, 0.0), std::domain_error);
  EXPECT_THROW(gaussian3_pdf({NAN, 0, 0}, {0, 0, 0}, 1.0), std::domain_error);
}

TEST(DemonstrativeMean, SeriesCenters) {
  const auto obs = pointing_user({0, 0, 1.5}, {0.3, 0, 1.2});
  const Vec3 robot{5, 5, 1};
  const DemonstrativeModel m;
  EXPECT_EQ(demonstrative_mean(DemonstrativeSeries::KO, obs, robot, m), (Vec3{0.3, 0, 1.2}));
  EXPECT_EQ(demonstrative_mean(DemonstrativeSeries::SO, obs, robot, m), robot);
  const Vec3 a = demonstrative_mean(DemonstrativeSeries::A, obs, robot, m);
  const double step = 2.0 / std::sqrt(2.0);
  EXPECT_NEAR(a.x, 0.3 + step, 1e-12);
  EXPECT_NEAR(a.y, 0.0, 1e-12);
  EXPECT_NEAR(a.z, 1.2 - step, 1e-12);
  EXPECT_NEAR(a.x, 1.7142, 1e-4);
  EXPECT_NEAR(a.z, -0.2142, 1e-4);
}

TEST(DemonstrativeMean, Errors) {
  UserObservation hidden;
  const DemonstrativeModel m;
  EXPECT_THROW(demonstrative_mean(DemonstrativeSeries::KO, hidden, {}, m), SkeletonMissing);
  EXPECT_THROW(demonstrative_mean(DemonstrativeSeries::A, hidden, {}, m), SkeletonMissing);
  EXPECT_NO_THROW(demonstrative_mean(DemonstrativeSeries::SO, hidden, {}, m));
  EXPECT_THROW(demonstrative_mean(DemonstrativeSeries::DO, hidden, {}, m), std::invalid_argument);
  const auto degenerate = pointing_user({1, 1, 1}, {1, 1, 1});
  EXPECT_THROW(demonstrative_mean(DemonstrativeSeries::A, degenerate, {}, m), std::invalid_argument);
}

TEST(EstimateDemonstrative, SoTwoObjects) {
  const auto map = make_map({{"near", "cup", {0.5, 0, 0}}, {"far", "cup", {2, 0, 0}}});
  const auto p = estimate_demonstrative(map, DemonstrativeSeries::SO, UserObservation{}, {0, 0, 0}, {});
  // Ratio of two Gaussians with sigma 1: exp(-(0.25 - 4) / 2).
  const double oracle = 1.0 / (1.0 + std::exp(-1.875));
  EXPECT_NEAR(p.p[0], oracle, 1e-12);
  EXPECT_NEAR(p.p[1], 1.0 - oracle, 1e-12);
  EXPECT_NEAR(p.p[0], 0.867, 1e-3);
}

TEST(EstimateDemonstrative, UniformWhenUninformative) {
  const auto map = make_map({{"a", "cup", {0, 0, 0}}, {"b", "cup", {3, 0, 0}}, {"c", "cup", {0, 3, 0}}});
  for (auto s : {DemonstrativeSeries::DO, DemonstrativeSeries::NONE, DemonstrativeSeries::KO,
                 DemonstrativeSeries::A}) {
    const auto p = estimate_demonstrative(map, s, UserObservation{}, {0, 0, 0}, {});
    for (double x : p.p) EXPECT_NEAR(x, 1.0 / 3.0, 1e-12);
  }
}

TEST(EstimateDemonstrative, MonotoneInDistance) {
  Rng rng(8);
  std::vector<exosolve::test::ObjSpec> specs;
  for (int i = 0; i < 30; ++i)
    specs.push_back({"o" + std::to_string(i), "cup", {rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(0, 2)}});
  const auto map = make_map(specs);
  const auto obs = pointing_user({0, 0, 1.5}, {0.4, 0.1, 1.3});
  for (auto s : {DemonstrativeSeries::KO, DemonstrativeSeries::SO, DemonstrativeSeries::A}) {
    const DemonstrativeModel m;
    const Vec3 mu = demonstrative_mean(s, obs, {1, 1, 1}, m);
    const auto p = estimate_demonstrative(map, s, obs, {1, 1, 1}, m);
    EXPECT_NEAR(sum(p.p), 1.0, 1e-12);
    for (std::size_t i = 0; i < map.size(); ++i)
      for (std::size_t j = 0; j < map.size(); ++j)
        if (distance(map.at(i).position, mu) < distance(map.at(j).position, mu) - 1e-9)
          EXPECT_GE(p.p[i], p.p[j]);
  }
}

TEST(DemonstrativeModel, ValidatesSigmas) {
  DemonstrativeModel m;
  m.sigma_so = 0.0;
  EXPECT_THROW(m.validate(), ConfigError);
  PointingModel pm;
  pm.kappa = -1.0;
  EXPECT_THROW(pm.validate(), ConfigError);
}

TEST(VonMises, BesselAgainstStandardLibrary) {
  for (double x : {0.0, 0.5, 1.0, 2.0, 4.0, 10.0, 30.0})
    EXPECT_NEAR(bessel_i0(x) / std::cyl_bessel_i(0.0, x), 1.0, 1e-12) << x;
}

TEST(VonMises, PerpendicularValue) {
  const double oracle = 1.0 / (2.0 * kPi * std::cyl_bessel_i(0.0, 2.0));
  EXPECT_NEAR(von_mises_pdf(kPi / 2, 2.0), oracle, 1e-12);
  EXPECT_NEAR(oracle, 0.06982, 1e-5);
}

TEST(VonMises, IntegratesToOne) {
  for (double kappa : {0.0, 1.0, 4.0, 12.0}) {
    const int n = 20000;
    const double h = 2 * kPi / n;
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += von_mises_pdf(-kPi + (i + 0.5) * h, kappa);
    EXPECT_NEAR(total * h, 1.0, 1e-9) << kappa;
  }
  EXPECT_THROW(von_mises_pdf(0.0, -1.0), std::domain_error);
  EXPECT_THROW(von_mises_pdf(NAN, 1.0), std::domain_error);
}

TEST(EstimatePointing, OnRayVersusPerpendicular) {
  const auto map = make_map({{"on", "cup", {3, 0, 1.5}}, {"off", "cup", {0, 3, 1.5}}});
  const auto obs = pointing_user({0, 0, 1.5}, {0.5, 0, 1.5});
  const auto p = estimate_pointing(map, obs, PointingModel{2.0});
  const double oracle = std::exp(2.0) / (std::exp(2.0) + 1.0);
  EXPECT_NEAR(p.p[0], oracle, 1e-12);
  EXPECT_NEAR(p.p[1], 1.0 - oracle, 1e-12);
  EXPECT_NEAR(p.p[0], 0.8808, 1e-4);
}

TEST(EstimatePointing, UniformWithoutGesture) {
  const auto map = make_map({{"a", "cup", {3, 0, 1.5}}, {"b", "cup", {0, 3, 1.5}}});
  auto obs = pointing_user({0, 0, 1.5}, {0.5, 0, 1.5});
  obs.has_pointing = false;
  EXPECT_EQ(estimate_pointing(map, obs, {}).p, (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(estimate_pointing(map, UserObservation{}, {}).p, (std::vector<double>{0.5, 0.5}));
  const auto degenerate = pointing_user({1, 1, 1}, {1, 1, 1});
  EXPECT_EQ(estimate_pointing(map, degenerate, {}).p, (std::vector<double>{0.5, 0.5}));
}

TEST(EstimatePointing, ObjectAtEyeTreatedAsPerpendicular) {
  const auto map = make_map({{"eye", "cup", {0, 0, 1.5}}, {"side", "cup", {0, 2, 1.5}}});
  const auto p = estimate_pointing(map, pointing_user({0, 0, 1.5}, {0.5, 0, 1.5}), {});
  EXPECT_NEAR(p.p[0], 0.5, 1e-12);
}

TEST(PointingAngle, Basics) {
  const auto obs = pointing_user({0, 0, 0}, {1, 0, 0});
  EXPECT_NEAR(pointing_angle(obs, {5, 0, 0}), 0.0, 1e-12);
  EXPECT_NEAR(pointing_angle(obs, {0, 5, 0}), kPi / 2, 1e-12);
  EXPECT_NEAR(pointing_angle(obs, {-5, 0, 0}), kPi, 1e-12);
  EXPECT_THROW(pointing_angle(UserObservation{}, {1, 0, 0}), SkeletonMissing);
  EXPECT_THROW(pointing_angle(obs, {0, 0, 0}), std::invalid_argument);
}

TEST(EstimateLinguistic, MatchingClassWins) {
  const auto map = make_map({{"c", "cup", {}, {"red"}}, {"b", "book", {}, {"blue"}}, {"d", "doll", {}, {"pink"}}});
  const ToyEmbeddingProvider toy(exosolve::test::kDim, exosolve::test::kDim);
  const auto lx = Lexicon::defaults();
  const auto q = parse_query("Bring me that red cup", toy, lx, default_class_vocabulary());
  const auto p = estimate_linguistic(map, q);
  EXPECT_NEAR(sum(p.p), 1.0, 1e-12);
  EXPECT_GT(p.p[0], p.p[1]);
  EXPECT_GT(p.p[0], p.p[2]);

  // Independent oracle: product of shifted cosines, normalized.
  std::vector<double> raw;
  for (const auto& o : map.objects())
    raw.push_back(0.5 * (1 + cosine(q.text_embedding, o.label_embedding)) *
                  0.5 * (1 + cosine(q.vis_text_embedding, o.visual_embedding)));
  const double z = sum(raw);
  for (std::size_t i = 0; i < raw.size(); ++i) EXPECT_NEAR(p.p[i], raw[i] / z, 1e-12);
}

TEST(EstimateLinguistic, DemonstrativeOnlyIsUniform) {
  const auto map = make_map({{"c", "cup", {}}, {"b", "book", {}}});
  const ToyEmbeddingProvider toy(exosolve::test::kDim, exosolve::test::kDim);
  const auto q = parse_query("Bring me that.", toy, Lexicon::defaults(), {});
  EXPECT_EQ(estimate_linguistic(map, q).p, (std::vector<double>{0.5, 0.5}));
}

TEST(EstimateLinguistic, DimensionMismatch) {
  const auto map = make_map({{"c", "cup", {}}});
  const ToyEmbeddingProvider toy(8, 8);
  const auto q = parse_query("that cup", toy, Lexicon::defaults(), default_class_vocabulary());
  EXPECT_THROW(estimate_linguistic(map, q), DimensionError);
}

TEST(Fuse, ProductAndRanking) {
  const auto f = fuse(dist({0.5, 0.3, 0.2}), dist({0.2, 0.5, 0.3}), dist({0.3, 0.3, 0.4}));
  const std::vector<double> raw{0.5 * 0.2 * 0.3, 0.3 * 0.5 * 0.3, 0.2 * 0.3 * 0.4};
  const double z = sum(raw);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(f.fused.p[i], raw[i] / z, 1e-12);
  ASSERT_EQ(f.ranking.size(), 3u);
  EXPECT_EQ(f.ranking[0].object_id, "o1");
  EXPECT_EQ(f.ranking[1].object_id, "o0");
  EXPECT_EQ(f.ranking[2].object_id, "o2");
  EXPECT_EQ(f.top(2).size(), 2u);
  EXPECT_EQ(f.top(10).size(), 3u);
}

TEST(Fuse, TiesBrokenById) {
  const auto f = fuse(dist({0.25, 0.25, 0.25, 0.25}), dist({0.25, 0.25, 0.25, 0.25}),
                      dist({0.25, 0.25, 0.25, 0.25}));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(f.ranking[i].object_id, "o" + std::to_string(i));
}

TEST(Fuse, UniformIsNeutral) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng.below(20);
    std::vector<double> p(n);
    for (double& x : p) x = rng.uniform(0.01, 1.0);
    const double z = sum(p);
    for (double& x : p) x /= z;
    const auto u = dist(std::vector<double>(n, 1.0 / static_cast<double>(n)));
    const auto f = fuse(dist(p), u, u);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(f.fused.p[i], p[i], 1e-12);
  }
}

TEST(Fuse, RankInvariantUnderScaling) {
  Rng rng(22);
  const std::size_t n = 25;
  std::vector<double> a(n), b(n), c(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = rng.uniform(0.01, 1.0);
    b[i] = rng.uniform(0.01, 1.0);
    c[i] = rng.uniform(0.01, 1.0);
  }
  auto scaled = a;
  for (double& x : scaled) x *= 7.5;
  const auto f1 = fuse(dist(a), dist(b), dist(c));
  const auto f2 = fuse(dist(scaled), dist(b), dist(c));
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_EQ(f1.ranking[i].object_id, f2.ranking[i].object_id);
    EXPECT_NEAR(f1.fused.p[i], f2.fused.p[i], 1e-12);
  }
}

TEST(Fuse, AllZeroFallsBackToUniform) {
  const auto f = fuse(dist({1, 0}), dist({0, 1}), dist({0.5, 0.5}));
  EXPECT_EQ(f.fused.p, (std::vector<double>{0.5, 0.5}));
}

TEST(Fuse, Errors) {
  EXPECT_THROW(fuse(dist({0.5, 0.5}), dist({1.0}), dist({0.5, 0.5})), DimensionError);
  auto other = dist({0.5, 0.5});
  other.object_ids[1] = "zz";
  EXPECT_THROW(fuse(dist({0.5, 0.5}), other, dist({0.5, 0.5})), DimensionError);
  EXPECT_THROW(fuse_top_k(dist({1.0}), dist({1.0}), dist({1.0}), 0), std::invalid_argument);
  EXPECT_EQ(fuse_top_k(dist({0.2, 0.8}), dist({0.5, 0.5}), dist({0.5, 0.5}), 1)[0].object_id, "o1");
}
