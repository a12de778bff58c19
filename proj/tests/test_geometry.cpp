#include <gtest/gtest.h>

#include "rntc/errors.hpp"
#include "rntc/geometry.hpp"

using namespace rntc;

namespace {

EnvironmentSnapshot one_disk(Eigen::Vector2d c, double r, Eigen::Vector2d v = Eigen::Vector2d::Zero()) {
  EnvironmentSnapshot s;
  s.obstacles.push_back({c, r, v});
  return s;
}

}  // namespace

TEST(Geometry, SdfOfSingleDiskIsDistanceMinusRadii) {
  const auto s = one_disk({1.0, 2.0}, 0.5);
  EXPECT_NEAR(sdf_eval(s, {4.0, 6.0}, 0.3), 5.0 - 0.8, 1e-12);
  EXPECT_NEAR(sdf_eval(s, {1.0, 2.0}, 0.3), -0.8, 1e-12);
  EXPECT_NEAR(sdf_eval(s, {1.8, 2.0}, 0.3), 0.0, 1e-12);
}

TEST(Geometry, SdfIsClampedAndEmptyIsFree) {
  EnvironmentSnapshot empty;
  EXPECT_EQ(sdf_eval(empty, {0.0, 0.0}, 0.3, 10.0), 10.0);
  const auto s = one_disk({0.0, 0.0}, 0.3);
  EXPECT_EQ(sdf_eval(s, {100.0, 0.0}, 0.3, 10.0), 10.0);
  EXPECT_EQ(sdf_eval(s, {0.0, 0.0}, 0.3, 0.5), -0.5);
}

TEST(Geometry, SdfTakesMinimumOverObstacles) {
  EnvironmentSnapshot s;
  s.obstacles.push_back({{0.0, 0.0}, 0.3, {}});
  s.obstacles.push_back({{3.0, 0.0}, 0.3, {}});
  EXPECT_NEAR(sdf_eval(s, {2.0, 0.0}, 0.0), 0.7, 1e-12);
}

TEST(Geometry, DistanceGradientMatchesFiniteDifferences) {
  const Obstacle o{{0.3, -0.2}, 0.4, {}};
  const Eigen::Vector2d p(1.1, 0.7);
  const Eigen::Vector2d g = obstacle_distance_gradient(o, p);
  const double h = 1e-6;
  for (int i = 0; i < 2; ++i) {
    Eigen::Vector2d e = Eigen::Vector2d::Zero();
    e[i] = h;
    const double fd = (obstacle_distance(o, p + e, 0.3) - obstacle_distance(o, p - e, 0.3)) / (2 * h);
    EXPECT_NEAR(g[i], fd, 1e-8);
  }
  EXPECT_EQ(obstacle_distance_gradient(o, o.center), Eigen::Vector2d(1.0, 0.0));
}

TEST(Geometry, PredictMovesObstaclesWithConstantVelocity) {
  auto s = one_disk({1.0, 1.0}, 0.3, {0.5, -1.0});
  s.timestamp = 2.0;
  const auto f = predict(s, 0.4);
  EXPECT_NEAR(f.obstacles[0].center.x(), 1.2, 1e-12);
  EXPECT_NEAR(f.obstacles[0].center.y(), 0.6, 1e-12);
  EXPECT_NEAR(f.timestamp, 2.4, 1e-12);
  const auto b = predict(s, -0.4);
  EXPECT_NEAR(b.obstacles[0].center.x(), 0.8, 1e-12);
}

TEST(Geometry, RasterMatchesPointwiseSdf) {
  const auto s = one_disk({0.5, -1.0}, 0.3);
  const GridSpec spec = GridSpec::covering({0.0, 0.0}, 8.0, 16);
  EXPECT_NEAR(spec.spacing, 0.5, 1e-12);
  EXPECT_NEAR(spec.origin.x(), -4.0, 1e-12);
  const SdfGrid g = rasterize(s, spec, 0.3, 10.0);
  ASSERT_EQ(g.values.rows(), 16);
  ASSERT_EQ(g.values.cols(), 16);
  for (int i = 0; i < 16; i += 3) {
    for (int j = 0; j < 16; j += 5) {
      EXPECT_DOUBLE_EQ(g.values(i, j), sdf_eval(s, spec.cell_center(i, j), 0.3, 10.0));
    }
  }
}

TEST(Geometry, SequenceAdvancesInTime) {
  const auto s = one_disk({0.0, 0.0}, 0.3, {1.0, 0.0});
  const GridSpec spec = GridSpec::covering({0.0, 0.0}, 4.0, 8);
  const auto seq = sdf_sequence(s, spec, 3, 0.5);
  ASSERT_EQ(seq.size(), 3u);
  EXPECT_NEAR(seq[2].timestamp, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(seq[2].values(5, 3), sdf_eval(predict(s, 1.0), spec.cell_center(5, 3)));
}

TEST(Geometry, InvalidGridIsRejected) {
  GridSpec spec;
  EXPECT_THROW(spec.validate(), ConfigError);
}
