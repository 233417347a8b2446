#include "mvlaf/error.hpp"
#include "mvlaf/synthetic.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <sstream>

namespace mvlaf {
namespace {

TEST(GenerateScene, GeometryConventions) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const std::size_t n = 2 + seed % 9;
    const auto scene = GenerateScene(n, seed);
    ASSERT_EQ(scene.cameras.size(), n);
    EXPECT_LE(scene.point.norm(), kPointBallRadius);
    EXPECT_NEAR(scene.normal.norm(), 1.0, 1e-12);
    EXPECT_LT(std::abs(scene.normal.dot(scene.tangent1)), 1e-12);
    EXPECT_LT(std::abs(scene.normal.dot(scene.tangent2)), 1e-12);
    int facing = 0;
    for (const auto& cam : scene.cameras) {
      EXPECT_NEAR(cam.Center().norm(), kCameraSphereRadius, 1e-12);
      // Principal axis passes through the origin.
      const Vec3 axis = cam.R().row(2).transpose();
      EXPECT_LT((-cam.Center()).cross(axis).norm(), 1e-9);
      EXPECT_GT(axis.dot(-cam.Center()), 0.0);
      EXPECT_GT(cam.ToCamera(scene.point).z(), 0.0);
      EXPECT_TRUE(cam.K().isApprox(SyntheticIntrinsics()));
      if (scene.normal.dot(cam.Center() - scene.point) > 0) ++facing;
    }
    EXPECT_GE(facing, 2);
  }
}

TEST(GenerateScene, Deterministic) {
  const auto a = GenerateScene(7, 123);
  const auto b = GenerateScene(7, 123);
  EXPECT_EQ(a.point, b.point);
  EXPECT_EQ(a.normal, b.normal);
  for (std::size_t k = 0; k < 7; ++k) {
    EXPECT_EQ(a.cameras[k].R(), b.cameras[k].R());
    EXPECT_EQ(a.cameras[k].t(), b.cameras[k].t());
  }
  EXPECT_NE(GenerateScene(7, 124).point, a.point);
}

TEST(GroundTruthLafs, MatchesFiniteDifferenceProjection) {
  const double h = 1e-6;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto scene = GenerateScene(4, seed);
    const auto lafs = GroundTruthLafs(scene);
    for (std::size_t k = 0; k < 4; ++k) {
      const auto& cam = scene.cameras[k];
      EXPECT_LT((lafs[k].x - testing::ProjectOracle(cam, scene.point)).norm(), 1e-9);
      Mat2 fd;
      for (int c = 0; c < 2; ++c) {
        const Vec3 t = c == 0 ? scene.tangent1 : scene.tangent2;
        fd.col(c) = (testing::ProjectOracle(cam, scene.point + h * t) -
                     testing::ProjectOracle(cam, scene.point - h * t)) /
                    (2 * h);
      }
      EXPECT_LT((fd - lafs[k].M).norm(), 1e-4);
    }
  }
}

TEST(GroundTruthLafs, FeasibleForAllPairs) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto scene = GenerateScene(6, seed);
    const auto lafs = GroundTruthLafs(scene);
    for (std::size_t i = 0; i < 6; ++i) {
      for (std::size_t j = i + 1; j < 6; ++j) {
        const auto ev = EpipolarVectorsPinhole(FundamentalFromCameras(scene.cameras[i], scene.cameras[j]),
                                               lafs[i].x, lafs[j].x);
        EXPECT_LT(LafPairResidual(ev, lafs[i].M, lafs[j].M).norm(), 1e-9);
      }
    }
  }
}

TEST(GroundTruthLafs, FrontoParallelTranslatedCamerasShareFrame) {
  SyntheticScene scene;
  const Mat3 K = SyntheticIntrinsics();
  const double depth = 5.0;
  // Both cameras look down +z at the plane z = 0 from z = -5.
  scene.cameras.emplace_back(K, Mat3::Identity(), Vec3(0.0, 0.0, depth));
  scene.cameras.emplace_back(K, Mat3::Identity(), Vec3(-0.5, 0.2, depth));
  scene.point = Vec3::Zero();
  scene.normal = -Vec3::UnitZ();
  scene.tangent1 = Vec3::UnitX();
  scene.tangent2 = Vec3::UnitY();
  const auto lafs = GroundTruthLafs(scene);
  const Mat2 expected = (1000.0 / depth) * Mat2::Identity();
  EXPECT_LT((lafs[0].M - expected).norm(), 1e-12);
  EXPECT_LT((lafs[1].M - expected).norm(), 1e-12);
}

TEST(AddNoise, ZeroSigmaIsExactCopy) {
  const auto lafs = GroundTruthLafs(GenerateScene(5, 1));
  const auto same = AddNoise(lafs, {0.0}, 77);
  for (std::size_t k = 0; k < lafs.size(); ++k) {
    EXPECT_EQ(same[k].x, lafs[k].x);
    EXPECT_EQ(same[k].M, lafs[k].M);
  }
}

TEST(AddNoise, EmpiricalVarianceMatchesSigma) {
  const double sigma = 0.7;
  std::vector<LocalAffineFrame> zeros(17000, LocalAffineFrame{Vec2::Zero(), Mat2::Zero()});
  const auto noisy = AddNoise(zeros, {sigma}, 5);
  double sum = 0.0;
  double sq = 0.0;
  std::size_t n = 0;
  for (const auto& f : noisy) {
    for (double v : {f.x.x(), f.x.y(), f.M(0, 0), f.M(0, 1), f.M(1, 0), f.M(1, 1)}) {
      sum += v;
      sq += v * v;
      ++n;
    }
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  EXPECT_NEAR(var / (sigma * sigma), 1.0, 0.03);
  EXPECT_LT(std::abs(mean), 0.01);
}

TEST(AddNoise, Deterministic) {
  const auto lafs = GroundTruthLafs(GenerateScene(3, 2));
  const auto a = AddNoise(lafs, {1.0}, 9);
  const auto b = AddNoise(lafs, {1.0}, 9);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(a[k].M, b[k].M);
}

TEST(LafError, Examples) {
  std::mt19937_64 rng(3);
  std::vector<Mat2> gt{testing::RandomNonsingular(rng), testing::RandomNonsingular(rng)};
  EXPECT_LT(LafError(gt, gt), 1e-14);
  std::vector<Mat2> doubled{2.0 * gt[0], 2.0 * gt[1]};
  EXPECT_NEAR(LafError(gt, doubled), std::numbers::sqrt2, 1e-12);
  // Invariant to a common left factor.
  const Mat2 G = testing::RandomNonsingular(rng);
  std::vector<Mat2> est{testing::RandomNonsingular(rng), testing::RandomNonsingular(rng)};
  std::vector<Mat2> gt_g{G * gt[0], G * gt[1]};
  std::vector<Mat2> est_g{G * est[0], G * est[1]};
  EXPECT_NEAR(LafError(gt_g, est_g), LafError(gt, est), 1e-9);
  std::vector<Mat2> singular{Mat2::Zero(), gt[1]};
  EXPECT_THROW(LafError(singular, gt), Error);
}

TEST(ApproximatePartialFrame, RecoversScaledRotation) {
  const double theta = 0.9;
  Mat2 R;
  R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  const auto pf = ApproximatePartialFrame({Vec2(1, 2), 3.0 * R});
  EXPECT_NEAR(pf.sigma, 3.0, 1e-12);
  EXPECT_NEAR(pf.theta, theta, 1e-12);
  EXPECT_EQ(pf.x, Vec2(1, 2));
}

GridOptions SmallGrid() {
  GridOptions opt;
  opt.sigmas = {0.0, 0.5, 1.0};
  opt.view_counts = {2, 3, 5};
  opt.trials = 20;
  opt.seed = 4;
  opt.threads = 1;
  return opt;
}

TEST(RunGrid, ShapeAndZeroNoiseColumn) {
  const auto report = RunGrid(SmallGrid());
  ASSERT_EQ(report.grids.size(), 3u);
  for (const auto& g : report.grids) {
    ASSERT_EQ(g.cells.size(), 9u);
    for (std::size_t v = 0; v < 3; ++v) {
      EXPECT_EQ(g.At(v, 1).n_views, g.view_counts[v]);
      EXPECT_EQ(g.At(v, 1).sigma, 0.5);
      EXPECT_EQ(g.At(v, 1).trials_used + g.At(v, 1).excluded_trials, 20u);
    }
  }
  const auto* gt = report.Find(GridKind::kCorrectedGroundTruthF);
  for (std::size_t v = 0; v < 3; ++v) {
    EXPECT_LT(gt->At(v, 0).mean_error, 1e-9);
    EXPECT_LT(report.Find(GridKind::kInput)->At(v, 0).mean_error, 1e-14);
  }
}

TEST(RunGrid, CsvIsReproducibleAndThreadIndependent) {
  auto opt = SmallGrid();
  std::ostringstream a;
  std::ostringstream b;
  std::ostringstream c;
  WriteGridCsv(a, RunGrid(opt), false);
  WriteGridCsv(b, RunGrid(opt), false);
  opt.threads = 4;
  WriteGridCsv(c, RunGrid(opt), false);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str(), c.str());
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')),
            "sigma,n_views,grid,mean_error,std_error,excluded_trials,mean_correction_time_us");
}

TEST(DeriveSeed, DistinctWords) {
  EXPECT_NE(DeriveSeed({1, 2}), DeriveSeed({2, 1}));
  EXPECT_EQ(DeriveSeed({1, 2}), DeriveSeed({1, 2}));
}

}  // namespace
}  // namespace mvlaf
