#pragma once

#include "mvlaf/correction.hpp"
#include "mvlaf/eight_point.hpp"
#include "mvlaf/geometry.hpp"
#include "mvlaf/types.hpp"

#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace mvlaf {

inline constexpr double kCameraSphereRadius = 5.0;
inline constexpr double kPointBallRadius = 1.0;
inline constexpr int kSceneAttempts = 100;
/// Points used for F estimation fill this ball, which every camera sees
/// entirely inside its 1000x1000 image (5 sin(atan(0.5)) > 2).
inline constexpr double kCorrespondenceBallRadius = 2.0;

/// Focal length 1000 px, principal point (500, 500), zero skew.
Mat3 SyntheticIntrinsics();

/// SplitMix64 over the given words; used to give every trial its own stream.
std::uint64_t DeriveSeed(std::initializer_list<std::uint64_t> words);

/// Cameras on a sphere of radius 5 looking at the origin, and one oriented
/// point inside the unit ball.
struct SyntheticScene {
  std::vector<PinholeCamera> cameras;
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  Vec3 tangent1 = Vec3::UnitX();
  Vec3 tangent2 = Vec3::UnitY();
};

/// Deterministic in `seed`. The normal is redrawn until the plane faces at
/// least two cameras; throws kVisibilityFailure after kSceneAttempts.
SyntheticScene GenerateScene(std::size_t n_views, std::uint64_t seed);

/// Same cameras, a freshly drawn oriented point.
SyntheticScene WithNewPoint(const SyntheticScene& scene, std::uint64_t seed);

/// Scale sqrt|det M| and the angle of the rotation closest to M: what a
/// scale- and orientation-covariant detector reports for the frame.
PartialFrame ApproximatePartialFrame(const LocalAffineFrame& frame);

/// x_k = pi_k(P), M_k = d pi_k(P + s t1 + t t2) / d(s, t) at zero.
std::vector<LocalAffineFrame> GroundTruthLafs(const SyntheticScene& scene);

/// Same sigma (pixels) on u, v and each of the four entries of M.
struct NoiseModel {
  double sigma = 0.0;
};

std::vector<LocalAffineFrame> AddNoise(std::span<const LocalAffineFrame> frames,
                                       const NoiseModel& noise, std::uint64_t seed);

/// (1/K) sum_k |I - M_gt^-1 M_est|_F with the 2x2 identity.
double LafError(std::span<const Mat2> gt, std::span<const Mat2> est);
double LafError(std::span<const LocalAffineFrame> gt, std::span<const LocalAffineFrame> est);

/// Noisy projections of num_points random points (shared by all views) for
/// F estimation; points are drawn in the kCorrespondenceBallRadius ball.
std::vector<std::vector<Vec2>> SampleNoisyProjections(const SyntheticScene& scene,
                                                      std::size_t num_points, double sigma,
                                                      std::mt19937_64& rng);

enum class GridKind { kInput, kCorrectedGroundTruthF, kCorrectedEightPointF };

std::string_view ToString(GridKind kind);

struct GridCell {
  double sigma = 0.0;
  std::size_t n_views = 0;
  double mean_error = 0.0;
  double std_error = 0.0;  // sample standard deviation of the per-trial errors
  std::size_t trials_used = 0;
  std::size_t excluded_trials = 0;
  double mean_correction_time_us = 0.0;
};

struct ErrorGrid {
  GridKind kind = GridKind::kInput;
  std::vector<double> sigmas;
  std::vector<std::size_t> view_counts;
  std::size_t trials = 0;
  std::vector<GridCell> cells;  // view-count major: cells[v * sigmas.size() + s]

  const GridCell& At(std::size_t view_index, std::size_t sigma_index) const {
    return cells[view_index * sigmas.size() + sigma_index];
  }
};

struct GridOptions {
  std::vector<double> sigmas;
  std::vector<std::size_t> view_counts;
  std::size_t trials = 1000;
  bool ground_truth_f = true;
  bool eight_point_f = true;
  /// Unset: QR with ground-truth geometry, SVD with estimated F.
  std::optional<SolvePath> path;
  ConstraintOptions constraints;
  std::size_t f_points = 50;
  std::uint64_t seed = 0;
  std::size_t threads = 0;  // 0: DefaultThreadCount()
};

struct GridReport {
  std::vector<ErrorGrid> grids;  // input first, then the requested corrected grids

  const ErrorGrid* Find(GridKind kind) const;
};

GridReport RunGrid(const GridOptions& options);

/// Header plus one row per (sigma, n_views, grid). Without timing the time
/// column holds "nan" so the file is reproducible byte for byte.
void WriteGridCsv(std::ostream& out, const GridReport& report, bool include_timing);

}  // namespace mvlaf
