#include "mvlaf/synthetic.hpp"

#include "mvlaf/error.hpp"
#include "mvlaf/parallel.hpp"

#include <Eigen/Dense>

#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <locale>
#include <numbers>
#include <ostream>
#include <sstream>

namespace mvlaf {

Mat3 SyntheticIntrinsics() {
  Mat3 K;
  K << 1000.0, 0.0, 500.0,
       0.0, 1000.0, 500.0,
       0.0, 0.0, 1.0;
  return K;
}

std::uint64_t DeriveSeed(std::initializer_list<std::uint64_t> words) {
  auto splitmix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t w : words) h = splitmix(h ^ splitmix(w));
  return h;
}

namespace {

Vec3 RandomUnitVector(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(gauss(rng), gauss(rng), gauss(rng));
  } while (v.norm() < 1e-9);
  return v.normalized();
}

Vec3 RandomPointInBall(std::mt19937_64& rng, double radius) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const Vec3 direction = RandomUnitVector(rng);
  return radius * std::cbrt(uniform(rng)) * direction;
}

bool Visible(const PinholeCamera& cam, const Vec3& X) { return cam.ToCamera(X).z() > 0.0; }

// Draws the point and a normal facing at least two of the cameras.
bool DrawOrientedPoint(SyntheticScene& scene, std::mt19937_64& rng) {
  scene.point = RandomPointInBall(rng, kPointBallRadius);
  for (const auto& cam : scene.cameras) {
    if (!Visible(cam, scene.point)) return false;
  }
  bool oriented = false;
  for (int draw = 0; draw < kSceneAttempts && !oriented; ++draw) {
    scene.normal = RandomUnitVector(rng);
    int facing = 0;
    for (const auto& cam : scene.cameras) {
      if (scene.normal.dot(cam.Center() - scene.point) > 0.0) ++facing;
    }
    oriented = facing >= 2;
  }
  if (!oriented) return false;

  const Vec3 helper = std::abs(scene.normal.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  scene.tangent1 = (helper - helper.dot(scene.normal) * scene.normal).normalized();
  scene.tangent2 = scene.normal.cross(scene.tangent1);
  return true;
}

}  // namespace

SyntheticScene GenerateScene(std::size_t n_views, std::uint64_t seed) {
  if (n_views < 2) {
    throw Error(ErrorCode::kInvalidArgument, "a synthetic scene needs at least two views");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  const Mat3 K = SyntheticIntrinsics();

  for (int attempt = 0; attempt < kSceneAttempts; ++attempt) {
    SyntheticScene scene;
    scene.cameras.reserve(n_views);
    for (std::size_t k = 0; k < n_views; ++k) {
      const Vec3 center = kCameraSphereRadius * RandomUnitVector(rng);
      scene.cameras.push_back(PinholeCamera::LookAt(K, center, Vec3::Zero(), angle(rng)));
    }
    if (DrawOrientedPoint(scene, rng)) return scene;
  }
  throw Error(ErrorCode::kVisibilityFailure,
              "no valid scene after " + std::to_string(kSceneAttempts) + " attempts");
}

SyntheticScene WithNewPoint(const SyntheticScene& scene, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SyntheticScene out = scene;
  for (int attempt = 0; attempt < kSceneAttempts; ++attempt) {
    if (DrawOrientedPoint(out, rng)) return out;
  }
  throw Error(ErrorCode::kVisibilityFailure, "no oriented point faces two cameras");
}

PartialFrame ApproximatePartialFrame(const LocalAffineFrame& frame) {
  const Mat2& M = frame.M;
  return {frame.x, std::sqrt(std::abs(M.determinant())),
          std::atan2(M(1, 0) - M(0, 1), M(0, 0) + M(1, 1))};
}

std::vector<LocalAffineFrame> GroundTruthLafs(const SyntheticScene& scene) {
  Eigen::Matrix<double, 3, 2> tangents;
  tangents << scene.tangent1, scene.tangent2;
  std::vector<LocalAffineFrame> frames;
  frames.reserve(scene.cameras.size());
  for (const auto& cam : scene.cameras) {
    frames.push_back({cam.Project(scene.point), cam.ProjectionJacobian(scene.point) * tangents});
  }
  return frames;
}

std::vector<LocalAffineFrame> AddNoise(std::span<const LocalAffineFrame> frames,
                                       const NoiseModel& noise, std::uint64_t seed) {
  if (!(noise.sigma >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "noise sigma must be non-negative");
  }
  std::vector<LocalAffineFrame> out(frames.begin(), frames.end());
  if (noise.sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, noise.sigma);
  for (auto& f : out) {
    f.x.x() += gauss(rng);
    f.x.y() += gauss(rng);
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 2; ++c) f.M(r, c) += gauss(rng);
    }
  }
  return out;
}

double LafError(std::span<const Mat2> gt, std::span<const Mat2> est) {
  if (gt.size() != est.size() || gt.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "LAF error needs equal, non-empty frame lists");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < gt.size(); ++k) {
    if (!(std::abs(gt[k].determinant()) > 1e-12)) {
      throw Error(ErrorCode::kSingularFrame, "ground-truth frame is singular");
    }
    total += (Mat2::Identity() - gt[k].inverse() * est[k]).norm();
  }
  return total / static_cast<double>(gt.size());
}

double LafError(std::span<const LocalAffineFrame> gt, std::span<const LocalAffineFrame> est) {
  std::vector<Mat2> a;
  std::vector<Mat2> b;
  for (const auto& f : gt) a.push_back(f.M);
  for (const auto& f : est) b.push_back(f.M);
  return LafError(a, b);
}

std::vector<std::vector<Vec2>> SampleNoisyProjections(const SyntheticScene& scene,
                                                      std::size_t num_points, double sigma,
                                                      std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<Vec2>> per_view(scene.cameras.size());
  for (std::size_t p = 0; p < num_points; ++p) {
    const Vec3 X = RandomPointInBall(rng, kCorrespondenceBallRadius);
    for (std::size_t k = 0; k < scene.cameras.size(); ++k) {
      const Vec2 noise(gauss(rng), gauss(rng));
      per_view[k].push_back(scene.cameras[k].Project(X) + sigma * noise);
    }
  }
  return per_view;
}

std::string_view ToString(GridKind kind) {
  switch (kind) {
    case GridKind::kInput: return "input";
    case GridKind::kCorrectedGroundTruthF: return "corrected_gt";
    case GridKind::kCorrectedEightPointF: return "corrected_8pt";
  }
  return "unknown";
}

const ErrorGrid* GridReport::Find(GridKind kind) const {
  for (const auto& g : grids) {
    if (g.kind == kind) return &g;
  }
  return nullptr;
}

namespace {

struct TrialOutcome {
  // Indexed by GridKind.
  std::array<double, 3> error{};
  std::array<bool, 3> ok{};
  std::array<double, 3> time_us{};
};

double MeasureCorrection(const MultiViewTrack& track, SolvePath path,
                         std::vector<LocalAffineFrame>& corrected) {
  const auto start = std::chrono::steady_clock::now();
  const CorrectionResult result = CorrectTrack(track, path);
  const auto stop = std::chrono::steady_clock::now();
  corrected = track.frames;
  for (std::size_t k = 0; k < corrected.size(); ++k) corrected[k].M = result.frames[k];
  return std::chrono::duration<double, std::micro>(stop - start).count();
}

TrialOutcome RunTrial(const GridOptions& options, std::size_t n_views, std::size_t sigma_index,
                      std::size_t trial) {
  TrialOutcome out;
  const double sigma = options.sigmas[sigma_index];
  SyntheticScene scene;
  std::vector<LocalAffineFrame> gt;
  std::vector<LocalAffineFrame> noisy;
  try {
    scene = GenerateScene(n_views, DeriveSeed({options.seed, n_views, trial, 1}));
    gt = GroundTruthLafs(scene);
    noisy = AddNoise(gt, {sigma}, DeriveSeed({options.seed, n_views, sigma_index, trial, 2}));
    out.error[0] = LafError(gt, noisy);
    out.ok[0] = true;
  } catch (const Error&) {
    return out;
  }

  const auto pairs = AllPairs(n_views);
  std::vector<LocalAffineFrame> corrected;

  if (options.ground_truth_f) {
    try {
      const TrackBuild build =
          BuildTrackFromCameras(scene.cameras, noisy, pairs, options.constraints, scene.point);
      const SolvePath path = options.path.value_or(DefaultPath(GeometrySource::kPoseDerived));
      out.time_us[1] = MeasureCorrection(build.track, path, corrected);
      out.error[1] = LafError(gt, corrected);
      out.ok[1] = true;
    } catch (const Error&) {
    }
  }

  if (options.eight_point_f) {
    try {
      std::mt19937_64 rng(DeriveSeed({options.seed, n_views, sigma_index, trial, 3}));
      const auto projections = SampleNoisyProjections(scene, options.f_points, sigma, rng);
      std::vector<PairGeometry> geometry;
      std::vector<PointCorrespondence> matches(options.f_points);
      for (const ViewPair& pair : pairs) {
        for (std::size_t p = 0; p < options.f_points; ++p) {
          matches[p] = {projections[pair.i][p], projections[pair.j][p]};
        }
        geometry.push_back({pair, EstimateFundamentalEightPoint(matches)});
      }
      const TrackBuild build =
          BuildTrackFromFundamentals(noisy, geometry, options.constraints.row_normalize);
      const SolvePath path = options.path.value_or(DefaultPath(GeometrySource::kEstimated));
      out.time_us[2] = MeasureCorrection(build.track, path, corrected);
      out.error[2] = LafError(gt, corrected);
      out.ok[2] = true;
    } catch (const Error&) {
    }
  }
  return out;
}

}  // namespace

GridReport RunGrid(const GridOptions& options) {
  if (options.trials < 1) throw Error(ErrorCode::kInvalidArgument, "trials must be >= 1");
  if (options.sigmas.empty() || options.view_counts.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty sigma or view-count axis");
  }
  for (double s : options.sigmas) {
    if (!(s >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "sigma must be non-negative");
  }
  for (std::size_t v : options.view_counts) {
    if (v < 2) throw Error(ErrorCode::kInvalidArgument, "view counts must be >= 2");
  }
  if (options.eight_point_f && options.f_points < 8) {
    throw Error(ErrorCode::kInvalidArgument, "8-point estimation needs >= 8 points");
  }

  const std::size_t ns = options.sigmas.size();
  const std::size_t nv = options.view_counts.size();
  const std::size_t cells = ns * nv;
  std::vector<TrialOutcome> outcomes(cells * options.trials);
  const std::size_t threads = options.threads ? options.threads : DefaultThreadCount();
  ParallelFor(outcomes.size(), threads, [&](std::size_t index) {
    const std::size_t cell = index / options.trials;
    const std::size_t trial = index % options.trials;
    outcomes[index] =
        RunTrial(options, options.view_counts[cell / ns], cell % ns, trial);
  });

  std::vector<GridKind> kinds{GridKind::kInput};
  if (options.ground_truth_f) kinds.push_back(GridKind::kCorrectedGroundTruthF);
  if (options.eight_point_f) kinds.push_back(GridKind::kCorrectedEightPointF);

  GridReport report;
  for (GridKind kind : kinds) {
    const auto slot = static_cast<std::size_t>(kind);
    ErrorGrid grid;
    grid.kind = kind;
    grid.sigmas = options.sigmas;
    grid.view_counts = options.view_counts;
    grid.trials = options.trials;
    for (std::size_t cell = 0; cell < cells; ++cell) {
      GridCell c;
      c.sigma = options.sigmas[cell % ns];
      c.n_views = options.view_counts[cell / ns];
      double sum = 0.0;
      double time_sum = 0.0;
      for (std::size_t t = 0; t < options.trials; ++t) {
        const TrialOutcome& o = outcomes[cell * options.trials + t];
        if (!o.ok[slot]) {
          ++c.excluded_trials;
          continue;
        }
        ++c.trials_used;
        sum += o.error[slot];
        time_sum += o.time_us[slot];
      }
      if (c.trials_used > 0) {
        c.mean_error = sum / static_cast<double>(c.trials_used);
        c.mean_correction_time_us = time_sum / static_cast<double>(c.trials_used);
        double sq = 0.0;
        for (std::size_t t = 0; t < options.trials; ++t) {
          const TrialOutcome& o = outcomes[cell * options.trials + t];
          if (o.ok[slot]) sq += (o.error[slot] - c.mean_error) * (o.error[slot] - c.mean_error);
        }
        c.std_error =
            c.trials_used > 1 ? std::sqrt(sq / static_cast<double>(c.trials_used - 1)) : 0.0;
      } else {
        c.mean_error = std::numeric_limits<double>::quiet_NaN();
        c.std_error = std::numeric_limits<double>::quiet_NaN();
      }
      grid.cells.push_back(c);
    }
    report.grids.push_back(std::move(grid));
  }
  return report;
}

void WriteGridCsv(std::ostream& out, const GridReport& report, bool include_timing) {
  std::ostringstream body;
  body.imbue(std::locale::classic());
  body.precision(12);
  body << "sigma,n_views,grid,mean_error,std_error,excluded_trials,mean_correction_time_us\n";
  for (const auto& grid : report.grids) {
    for (const auto& c : grid.cells) {
      body << c.sigma << ',' << c.n_views << ',' << ToString(grid.kind) << ',' << c.mean_error
           << ',' << c.std_error << ',' << c.excluded_trials << ',';
      if (grid.kind == GridKind::kInput) {
        body << 0;
      } else if (include_timing) {
        body << c.mean_correction_time_us;
      } else {
        body << "nan";
      }
      body << '\n';
    }
  }
  out << body.str();
}

}  // namespace mvlaf
