#pragma once

#include "mvlaf/error.hpp"
#include "mvlaf/geometry.hpp"
#include "mvlaf/types.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace mvlaf {

enum class SolvePath { kQR, kSVD, kKKT };

/// kPoseDerived: constraint rows come from camera poses and a consistent
/// point, so B is noise-free. kEstimated: pairwise geometry was estimated.
enum class GeometrySource { kPoseDerived, kEstimated };

std::string_view ToString(SolvePath path);
std::optional<SolvePath> ParseSolvePath(std::string_view name);
SolvePath DefaultPath(GeometrySource source);

/// Observations of one scene point across views plus its constraint rows.
struct MultiViewTrack {
  std::vector<int> view_ids;  // parallel to frames; may be left empty
  std::vector<LocalAffineFrame> frames;
  std::vector<PairEpipolarVectors> constraints;

  std::size_t num_views() const { return frames.size(); }

  /// Throws kInvalidArgument, kInvalidPairIndex, kDuplicatePair or
  /// kInsufficientConstraints.
  void Validate() const;
};

/// Column c of B holds b_ij in rows [2i, 2i+2) and a_ij in rows [2j, 2j+2),
/// so (B^T Omega)_c = (M_j^T a_ij + M_i^T b_ij)^T. Omega stacks the frames
/// M_k vertically.
struct ConstraintSystem {
  Eigen::MatrixXd B;
  Eigen::MatrixX2d omega_hat;
  std::vector<ViewPair> pairs;

  Eigen::Index num_views() const { return omega_hat.rows() / 2; }
  Eigen::Index num_constraints() const { return B.cols(); }
};

struct CorrectionResult {
  std::vector<Mat2> frames;
  Eigen::MatrixX2d omega;
  /// Only filled by the KKT path: |C| x 2, with Omega + B * multipliers = Omega_hat.
  Eigen::MatrixX2d multipliers;
  double residual_before = 0.0;
  double residual_after = 0.0;
  double frobenius_change = 0.0;
  Eigen::Index rank_used = 0;
  SolvePath path = SolvePath::kQR;
  std::vector<Diagnostic> diagnostics;
};

/// Relative cutoff on QR pivots and singular values when deciding rank.
inline constexpr double kRankThreshold = 1e-10;
/// The SVD path warns when sigma_{k} / sigma_{k+1} falls below this.
inline constexpr double kMinSpectralGap = 10.0;

ConstraintSystem Assemble(const MultiViewTrack& track);

/// Dense solve of [I B; B^T 0][Omega; Lambda] = [Omega_hat; 0].
CorrectionResult CorrectKkt(const ConstraintSystem& cs);
/// Omega_hat minus its projection onto col(B), col(B) from column-pivoting QR.
CorrectionResult CorrectQr(const ConstraintSystem& cs);
/// Omega_hat minus its projection onto the leading 2|V|-3 left singular vectors.
CorrectionResult CorrectSvd(const ConstraintSystem& cs);
CorrectionResult Correct(const ConstraintSystem& cs, SolvePath path);

CorrectionResult CorrectTrack(const MultiViewTrack& track, SolvePath path);
CorrectionResult CorrectTrack(const MultiViewTrack& track, GeometrySource source);

/// Max over constraints of |M_j^T a + M_i^T b|.
double MaxPairResidual(const Eigen::MatrixXd& B, const Eigen::MatrixX2d& omega);

/// rows(B) minus the number of singular values above rel_tol * sigma_max.
Eigen::Index LeftNullspaceDimension(const Eigen::MatrixXd& B, double rel_tol);

std::vector<ViewPair> AllPairs(std::size_t num_views);
std::vector<ViewPair> ChainPairs(std::size_t num_views);

enum class ConstraintForm { kPixel, kBearing };

struct ConstraintOptions {
  ConstraintForm form = ConstraintForm::kPixel;
  bool row_normalize = true;
};

/// A track plus the degenerate constraints that were dropped while building it.
struct TrackBuild {
  MultiViewTrack track;
  std::vector<Diagnostic> diagnostics;
};

/// Constraint rows from camera poses. When `anchor` is given the rows are
/// evaluated at its reprojections (noise-free B), otherwise at frame centers.
TrackBuild BuildTrackFromCameras(std::span<const PinholeCamera> cameras,
                                 std::vector<LocalAffineFrame> frames,
                                 std::span<const ViewPair> pairs,
                                 const ConstraintOptions& options = {},
                                 const std::optional<Vec3>& anchor = std::nullopt);

/// F maps view pair.i to pair.j: x_j^T F x_i = 0.
struct PairGeometry {
  ViewPair pair;
  FundamentalMatrix F;
};

TrackBuild BuildTrackFromFundamentals(std::vector<LocalAffineFrame> frames,
                                      std::span<const PairGeometry> geometry,
                                      bool row_normalize = true);

}  // namespace mvlaf
