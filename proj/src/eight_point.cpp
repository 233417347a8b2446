#include "mvlaf/eight_point.hpp"

#include "mvlaf/error.hpp"
#include "mvlaf/geometry.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

namespace mvlaf {

namespace {

constexpr double kNullspaceThreshold = 1e-8;

// Similarity taking the points to zero centroid and mean distance sqrt(2).
Mat3 HartleyNormalization(std::span<const PointCorrespondence> pts, bool second) {
  Vec2 centroid = Vec2::Zero();
  for (const auto& p : pts) centroid += second ? p.x2 : p.x1;
  centroid /= static_cast<double>(pts.size());
  double mean_distance = 0.0;
  for (const auto& p : pts) mean_distance += ((second ? p.x2 : p.x1) - centroid).norm();
  mean_distance /= static_cast<double>(pts.size());
  if (!(mean_distance > 0.0)) {
    throw Error(ErrorCode::kDegenerateConfiguration, "all points coincide");
  }
  const double s = std::numbers::sqrt2 / mean_distance;
  Mat3 T;
  T << s, 0.0, -s * centroid.x(),
       0.0, s, -s * centroid.y(),
       0.0, 0.0, 1.0;
  return T;
}

}  // namespace

FundamentalMatrix EstimateFundamentalEightPoint(std::span<const PointCorrespondence> pts) {
  if (pts.size() < 8) {
    throw Error(ErrorCode::kInvalidArgument, "the 8-point algorithm needs >= 8 correspondences");
  }
  for (const auto& p : pts) {
    if (!p.x1.allFinite() || !p.x2.allFinite()) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite correspondence");
    }
  }
  const Mat3 T1 = HartleyNormalization(pts, false);
  const Mat3 T2 = HartleyNormalization(pts, true);

  const auto n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd A(n, 9);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& p = pts[static_cast<std::size_t>(r)];
    const Vec3 y1 = T1 * Vec3(p.x1.x(), p.x1.y(), 1.0);
    const Vec3 y2 = T2 * Vec3(p.x2.x(), p.x2.y(), 1.0);
    // Row-major vec(F): x2^T F x1 = sum_{ij} y2_i y1_j F_ij.
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) A(r, 3 * i + j) = y2(i) * y1(j);
    }
  }

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const Eigen::Index rank = (s.array() > kNullspaceThreshold * s(0)).count();
  if (9 - rank > 1) {
    throw Error(ErrorCode::kDegenerateConfiguration,
                "design matrix nullspace has dimension " + std::to_string(9 - rank));
  }

  const Eigen::Matrix<double, 9, 1> f = svd.matrixV().col(8);
  Mat3 F_normalized;
  F_normalized << f(0), f(1), f(2), f(3), f(4), f(5), f(6), f(7), f(8);

  Eigen::JacobiSVD<Mat3> rank2(F_normalized, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 sv = rank2.singularValues();
  sv(2) = 0.0;
  F_normalized = rank2.matrixU() * sv.asDiagonal() * rank2.matrixV().transpose();

  const Mat3 F = T2.transpose() * F_normalized * T1;
  // Canonical scaling; re-project to rank 2 in the original coordinates so
  // the smallest singular value is zero to machine precision.
  Eigen::JacobiSVD<Mat3> final_svd(CanonicalizeEpipolarMatrix(F),
                                   Eigen::ComputeFullU | Eigen::ComputeFullV);
  sv = final_svd.singularValues();
  sv(2) = 0.0;
  return {CanonicalizeEpipolarMatrix(final_svd.matrixU() * sv.asDiagonal() *
                                     final_svd.matrixV().transpose())};
}

double MeanAlgebraicError(const FundamentalMatrix& F, std::span<const PointCorrespondence> pts) {
  if (pts.empty()) return 0.0;
  double total = 0.0;
  for (const auto& p : pts) {
    total += std::abs(Vec3(p.x2.x(), p.x2.y(), 1.0).dot(F.F * Vec3(p.x1.x(), p.x1.y(), 1.0)));
  }
  return total / static_cast<double>(pts.size());
}

}  // namespace mvlaf
