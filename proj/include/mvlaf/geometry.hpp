#pragma once

#include "mvlaf/types.hpp"

#include <span>

namespace mvlaf {

/// Calibrated pinhole camera, P = K [R | t].
class PinholeCamera {
 public:
  /// Throws kInvalidCamera unless R is a proper rotation (1e-10) and K is
  /// upper triangular with positive focal entries and K(2,2) = 1.
  PinholeCamera(const Mat3& K, const Mat3& R, const Vec3& t);

  /// Camera at `center` whose principal axis passes through `target`.
  /// `roll` rotates the image about the principal axis.
  static PinholeCamera LookAt(const Mat3& K, const Vec3& center, const Vec3& target,
                              double roll = 0.0);

  const Mat3& K() const { return K_; }
  const Mat3& R() const { return R_; }
  const Vec3& t() const { return t_; }

  Vec3 Center() const { return -R_.transpose() * t_; }
  Eigen::Matrix<double, 3, 4> ProjectionMatrix() const;

  /// Camera-frame coordinates R X + t.
  Vec3 ToCamera(const Vec3& X) const { return R_ * X + t_; }
  Vec2 Project(const Vec3& X) const;
  /// 2x3 derivative of Project() with respect to the world point.
  Eigen::Matrix<double, 2, 3> ProjectionJacobian(const Vec3& X) const;

 private:
  Mat3 K_;
  Mat3 R_;
  Vec3 t_;
};

Mat3 Skew(const Vec3& v);

/// Unit Frobenius norm, and the first entry within 1e-9 relative of the
/// largest magnitude made positive.
Mat3 CanonicalizeEpipolarMatrix(const Mat3& m);

/// F with x2^T F x1 = 0. Throws kCoincidentCenters for baselines < 1e-12.
FundamentalMatrix FundamentalFromCameras(const PinholeCamera& cam1, const PinholeCamera& cam2);

/// E = [t]x R of the relative pose, canonicalized like F.
EssentialMatrix EssentialFromPoses(const PinholeCamera& cam1, const PinholeCamera& cam2);

/// A = m2 m1^-1. Throws kSingularFrame if |det m1| <= 1e-12.
Mat2 AffineFromLafPair(const Mat2& m1, const Mat2& m2);

/// a = I_{2x3} F x1~, b = I_{2x3} F^T x2~.
///
/// With `normalize` the concatenated (a, b) is scaled to unit length. Throws
/// kDegenerateConstraint if |(a, b)| < 1e-12 (both points at epipoles).
PairEpipolarVectors EpipolarVectorsPinhole(const FundamentalMatrix& F, const Vec2& x1,
                                           const Vec2& x2, bool normalize = true);

BearingObservation BearingAndGradient(const PinholeCamera& cam, const Vec2& x);

/// a = dq2^T E q1, b = dq1^T E^T q2; normalization and errors as above.
PairEpipolarVectors EpipolarVectorsCentral(const EssentialMatrix& E, const BearingObservation& obs1,
                                           const BearingObservation& obs2, bool normalize = true);

/// M2^T a + M1^T b; zero for frames consistent with the epipolar geometry.
Vec2 LafPairResidual(const PairEpipolarVectors& ev, const Mat2& m1, const Mat2& m2);

/// sigma * R(theta). Throws kNonPositiveScale for sigma <= 0.
Mat2 ExpandPartialFrame(const PartialFrame& pf);

/// Linear (DLT) triangulation of one point seen by two or more cameras.
Vec3 TriangulatePoint(std::span<const PinholeCamera> cameras, std::span<const Vec2> points);

}  // namespace mvlaf
