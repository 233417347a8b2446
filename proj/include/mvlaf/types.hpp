#pragma once

#include <Eigen/Core>

#include <compare>
#include <cstddef>

namespace mvlaf {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat32 = Eigen::Matrix<double, 3, 2>;

/// A feature point together with the 2x2 linear map taking plane-local
/// tangent coordinates to pixels.
struct LocalAffineFrame {
  Vec2 x = Vec2::Zero();
  Mat2 M = Mat2::Identity();
};

/// Scale and orientation only, as produced by SIFT-like detectors.
struct PartialFrame {
  Vec2 x = Vec2::Zero();
  double sigma = 1.0;
  double theta = 0.0;
};

/// Indices (i < j) of two views taking part in one epipolar constraint.
struct ViewPair {
  std::size_t i = 0;
  std::size_t j = 1;

  friend auto operator<=>(const ViewPair&, const ViewPair&) = default;
};

/// Pixel-space fundamental matrix; x2^T F x1 = 0 for corresponding points.
struct FundamentalMatrix {
  Mat3 F = Mat3::Zero();
};

/// Calibrated counterpart of FundamentalMatrix; q2^T E q1 = 0 for bearings.
struct EssentialMatrix {
  Mat3 E = Mat3::Zero();
};

/// The two 2-vectors of one constraint row, M_j^T a + M_i^T b = 0.
struct PairEpipolarVectors {
  Vec2 a = Vec2::Zero();
  Vec2 b = Vec2::Zero();
  ViewPair pair;
};

/// Unit bearing of a pixel and its 3x2 derivative with respect to the pixel.
struct BearingObservation {
  Vec3 q = Vec3::UnitZ();
  Mat32 dq = Mat32::Zero();
};

}  // namespace mvlaf
