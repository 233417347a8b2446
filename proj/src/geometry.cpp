#include "mvlaf/geometry.hpp"

#include "mvlaf/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace mvlaf {

std::string_view ToString(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kCoincidentCenters: return "CoincidentCenters";
    case ErrorCode::kInvalidCamera: return "InvalidCamera";
    case ErrorCode::kSingularFrame: return "SingularFrame";
    case ErrorCode::kDegenerateConstraint: return "DegenerateConstraint";
    case ErrorCode::kNonPositiveScale: return "NonPositiveScale";
    case ErrorCode::kInvalidPairIndex: return "InvalidPairIndex";
    case ErrorCode::kDuplicatePair: return "DuplicatePair";
    case ErrorCode::kInsufficientConstraints: return "InsufficientConstraints";
    case ErrorCode::kNumericalFailure: return "NumericalFailure";
    case ErrorCode::kDegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::kVisibilityFailure: return "VisibilityFailure";
    case ErrorCode::kSchema: return "SchemaError";
  }
  return "Unknown";
}

std::string_view ToString(DiagnosticCode code) {
  switch (code) {
    case DiagnosticCode::kRankDeficiency: return "RankDeficiencyWarning";
    case DiagnosticCode::kSmallSpectralGap: return "SmallSpectralGapWarning";
    case DiagnosticCode::kDroppedDegenerateConstraint: return "DroppedDegenerateConstraint";
  }
  return "Unknown";
}

namespace {

constexpr double kRotationTolerance = 1e-10;
constexpr double kDegeneracyThreshold = 1e-12;

Vec3 Homogeneous(const Vec2& x) { return Vec3(x.x(), x.y(), 1.0); }

PairEpipolarVectors MakeRow(const Vec2& a, const Vec2& b, bool normalize) {
  const double norm = std::sqrt(a.squaredNorm() + b.squaredNorm());
  if (!(norm >= kDegeneracyThreshold)) {
    throw Error(ErrorCode::kDegenerateConstraint,
                "epipolar vectors vanish (|(a,b)| = " + std::to_string(norm) + ")");
  }
  PairEpipolarVectors ev;
  ev.a = normalize ? Vec2(a / norm) : a;
  ev.b = normalize ? Vec2(b / norm) : b;
  return ev;
}

}  // namespace

PinholeCamera::PinholeCamera(const Mat3& K, const Mat3& R, const Vec3& t) : K_(K), R_(R), t_(t) {
  if (!K.allFinite() || !R.allFinite() || !t.allFinite()) {
    throw Error(ErrorCode::kInvalidCamera, "non-finite camera parameters");
  }
  if (K(1, 0) != 0.0 || K(2, 0) != 0.0 || K(2, 1) != 0.0) {
    throw Error(ErrorCode::kInvalidCamera, "intrinsics must be upper triangular");
  }
  if (!(K(0, 0) > 0.0 && K(1, 1) > 0.0 && K(2, 2) > 0.0)) {
    throw Error(ErrorCode::kInvalidCamera, "intrinsics need positive diagonal entries");
  }
  K_ /= K(2, 2);
  const double orthogonality = (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (orthogonality > kRotationTolerance || std::abs(R.determinant() - 1.0) > kRotationTolerance) {
    throw Error(ErrorCode::kInvalidCamera, "R is not a proper rotation");
  }
}

PinholeCamera PinholeCamera::LookAt(const Mat3& K, const Vec3& center, const Vec3& target,
                                    double roll) {
  const Vec3 forward = target - center;
  if (forward.norm() < kDegeneracyThreshold) {
    throw Error(ErrorCode::kInvalidArgument, "camera center coincides with its target");
  }
  const Vec3 z = forward.normalized();
  const Vec3 helper = std::abs(z.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 x0 = (helper - helper.dot(z) * z).normalized();
  const Vec3 y0 = z.cross(x0);
  const double c = std::cos(roll);
  const double s = std::sin(roll);
  Mat3 R;
  R.row(0) = (c * x0 + s * y0).transpose();
  R.row(1) = (-s * x0 + c * y0).transpose();
  R.row(2) = z.transpose();
  return PinholeCamera(K, R, -R * center);
}

Eigen::Matrix<double, 3, 4> PinholeCamera::ProjectionMatrix() const {
  Eigen::Matrix<double, 3, 4> Rt;
  Rt << R_, t_;
  return K_ * Rt;
}

Vec2 PinholeCamera::Project(const Vec3& X) const {
  const Vec3 p = K_ * ToCamera(X);
  return p.head<2>() / p.z();
}

Eigen::Matrix<double, 2, 3> PinholeCamera::ProjectionJacobian(const Vec3& X) const {
  const Vec3 p = K_ * ToCamera(X);
  const double inv_z = 1.0 / p.z();
  Eigen::Matrix<double, 2, 3> d_dehomog;
  d_dehomog << inv_z, 0.0, -p.x() * inv_z * inv_z,
               0.0, inv_z, -p.y() * inv_z * inv_z;
  return d_dehomog * K_ * R_;
}

Mat3 Skew(const Vec3& v) {
  Mat3 S;
  S << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return S;
}

Mat3 CanonicalizeEpipolarMatrix(const Mat3& m) {
  const double norm = m.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error(ErrorCode::kNumericalFailure, "cannot canonicalize a zero or non-finite matrix");
  }
  Mat3 out = m / norm;
  const double largest = out.cwiseAbs().maxCoeff();
  // Row-major scan; near-ties resolve to the first entry so the sign is stable.
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      if (std::abs(out(r, c)) >= largest * (1.0 - 1e-9)) {
        if (out(r, c) < 0.0) out = -out;
        return out;
      }
    }
  }
  return out;
}

namespace {

struct RelativePose {
  Mat3 R;
  Vec3 t;
};

RelativePose Relative(const PinholeCamera& cam1, const PinholeCamera& cam2) {
  if ((cam1.Center() - cam2.Center()).norm() < kDegeneracyThreshold) {
    throw Error(ErrorCode::kCoincidentCenters, "cameras share their optical center");
  }
  const Mat3 R = cam2.R() * cam1.R().transpose();
  return {R, cam2.t() - R * cam1.t()};
}

}  // namespace

EssentialMatrix EssentialFromPoses(const PinholeCamera& cam1, const PinholeCamera& cam2) {
  const RelativePose rel = Relative(cam1, cam2);
  return {CanonicalizeEpipolarMatrix(Skew(rel.t) * rel.R)};
}

FundamentalMatrix FundamentalFromCameras(const PinholeCamera& cam1, const PinholeCamera& cam2) {
  const RelativePose rel = Relative(cam1, cam2);
  const Mat3 E = Skew(rel.t) * rel.R;
  const Mat3 K1_inv = cam1.K().inverse();
  const Mat3 K2_inv = cam2.K().inverse();
  return {CanonicalizeEpipolarMatrix(K2_inv.transpose() * E * K1_inv)};
}

Mat2 AffineFromLafPair(const Mat2& m1, const Mat2& m2) {
  const double det = m1.determinant();
  if (!(std::abs(det) > kDegeneracyThreshold)) {
    throw Error(ErrorCode::kSingularFrame, "base frame is singular");
  }
  return m2 * m1.inverse();
}

PairEpipolarVectors EpipolarVectorsPinhole(const FundamentalMatrix& F, const Vec2& x1,
                                           const Vec2& x2, bool normalize) {
  const Vec2 a = (F.F * Homogeneous(x1)).head<2>();
  const Vec2 b = (F.F.transpose() * Homogeneous(x2)).head<2>();
  return MakeRow(a, b, normalize);
}

BearingObservation BearingAndGradient(const PinholeCamera& cam, const Vec2& x) {
  const Mat3 K_inv = cam.K().inverse();
  const Vec3 ray = K_inv * Homogeneous(x);
  const double length = ray.norm();
  BearingObservation obs;
  obs.q = ray / length;
  obs.dq = (Mat3::Identity() - obs.q * obs.q.transpose()) * K_inv.leftCols<2>() / length;
  return obs;
}

PairEpipolarVectors EpipolarVectorsCentral(const EssentialMatrix& E, const BearingObservation& obs1,
                                           const BearingObservation& obs2, bool normalize) {
  const Vec2 a = obs2.dq.transpose() * E.E * obs1.q;
  const Vec2 b = obs1.dq.transpose() * E.E.transpose() * obs2.q;
  return MakeRow(a, b, normalize);
}

Vec2 LafPairResidual(const PairEpipolarVectors& ev, const Mat2& m1, const Mat2& m2) {
  return m2.transpose() * ev.a + m1.transpose() * ev.b;
}

Mat2 ExpandPartialFrame(const PartialFrame& pf) {
  if (!(pf.sigma > 0.0)) {
    throw Error(ErrorCode::kNonPositiveScale, "partial frame scale must be positive");
  }
  const double c = std::cos(pf.theta);
  const double s = std::sin(pf.theta);
  Mat2 M;
  M << c, -s,
       s, c;
  return pf.sigma * M;
}

Vec3 TriangulatePoint(std::span<const PinholeCamera> cameras, std::span<const Vec2> points) {
  if (cameras.size() != points.size() || cameras.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "triangulation needs >= 2 matched observations");
  }
  Eigen::MatrixXd A(2 * cameras.size(), 4);
  for (std::size_t k = 0; k < cameras.size(); ++k) {
    // Work in normalized image coordinates for conditioning.
    const Vec3 u = cameras[k].K().inverse() * Homogeneous(points[k]);
    Eigen::Matrix<double, 3, 4> Rt;
    Rt << cameras[k].R(), cameras[k].t();
    const auto r = static_cast<Eigen::Index>(2 * k);
    A.row(r) = u.x() * Rt.row(2) - u.z() * Rt.row(0);
    A.row(r + 1) = u.y() * Rt.row(2) - u.z() * Rt.row(1);
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const Eigen::Vector4d X = svd.matrixV().col(3);
  if (std::abs(X.w()) < kDegeneracyThreshold * X.head<3>().norm()) {
    throw Error(ErrorCode::kDegenerateConfiguration, "triangulated point lies at infinity");
  }
  return X.head<3>() / X.w();
}

}  // namespace mvlaf
