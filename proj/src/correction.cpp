#include "mvlaf/correction.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace mvlaf {

std::string_view ToString(SolvePath path) {
  switch (path) {
    case SolvePath::kQR: return "qr";
    case SolvePath::kSVD: return "svd";
    case SolvePath::kKKT: return "kkt";
  }
  return "unknown";
}

std::optional<SolvePath> ParseSolvePath(std::string_view name) {
  if (name == "qr") return SolvePath::kQR;
  if (name == "svd") return SolvePath::kSVD;
  if (name == "kkt") return SolvePath::kKKT;
  return std::nullopt;
}

SolvePath DefaultPath(GeometrySource source) {
  return source == GeometrySource::kPoseDerived ? SolvePath::kQR : SolvePath::kSVD;
}

void MultiViewTrack::Validate() const {
  const std::size_t n = frames.size();
  if (n < 2) {
    throw Error(ErrorCode::kInvalidArgument, "a track needs at least two views");
  }
  if (!view_ids.empty() && view_ids.size() != n) {
    throw Error(ErrorCode::kInvalidArgument, "view_ids and frames differ in length");
  }
  for (const auto& f : frames) {
    if (!f.x.allFinite() || !f.M.allFinite()) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite frame");
    }
  }
  if (constraints.empty()) {
    throw Error(ErrorCode::kInsufficientConstraints, "track has no pairwise constraints");
  }
  std::set<ViewPair> seen;
  for (const auto& c : constraints) {
    if (c.pair.i >= c.pair.j || c.pair.j >= n) {
      throw Error(ErrorCode::kInvalidPairIndex,
                  "pair (" + std::to_string(c.pair.i) + "," + std::to_string(c.pair.j) +
                      ") is not i < j < " + std::to_string(n));
    }
    if (!seen.insert(c.pair).second) {
      throw Error(ErrorCode::kDuplicatePair, "pair (" + std::to_string(c.pair.i) + "," +
                                                 std::to_string(c.pair.j) + ") repeated");
    }
    if (!c.a.allFinite() || !c.b.allFinite()) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite epipolar vectors");
    }
  }
}

ConstraintSystem Assemble(const MultiViewTrack& track) {
  track.Validate();
  const auto n = static_cast<Eigen::Index>(track.num_views());
  const auto m = static_cast<Eigen::Index>(track.constraints.size());

  ConstraintSystem cs;
  cs.B = Eigen::MatrixXd::Zero(2 * n, m);
  cs.omega_hat.resize(2 * n, 2);
  for (Eigen::Index k = 0; k < n; ++k) {
    cs.omega_hat.middleRows<2>(2 * k) = track.frames[static_cast<std::size_t>(k)].M;
  }
  cs.pairs.reserve(track.constraints.size());
  for (Eigen::Index c = 0; c < m; ++c) {
    const auto& ev = track.constraints[static_cast<std::size_t>(c)];
    cs.B.col(c).segment<2>(2 * static_cast<Eigen::Index>(ev.pair.i)) = ev.b;
    cs.B.col(c).segment<2>(2 * static_cast<Eigen::Index>(ev.pair.j)) = ev.a;
    cs.pairs.push_back(ev.pair);
  }
  return cs;
}

double MaxPairResidual(const Eigen::MatrixXd& B, const Eigen::MatrixX2d& omega) {
  if (B.cols() == 0) return 0.0;
  return (B.transpose() * omega).rowwise().norm().maxCoeff();
}

Eigen::Index LeftNullspaceDimension(const Eigen::MatrixXd& B, double rel_tol) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(B);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return B.rows();
  const Eigen::Index rank = (s.array() > rel_tol * s(0)).count();
  return B.rows() - rank;
}

namespace {

CorrectionResult Finish(const ConstraintSystem& cs, Eigen::MatrixX2d omega, SolvePath path) {
  if (!omega.allFinite()) {
    throw Error(ErrorCode::kNumericalFailure, "non-finite corrected frames");
  }
  CorrectionResult result;
  result.path = path;
  result.residual_before = MaxPairResidual(cs.B, cs.omega_hat);
  result.residual_after = MaxPairResidual(cs.B, omega);
  result.frobenius_change = (omega - cs.omega_hat).squaredNorm();
  result.frames.reserve(static_cast<std::size_t>(cs.num_views()));
  for (Eigen::Index k = 0; k < cs.num_views(); ++k) {
    result.frames.emplace_back(omega.middleRows<2>(2 * k));
  }
  result.omega = std::move(omega);
  return result;
}

void CheckSystem(const ConstraintSystem& cs) {
  if (cs.num_constraints() == 0) {
    throw Error(ErrorCode::kInsufficientConstraints, "constraint system has no columns");
  }
  if (cs.B.rows() != cs.omega_hat.rows() || cs.B.rows() < 4) {
    throw Error(ErrorCode::kInvalidArgument, "B and Omega_hat shapes disagree");
  }
  if (!cs.B.allFinite() || !cs.omega_hat.allFinite()) {
    throw Error(ErrorCode::kNumericalFailure, "non-finite constraint system");
  }
}

// Number of constraints the track would need for the generic rank 2|V|-3.
Eigen::Index GenericRank(const ConstraintSystem& cs) {
  return std::min<Eigen::Index>(2 * cs.num_views() - 3, cs.num_constraints());
}

}  // namespace

CorrectionResult CorrectQr(const ConstraintSystem& cs) {
  CheckSystem(cs);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(cs.B.rows(), cs.B.cols());
  qr.setThreshold(kRankThreshold);
  qr.compute(cs.B);
  const Eigen::Index rank = qr.rank();

  // Q^T Omega_hat restricted to the first `rank` coordinates spans col(B).
  Eigen::MatrixX2d coeffs = qr.householderQ().transpose() * cs.omega_hat;
  coeffs.bottomRows(coeffs.rows() - rank).setZero();
  Eigen::MatrixX2d omega = cs.omega_hat - qr.householderQ() * coeffs;

  CorrectionResult result = Finish(cs, std::move(omega), SolvePath::kQR);
  result.rank_used = rank;
  if (rank < GenericRank(cs)) {
    result.diagnostics.push_back(
        {DiagnosticCode::kRankDeficiency, "rank(B) = " + std::to_string(rank) + " < " +
                                              std::to_string(GenericRank(cs)) +
                                              "; track is under-constrained"});
  }
  return result;
}

CorrectionResult CorrectSvd(const ConstraintSystem& cs) {
  CheckSystem(cs);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(cs.B, Eigen::ComputeFullU);
  const auto& s = svd.singularValues();
  const Eigen::Index effective_rank = (s.array() > kRankThreshold * s(0)).count();
  const Eigen::Index nominal = 2 * cs.num_views() - 3;

  std::vector<Diagnostic> diagnostics;
  Eigen::Index keep = nominal;
  if (effective_rank < nominal) {
    keep = effective_rank;
    diagnostics.push_back({DiagnosticCode::kRankDeficiency,
                           "effective rank " + std::to_string(effective_rank) + " < 2|V|-3 = " +
                               std::to_string(nominal) + "; projecting at effective rank"});
  }
  if (keep < s.size() && s(keep) > 0.0 && s(keep - 1) / s(keep) < kMinSpectralGap) {
    diagnostics.push_back({DiagnosticCode::kSmallSpectralGap,
                           "sigma_" + std::to_string(keep) + "/sigma_" + std::to_string(keep + 1) +
                               " = " + std::to_string(s(keep - 1) / s(keep))});
  }

  const auto U = svd.matrixU().leftCols(keep);
  Eigen::MatrixX2d omega = cs.omega_hat - U * (U.transpose() * cs.omega_hat);
  CorrectionResult result = Finish(cs, std::move(omega), SolvePath::kSVD);
  result.rank_used = keep;
  result.diagnostics = std::move(diagnostics);
  return result;
}

CorrectionResult CorrectKkt(const ConstraintSystem& cs) {
  CheckSystem(cs);
  const Eigen::Index nv = cs.B.rows();
  const Eigen::Index nc = cs.B.cols();
  const Eigen::Index n = nv + nc;

  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n, n);
  kkt.topLeftCorner(nv, nv).setIdentity();
  kkt.topRightCorner(nv, nc) = cs.B;
  kkt.bottomLeftCorner(nc, nv) = cs.B.transpose();
  Eigen::MatrixX2d rhs = Eigen::MatrixX2d::Zero(n, 2);
  rhs.topRows(nv) = cs.omega_hat;

  // Lambda is not unique when B is column-rank deficient; the
  // minimum-norm solve still yields the unique Omega.
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(n, n);
  cod.setThreshold(kRankThreshold);
  cod.compute(kkt);
  const Eigen::MatrixX2d solution = cod.solve(rhs);

  const double misfit = (kkt * solution - rhs).norm();
  if (!solution.allFinite() || misfit > 1e-8 * (1.0 + rhs.norm())) {
    throw Error(ErrorCode::kNumericalFailure,
                "KKT least-squares solve left residual " + std::to_string(misfit));
  }

  CorrectionResult result = Finish(cs, solution.topRows(nv), SolvePath::kKKT);
  result.multipliers = solution.bottomRows(nc);
  result.rank_used = cod.rank() - nv;
  if (result.rank_used < GenericRank(cs)) {
    result.diagnostics.push_back({DiagnosticCode::kRankDeficiency,
                                  "rank(B) = " + std::to_string(result.rank_used) + " < " +
                                      std::to_string(GenericRank(cs))});
  }
  return result;
}

CorrectionResult Correct(const ConstraintSystem& cs, SolvePath path) {
  switch (path) {
    case SolvePath::kQR: return CorrectQr(cs);
    case SolvePath::kSVD: return CorrectSvd(cs);
    case SolvePath::kKKT: return CorrectKkt(cs);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown solve path");
}

CorrectionResult CorrectTrack(const MultiViewTrack& track, SolvePath path) {
  return Correct(Assemble(track), path);
}

CorrectionResult CorrectTrack(const MultiViewTrack& track, GeometrySource source) {
  return CorrectTrack(track, DefaultPath(source));
}

std::vector<ViewPair> AllPairs(std::size_t num_views) {
  std::vector<ViewPair> pairs;
  for (std::size_t i = 0; i < num_views; ++i) {
    for (std::size_t j = i + 1; j < num_views; ++j) pairs.push_back({i, j});
  }
  return pairs;
}

std::vector<ViewPair> ChainPairs(std::size_t num_views) {
  std::vector<ViewPair> pairs;
  for (std::size_t i = 0; i + 1 < num_views; ++i) pairs.push_back({i, i + 1});
  return pairs;
}

namespace {

void DropDegenerate(TrackBuild& build, const ViewPair& pair, const Error& e) {
  build.diagnostics.push_back({DiagnosticCode::kDroppedDegenerateConstraint,
                               "pair (" + std::to_string(pair.i) + "," + std::to_string(pair.j) +
                                   "): " + e.what()});
}

}  // namespace

TrackBuild BuildTrackFromCameras(std::span<const PinholeCamera> cameras,
                                 std::vector<LocalAffineFrame> frames,
                                 std::span<const ViewPair> pairs, const ConstraintOptions& options,
                                 const std::optional<Vec3>& anchor) {
  if (cameras.size() != frames.size()) {
    throw Error(ErrorCode::kInvalidArgument, "one camera per frame required");
  }
  std::vector<Vec2> points(frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    points[k] = anchor ? cameras[k].Project(*anchor) : frames[k].x;
  }

  TrackBuild build;
  for (const ViewPair& pair : pairs) {
    if (pair.i >= pair.j || pair.j >= frames.size()) {
      throw Error(ErrorCode::kInvalidPairIndex, "pair index out of range");
    }
    const auto& ci = cameras[pair.i];
    const auto& cj = cameras[pair.j];
    try {
      PairEpipolarVectors ev;
      if (options.form == ConstraintForm::kPixel) {
        ev = EpipolarVectorsPinhole(FundamentalFromCameras(ci, cj), points[pair.i], points[pair.j],
                                    options.row_normalize);
      } else {
        ev = EpipolarVectorsCentral(EssentialFromPoses(ci, cj),
                                    BearingAndGradient(ci, points[pair.i]),
                                    BearingAndGradient(cj, points[pair.j]), options.row_normalize);
      }
      ev.pair = pair;
      build.track.constraints.push_back(ev);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateConstraint) throw;
      DropDegenerate(build, pair, e);
    }
  }
  build.track.frames = std::move(frames);
  return build;
}

TrackBuild BuildTrackFromFundamentals(std::vector<LocalAffineFrame> frames,
                                      std::span<const PairGeometry> geometry, bool row_normalize) {
  TrackBuild build;
  for (const PairGeometry& g : geometry) {
    if (g.pair.i >= g.pair.j || g.pair.j >= frames.size()) {
      throw Error(ErrorCode::kInvalidPairIndex, "pair index out of range");
    }
    try {
      PairEpipolarVectors ev =
          EpipolarVectorsPinhole(g.F, frames[g.pair.i].x, frames[g.pair.j].x, row_normalize);
      ev.pair = g.pair;
      build.track.constraints.push_back(ev);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateConstraint) throw;
      DropDegenerate(build, g.pair, e);
    }
  }
  build.track.frames = std::move(frames);
  return build;
}

}  // namespace mvlaf
