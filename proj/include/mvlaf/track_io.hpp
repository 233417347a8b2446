#pragma once

#include "mvlaf/correction.hpp"
#include "mvlaf/geometry.hpp"
#include "mvlaf/types.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mvlaf {

// Track document (JSON):
//
//   {
//     "cameras": [{"id": 0, "K": [[...]x3], "R": [[...]x3], "t": [x, y, z]}],
//     "pairs":   [{"i": 0, "j": 1, "F": [[...]x3]}],      // x_j^T F x_i = 0
//     "tracks":  [{"observations": [
//         {"view_id": 0, "x": u, "y": v, "M": [m00, m01, m10, m11]},
//         {"view_id": 1, "x": u, "y": v, "sigma": s, "theta": t}]}]
//   }
//
// Exactly one of "cameras" and "pairs" supplies the geometry.

struct CameraEntry {
  int id;
  PinholeCamera camera;
};

struct PairEntry {
  int i = 0;
  int j = 0;
  FundamentalMatrix F;
};

struct ObservationEntry {
  int view_id = 0;
  Vec2 x = Vec2::Zero();
  std::optional<Mat2> M;
  std::optional<double> sigma;
  std::optional<double> theta;

  bool is_partial() const { return !M.has_value(); }
  /// M, or sigma R(theta) for partial observations.
  Mat2 Frame() const;
};

struct TrackEntry {
  std::vector<ObservationEntry> observations;
};

struct TrackDocument {
  std::vector<CameraEntry> cameras;
  std::vector<PairEntry> pairs;
  std::vector<TrackEntry> tracks;

  bool has_poses() const { return !cameras.empty(); }
  const PinholeCamera* FindCamera(int id) const;
  /// F with x_to^T F x_from = 0, transposing a stored (to, from) entry.
  std::optional<FundamentalMatrix> FindFundamental(int from, int to) const;
};

/// Throws Error(kSchema). JSON syntax errors report line and column.
nlohmann::json ParseJsonText(std::string_view text);
TrackDocument ParseTrackDocument(const nlohmann::json& doc);
TrackDocument ParseTrackDocument(std::string_view text);
/// Throws Error(kSchema) if the file cannot be read or is invalid.
nlohmann::json LoadJsonFile(const std::filesystem::path& path);

nlohmann::json ToJson(const TrackDocument& doc);

/// A document track turned into a constraint track. With poses the rows are
/// evaluated at the reprojections of the triangulated point, so B is
/// consistent with the poses; with pairwise F they use the observed centers.
struct PreparedTrack {
  TrackBuild build;
  GeometrySource source = GeometrySource::kPoseDerived;
};

PreparedTrack PrepareTrack(const TrackDocument& doc, const TrackEntry& track,
                           const ConstraintOptions& options);

}  // namespace mvlaf
