#include "mvlaf/track_io.hpp"

#include "mvlaf/error.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace mvlaf {

using nlohmann::json;

namespace {

[[noreturn]] void SchemaError(const std::string& what) { throw Error(ErrorCode::kSchema, what); }

double RequireNumber(const json& j, const std::string& where) {
  if (!j.is_number()) SchemaError(where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) SchemaError(where + ": non-finite value");
  return v;
}

int RequireInt(const json& j, const std::string& where) {
  if (!j.is_number_integer()) SchemaError(where + ": expected an integer");
  return j.get<int>();
}

const json& RequireKey(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) SchemaError(where + ": expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) SchemaError(where + ": missing \"" + key + "\"");
  return *it;
}

Mat3 RequireMat3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) SchemaError(where + ": expected a 3x3 nested array");
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || row.size() != 3) SchemaError(where + ": expected a 3x3 nested array");
    for (int c = 0; c < 3; ++c) {
      m(r, c) = RequireNumber(row[static_cast<std::size_t>(c)], where);
    }
  }
  return m;
}

Vec3 RequireVec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) SchemaError(where + ": expected 3 numbers");
  return {RequireNumber(j[0], where), RequireNumber(j[1], where), RequireNumber(j[2], where)};
}

json Mat3ToJson(const Mat3& m) {
  json out = json::array();
  for (int r = 0; r < 3; ++r) out.push_back({m(r, 0), m(r, 1), m(r, 2)});
  return out;
}

ObservationEntry ParseObservation(const json& j, const std::string& where) {
  ObservationEntry obs;
  obs.view_id = RequireInt(RequireKey(j, "view_id", where), where + ".view_id");
  obs.x = Vec2(RequireNumber(RequireKey(j, "x", where), where + ".x"),
               RequireNumber(RequireKey(j, "y", where), where + ".y"));
  const bool has_m = j.contains("M");
  const bool has_partial = j.contains("sigma") || j.contains("theta");
  if (has_m == has_partial) {
    SchemaError(where + ": needs either \"M\" or \"sigma\"/\"theta\"");
  }
  if (has_m) {
    const json& m = j["M"];
    if (!m.is_array() || m.size() != 4) SchemaError(where + ".M: expected 4 numbers (row-major)");
    Mat2 M;
    M << RequireNumber(m[0], where + ".M"), RequireNumber(m[1], where + ".M"),
        RequireNumber(m[2], where + ".M"), RequireNumber(m[3], where + ".M");
    obs.M = M;
  } else {
    obs.sigma = RequireNumber(RequireKey(j, "sigma", where), where + ".sigma");
    obs.theta = RequireNumber(RequireKey(j, "theta", where), where + ".theta");
    if (!(*obs.sigma > 0.0)) SchemaError(where + ".sigma: must be positive");
  }
  return obs;
}

}  // namespace

Mat2 ObservationEntry::Frame() const {
  if (M) return *M;
  return ExpandPartialFrame({x, sigma.value_or(0.0), theta.value_or(0.0)});
}

const PinholeCamera* TrackDocument::FindCamera(int id) const {
  for (const auto& c : cameras) {
    if (c.id == id) return &c.camera;
  }
  return nullptr;
}

std::optional<FundamentalMatrix> TrackDocument::FindFundamental(int from, int to) const {
  for (const auto& p : pairs) {
    if (p.i == from && p.j == to) return p.F;
    if (p.i == to && p.j == from) return FundamentalMatrix{p.F.F.transpose()};
  }
  return std::nullopt;
}

json ParseJsonText(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // e.byte is the 1-based offset of the offending character.
    std::size_t line = 1;
    std::size_t column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t k = 0; k < end; ++k) {
      if (text[k] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    SchemaError("malformed JSON at line " + std::to_string(line) + ", column " +
                std::to_string(column) + ": " + e.what());
  }
}

json LoadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) SchemaError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ParseJsonText(buffer.str());
}

TrackDocument ParseTrackDocument(std::string_view text) { return ParseTrackDocument(ParseJsonText(text)); }

TrackDocument ParseTrackDocument(const json& doc) {
  if (!doc.is_object()) SchemaError("document root must be an object");
  if (doc.contains("cameras") && doc.contains("pairs")) {
    SchemaError("document mixes \"cameras\" (poses) and \"pairs\" (fundamental matrices); "
                "supply exactly one");
  }

  TrackDocument out;
  std::set<int> view_ids;
  if (doc.contains("cameras")) {
    const json& cams = doc["cameras"];
    if (!cams.is_array()) SchemaError("\"cameras\" must be an array");
    for (std::size_t k = 0; k < cams.size(); ++k) {
      const std::string where = "cameras[" + std::to_string(k) + "]";
      const int id = RequireInt(RequireKey(cams[k], "id", where), where + ".id");
      if (!view_ids.insert(id).second) SchemaError(where + ": duplicate camera id");
      try {
        out.cameras.push_back({id, PinholeCamera(RequireMat3(RequireKey(cams[k], "K", where), where + ".K"),
                                                 RequireMat3(RequireKey(cams[k], "R", where), where + ".R"),
                                                 RequireVec3(RequireKey(cams[k], "t", where), where + ".t"))});
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kSchema) throw;
        SchemaError(where + ": " + e.what());
      }
    }
  }
  if (doc.contains("pairs")) {
    const json& pairs = doc["pairs"];
    if (!pairs.is_array()) SchemaError("\"pairs\" must be an array");
    std::set<std::pair<int, int>> seen;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const std::string where = "pairs[" + std::to_string(k) + "]";
      PairEntry p;
      p.i = RequireInt(RequireKey(pairs[k], "i", where), where + ".i");
      p.j = RequireInt(RequireKey(pairs[k], "j", where), where + ".j");
      p.F.F = RequireMat3(RequireKey(pairs[k], "F", where), where + ".F");
      if (p.i == p.j) SchemaError(where + ": i and j must differ");
      if (!seen.insert({std::min(p.i, p.j), std::max(p.i, p.j)}).second) {
        SchemaError(where + ": duplicate view pair");
      }
      view_ids.insert(p.i);
      view_ids.insert(p.j);
      out.pairs.push_back(p);
    }
  }

  if (doc.contains("tracks")) {
    const json& tracks = doc["tracks"];
    if (!tracks.is_array()) SchemaError("\"tracks\" must be an array");
    if (!tracks.empty() && out.cameras.empty() && out.pairs.empty()) {
      SchemaError("tracks given without \"cameras\" or \"pairs\" geometry");
    }
    for (std::size_t t = 0; t < tracks.size(); ++t) {
      const std::string where = "tracks[" + std::to_string(t) + "]";
      const json& obs = RequireKey(tracks[t], "observations", where);
      if (!obs.is_array() || obs.size() < 2) {
        SchemaError(where + ": needs at least two observations");
      }
      TrackEntry entry;
      std::set<int> used;
      for (std::size_t k = 0; k < obs.size(); ++k) {
        ObservationEntry o =
            ParseObservation(obs[k], where + ".observations[" + std::to_string(k) + "]");
        if (!view_ids.contains(o.view_id)) {
          SchemaError(where + ": view_id " + std::to_string(o.view_id) + " does not resolve");
        }
        if (!used.insert(o.view_id).second) {
          SchemaError(where + ": view_id " + std::to_string(o.view_id) + " observed twice");
        }
        entry.observations.push_back(std::move(o));
      }
      out.tracks.push_back(std::move(entry));
    }
  }
  return out;
}

json ToJson(const TrackDocument& doc) {
  json out = json::object();
  if (doc.has_poses()) {
    json cams = json::array();
    for (const auto& c : doc.cameras) {
      cams.push_back({{"id", c.id},
                      {"K", Mat3ToJson(c.camera.K())},
                      {"R", Mat3ToJson(c.camera.R())},
                      {"t", {c.camera.t().x(), c.camera.t().y(), c.camera.t().z()}}});
    }
    out["cameras"] = std::move(cams);
  } else {
    json pairs = json::array();
    for (const auto& p : doc.pairs) {
      pairs.push_back({{"i", p.i}, {"j", p.j}, {"F", Mat3ToJson(p.F.F)}});
    }
    out["pairs"] = std::move(pairs);
  }
  json tracks = json::array();
  for (const auto& t : doc.tracks) {
    json obs = json::array();
    for (const auto& o : t.observations) {
      json jo = {{"view_id", o.view_id}, {"x", o.x.x()}, {"y", o.x.y()}};
      if (o.M) {
        jo["M"] = {(*o.M)(0, 0), (*o.M)(0, 1), (*o.M)(1, 0), (*o.M)(1, 1)};
      } else {
        jo["sigma"] = *o.sigma;
        jo["theta"] = *o.theta;
      }
      obs.push_back(std::move(jo));
    }
    tracks.push_back({{"observations", std::move(obs)}});
  }
  out["tracks"] = std::move(tracks);
  return out;
}

PreparedTrack PrepareTrack(const TrackDocument& doc, const TrackEntry& track,
                           const ConstraintOptions& options) {
  std::vector<LocalAffineFrame> frames;
  frames.reserve(track.observations.size());
  for (const auto& o : track.observations) frames.push_back({o.x, o.Frame()});

  PreparedTrack prepared;
  if (doc.has_poses()) {
    std::vector<PinholeCamera> cameras;
    std::vector<Vec2> points;
    for (const auto& o : track.observations) {
      const PinholeCamera* cam = doc.FindCamera(o.view_id);
      if (cam == nullptr) SchemaError("view_id " + std::to_string(o.view_id) + " has no camera");
      cameras.push_back(*cam);
      points.push_back(o.x);
    }
    const Vec3 anchor = TriangulatePoint(cameras, points);
    const auto pairs = AllPairs(frames.size());
    prepared.build = BuildTrackFromCameras(cameras, std::move(frames), pairs, options, anchor);
    prepared.source = GeometrySource::kPoseDerived;
  } else {
    std::vector<PairGeometry> geometry;
    for (const ViewPair& pair : AllPairs(frames.size())) {
      const auto F = doc.FindFundamental(track.observations[pair.i].view_id,
                                         track.observations[pair.j].view_id);
      if (F) geometry.push_back({pair, *F});
    }
    prepared.build = BuildTrackFromFundamentals(std::move(frames), geometry, options.row_normalize);
    prepared.source = GeometrySource::kEstimated;
  }
  for (std::size_t k = 0; k < track.observations.size(); ++k) {
    prepared.build.track.view_ids.push_back(track.observations[k].view_id);
  }
  return prepared;
}

}  // namespace mvlaf
