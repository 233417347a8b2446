#include "mvlaf/error.hpp"
#include "mvlaf/synthetic.hpp"
#include "mvlaf/track_io.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <string>

namespace mvlaf {
namespace {

std::string SchemaMessage(const std::string& text) {
  try {
    ParseTrackDocument(std::string_view(text));
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchema);
    return e.what();
  }
  ADD_FAILURE() << "document accepted: " << text;
  return {};
}

const char* kCamera =
    R"({"id": 0, "K": [[1000,0,500],[0,1000,500],[0,0,1]], "R": [[1,0,0],[0,1,0],[0,0,1]], "t": [0,0,5]})";
const char* kCamera1 =
    R"({"id": 1, "K": [[1000,0,500],[0,1000,500],[0,0,1]], "R": [[1,0,0],[0,1,0],[0,0,1]], "t": [-1,0,5]})";

TEST(ParseTrackDocument, PosesWithFullAndPartialObservations) {
  const std::string text = std::string(R"({"cameras": [)") + kCamera + "," + kCamera1 + R"(],
    "tracks": [{"observations": [
      {"view_id": 0, "x": 500, "y": 500, "M": [1, 2, 3, 4]},
      {"view_id": 1, "x": 300, "y": 500, "sigma": 2, "theta": 0.5}]}]})";
  const auto doc = ParseTrackDocument(std::string_view(text));
  ASSERT_TRUE(doc.has_poses());
  ASSERT_EQ(doc.tracks.size(), 1u);
  const auto& obs = doc.tracks[0].observations;
  EXPECT_FALSE(obs[0].is_partial());
  EXPECT_EQ((*obs[0].M)(1, 0), 3.0);
  EXPECT_TRUE(obs[1].is_partial());
  EXPECT_NEAR(obs[1].Frame().determinant(), 4.0, 1e-12);
  EXPECT_NE(doc.FindCamera(1), nullptr);
  EXPECT_EQ(doc.FindCamera(7), nullptr);
}

TEST(ParseTrackDocument, MixedGeometryIsRejected) {
  const std::string text = std::string(R"({"cameras": [)") + kCamera +
                           R"(], "pairs": [{"i": 0, "j": 1, "F": [[0,0,0],[0,0,-1],[0,1,0]]}], "tracks": []})";
  const auto msg = SchemaMessage(text);
  EXPECT_NE(msg.find("cameras"), std::string::npos);
  EXPECT_NE(msg.find("pairs"), std::string::npos);
}

TEST(ParseTrackDocument, MalformedJsonReportsPosition) {
  const auto msg = SchemaMessage("{\n  \"cameras\": [\n    {\"id\": 0,, }\n]}");
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column"), std::string::npos) << msg;
}

TEST(ParseTrackDocument, FieldErrors) {
  const std::string cams = std::string(R"({"cameras": [)") + kCamera + "," + kCamera1 + "], ";
  SchemaMessage(cams + R"("tracks": [{"observations": [{"view_id": 0, "x": 1, "y": 2, "M": [1,0,0,1]}]}]})");
  SchemaMessage(cams + R"("tracks": [{"observations": [{"view_id": 0, "x": 1, "y": 2, "M": [1,0,0,1]},
                                                      {"view_id": 5, "x": 1, "y": 2, "M": [1,0,0,1]}]}]})");
  SchemaMessage(cams + R"("tracks": [{"observations": [{"view_id": 0, "x": 1, "y": 2, "M": [1,0,0,1]},
                                                      {"view_id": 0, "x": 1, "y": 2, "M": [1,0,0,1]}]}]})");
  SchemaMessage(cams + R"("tracks": [{"observations": [{"view_id": 0, "x": 1, "y": 2, "M": [1,0,0]},
                                                      {"view_id": 1, "x": 1, "y": 2, "M": [1,0,0,1]}]}]})");
  SchemaMessage(cams + R"("tracks": [{"observations": [{"view_id": 0, "x": 1, "y": 2, "sigma": 0, "theta": 0},
                                                      {"view_id": 1, "x": 1, "y": 2, "M": [1,0,0,1]}]}]})");
  SchemaMessage(cams + R"("tracks": [{"observations": [{"view_id": 0, "y": 2, "M": [1,0,0,1]},
                                                      {"view_id": 1, "x": 1, "y": 2, "M": [1,0,0,1]}]}]})");
  SchemaMessage(std::string(R"({"cameras": [)") + kCamera + "," + kCamera + R"(], "tracks": []})");
  SchemaMessage(R"({"tracks": [{"observations": [{"view_id": 0, "x": 1, "y": 2, "M": [1,0,0,1]},
                                                {"view_id": 1, "x": 1, "y": 2, "M": [1,0,0,1]}]}]})");
  SchemaMessage(R"({"pairs": [{"i": 0, "j": 1, "F": [[1,0,0],[0,1,0],[0,0,1]]},
                              {"i": 1, "j": 0, "F": [[1,0,0],[0,1,0],[0,0,1]]}]})");
  SchemaMessage(R"([1, 2, 3])");
  // Improper rotation inside a camera entry.
  SchemaMessage(R"({"cameras": [{"id": 0, "K": [[1,0,0],[0,1,0],[0,0,1]], "R": [[1,0,0],[0,1,0],[0,0,-1]], "t": [0,0,0]}]})");
}

TEST(TrackDocument, FindFundamentalTransposesReverseEntry) {
  const auto doc = ParseTrackDocument(std::string_view(R"({"pairs": [{"i": 0, "j": 1, "F": [[1,2,3],[4,5,6],[7,8,9]]}]})"));
  const auto forward = doc.FindFundamental(0, 1);
  const auto reverse = doc.FindFundamental(1, 0);
  ASSERT_TRUE(forward && reverse);
  EXPECT_EQ(reverse->F, forward->F.transpose());
  EXPECT_FALSE(doc.FindFundamental(0, 2).has_value());
}

TEST(TrackDocument, JsonRoundTrip) {
  const auto scene = GenerateScene(3, 5);
  const auto lafs = GroundTruthLafs(scene);
  TrackDocument doc;
  for (std::size_t k = 0; k < 3; ++k) doc.cameras.push_back({static_cast<int>(k), scene.cameras[k]});
  TrackEntry track;
  for (std::size_t k = 0; k < 3; ++k) {
    ObservationEntry o;
    o.view_id = static_cast<int>(k);
    o.x = lafs[k].x;
    if (k == 2) {
      o.sigma = 3.0;
      o.theta = -0.25;
    } else {
      o.M = lafs[k].M;
    }
    track.observations.push_back(o);
  }
  doc.tracks.push_back(track);
  const auto back = ParseTrackDocument(ToJson(doc));
  ASSERT_EQ(back.cameras.size(), 3u);
  EXPECT_TRUE(back.cameras[1].camera.R().isApprox(scene.cameras[1].R(), 1e-15));
  ASSERT_EQ(back.tracks[0].observations.size(), 3u);
  EXPECT_EQ(*back.tracks[0].observations[0].M, lafs[0].M);
  EXPECT_EQ(*back.tracks[0].observations[2].theta, -0.25);
}

TEST(PrepareTrack, PoseDocumentGivesFeasibleRowsForExactFrames) {
  const auto scene = GenerateScene(4, 6);
  const auto lafs = GroundTruthLafs(scene);
  TrackDocument doc;
  TrackEntry track;
  for (std::size_t k = 0; k < 4; ++k) {
    doc.cameras.push_back({static_cast<int>(10 + k), scene.cameras[k]});
    ObservationEntry o;
    o.view_id = static_cast<int>(10 + k);
    o.x = lafs[k].x;
    o.M = lafs[k].M;
    track.observations.push_back(o);
  }
  const auto prepared = PrepareTrack(doc, track, {});
  EXPECT_EQ(prepared.source, GeometrySource::kPoseDerived);
  EXPECT_EQ(prepared.build.track.constraints.size(), 6u);
  EXPECT_EQ(prepared.build.track.view_ids, (std::vector<int>{10, 11, 12, 13}));
  const auto cs = Assemble(prepared.build.track);
  EXPECT_LT(MaxPairResidual(cs.B, cs.omega_hat), 1e-9);
}

TEST(PrepareTrack, PairDocumentUsesAvailablePairsOnly) {
  const auto scene = GenerateScene(3, 7);
  const auto lafs = GroundTruthLafs(scene);
  TrackDocument doc;
  // Only (0,1) and the reversed (2,1) are supplied.
  doc.pairs.push_back({0, 1, FundamentalFromCameras(scene.cameras[0], scene.cameras[1])});
  doc.pairs.push_back({2, 1, FundamentalFromCameras(scene.cameras[2], scene.cameras[1])});
  TrackEntry track;
  for (std::size_t k = 0; k < 3; ++k) {
    ObservationEntry o;
    o.view_id = static_cast<int>(k);
    o.x = lafs[k].x;
    o.M = lafs[k].M;
    track.observations.push_back(o);
  }
  const auto prepared = PrepareTrack(doc, track, {});
  EXPECT_EQ(prepared.source, GeometrySource::kEstimated);
  EXPECT_EQ(prepared.build.track.constraints.size(), 2u);
  const auto cs = Assemble(prepared.build.track);
  EXPECT_LT(MaxPairResidual(cs.B, cs.omega_hat), 1e-9);
}

}  // namespace
}  // namespace mvlaf
