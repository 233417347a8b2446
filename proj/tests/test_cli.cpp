#include "mvlaf/cli.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace mvlaf::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome RunCli(std::vector<std::string> args) {
  args.insert(args.begin(), "mvlaf");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = Run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mvlaf_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string Path(const std::string& name) const { return (dir_ / name).string(); }
  static std::string Slurp(const std::string& path) {
    std::ifstream in(path);
    return {std::istreambuf_iterator<char>(in), {}};
  }
  void Write(const std::string& path, const std::string& text) const { std::ofstream(path) << text; }

  double MaxResidual(const std::string& path, const std::vector<std::string>& extra = {}) const {
    std::vector<std::string> args{"validate", "--input", path};
    args.insert(args.end(), extra.begin(), extra.end());
    const auto r = RunCli(args);
    EXPECT_EQ(r.code, kExitOk) << r.err;
    double worst = 0.0;
    std::istringstream lines(r.out);
    for (std::string line; std::getline(lines, line);) {
      const auto at = line.find("max_residual ");
      if (at != std::string::npos) worst = std::max(worst, std::stod(line.substr(at + 13)));
    }
    return worst;
  }

  fs::path dir_;
};

TEST_F(CliTest, CorrectLeavesFeasibleFramesUnchanged) {
  const auto in = Path("gt.json");
  ASSERT_EQ(RunCli({"synth", "--views", "5", "--tracks", "3", "--seed", "1", "--output", in}).code, 0);
  const auto out = Path("out.json");
  const auto r = RunCli({"correct", "--input", in, "--output", out});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json before = json::parse(Slurp(in));
  const json after = json::parse(Slurp(out));
  for (std::size_t t = 0; t < 3; ++t) {
    EXPECT_EQ(after["tracks"][t]["status"], "ok");
    EXPECT_EQ(after["tracks"][t]["path"], "qr");
    for (std::size_t k = 0; k < 5; ++k) {
      for (std::size_t e = 0; e < 4; ++e) {
        EXPECT_NEAR(after["tracks"][t]["observations"][k]["M"][e].get<double>(),
                    before["tracks"][t]["observations"][k]["M"][e].get<double>(), 1e-10);
      }
    }
  }
}

TEST_F(CliTest, PartialObservationsComeBackAsFullFrames) {
  const auto in = Path("partial.json");
  ASSERT_EQ(RunCli({"synth", "--views", "2", "--partial", "--seed", "2", "--output", in}).code, 0);
  const auto out = Path("out.json");
  ASSERT_EQ(RunCli({"correct", "--input", in, "--output", out}).code, kExitOk);
  const json doc = json::parse(Slurp(out));
  for (const auto& o : doc["tracks"][0]["observations"]) {
    EXPECT_TRUE(o.contains("M"));
    EXPECT_FALSE(o.contains("sigma"));
    EXPECT_FALSE(o.contains("theta"));
  }
  EXPECT_LT(MaxResidual(out), 1e-9);
}

TEST_F(CliTest, MixedGeometryIsSchemaError) {
  const auto in = Path("mixed.json");
  Write(in, R"({"cameras": [], "pairs": [], "tracks": []})");
  const auto r = RunCli({"correct", "--input", in, "--output", Path("o.json")});
  EXPECT_EQ(r.code, kExitSchema);
  EXPECT_NE(r.err.find("cameras"), std::string::npos);
  EXPECT_NE(r.err.find("pairs"), std::string::npos);
}

TEST_F(CliTest, MalformedJsonIsSchemaErrorWithPosition) {
  const auto in = Path("bad.json");
  Write(in, "{\n \"tracks\": [,]\n}");
  for (const char* cmd : {"correct", "validate"}) {
    std::vector<std::string> args{cmd, "--input", in};
    if (std::string(cmd) == "correct") args.insert(args.end(), {"--output", Path("o.json")});
    const auto r = RunCli(args);
    EXPECT_EQ(r.code, kExitSchema) << cmd;
    EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
  }
}

TEST_F(CliTest, BenchGridShape) {
  const auto csv = Path("grid.csv");
  const auto r = RunCli({"bench", "--views", "2..10", "--sigmas", "0.0..1.0:0.1", "--trials", "2", "--csv", csv});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::istringstream lines(Slurp(csv));
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header, "sigma,n_views,grid,mean_error,std_error,excluded_trials,mean_correction_time_us");
  std::size_t rows = 0;
  std::vector<std::string> grids;
  for (std::string line; std::getline(lines, line);) {
    ++rows;
    std::istringstream cells(line);
    std::string sigma, views, grid;
    std::getline(cells, sigma, ',');
    std::getline(cells, views, ',');
    std::getline(cells, grid, ',');
    if (std::find(grids.begin(), grids.end(), grid) == grids.end()) grids.push_back(grid);
  }
  EXPECT_EQ(rows, 3u * 9u * 11u);
  EXPECT_EQ(grids, (std::vector<std::string>{"input", "corrected_gt", "corrected_8pt"}));
  EXPECT_NE(r.out.find("mean correction time at 5 views"), std::string::npos);
}

TEST_F(CliTest, BenchIsByteReproducible) {
  const auto a = Path("a.csv");
  const auto b = Path("b.csv");
  ASSERT_EQ(RunCli({"bench", "--trials", "1", "--seed", "7", "--csv", a}).code, kExitOk);
  ASSERT_EQ(RunCli({"bench", "--trials", "1", "--seed", "7", "--csv", b}).code, kExitOk);
  EXPECT_EQ(Slurp(a), Slurp(b));
  EXPECT_FALSE(Slurp(a).empty());
}

TEST_F(CliTest, BenchRejectsSingleView) {
  const auto r = RunCli({"bench", "--views", "1", "--trials", "1", "--csv", Path("x.csv")});
  EXPECT_EQ(r.code, kExitSchema);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(CliTest, ValidateSeparatesExactFromNoisy) {
  const auto gt = Path("gt.json");
  const auto noisy = Path("noisy.json");
  ASSERT_EQ(RunCli({"synth", "--views", "4", "--tracks", "5", "--seed", "3", "--output", gt}).code, 0);
  ASSERT_EQ(RunCli({"synth", "--views", "4", "--tracks", "5", "--seed", "3", "--sigma", "1", "--output", noisy})
                .code,
            0);
  EXPECT_LT(MaxResidual(gt), 1e-9);
  EXPECT_GT(MaxResidual(noisy), 1e-3);
  const auto verdict = RunCli({"validate", "--input", noisy});
  EXPECT_NE(verdict.out.find("verdict: infeasible"), std::string::npos);
}

TEST_F(CliTest, ValidateEmptyDocument) {
  const auto in = Path("empty.json");
  Write(in, R"({"cameras": [], "tracks": []})");
  const auto r = RunCli({"validate", "--input", in});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("no tracks"), std::string::npos);
}

TEST_F(CliTest, RoundTripReachesFeasibility) {
  struct Case {
    std::vector<std::string> synth;
    std::vector<std::string> correct;
    std::vector<std::string> validate;
  };
  const std::vector<Case> cases{
      {{}, {}, {}},
      {{}, {"--path", "kkt"}, {}},
      {{}, {"--path", "svd", "--row-normalize", "off"}, {}},
      {{}, {"--form", "bearing"}, {"--form", "bearing"}},
  };
  for (const auto& c : cases) {
    const auto in = Path("noisy.json");
    const auto out = Path("fixed.json");
    std::vector<std::string> s{"synth", "--views", "6", "--tracks", "4", "--sigma", "1", "--seed", "9", "--output", in};
    s.insert(s.end(), c.synth.begin(), c.synth.end());
    ASSERT_EQ(RunCli(s).code, 0);
    std::vector<std::string> k{"correct", "--input", in, "--output", out};
    k.insert(k.end(), c.correct.begin(), c.correct.end());
    const auto r = RunCli(k);
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_LT(MaxResidual(out, c.validate), 1e-6);
  }
}

TEST_F(CliTest, PairwiseGeometryReducesResidual) {
  const auto in = Path("noisy.json");
  const auto out = Path("fixed.json");
  ASSERT_EQ(RunCli({"synth", "--views", "6", "--tracks", "4", "--sigma", "1", "--seed", "9", "--fundamentals",
                    "--output", in})
                .code,
            0);
  ASSERT_EQ(RunCli({"correct", "--input", in, "--output", out}).code, kExitOk);
  const json doc = json::parse(Slurp(out));
  for (const auto& t : doc["tracks"]) {
    EXPECT_EQ(t["path"], "svd");
    EXPECT_LT(t["residual_after"].get<double>(), t["residual_before"].get<double>());
  }
}

TEST_F(CliTest, DegenerateTrackFailsWithNumericalExit) {
  // Both observations sit at the epipoles of F, so the only constraint is dropped.
  const auto in = Path("degenerate.json");
  Write(in, R"({"pairs": [{"i": 0, "j": 1, "F": [[0,-1,0],[1,0,0],[0,0,0]]}],
               "tracks": [{"observations": [{"view_id": 0, "x": 0, "y": 0, "M": [1,0,0,1]},
                                            {"view_id": 1, "x": 0, "y": 0, "M": [1,0,0,1]}]}]})");
  const auto out = Path("out.json");
  const auto r = RunCli({"correct", "--input", in, "--output", out});
  EXPECT_EQ(r.code, kExitNumerical);
  const json doc = json::parse(Slurp(out));
  EXPECT_EQ(doc["tracks"][0]["status"], "failed");
  EXPECT_TRUE(doc["tracks"][0].contains("error"));
}

TEST(CliRanges, Parsing) {
  const auto s = ParseSigmaRange("0.0..1.0:0.1");
  ASSERT_EQ(s.size(), 11u);
  EXPECT_EQ(s[3], 0.3);
  EXPECT_EQ(s.back(), 1.0);
  EXPECT_EQ(ParseSigmaRange("0.25"), std::vector<double>{0.25});
  EXPECT_EQ(ParseViewRange("2..4"), (std::vector<std::size_t>{2, 3, 4}));
  EXPECT_THROW(ParseViewRange("5..3"), std::invalid_argument);
  EXPECT_THROW(ParseSigmaRange("0..1"), std::invalid_argument);
}

#ifdef MVLAF_CLI_PATH
TEST(CliBinary, ExitCodes) {
  const std::string bin = MVLAF_CLI_PATH;
  const auto status = [](const std::string& cmd) {
    const int raw = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  EXPECT_EQ(status(bin + " --help"), 0);
  EXPECT_EQ(status(bin + " bench --views 1 --csv /dev/null"), kExitSchema);
  EXPECT_EQ(status(bin + " validate --input /nonexistent/doc.json"), kExitSchema);
  EXPECT_EQ(status(bin + " frobnicate"), kExitSchema);
}
#endif

}  // namespace
}  // namespace mvlaf::cli
