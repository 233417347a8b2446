#pragma once

#include "mvlaf/correction.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

namespace mvlaf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitSchema = 2;
inline constexpr int kExitNumerical = 3;

struct CorrectOptions {
  std::filesystem::path input;
  std::filesystem::path output;
  std::optional<SolvePath> path;  // unset: qr for poses, svd for pairwise F
  ConstraintOptions constraints;
  std::size_t threads = 0;
};

struct BenchOptions {
  std::vector<double> sigmas;
  std::vector<std::size_t> views;
  std::size_t trials = 1000;
  bool ground_truth_f = true;
  bool eight_point_f = true;
  std::optional<SolvePath> path;
  ConstraintOptions constraints;
  std::size_t f_points = 50;
  std::uint64_t seed = 0;
  std::filesystem::path csv;
  bool timing = false;
  std::size_t threads = 0;
};

struct ValidateOptions {
  std::filesystem::path input;
  double threshold = 1e-6;
  ConstraintOptions constraints;
};

struct SynthOptions {
  std::size_t views = 5;
  std::size_t tracks = 1;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  bool partial = false;
  bool fundamentals = false;  // write pairwise F instead of poses
  std::filesystem::path output;
};

int CmdCorrect(const CorrectOptions& options, std::ostream& out, std::ostream& err);
int CmdBench(const BenchOptions& options, std::ostream& out, std::ostream& err);
int CmdValidate(const ValidateOptions& options, std::ostream& out, std::ostream& err);
int CmdSynth(const SynthOptions& options, std::ostream& out, std::ostream& err);

/// "a..b:step" (inclusive) or a single value.
std::vector<double> ParseSigmaRange(std::string_view text);
/// "a..b" (inclusive) or a single integer.
std::vector<std::size_t> ParseViewRange(std::string_view text);

/// Full command line: correct | bench | validate | synth.
int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mvlaf::cli
