#include "mvlaf/cli.hpp"

#include "mvlaf/error.hpp"
#include "mvlaf/parallel.hpp"
#include "mvlaf/synthetic.hpp"
#include "mvlaf/track_io.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace mvlaf::cli {

using nlohmann::json;

namespace {

double ParseDouble(std::string_view text) {
  std::size_t used = 0;
  const std::string s(text);
  double value = 0.0;
  try {
    value = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(value)) {
    throw std::invalid_argument("not a number: '" + s + "'");
  }
  return value;
}

std::size_t ParseCount(std::string_view text) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("not a non-negative integer: '" + std::string(text) + "'");
  }
  return value;
}

std::string Format(double v) {
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s.precision(6);
  s << v;
  return s.str();
}

}  // namespace

std::vector<double> ParseSigmaRange(std::string_view text) {
  const auto dots = text.find("..");
  if (dots == std::string_view::npos) return {ParseDouble(text)};
  const auto colon = text.find(':', dots);
  if (colon == std::string_view::npos) {
    throw std::invalid_argument("sigma range needs a step: a..b:step");
  }
  const double lo = ParseDouble(text.substr(0, dots));
  const double hi = ParseDouble(text.substr(dots + 2, colon - dots - 2));
  const double step = ParseDouble(text.substr(colon + 1));
  if (!(step > 0.0) || hi < lo) throw std::invalid_argument("empty sigma range");
  std::vector<double> values;
  for (std::size_t k = 0;; ++k) {
    const double v = lo + static_cast<double>(k) * step;
    if (v > hi + 1e-9 * step) break;
    // Snap to 12 decimals so 0.1 steps print as 0.3 rather than 0.30000000000000004.
    values.push_back(std::round(v * 1e12) / 1e12);
  }
  return values;
}

std::vector<std::size_t> ParseViewRange(std::string_view text) {
  const auto dots = text.find("..");
  if (dots == std::string_view::npos) return {ParseCount(text)};
  const std::size_t lo = ParseCount(text.substr(0, dots));
  const std::size_t hi = ParseCount(text.substr(dots + 2));
  if (hi < lo) throw std::invalid_argument("empty view range");
  std::vector<std::size_t> values;
  for (std::size_t v = lo; v <= hi; ++v) values.push_back(v);
  return values;
}

int CmdCorrect(const CorrectOptions& options, std::ostream& out, std::ostream& err) {
  json doc;
  TrackDocument parsed;
  try {
    doc = LoadJsonFile(options.input);
    parsed = ParseTrackDocument(doc);
  } catch (const Error& e) {
    err << "correct: " << e.what() << '\n';
    return kExitSchema;
  }

  struct Outcome {
    std::optional<CorrectionResult> result;
    std::vector<Diagnostic> diagnostics;
    std::string error;
  };
  std::vector<Outcome> outcomes(parsed.tracks.size());
  const std::size_t threads = options.threads ? options.threads : DefaultThreadCount();
  ParallelFor(parsed.tracks.size(), threads, [&](std::size_t t) {
    Outcome& o = outcomes[t];
    try {
      PreparedTrack prepared = PrepareTrack(parsed, parsed.tracks[t], options.constraints);
      o.diagnostics = prepared.build.diagnostics;
      const SolvePath path = options.path.value_or(DefaultPath(prepared.source));
      o.result = CorrectTrack(prepared.build.track, path);
      o.diagnostics.insert(o.diagnostics.end(), o.result->diagnostics.begin(),
                           o.result->diagnostics.end());
    } catch (const Error& e) {
      o.error = e.what();
    }
  });

  std::size_t failed = 0;
  for (std::size_t t = 0; t < outcomes.size(); ++t) {
    json& track = doc["tracks"][t];
    const Outcome& o = outcomes[t];
    json diagnostics = json::array();
    for (const auto& d : o.diagnostics) {
      diagnostics.push_back(std::string(ToString(d.code)) + ": " + d.message);
    }
    track["diagnostics"] = std::move(diagnostics);
    if (!o.result) {
      ++failed;
      track["status"] = "failed";
      track["error"] = o.error;
      continue;
    }
    json& observations = track["observations"];
    for (std::size_t k = 0; k < observations.size(); ++k) {
      const Mat2& M = o.result->frames[k];
      observations[k]["M"] = {M(0, 0), M(0, 1), M(1, 0), M(1, 1)};
      observations[k].erase("sigma");
      observations[k].erase("theta");
    }
    track["status"] = "ok";
    track["residual_before"] = o.result->residual_before;
    track["residual_after"] = o.result->residual_after;
    track["path"] = std::string(ToString(o.result->path));
    track["rank_used"] = o.result->rank_used;
  }

  std::ofstream file(options.output, std::ios::binary);
  file << doc.dump(2) << '\n';
  if (!file) {
    err << "correct: cannot write " << options.output.string() << '\n';
    return kExitSchema;
  }
  out << "corrected " << (outcomes.size() - failed) << "/" << outcomes.size() << " tracks";
  if (failed > 0) out << " (" << failed << " failed)";
  out << '\n';
  return failed > 0 ? kExitNumerical : kExitOk;
}

int CmdValidate(const ValidateOptions& options, std::ostream& out, std::ostream& err) {
  TrackDocument parsed;
  try {
    parsed = ParseTrackDocument(LoadJsonFile(options.input));
  } catch (const Error& e) {
    err << "validate: " << e.what() << '\n';
    return kExitSchema;
  }
  if (parsed.tracks.empty()) {
    out << "verdict: no tracks\n";
    return kExitOk;
  }
  bool feasible = true;
  for (std::size_t t = 0; t < parsed.tracks.size(); ++t) {
    try {
      const PreparedTrack prepared = PrepareTrack(parsed, parsed.tracks[t], options.constraints);
      const ConstraintSystem cs = Assemble(prepared.build.track);
      const double r = MaxPairResidual(cs.B, cs.omega_hat);
      const bool ok = r < options.threshold;
      feasible = feasible && ok;
      out << "track " << t << ": max_residual " << r << (ok ? " ok" : " exceeds threshold")
          << '\n';
    } catch (const Error& e) {
      feasible = false;
      out << "track " << t << ": error " << e.what() << '\n';
    }
  }
  out << "verdict: " << (feasible ? "feasible" : "infeasible") << " (threshold "
      << options.threshold << ")\n";
  return kExitOk;
}

int CmdBench(const BenchOptions& options, std::ostream& out, std::ostream& err) {
  GridOptions grid;
  grid.sigmas = options.sigmas;
  grid.view_counts = options.views;
  grid.trials = options.trials;
  grid.ground_truth_f = options.ground_truth_f;
  grid.eight_point_f = options.eight_point_f;
  grid.path = options.path;
  grid.constraints = options.constraints;
  grid.f_points = options.f_points;
  grid.seed = options.seed;
  grid.threads = options.threads;

  GridReport report;
  try {
    report = RunGrid(grid);
  } catch (const Error& e) {
    err << "bench: " << e.what() << '\n';
    return kExitSchema;
  }

  std::ofstream file(options.csv, std::ios::binary);
  WriteGridCsv(file, report, options.timing);
  if (!file) {
    err << "bench: cannot write " << options.csv.string() << '\n';
    return kExitSchema;
  }

  out << "bench: " << report.grids.size() << " grids x " << options.views.size() << "x"
      << options.sigmas.size() << " cells, " << options.trials << " trials per cell -> "
      << options.csv.string() << '\n';
  for (const auto& g : report.grids) {
    if (g.kind == GridKind::kInput) continue;
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& c : g.cells) {
      if (c.n_views == 5 && c.trials_used > 0) {
        total += c.mean_correction_time_us;
        ++n;
      }
    }
    out << "mean correction time at 5 views (" << ToString(g.kind) << "): "
        << (n ? Format(total / static_cast<double>(n)) + " us" : std::string("n/a")) << '\n';
  }
  return kExitOk;
}

int CmdSynth(const SynthOptions& options, std::ostream& out, std::ostream& err) {
  TrackDocument doc;
  try {
    const SyntheticScene base = GenerateScene(options.views, options.seed);
    for (std::size_t k = 0; k < base.cameras.size(); ++k) {
      doc.cameras.push_back({static_cast<int>(k), base.cameras[k]});
    }
    for (std::size_t t = 0; t < options.tracks; ++t) {
      const SyntheticScene scene =
          t == 0 ? base : WithNewPoint(base, DeriveSeed({options.seed, t, 1}));
      const auto noisy = AddNoise(GroundTruthLafs(scene), {options.sigma},
                                  DeriveSeed({options.seed, t, 2}));
      TrackEntry entry;
      for (std::size_t k = 0; k < noisy.size(); ++k) {
        ObservationEntry o;
        o.view_id = static_cast<int>(k);
        o.x = noisy[k].x;
        if (options.partial) {
          const PartialFrame pf = ApproximatePartialFrame(noisy[k]);
          o.sigma = pf.sigma;
          o.theta = pf.theta;
        } else {
          o.M = noisy[k].M;
        }
        entry.observations.push_back(std::move(o));
      }
      doc.tracks.push_back(std::move(entry));
    }
    if (options.fundamentals) {
      for (const ViewPair& p : AllPairs(doc.cameras.size())) {
        doc.pairs.push_back({static_cast<int>(p.i), static_cast<int>(p.j),
                             FundamentalFromCameras(doc.cameras[p.i].camera,
                                                    doc.cameras[p.j].camera)});
      }
      doc.cameras.clear();
    }
  } catch (const Error& e) {
    err << "synth: " << e.what() << '\n';
    return kExitSchema;
  }

  std::ofstream file(options.output, std::ios::binary);
  file << ToJson(doc).dump(2) << '\n';
  if (!file) {
    err << "synth: cannot write " << options.output.string() << '\n';
    return kExitSchema;
  }
  out << "wrote " << options.tracks << " track(s) over " << options.views << " views to "
      << options.output.string() << '\n';
  return kExitOk;
}

int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-view local affine frame correction against epipolar geometry"};
  app.require_subcommand(1);
  const std::vector<std::string> path_names{"qr", "svd", "kkt"};
  const std::vector<std::string> on_off{"on", "off"};
  const std::vector<std::string> forms{"pixel", "bearing"};

  std::string path_name;
  std::string row_normalize = "on";
  std::string form = "pixel";
  std::size_t threads = 0;

  CorrectOptions correct;
  auto* correct_cmd = app.add_subcommand("correct", "Correct the LAFs of a track document");
  correct_cmd->add_option("--input", correct.input, "Track document (JSON)")->required();
  correct_cmd->add_option("--output", correct.output, "Corrected document (JSON)")->required();
  correct_cmd->add_option("--path", path_name, "qr | svd | kkt (default by geometry)")
      ->check(CLI::IsMember(path_names));
  correct_cmd->add_option("--row-normalize", row_normalize, "on | off")
      ->check(CLI::IsMember(on_off));
  correct_cmd->add_option("--form", form, "pixel | bearing constraint rows for poses")
      ->check(CLI::IsMember(forms));
  correct_cmd->add_option("--threads", threads, "Worker threads (default: MVLAF_NUM_THREADS)");

  BenchOptions bench;
  std::string sigmas = "0.0..1.0:0.1";
  std::string views = "2..10";
  std::string f_mode = "both";
  auto* bench_cmd = app.add_subcommand("bench", "Run the synthetic noise/view-count grid");
  bench_cmd->add_option("--sigmas", sigmas, "Noise levels a..b:step or a single value");
  bench_cmd->add_option("--views", views, "View counts a..b or a single value");
  bench_cmd->add_option("--trials", bench.trials, "Trials per cell")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--f-mode", f_mode, "gt | 8pt | both")
      ->check(CLI::IsMember({"gt", "8pt", "both"}));
  bench_cmd->add_option("--path", path_name, "qr | svd | kkt (default: qr for gt, svd for 8pt)")
      ->check(CLI::IsMember(path_names));
  bench_cmd->add_option("--form", form, "pixel | bearing rows for the gt grid")
      ->check(CLI::IsMember(forms));
  bench_cmd->add_option("--row-normalize", row_normalize, "on | off")->check(CLI::IsMember(on_off));
  bench_cmd->add_option("--f-points", bench.f_points, "Correspondences per pair for 8-point F");
  bench_cmd->add_option("--seed", bench.seed, "Base random seed");
  bench_cmd->add_option("--csv", bench.csv, "Output CSV")->required();
  bench_cmd->add_flag("--timing", bench.timing, "Write measured correction times into the CSV");
  bench_cmd->add_option("--threads", threads, "Worker threads (default: MVLAF_NUM_THREADS)");

  ValidateOptions validate;
  auto* validate_cmd = app.add_subcommand("validate", "Report per-track epipolar residuals");
  validate_cmd->add_option("--input", validate.input, "Track document (JSON)")->required();
  validate_cmd->add_option("--threshold", validate.threshold, "Feasibility threshold");
  validate_cmd->add_option("--form", form, "pixel | bearing")->check(CLI::IsMember(forms));

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Export a synthetic scene as a track document");
  synth_cmd->add_option("--views", synth.views, "Number of cameras");
  synth_cmd->add_option("--tracks", synth.tracks, "Number of oriented points");
  synth_cmd->add_option("--sigma", synth.sigma, "Noise on points and frame entries (px)");
  synth_cmd->add_option("--seed", synth.seed, "Random seed");
  synth_cmd->add_flag("--partial", synth.partial, "Write scale/orientation frames only");
  synth_cmd->add_flag("--fundamentals", synth.fundamentals, "Write pairwise F instead of poses");
  synth_cmd->add_option("--output", synth.output, "Track document (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitSchema;
  }

  std::optional<SolvePath> path;
  if (!path_name.empty()) path = ParseSolvePath(path_name);
  ConstraintOptions constraints;
  constraints.row_normalize = row_normalize == "on";
  constraints.form = form == "bearing" ? ConstraintForm::kBearing : ConstraintForm::kPixel;

  if (*correct_cmd) {
    correct.path = path;
    correct.constraints = constraints;
    correct.threads = threads;
    return CmdCorrect(correct, out, err);
  }
  if (*validate_cmd) {
    validate.constraints.form = constraints.form;
    return CmdValidate(validate, out, err);
  }
  if (*synth_cmd) {
    if (synth.views < 2) {
      err << "synth: --views must be >= 2\n";
      return kExitSchema;
    }
    return CmdSynth(synth, out, err);
  }

  try {
    bench.sigmas = ParseSigmaRange(sigmas);
    bench.views = ParseViewRange(views);
  } catch (const std::invalid_argument& e) {
    err << "bench: " << e.what() << '\n';
    return kExitSchema;
  }
  for (std::size_t v : bench.views) {
    if (v < 2) {
      err << "bench: every view count must be >= 2 (got " << v << ")\n";
      return kExitSchema;
    }
  }
  for (double s : bench.sigmas) {
    if (s < 0.0) {
      err << "bench: sigmas must be non-negative\n";
      return kExitSchema;
    }
  }
  bench.ground_truth_f = f_mode != "8pt";
  bench.eight_point_f = f_mode != "gt";
  bench.path = path;
  bench.constraints = constraints;
  bench.threads = threads;
  return CmdBench(bench, out, err);
}

}  // namespace mvlaf::cli
