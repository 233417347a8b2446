#include "mvlaf/correction.hpp"
#include "mvlaf/eight_point.hpp"
#include "mvlaf/error.hpp"
#include "mvlaf/geometry.hpp"
#include "mvlaf/synthetic.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>

namespace py = pybind11;
using namespace mvlaf;

namespace {

SolvePath PathFromName(const std::string& name) {
  const auto p = ParseSolvePath(name);
  if (!p) throw Error(ErrorCode::kInvalidArgument, "unknown solve path '" + name + "' (qr | svd | kkt)");
  return *p;
}

ConstraintForm FormFromName(const std::string& name) {
  if (name == "pixel") return ConstraintForm::kPixel;
  if (name == "bearing") return ConstraintForm::kBearing;
  throw Error(ErrorCode::kInvalidArgument, "unknown constraint form '" + name + "' (pixel | bearing)");
}

std::vector<std::string> DiagnosticStrings(const std::vector<Diagnostic>& diagnostics) {
  std::vector<std::string> out;
  for (const auto& d : diagnostics) out.push_back(std::string(ToString(d.code)) + ": " + d.message);
  return out;
}

std::vector<ViewPair> PairsOrAll(const std::optional<std::vector<std::pair<std::size_t, std::size_t>>>& pairs,
                                 std::size_t views) {
  if (!pairs) return AllPairs(views);
  std::vector<ViewPair> out;
  for (const auto& [i, j] : *pairs) out.push_back({i, j});
  return out;
}

py::tuple EpipolarTuple(const PairEpipolarVectors& ev) { return py::make_tuple(ev.a, ev.b); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Correct multi-view local affine frames so they satisfy epipolar geometry";

  static py::exception<Error> error(m, "MvlafError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::handle(error.ptr())(e.what());
      exc.attr("code") = std::string(ToString(e.code()));
      PyErr_SetObject(error.ptr(), exc.ptr());
    }
  });

  py::class_<PinholeCamera>(m, "PinholeCamera")
      .def(py::init<const Mat3&, const Mat3&, const Vec3&>(), py::arg("K"), py::arg("R"), py::arg("t"))
      .def_static("look_at", &PinholeCamera::LookAt, py::arg("K"), py::arg("center"), py::arg("target"),
                  py::arg("roll") = 0.0)
      .def_property_readonly("K", &PinholeCamera::K)
      .def_property_readonly("R", &PinholeCamera::R)
      .def_property_readonly("t", &PinholeCamera::t)
      .def_property_readonly("center", &PinholeCamera::Center)
      .def("project", &PinholeCamera::Project, py::arg("X"))
      .def("projection_jacobian", &PinholeCamera::ProjectionJacobian, py::arg("X"));

  py::class_<LocalAffineFrame>(m, "LocalAffineFrame")
      .def(py::init([](const Vec2& x, const Mat2& M) { return LocalAffineFrame{x, M}; }), py::arg("x"),
           py::arg("M"))
      .def_readwrite("x", &LocalAffineFrame::x)
      .def_readwrite("M", &LocalAffineFrame::M)
      .def("__repr__", [](const LocalAffineFrame& f) {
        std::ostringstream s;
        s << "LocalAffineFrame(x=[" << f.x.x() << ", " << f.x.y() << "])";
        return s.str();
      });

  py::class_<PairEpipolarVectors>(m, "Constraint")
      .def(py::init([](std::size_t i, std::size_t j, const Vec2& a, const Vec2& b) {
             return PairEpipolarVectors{a, b, {i, j}};
           }),
           py::arg("i"), py::arg("j"), py::arg("a"), py::arg("b"))
      .def_readwrite("a", &PairEpipolarVectors::a)
      .def_readwrite("b", &PairEpipolarVectors::b)
      .def_property_readonly("i", [](const PairEpipolarVectors& c) { return c.pair.i; })
      .def_property_readonly("j", [](const PairEpipolarVectors& c) { return c.pair.j; });

  py::class_<MultiViewTrack>(m, "MultiViewTrack")
      .def(py::init<>())
      .def(py::init([](std::vector<LocalAffineFrame> frames, std::vector<PairEpipolarVectors> constraints) {
             MultiViewTrack t;
             t.frames = std::move(frames);
             t.constraints = std::move(constraints);
             return t;
           }),
           py::arg("frames"), py::arg("constraints"))
      .def_readwrite("view_ids", &MultiViewTrack::view_ids)
      .def_readwrite("frames", &MultiViewTrack::frames)
      .def_readwrite("constraints", &MultiViewTrack::constraints)
      .def_property_readonly("num_views", &MultiViewTrack::num_views)
      .def("validate", &MultiViewTrack::Validate);

  py::class_<CorrectionResult>(m, "CorrectionResult")
      .def_readonly("frames", &CorrectionResult::frames)
      .def_readonly("omega", &CorrectionResult::omega)
      .def_readonly("multipliers", &CorrectionResult::multipliers)
      .def_readonly("residual_before", &CorrectionResult::residual_before)
      .def_readonly("residual_after", &CorrectionResult::residual_after)
      .def_readonly("frobenius_change", &CorrectionResult::frobenius_change)
      .def_readonly("rank_used", &CorrectionResult::rank_used)
      .def_property_readonly("path", [](const CorrectionResult& r) { return std::string(ToString(r.path)); })
      .def_property_readonly("diagnostics",
                             [](const CorrectionResult& r) { return DiagnosticStrings(r.diagnostics); });

  // Geometry.
  m.def("skew", &Skew, py::arg("v"));
  m.def("fundamental_from_cameras",
        [](const PinholeCamera& c1, const PinholeCamera& c2) { return FundamentalFromCameras(c1, c2).F; },
        py::arg("cam1"), py::arg("cam2"), "F with x2^T F x1 = 0, unit Frobenius norm");
  m.def("essential_from_poses",
        [](const PinholeCamera& c1, const PinholeCamera& c2) { return EssentialFromPoses(c1, c2).E; },
        py::arg("cam1"), py::arg("cam2"));
  m.def("affine_from_laf_pair", &AffineFromLafPair, py::arg("m1"), py::arg("m2"));
  m.def(
      "epipolar_vectors_pinhole",
      [](const Mat3& F, const Vec2& x1, const Vec2& x2, bool normalize) {
        return EpipolarTuple(EpipolarVectorsPinhole({F}, x1, x2, normalize));
      },
      py::arg("F"), py::arg("x1"), py::arg("x2"), py::arg("normalize") = true, "Returns (a, b)");
  m.def(
      "bearing_and_gradient",
      [](const PinholeCamera& cam, const Vec2& x) {
        const auto obs = BearingAndGradient(cam, x);
        return py::make_tuple(obs.q, obs.dq);
      },
      py::arg("camera"), py::arg("x"), "Returns (q, dq)");
  m.def(
      "epipolar_vectors_central",
      [](const Mat3& E, const Vec3& q1, const Mat32& dq1, const Vec3& q2, const Mat32& dq2, bool normalize) {
        return EpipolarTuple(EpipolarVectorsCentral({E}, {q1, dq1}, {q2, dq2}, normalize));
      },
      py::arg("E"), py::arg("q1"), py::arg("dq1"), py::arg("q2"), py::arg("dq2"), py::arg("normalize") = true);
  m.def(
      "laf_pair_residual",
      [](const Vec2& a, const Vec2& b, const Mat2& m1, const Mat2& m2) {
        return LafPairResidual({a, b, {}}, m1, m2);
      },
      py::arg("a"), py::arg("b"), py::arg("m1"), py::arg("m2"));
  m.def(
      "expand_partial_frame",
      [](double sigma, double theta) { return ExpandPartialFrame({Vec2::Zero(), sigma, theta}); },
      py::arg("sigma"), py::arg("theta"));
  m.def("triangulate_point", [](const std::vector<PinholeCamera>& cams, const std::vector<Vec2>& pts) {
    return TriangulatePoint(cams, pts);
  });

  // Correction.
  m.def("all_pairs", [](std::size_t n) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (const auto p : AllPairs(n)) out.emplace_back(p.i, p.j);
    return out;
  });
  m.def(
      "assemble",
      [](const MultiViewTrack& track) {
        const auto cs = Assemble(track);
        return py::make_tuple(cs.B, cs.omega_hat);
      },
      py::arg("track"), "Returns (B, omega_hat)");
  m.def(
      "correct_track",
      [](const MultiViewTrack& track, const std::string& path) { return CorrectTrack(track, PathFromName(path)); },
      py::arg("track"), py::arg("path") = "qr");
  m.def("max_pair_residual", &MaxPairResidual, py::arg("B"), py::arg("omega"));
  m.def(
      "track_from_cameras",
      [](const std::vector<PinholeCamera>& cams, std::vector<LocalAffineFrame> frames,
         const std::optional<std::vector<std::pair<std::size_t, std::size_t>>>& pairs, const std::string& form,
         bool row_normalize, const std::optional<Vec3>& anchor) {
        ConstraintOptions opt;
        opt.form = FormFromName(form);
        opt.row_normalize = row_normalize;
        const auto p = PairsOrAll(pairs, frames.size());
        auto build = BuildTrackFromCameras(cams, std::move(frames), p, opt, anchor);
        return py::make_tuple(build.track, DiagnosticStrings(build.diagnostics));
      },
      py::arg("cameras"), py::arg("frames"), py::arg("pairs") = py::none(), py::arg("form") = "pixel",
      py::arg("row_normalize") = true, py::arg("anchor") = py::none(), "Returns (track, diagnostics)");
  m.def(
      "track_from_fundamentals",
      [](std::vector<LocalAffineFrame> frames, const std::vector<std::tuple<std::size_t, std::size_t, Mat3>>& fs,
         bool row_normalize) {
        std::vector<PairGeometry> geometry;
        for (const auto& [i, j, F] : fs) geometry.push_back({{i, j}, {F}});
        auto build = BuildTrackFromFundamentals(std::move(frames), geometry, row_normalize);
        return py::make_tuple(build.track, DiagnosticStrings(build.diagnostics));
      },
      py::arg("frames"), py::arg("fundamentals"), py::arg("row_normalize") = true,
      "fundamentals: (i, j, F) with x_j^T F x_i = 0. Returns (track, diagnostics)");

  // 8-point.
  m.def(
      "estimate_fundamental_eight_point",
      [](const Eigen::MatrixX2d& x1, const Eigen::MatrixX2d& x2) {
        if (x1.rows() != x2.rows()) throw Error(ErrorCode::kInvalidArgument, "x1 and x2 differ in length");
        std::vector<PointCorrespondence> pts;
        for (Eigen::Index r = 0; r < x1.rows(); ++r) pts.push_back({x1.row(r).transpose(), x2.row(r).transpose()});
        return EstimateFundamentalEightPoint(pts).F;
      },
      py::arg("x1"), py::arg("x2"));

  // Synthetic benchmark.
  py::class_<SyntheticScene>(m, "SyntheticScene")
      .def_readonly("cameras", &SyntheticScene::cameras)
      .def_readonly("point", &SyntheticScene::point)
      .def_readonly("normal", &SyntheticScene::normal)
      .def_readonly("tangent1", &SyntheticScene::tangent1)
      .def_readonly("tangent2", &SyntheticScene::tangent2);
  m.def("generate_scene", &GenerateScene, py::arg("n_views"), py::arg("seed"));
  m.def("ground_truth_lafs", &GroundTruthLafs, py::arg("scene"));
  m.def(
      "add_noise",
      [](const std::vector<LocalAffineFrame>& frames, double sigma, std::uint64_t seed) {
        return AddNoise(frames, {sigma}, seed);
      },
      py::arg("frames"), py::arg("sigma"), py::arg("seed"));
  m.def(
      "laf_error", [](const std::vector<Mat2>& gt, const std::vector<Mat2>& est) { return LafError(gt, est); },
      py::arg("gt"), py::arg("est"));
  m.def(
      "run_grid",
      [](std::vector<double> sigmas, std::vector<std::size_t> views, std::size_t trials, std::uint64_t seed,
         const std::string& f_mode, std::size_t threads) {
        GridOptions opt;
        opt.sigmas = std::move(sigmas);
        opt.view_counts = std::move(views);
        opt.trials = trials;
        opt.seed = seed;
        opt.threads = threads;
        if (f_mode != "gt" && f_mode != "8pt" && f_mode != "both") {
          throw Error(ErrorCode::kInvalidArgument, "f_mode must be gt, 8pt or both");
        }
        opt.ground_truth_f = f_mode != "8pt";
        opt.eight_point_f = f_mode != "gt";
        GridReport report;
        {
          py::gil_scoped_release release;
          report = RunGrid(opt);
        }
        py::dict out;
        for (const auto& g : report.grids) {
          Eigen::MatrixXd mean(g.view_counts.size(), g.sigmas.size());
          Eigen::MatrixXd sd(g.view_counts.size(), g.sigmas.size());
          for (std::size_t v = 0; v < g.view_counts.size(); ++v) {
            for (std::size_t s = 0; s < g.sigmas.size(); ++s) {
              mean(v, s) = g.At(v, s).mean_error;
              sd(v, s) = g.At(v, s).std_error;
            }
          }
          py::dict grid;
          grid["mean_error"] = mean;
          grid["std_error"] = sd;
          out[py::str(std::string(ToString(g.kind)))] = grid;
        }
        return out;
      },
      py::arg("sigmas"), py::arg("view_counts"), py::arg("trials") = 100, py::arg("seed") = 0,
      py::arg("f_mode") = "both", py::arg("threads") = 0,
      "Returns {grid name: {'mean_error', 'std_error'}} with arrays indexed [view, sigma]");
}
