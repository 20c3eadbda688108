#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "tracescope/cli.hpp"
#include "tracescope/cwt.hpp"
#include "tracescope/error.hpp"
#include "tracescope/eval.hpp"
#include "tracescope/nn.hpp"
#include "tracescope/preprocess.hpp"
#include "tracescope/siamese.hpp"
#include "tracescope/synth.hpp"

namespace py = pybind11;
using namespace tracescope;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ByteArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const DoubleArray& a) {
    if (a.ndim() != 1) throw py::value_error("expected a 1-D array");
    return {a.data(), a.data() + a.size()};
}

py::array_t<double> to_array(std::span<const double> v) {
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

RgbImage to_image(const ByteArray& a) {
    if (a.ndim() != 3 || a.shape(2) != 3) throw py::value_error("expected an (H, W, 3) uint8 array");
    return RgbImage(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)),
                    std::vector<std::uint8_t>(a.data(), a.data() + a.size()));
}

py::array_t<std::uint8_t> from_image(const RgbImage& img) {
    py::array_t<std::uint8_t> out({img.height(), img.width(), 3});
    std::copy(img.pixels().begin(), img.pixels().end(), out.mutable_data());
    return out;
}

py::array_t<double> scalogram_array(const Scalogram& s) {
    py::array_t<double> out({s.rows, s.cols});
    std::copy(s.coefficients.begin(), s.coefficients.end(), out.mutable_data());
    return out;
}

Scalogram from_array(const DoubleArray& a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
    Scalogram s;
    s.rows = static_cast<std::size_t>(a.shape(0));
    s.cols = static_cast<std::size_t>(a.shape(1));
    s.coefficients.assign(a.data(), a.data() + a.size());
    return s;
}

}  // namespace

PYBIND11_MODULE(_tracescope, m) {
    m.doc() = "Scalogram-based anomaly detection for step-like multivariate traces";

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<ChecksumError>(m, "ChecksumError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    m.def(
        "baseline_als",
        [](const DoubleArray& y, double lam, double weight, double dt) {
            return to_array(estimate_baseline_als(Signal(to_vector(y), dt), AlsConfig{lam, weight}).values);
        },
        py::arg("y"), py::arg("lam") = 1e4, py::arg("weight") = 0.5, py::arg("dt") = 0.1,
        "Asymmetric least squares baseline of a 1-D signal.");

    m.def(
        "detect_peaks",
        [](const DoubleArray& residual, double dt, double min_height, double min_spacing_seconds) {
            py::list out;
            for (const auto& p :
                 detect_peaks(Signal(to_vector(residual), dt), PeakConfig{min_height, min_spacing_seconds}))
                out.append(py::dict(py::arg("index") = p.index, py::arg("amplitude") = p.amplitude,
                                    py::arg("polarity") = p.polarity == StepPolarity::Rising ? "rising" : "falling"));
            return out;
        },
        py::arg("residual"), py::arg("dt") = 0.1, py::arg("min_height") = 0.1, py::arg("min_spacing_seconds") = 10.0);

    m.def("ricker", &ricker, py::arg("t"));

    m.def(
        "scale_grid",
        [](double lo, double hi, std::size_t count) { return to_array(ScaleGrid::log_spaced(lo, hi, count).scales()); },
        py::arg("lo") = 0.2, py::arg("hi") = 5.0, py::arg("count") = 32);

    m.def(
        "cwt",
        [](const DoubleArray& x, double dt, double lo, double hi, std::size_t count) {
            const auto v = to_vector(x);
            return scalogram_array(cwt_transform(v, ScaleGrid::log_spaced(lo, hi, count), dt));
        },
        py::arg("x"), py::arg("dt") = 0.1, py::arg("scale_min") = 0.2, py::arg("scale_max") = 5.0,
        py::arg("scale_count") = 32, "Ricker-wavelet scalogram, shape (scales, samples).");

    m.def(
        "render_scalogram",
        [](const DoubleArray& coefficients, int size, std::optional<double> amplitude) {
            return from_image(render_scalogram(from_array(coefficients), size, amplitude));
        },
        py::arg("coefficients"), py::arg("size") = 64, py::arg("amplitude") = py::none());

    m.def("expected_coupon_trials", &expected_coupon_trials, py::arg("m"));

    m.def(
        "step_trace",
        [](std::vector<double> step_times, std::vector<double> levels, double initial_level, double duration,
           double dt, double noise, std::uint64_t seed) {
            StepRecipe r;
            r.step_times = std::move(step_times);
            r.step_levels = std::move(levels);
            r.initial_level = initial_level;
            r.duration = duration;
            r.dt = dt;
            r.noise_sigma = noise;
            r.rng_seed = seed;
            return to_array(generate_step_trace(r).values());
        },
        py::arg("step_times"), py::arg("levels"), py::arg("initial_level") = 0.0, py::arg("duration") = 60.0,
        py::arg("dt") = 0.1, py::arg("noise") = 0.0, py::arg("seed") = 0);

    py::class_<CompactCnn>(m, "Model")
        .def_static("load", &load_weights, py::arg("path"))
        .def("save", [](const CompactCnn& model, const std::filesystem::path& p) { save_weights(model, p); })
        .def_property_readonly("num_classes", &CompactCnn::num_classes)
        .def_property_readonly("class_names", [](const CompactCnn& model) { return model.class_names(); })
        .def_property_readonly("parameter_count", &CompactCnn::parameter_count)
        .def(
            "predict_proba",
            [](const CompactCnn& model, const ByteArray& image) { return to_array(forward(model, to_image(image))); },
            py::arg("image"))
        .def(
            "similarity",
            [](const CompactCnn& model, const ByteArray& a, const ByteArray& b) {
                return similarity(model, to_image(a), to_image(b));
            },
            py::arg("anchor"), py::arg("query"));

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = cli::run(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs a tracescope command; returns (exit_code, stdout, stderr).");
}
