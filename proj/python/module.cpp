// Python bindings for the core operations: convolution, the reshape
// permutations, activations, depth quantization, metrics, the recurrent
// network itself and the finite-difference self-check.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "grudepth/metrics.hpp"
#include "grudepth/network.hpp"
#include "grudepth/ops.hpp"
#include "grudepth/scenegen.hpp"
#include "grudepth/selfcheck.hpp"
#include "grudepth/training.hpp"

namespace py = pybind11;
using namespace grudepth;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using ByteArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const FloatArray& a) {
    std::vector<int> shape(a.ndim());
    for (py::ssize_t i = 0; i < a.ndim(); ++i) shape[i] = static_cast<int>(a.shape(i));
    Tensor t(shape);
    std::copy(a.data(), a.data() + a.size(), t.data.begin());
    return t;
}

py::array from_tensor(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape.begin(), t.shape.end());
    py::array_t<float> out(shape);
    std::copy(t.data.begin(), t.data.end(), out.mutable_data());
    return out;
}

std::vector<Gray8> to_gray_stack(const ByteArray& a, const char* name) {
    if (a.ndim() != 3)
        throw py::value_error(std::string(name) + " must be an NxHxW uint8 array");
    const int n = static_cast<int>(a.shape(0));
    const int h = static_cast<int>(a.shape(1));
    const int w = static_cast<int>(a.shape(2));
    std::vector<Gray8> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        Gray8 g(h, w);
        std::copy(a.data() + static_cast<std::size_t>(i) * h * w,
                  a.data() + static_cast<std::size_t>(i + 1) * h * w, g.data.begin());
        out.push_back(std::move(g));
    }
    return out;
}

LReluVariant parse_variant(const std::string& v) {
    if (v == "standard") return LReluVariant::Standard;
    if (v == "paper_verbatim") return LReluVariant::PaperVerbatim;
    throw py::value_error("lrelu variant must be 'standard' or 'paper_verbatim'");
}

py::dict report_dict(const MetricsReport& rep) {
    py::dict d;
    d["mse"] = rep.mse;
    d["ae"] = rep.ae;
    d["rmsle"] = rep.rmsle;
    d["n_images"] = rep.n_images;
    d["n_channels"] = rep.n_channels;
    d["n_pixels"] = rep.n_pixels;
    return d;
}

// Stateful inference wrapper around the recurrent depth network.
class PyNet {
public:
    PyNet(int width_num, int width_den, int input_h, int input_w, std::uint64_t seed) {
        NetworkConfig cfg;
        cfg.width_num = width_num;
        cfg.width_den = width_den;
        cfg.input_h = input_h;
        cfg.input_w = input_w;
        cfg.seed = seed;
        net_ = build_network<float>(cfg);
    }

    explicit PyNet(DepthNet net) : net_(std::move(net)) {}

    static PyNet load(const std::string& path) {
        return PyNet(load_checkpoint(path).net);
    }

    py::array forward(const FloatArray& frame) {
        return from_tensor(forward_frame(net_, to_tensor(frame)));
    }

    void reset() { net_.reset_state(); }
    std::size_t parameter_count() const { return net_.parameter_count(); }
    int input_h() const { return net_.config.input_h; }
    int input_w() const { return net_.config.input_w; }

    py::dict config() const {
        py::dict d;
        d["width_num"] = net_.config.width_num;
        d["width_den"] = net_.config.width_den;
        d["input_h"] = net_.config.input_h;
        d["input_w"] = net_.config.input_w;
        return d;
    }

private:
    DepthNet net_;
};

}  // namespace

PYBIND11_MODULE(_grudepth, m) {
    m.doc() = "Recurrent depth-from-video engine: core operations";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_IOError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    m.def(
        "conv2d",
        [](const FloatArray& x, const FloatArray& w, py::object b, int stride, int pad) {
            Tensor xt = to_tensor(x), wt = to_tensor(w);
            Tensor bt;
            if (!b.is_none()) bt = to_tensor(b.cast<FloatArray>());
            if (wt.ndim() != 4) throw py::value_error("weight must be OxCxKHxKW");
            ConvSpec spec{wt.shape[2], wt.shape[3], stride, pad, wt.shape[1], wt.shape[0]};
            return from_tensor(conv2d(xt, wt, bt, spec));
        },
        py::arg("input"), py::arg("weight"), py::arg("bias") = py::none(),
        py::arg("stride") = 1, py::arg("pad") = 0,
        "2-D convolution of a CxHxW input with an OxCxKHxKW kernel");

    m.def(
        "depth_to_space",
        [](const FloatArray& x, int block) { return from_tensor(depth_to_space(to_tensor(x), block)); },
        py::arg("input"), py::arg("block") = 2);

    m.def(
        "space_to_depth",
        [](const FloatArray& x, int block) { return from_tensor(space_to_depth(to_tensor(x), block)); },
        py::arg("input"), py::arg("block") = 2);

    m.def(
        "lrelu",
        [](const FloatArray& x, float alpha, const std::string& variant) {
            return from_tensor(lrelu(to_tensor(x), alpha, parse_variant(variant)));
        },
        py::arg("input"), py::arg("alpha") = 0.1f, py::arg("variant") = "standard");

    m.def("quantize_depth", &quantize_depth, py::arg("z_meters"), py::arg("max_range"),
          "Map a metric depth to the 8-bit encoding used by the datasets");

    m.def(
        "evaluate",
        [](const ByteArray& real, const ByteArray& pred) {
            return report_dict(evaluate_gray(to_gray_stack(real, "real"),
                                             to_gray_stack(pred, "pred")));
        },
        py::arg("real"), py::arg("pred"),
        "MSE / AE / RMSLE over matched NxHxW uint8 depth stacks");

    m.def(
        "gradcheck",
        [](std::uint64_t seed) {
            const SelfCheckResult r = run_gradcheck_suite(seed);
            std::ostringstream report;
            print_gradcheck_report(r, report);
            py::dict d;
            d["pass"] = r.pass;
            d["report"] = report.str();
            return d;
        },
        py::arg("seed") = 0, "Finite-difference check of every autodiff primitive");

    py::class_<PyNet>(m, "Net")
        .def(py::init<int, int, int, int, std::uint64_t>(), py::arg("width_num") = 1,
             py::arg("width_den") = 1, py::arg("input_h") = 64, py::arg("input_w") = 64,
             py::arg("seed") = 0)
        .def_static("load", &PyNet::load, py::arg("path"),
                    "Restore network weights from a training checkpoint")
        .def("forward", &PyNet::forward, py::arg("frame"),
             "Run one 3xHxW frame in [-1,1]; hidden states advance in place")
        .def("reset", &PyNet::reset, "Clear all recurrent states")
        .def_property_readonly("parameter_count", &PyNet::parameter_count)
        .def_property_readonly("input_h", &PyNet::input_h)
        .def_property_readonly("input_w", &PyNet::input_w)
        .def_property_readonly("config", &PyNet::config);
}
