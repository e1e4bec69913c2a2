#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "cada/context.hpp"
#include "cada/errors.hpp"
#include "cada/eval.hpp"
#include "cada/forest.hpp"
#include "cada/histogram.hpp"
#include "cada/io.hpp"
#include "cada/predictor.hpp"
#include "cada/synth.hpp"
#include "cada/watershed.hpp"

namespace py = pybind11;
using cada::Label;

namespace {

using LabelArray = py::array_t<Label, py::array::c_style | py::array::forcecast>;
using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

cada::Dims dims_of(const py::array& a)
{
    if (a.ndim() != 2 && a.ndim() != 3) {
        throw cada::ShapeError("expected a 2D or 3D array, got " + std::to_string(a.ndim()) + " dimensions");
    }
    std::vector<std::size_t> ext;
    for (py::ssize_t i = 0; i < a.ndim(); ++i) {
        ext.push_back(static_cast<std::size_t>(a.shape(i)));
    }
    return cada::Dims(std::move(ext));
}

template <typename T>
cada::Grid<T> to_grid(const py::array_t<T, py::array::c_style | py::array::forcecast>& a)
{
    const cada::Dims d = dims_of(a);
    return cada::Grid<T>(d, std::vector<T>(a.data(), a.data() + a.size()));
}

template <typename T>
py::array_t<T> to_array(const cada::Grid<T>& g)
{
    std::vector<py::ssize_t> shape(g.dims().extents().begin(), g.dims().extents().end());
    py::array_t<T> out(shape);
    std::copy(g.data().begin(), g.data().end(), out.mutable_data());
    return out;
}

// Channels keep the dict's key order.
cada::ProbabilityStack to_stack(const py::dict& channels)
{
    cada::ProbabilityStack stack;
    bool first = true;
    for (const auto& [k, v] : channels) {
        auto grid = to_grid<float>(v.cast<FloatArray>());
        if (first) {
            stack = cada::ProbabilityStack(grid.dims());
            first = false;
        }
        stack.add(k.cast<std::string>(), std::move(grid));
    }
    if (first) {
        throw cada::ValueError("at least one channel is required");
    }
    return stack;
}

py::dict from_stack(const cada::ProbabilityStack& s)
{
    py::dict out;
    for (std::size_t i = 0; i < s.channel_count(); ++i) {
        out[py::str(s.names()[i])] = to_array(s.channel(i));
    }
    return out;
}

nlohmann::json to_json(const py::handle& obj)
{
    if (obj.is_none()) {
        return nlohmann::json::object();
    }
    const std::string text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
    return nlohmann::json::parse(text);
}

py::object from_json(const nlohmann::json& j)
{
    return py::module_::import("json").attr("loads")(j.dump());
}

py::list trace_rows(const cada::MergeTrace& t)
{
    py::list rows;
    for (const auto& s : t.steps) {
        rows.append(py::make_tuple(s.step, s.kept, s.absorbed, s.confidence, s.sweep));
    }
    return rows;
}

cada::TrainParams train_params(const nlohmann::json& j)
{
    cada::TrainParams p;
    for (const auto& [key, v] : j.items()) {
        if (key == "iterations") {
            p.iterations = v.get<std::size_t>();
        } else if (key == "accumulate") {
            p.accumulate = v.get<bool>();
        } else if (key == "context") {
            p.context = v.get<bool>();
        } else if (key == "theta_mito") {
            p.theta_mito = v.get<double>();
        } else if (key == "train_delta") {
            p.train_delta = v.get<double>();
        } else if (key == "strict") {
            p.strict = v.get<bool>();
        } else if (key == "policy") {
            p.policy = cada::parse_policy(v.get<std::string>());
        } else if (key == "n_trees") {
            p.forest.n_trees = v.get<std::size_t>();
        } else if (key == "max_depth") {
            p.forest.max_depth = v.get<std::size_t>();
        } else if (key == "seed") {
            p.forest.seed = v.get<std::uint64_t>();
        } else {
            throw cada::ValueError("unknown training parameter '" + key + "'");
        }
    }
    return p;
}

} // namespace

PYBIND11_MODULE(_cada, m)
{
    m.doc() = "Context-aware delayed agglomeration";

    static py::exception<cada::Error> base(m, "CadaError", PyExc_RuntimeError);
    static py::exception<cada::DataError> data_error(m, "DataError", base.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) {
                std::rethrow_exception(p);
            }
        } catch (const cada::ShapeError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const cada::ValueError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const cada::IoError& e) {
            PyErr_SetString(PyExc_OSError, e.what());
        } catch (const cada::DataError& e) {
            data_error(e.what());
        } catch (const cada::Error& e) {
            base(e.what());
        }
    });

    py::class_<cada::MomentHistogram>(m, "MomentHistogram")
        .def(py::init<>())
        .def("accumulate", &cada::MomentHistogram::accumulate)
        .def("merge", &cada::MomentHistogram::merge)
        .def_property_readonly("count", &cada::MomentHistogram::count)
        .def("mean", &cada::MomentHistogram::mean)
        .def("stddev", &cada::MomentHistogram::stddev)
        .def("quartile", &cada::MomentHistogram::quartile)
        .def_property_readonly("bins", [](const cada::MomentHistogram& h) {
            return std::vector<std::uint64_t>(h.bins().begin(), h.bins().end());
        })
        .def("__eq__", [](const cada::MomentHistogram& a, const cada::MomentHistogram& b) { return a == b; });

    py::class_<cada::Forest>(m, "Forest")
        .def_static("load", &cada::Forest::load)
        .def("save", &cada::Forest::save)
        .def_property_readonly("n_trees", [](const cada::Forest& f) { return f.trees().size(); })
        .def_property_readonly("n_features", &cada::Forest::n_features)
        .def("predict", [](const cada::Forest& f, const std::vector<double>& x) { return f.predict(x); })
        .def("to_json", [](const cada::Forest& f) { return from_json(f.to_json()); });

    m.def(
        "synth",
        [](const py::object& params) {
            const auto p = cada::SynthParams::from_json(to_json(params));
            p.validate();
            const auto v = cada::synth_generate(p);
            py::dict out;
            out["gt"] = to_array(v.cells);
            out["mito"] = to_array(v.mito);
            out["blob_cell"] = v.blob_cell;
            out["channels"] = from_stack(v.channels);
            return out;
        },
        py::arg("params") = py::none(), "Generate a synthetic volume; params is a dict of generator settings.");

    m.def(
        "watershed",
        [](const FloatArray& boundary, double theta_seed) {
            return to_array(cada::watershed(to_grid<float>(boundary), theta_seed));
        },
        py::arg("boundary"), py::arg("theta_seed") = 0.1);

    m.def(
        "train",
        [](const LabelArray& labels, const LabelArray& gt, const py::dict& channels, const py::object& params) {
            const auto overseg = to_grid<Label>(labels);
            const auto truth = to_grid<Label>(gt);
            const auto g0 = cada::build_rag(overseg, to_stack(channels));
            const auto tp = train_params(to_json(params));
            py::gil_scoped_release release;
            return cada::iterative_train(g0, overseg, truth, tp).forest;
        },
        py::arg("labels"), py::arg("gt"), py::arg("channels"), py::arg("params") = py::none());

    m.def(
        "segment",
        [](const LabelArray& labels, const py::dict& channels, const cada::Forest* forest, const py::object& config) {
            const auto overseg = to_grid<Label>(labels);
            const auto stack = to_stack(channels);
            const auto cfg = cada::ContextConfig::from_json(to_json(config));
            cfg.validate();
            cada::PipelineResult r;
            {
                py::gil_scoped_release release;
                r = forest ? cada::run_context_pipeline(overseg, stack, *forest, cfg)
                           : cada::run_context_pipeline(overseg, stack, cada::mean_boundary_confidence, cfg);
            }
            py::dict out;
            out["segmentation"] = to_array(r.segmentation);
            out["cyto"] = trace_rows(r.cyto);
            out["mito"] = trace_rows(r.mito);
            return out;
        },
        py::arg("labels"), py::arg("channels"), py::arg("forest") = nullptr, py::arg("config") = py::none(),
        "Two-phase agglomeration; without a forest the mean boundary probability is the confidence.");

    m.def(
        "evaluate",
        [](const LabelArray& seg, const LabelArray& gt, bool exclude_zero) {
            const auto t = cada::contingency(to_grid<Label>(seg), to_grid<Label>(gt), exclude_zero);
            const auto vi = cada::split_vi(t);
            const auto re = cada::split_re(t);
            py::dict out;
            out["vi_ue"] = vi.under;
            out["vi_oe"] = vi.over;
            out["re_ue"] = re.under;
            out["re_oe"] = re.over;
            return out;
        },
        py::arg("seg"), py::arg("gt"), py::arg("exclude_zero") = true);

    m.def("read_labels", [](const std::string& path) { return to_array(cada::read_labels(path)); });
    m.def("read_channel", [](const std::string& path) { return to_array(cada::read_channel(path)); });
    m.def("write_labels",
          [](const std::string& path, const LabelArray& a) { cada::write_volume(path, to_grid<Label>(a)); });
    m.def("write_channel",
          [](const std::string& path, const FloatArray& a) { cada::write_volume(path, to_grid<float>(a)); });
}
