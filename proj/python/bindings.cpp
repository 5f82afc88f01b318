#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>
#include <vector>

#include "cli_app.hpp"
#include "delaystab/io.hpp"
#include "delaystab/lyapunov.hpp"
#include "delaystab/sampler.hpp"
#include "delaystab/segment.hpp"
#include "delaystab/simulate.hpp"
#include "delaystab/system.hpp"
#include "delaystab/version.hpp"

namespace py = pybind11;
using namespace delaystab;

namespace {

Json parse(const std::string& text) { return Json::parse(text); }

SamplerConfig sampler_from_json(const Json& j) {
    expect_keys(j, {"family", "space", "radius", "dimension", "seed", "delay", "intervals", "radial"}, "sampler");
    SamplerConfig cfg;
    if (j.contains("family")) cfg.family = family_from_json(j["family"]);
    if (j.contains("space")) cfg.target_space = space_from_json(j["space"]);
    if (j.contains("radius")) cfg.target_norm = number_from_json(j["radius"], "radius");
    if (j.contains("dimension")) cfg.dimension = j["dimension"].get<std::size_t>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("delay")) cfg.delay = number_from_json(j["delay"], "delay");
    if (j.contains("intervals")) cfg.intervals = j["intervals"].get<std::size_t>();
    if (j.contains("radial")) cfg.radial = radial_from_json(j["radial"]);
    validate(cfg);
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Compiled core of delaystab";
    m.attr("__version__") = kVersion;

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<EscapeError>(m, "EscapeError", PyExc_RuntimeError);

    py::class_<Segment>(m, "Segment")
        .def_static("from_json", [](const std::string& text) { return segment_from_json(parse(text)); })
        .def_static("constant", [](double r, const std::vector<double>& c,
                                   std::size_t intervals) { return Segment::constant(r, c, intervals); },
                    py::arg("r"), py::arg("c"), py::arg("intervals") = 200)
        .def_static("uniform", &Segment::uniform, py::arg("r"), py::arg("intervals"), py::arg("dim"),
                    py::arg("values"), py::arg("derivs"), py::arg("left_derivs") = std::vector<double>{})
        .def("to_json", [](const Segment& s) { return to_json(s).dump(); })
        .def("csv", &segment_csv)
        .def_property_readonly("delay", &Segment::delay)
        .def_property_readonly("dim", &Segment::dim)
        .def_property_readonly("intervals", &Segment::intervals)
        .def_property_readonly("nodes", &Segment::nodes)
        .def_property_readonly("values", &Segment::values)
        .def_property_readonly("derivs", &Segment::derivs)
        .def("__call__", [](const Segment& s, double t) {
            std::vector<double> out(s.dim());
            s.eval(t, out);
            return out;
        })
        .def("__add__", &Segment::operator+)
        .def("__sub__", &Segment::operator-)
        .def("__mul__", [](const Segment& s, double c) { return s * c; })
        .def("__rmul__", [](const Segment& s, double c) { return s * c; });

    py::class_<DelaySystem>(m, "System")
        .def_static("from_json", [](const std::string& text) { return make_system(system_def_from_json(parse(text))); })
        .def_property_readonly("name", &DelaySystem::name)
        .def_property_readonly("dim", &DelaySystem::dim)
        .def_property_readonly("delay", &DelaySystem::delay)
        .def("lipschitz", &DelaySystem::lipschitz)
        .def("rhs", py::overload_cast<const Segment&>(&DelaySystem::rhs, py::const_))
        .def("to_json", [](const DelaySystem& s) { return to_json(s.definition()).dump(); });
    m.def("registered_systems", &registered_systems);

    py::class_<Trajectory>(m, "Trajectory")
        .def("state", py::overload_cast<double>(&Trajectory::state, py::const_))
        .def("segment_at", &Trajectory::segment_at, py::arg("t"), py::arg("intervals") = 0)
        .def("mesh_times", &Trajectory::mesh_times)
        .def("csv", &trajectory_csv)
        .def_property_readonly("escaped", &Trajectory::escaped)
        .def_property_readonly("escape_time", &Trajectory::escape_time)
        .def_property_readonly("end_time", &Trajectory::end_time)
        .def_property_readonly("horizon", &Trajectory::horizon)
        .def_property_readonly("step", &Trajectory::step);

    m.def("simulate", &simulate, py::arg("system"), py::arg("initial"), py::arg("T"), py::arg("step") = 0.0,
          py::call_guard<py::gil_scoped_release>());

    py::class_<NormOptions>(m, "NormOptions")
        .def(py::init<>())
        .def_readwrite("refine", &NormOptions::refine)
        .def_readwrite("hoelder_cap", &NormOptions::hoelder_cap)
        .def_readwrite("polish", &NormOptions::polish);

    m.def("sup_norm", py::overload_cast<const Segment&, const NormOptions&>(&sup_norm), py::arg("segment"),
          py::arg("options") = NormOptions{});
    m.def("lp_deriv_norm", py::overload_cast<const Segment&, double, const NormOptions&>(&lp_deriv_norm),
          py::arg("segment"), py::arg("p"), py::arg("options") = NormOptions{});
    m.def("max_abs_deriv", py::overload_cast<const Segment&, const NormOptions&>(&max_abs_deriv),
          py::arg("segment"), py::arg("options") = NormOptions{});
    m.def("hoelder_seminorm", py::overload_cast<const Segment&, double, const NormOptions&>(&hoelder_seminorm),
          py::arg("segment"), py::arg("a"), py::arg("options") = NormOptions{});
    m.def("space_norm", [](const Segment& seg, const std::string& space, const NormOptions& opts) {
        return space_norm(seg, space_from_json(parse(space)), opts);
    }, py::arg("segment"), py::arg("space"), py::arg("options") = NormOptions{});
    m.def("prolong", &prolong, py::arg("segment"), py::arg("f_value"), py::arg("h"));

    m.def("sample", [](const std::string& config, std::size_t count) {
        return sample(sampler_from_json(parse(config)), count);
    }, py::arg("config"), py::arg("count"));

    m.def("dini_derivative", [](const DelaySystem& sys, const std::string& functional, const Segment& x,
                                bool prolongation) {
        const Functional V = functional_from_json(parse(functional));
        const DiniEstimate d = prolongation ? prolongation_derivative(sys, V, x) : dini_derivative(sys, V, x);
        Json j = {{"h", d.h}, {"quotients", d.quotients}, {"estimate", d.estimate}, {"trend", d.trend}};
        return j.dump();
    }, py::arg("system"), py::arg("functional"), py::arg("segment"), py::arg("prolongation") = false);
    m.def("functional_value", [](const std::string& functional, const Segment& x) {
        return functional_from_json(parse(functional))(x);
    });

    m.def("run_cli", [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
            py::gil_scoped_release release;
            code = cli::run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
    }, py::arg("args"));
}
