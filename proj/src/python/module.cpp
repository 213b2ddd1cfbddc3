// Python bindings: thin wrappers, reports come back as plain dicts.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hardylab/atoms.hpp"
#include "hardylab/czop.hpp"
#include "hardylab/decompose.hpp"
#include "hardylab/experiments.hpp"
#include "hardylab/hardy.hpp"
#include "hardylab/mollifier.hpp"
#include "hardylab/weights.hpp"

namespace py = pybind11;
using namespace hardylab;

namespace {

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }
json from_py(const py::object& o) { return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>()); }

Point point(const std::vector<double>& v) {
    if (v.empty() || v.size() > 2) throw py::value_error("points have one or two coordinates");
    return {v[0], v.size() == 2 ? v[1] : 0.0};
}

py::dict report_dict(const ValidationReport& r) {
    py::list recs;
    for (const auto& c : r.records) {
        py::dict d;
        d["condition"] = to_string(c.id);
        d["alpha"] = c.alpha ? py::cast(std::vector<int>{c.alpha->e[0], c.alpha->e[1]}) : py::none();
        d["measured"] = c.measured;
        d["budget"] = c.budget;
        d["pass"] = c.pass;
        d["required"] = c.required;
        d["min_passing_constant"] = c.min_passing_constant;
        d["note"] = c.note;
        recs.append(d);
    }
    py::dict out;
    out["all_pass"] = r.all_pass();
    out["records"] = recs;
    return out;
}

py::array_t<double> values_array(const GridFunction& f) {
    if (f.spec.dim == 1) return py::array_t<double>(static_cast<py::ssize_t>(f.values.size()), f.values.data());
    const auto ny = static_cast<py::ssize_t>(f.spec.count[1]), nx = static_cast<py::ssize_t>(f.spec.count[0]);
    return py::array_t<double>({ny, nx}, f.values.data());
}

}  // namespace

PYBIND11_MODULE(_hardylab, m) {
    m.doc() = "weighted local Hardy space laboratory";

    py::register_exception<Error>(m, "HardylabError", PyExc_ValueError);

    py::class_<Weight>(m, "Weight")
        .def_static("constant", &Weight::constant, py::arg("c") = 1.0)
        .def_static("power", &Weight::power, py::arg("a"))
        .def_static("shifted_power",
                    [](double a, const std::vector<double>& x0) { return Weight::shifted_power(a, point(x0)); },
                    py::arg("a"), py::arg("x0"))
        .def_static("product", &Weight::product)
        .def("scaled", &Weight::scaled)
        .def("__call__", [](const Weight& w, const std::vector<double>& x) { return w(point(x)); })
        .def("ball_integral",
             [](const Weight& w, const std::vector<double>& c, double r, int dim) {
                 return w.ball_integral({point(c), r}, dim);
             },
             py::arg("center"), py::arg("radius"), py::arg("dim") = 1)
        .def("describe", &Weight::describe)
        .def("__repr__", [](const Weight& w) { return "Weight(" + w.describe() + ")"; })
        .def("to_json", [](const Weight& w) { return to_py(to_json(w)); })
        .def_static("from_json", [](const py::object& o) { return weight_from_json(from_py(o)); });

    py::class_<HardyParams>(m, "HardyParams")
        .def(py::init([](int n, double p, double q, double eta, std::optional<double> lambda, double mu, double delta,
                         std::optional<int> s0) { return HardyParams::make(n, p, q, eta, lambda, mu, delta, s0); }),
             py::arg("n") = 1, py::arg("p") = 1.0, py::arg("q") = 2.0, py::arg("eta") = 1.0,
             py::arg("lam") = py::none(), py::arg("mu") = 1.0, py::arg("delta") = 1.0, py::arg("s0") = py::none())
        .def_readonly("n", &HardyParams::n)
        .def_readonly("p", &HardyParams::p)
        .def_readonly("q", &HardyParams::q)
        .def_readonly("s", &HardyParams::s)
        .def_readonly("s0", &HardyParams::s0)
        .def_readonly("gamma_p", &HardyParams::gamma_p)
        .def_readonly("lam", &HardyParams::lambda)
        .def("two_branch", &HardyParams::two_branch)
        .def("lambda_window", &HardyParams::lambda_window);

    py::class_<GridSpec>(m, "GridSpec")
        .def_static("make",
                    [](int dim, const std::vector<double>& lo, const std::vector<double>& hi, double h) {
                        return GridSpec::make(dim, point(lo), point(hi), h);
                    })
        .def_static("covering",
                    [](int dim, const std::vector<double>& c, double r, double h) {
                        return GridSpec::covering(dim, {point(c), r}, h);
                    })
        .def_readonly("dim", &GridSpec::dim)
        .def_readonly("h", &GridSpec::h)
        .def_property_readonly("lo", [](const GridSpec& g) { return std::vector<double>{g.lo[0], g.lo[1]}; })
        .def_property_readonly("count", [](const GridSpec& g) { return std::vector<std::size_t>{g.count[0], g.count[1]}; })
        .def("size", &GridSpec::size)
        .def("nodes", [](const GridSpec& g) {
            std::vector<double> xs;
            for (std::size_t i = 0; i < g.size(); ++i) {
                const Point x = g.node(i);
                xs.push_back(x[0]);
                if (g.dim == 2) xs.push_back(x[1]);
            }
            py::array_t<double> a(static_cast<py::ssize_t>(xs.size()), xs.data());
            if (g.dim == 2) a.resize({static_cast<py::ssize_t>(g.size()), py::ssize_t{2}});
            return a;
        });

    py::class_<GridFunction>(m, "GridFunction")
        .def(py::init([](const GridSpec& g, py::array_t<double, py::array::c_style | py::array::forcecast> v) {
            GridFunction f(g);
            if (static_cast<std::size_t>(v.size()) != g.size()) throw py::value_error("value count does not match the grid");
            std::copy(v.data(), v.data() + v.size(), f.values.begin());
            f.check_invariants();
            return f;
        }))
        .def_readonly("spec", &GridFunction::spec)
        .def_property_readonly("values", &values_array)
        .def("is_zero", &GridFunction::is_zero);

    py::class_<AtomCandidate>(m, "AtomCandidate")
        .def_readonly("f", &AtomCandidate::f)
        .def_property_readonly("center", [](const AtomCandidate& c) { return std::vector<double>{c.ball.center[0], c.ball.center[1]}; })
        .def_property_readonly("radius", [](const AtomCandidate& c) { return c.ball.radius; })
        .def_readonly("params", &AtomCandidate::params)
        .def_readonly("weight", &AtomCandidate::weight)
        .def_readonly("kind", &AtomCandidate::kind)
        .def_readonly("seed", &AtomCandidate::seed)
        .def_readonly("moment_fill", &AtomCandidate::moment_fill)
        .def_readonly("tail_fill", &AtomCandidate::tail_fill);

    m.def("measure_ball",
          [](const Weight& w, const std::vector<double>& c, double r, int dim) { return measure_ball(w, {point(c), r}, dim); },
          py::arg("weight"), py::arg("center"), py::arg("radius"), py::arg("dim") = 1);

    m.def("make_atom",
          [](const GridSpec& g, const std::vector<double>& c, double r, const HardyParams& prm, const Weight& w,
             std::uint64_t seed) { return make_atom(g, {point(c), r}, prm, w, seed); },
          py::arg("grid"), py::arg("center"), py::arg("radius"), py::arg("params"), py::arg("weight"), py::arg("seed"));
    m.def("make_approx_atom",
          [](const GridSpec& g, const std::vector<double>& c, double r, const HardyParams& prm, const Weight& w,
             std::uint64_t seed, double fill) { return make_approx_atom(g, {point(c), r}, prm, w, seed, fill); },
          py::arg("grid"), py::arg("center"), py::arg("radius"), py::arg("params"), py::arg("weight"), py::arg("seed"),
          py::arg("moment_fill"));
    m.def("make_molecule",
          [](const std::vector<double>& c, double r, const HardyParams& prm, const Weight& w, std::uint64_t seed,
             double tail_fill, int k_max, double h) {
              const Ball B{point(c), r};
              const GridSpec g = molecule_grid(prm.n, B, k_max, h, Mollifier::gaussian(prm.n).radius() + 2 * h);
              MoleculeOptions opt;
              opt.k_max = k_max;
              return make_molecule(g, B, prm, w, seed, tail_fill, opt);
          },
          py::arg("center"), py::arg("radius"), py::arg("params"), py::arg("weight"), py::arg("seed"),
          py::arg("tail_fill"), py::arg("k_max") = 12, py::arg("h") = 1.0 / 64);

    m.def("validate_atom",
          [](const AtomCandidate& c, double moment_constant) { return report_dict(validate_atom(c, {moment_constant})); },
          py::arg("candidate"), py::arg("moment_constant") = 1.0);
    m.def("validate_approx_atom",
          [](const AtomCandidate& c, double C) { return report_dict(validate_approx_atom(c, C)); },
          py::arg("candidate"), py::arg("C_budget") = 1.0);
    m.def("validate_molecule",
          [](const AtomCandidate& c, double C, int k_max, double size_constant) {
              return report_dict(validate_molecule(c, C, {k_max, size_constant}));
          },
          py::arg("candidate"), py::arg("C_budget") = 1.0, py::arg("k_max") = 12, py::arg("size_constant") = 1.0);

    m.def("hp_norm", [](const GridFunction& f, const Weight& w, double p) { return hp_norm(f, w, p).value; },
          py::arg("f"), py::arg("weight"), py::arg("p"));
    m.def("atom_hp_norm",
          [](const AtomCandidate& a) { return hp_norm(pad_for_norm(a.f), a.weight, a.params.p).value; });

    m.def("decompose_molecule",
          [](const AtomCandidate& M, int k_max, double C) {
              const Decomposition d = decompose_molecule(M, AnnularSystem::build(M.f.spec, M.ball, k_max), C);
              py::dict out;
              out["C_t"] = d.C_t;
              out["t"] = d.t;
              out["C_s"] = d.C_s;
              out["s"] = d.s;
              out["sum_t_p"] = d.sum_t_p;
              out["closed_t_p"] = d.closed_t_p;
              out["max_biorthogonality"] = d.max_biorthogonality;
              out["reconstruction_error"] = reconstruct(d).relative_error;
              int fails = 0;
              for (int k = 0; k < static_cast<int>(d.a.size()); ++k) fails += !validate_atom(atom_candidate(d, k)).all_pass();
              out["atom_failures"] = fails;
              return out;
          },
          py::arg("molecule"), py::arg("k_max") = 12, py::arg("C_budget") = 1.0);

    m.def("validate_kernel",
          [](const std::string& family, int dim, int cloud, std::uint64_t seed) {
              const auto v = validate_kernel(KernelSpec::from_name(family, dim, 1.0, 1.0, 0.05), cloud, seed, 1e-3, 1e3);
              py::dict out;
              out["C_size"] = v.C_size;
              out["C_sm"] = v.C_sm;
              out["C_size_enlarged"] = v.C_size_enlarged;
              out["C_sm_enlarged"] = v.C_sm_enlarged;
              out["pass"] = v.pass;
              return out;
          },
          py::arg("family") = "odd_min", py::arg("dim") = 1, py::arg("cloud") = 2000, py::arg("seed") = 1);

    m.def("experiment_ids", &experiment_ids);
    m.def("default_config", [](const std::string& id) { return to_py(ExperimentConfig::defaults(id).to_json()); });
    m.def("run_experiment",
          [](const py::object& cfg, std::optional<std::string> only) {
              const ExperimentConfig c = py::isinstance<py::str>(cfg)
                                             ? ExperimentConfig::defaults(cfg.cast<std::string>())
                                             : ExperimentConfig::from_json(from_py(cfg));
              c.validate();
              RunReport r;
              {
                  py::gil_scoped_release release;
                  r = run_experiment(c, only);
              }
              py::dict out = to_py(report_to_json(r));
              out["csv"] = report_rows_csv(r);
              return out;
          },
          py::arg("config"), py::arg("only") = py::none());
}
