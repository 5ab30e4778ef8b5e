// Python bindings: scenario loading, runs, audits and the KKT oracle.

#include "hvacpd/interconnect.hpp"
#include "hvacpd/scenario_config.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace hvacpd;

namespace {

Architecture parse_arch(const std::string& s) {
    if (s == "coupled") return Architecture::Coupled;
    if (s == "feedforward") return Architecture::Feedforward;
    throw py::value_error("architecture must be 'coupled' or 'feedforward'");
}

Mat log_matrix(const TrajectoryLog& log) {
    Mat m(log.rows(), log.cols());
    for (std::size_t k = 0; k < log.rows(); ++k)
        for (std::size_t c = 0; c < log.cols(); ++c) m(k, c) = log.at(k, c);
    return m;
}

TrajectoryLog matrix_log(const LogSchema& schema, const Mat& m) {
    TrajectoryLog log(schema);
    if (static_cast<std::size_t>(m.cols()) != log.cols()) throw py::value_error("log width does not match the scenario");
    std::vector<double> row(log.cols());
    for (Eigen::Index k = 0; k < m.rows(); ++k) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) row[c] = m(k, c);
        log.append_row(row);
    }
    return log;
}

LogSchema schema_of(const Scenario& sc) { return {sc.plant.n1, sc.plant.n2, sc.spec.constraints()}; }

py::dict summary_dict(const RunSummary& s) {
    py::dict d;
    d["architecture"] = s.architecture;
    d["steps"] = s.steps;
    d["final_tracking_error"] = s.final_tracking_error;
    d["final_estimate_error"] = s.final_estimate_error;
    d["settling_times"] = s.settling_times;
    d["r_variance"] = s.r_variance;
    d["d_hat_variance"] = s.d_hat_variance;
    d["tracking_l2_sq"] = s.tracking_l2_sq;
    d["probe_l2_sq"] = s.probe_l2_sq;
    d["max_lambda"] = s.max_lambda;
    return d;
}

py::dict verdict_dict(const LemmaVerdict& v) {
    py::dict d;
    d["lemma"] = v.name;
    d["pass"] = v.pass;
    d["max_residual"] = v.max_residual;
    d["max_excess"] = v.max_excess;
    d["intervals_checked"] = v.intervals_checked;
    d["intervals_skipped"] = v.intervals_skipped;
    return d;
}

py::dict audit(const ScenarioConfig& cfg, const Mat& data, const std::string& arch) {
    const Scenario& sc = cfg.scenario;
    const TrajectoryLog log = matrix_log(schema_of(sc), data);
    check_log_matches(log, sc);
    const ReferenceSchedule refs(sc.spec, sc.plant, sc.ctrl, sc.profile);
    const StorageSuite suite(sc.plant, sc.ctrl, sc.spec, solve_riccati(sc.plant, sc.ctrl));
    py::list lemmas;
    bool pass = true;
    for (LemmaId id : all_lemmas()) {
        const LemmaVerdict v = audit_lemma(log, id, suite, refs, sc.profile);
        pass = pass && v.pass;
        lemmas.append(verdict_dict(v));
    }
    py::dict out;
    if (parse_arch(arch) == Architecture::Coupled) {
        const CombinedVerdict c = audit_combined(log, suite, refs, sc.profile);
        pass = pass && c.pass;
        py::dict comb = verdict_dict(c.base);
        comb["pass"] = c.pass;
        comb["storage_initial"] = c.storage_initial;
        comb["storage_final"] = c.storage_final;
        out["combined"] = comb;
    }
    out["lemmas"] = lemmas;
    out["pass"] = pass;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Primal-dual HVAC optimization coupled with a PI-controlled thermal plant";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::class_<ScenarioConfig>(m, "Scenario")
        .def_static(
            "load",
            [](const std::string& path, std::optional<std::uint64_t> seed) { return load_config(path, seed); },
            py::arg("path"), py::arg("seed") = py::none())
        .def_static(
            "from_json",
            [](const std::string& text, const std::string& base_dir, std::optional<std::uint64_t> seed) {
                return parse_config(text, base_dir, seed);
            },
            py::arg("text"), py::arg("base_dir") = ".", py::arg("seed") = py::none())
        .def_property_readonly("n1", [](const ScenarioConfig& c) { return c.scenario.plant.n1; })
        .def_property_readonly("n2", [](const ScenarioConfig& c) { return c.scenario.plant.n2; })
        .def_property_readonly("sigma", [](const ScenarioConfig& c) { return c.scenario.plant.sigma; })
        .def_property_readonly("A", [](const ScenarioConfig& c) { return c.scenario.plant.A; })
        .def_property_readonly("M", [](const ScenarioConfig& c) { return c.scenario.plant.M; })
        .def_property_readonly("horizon", [](const ScenarioConfig& c) { return c.scenario.horizon; })
        .def_property_readonly("dt", [](const ScenarioConfig& c) { return c.scenario.dt; })
        .def_property_readonly("alpha", [](const ScenarioConfig& c) { return c.scenario.spec.alpha; })
        .def_property_readonly("seed", [](const ScenarioConfig& c) { return c.seed; })
        .def_property_readonly("columns", [](const ScenarioConfig& c) { return schema_of(c.scenario).columns(); })
        .def(
            "run",
            [](const ScenarioConfig& c, const std::string& arch) {
                RunResult res;
                {
                    py::gil_scoped_release release;
                    res = run_scenario(c.scenario, parse_arch(arch));
                }
                return py::make_tuple(log_matrix(res.log), summary_dict(res.summary));
            },
            py::arg("architecture") = "coupled",
            "Simulates the scenario; returns (log rows x columns, summary dict).")
        .def(
            "kkt",
            [](const ScenarioConfig& c) {
                const KKTSolution sol = solve_kkt(c.scenario.spec, c.scenario.plant);
                py::dict d;
                d["z_u"] = sol.z_u_star;
                d["lambda"] = sol.lambda_star;
                d["z_x"] = sol.z_x_star;
                d["active_set"] = sol.active_set;
                return d;
            },
            "KKT point of the steady-state problem for the base disturbances.")
        .def(
            "riccati",
            [](const ScenarioConfig& c) {
                const RiccatiCertificate cert = solve_riccati(c.scenario.plant, c.scenario.ctrl);
                py::dict d;
                d["Psi"] = cert.Psi;
                d["riccati_max_eig"] = cert.riccati_max_eig;
                d["block_min_eig"] = cert.block_min_eig;
                d["psi_min_eig"] = cert.psi_min_eig;
                return d;
            })
        .def("audit", &audit, py::arg("log"), py::arg("architecture") = "coupled",
             "Checks every dissipation inequality along a log produced by run().");

    m.def(
        "write_csv",
        [](const ScenarioConfig& c, const Mat& data) {
            std::ostringstream os;
            matrix_log(schema_of(c.scenario), data).write_csv(os);
            return os.str();
        },
        py::arg("scenario"), py::arg("log"), "CSV text of a log, %.17g formatting.");
    m.def(
        "read_csv",
        [](const std::string& text) {
            std::istringstream is(text);
            const TrajectoryLog log = TrajectoryLog::read_csv(is);
            return py::make_tuple(log.columns(), log_matrix(log));
        },
        py::arg("text"), "Parses CSV text into (columns, rows x columns).");
    m.def(
        "synthetic_network_json",
        [](int n1, int n2, std::uint64_t seed) {
            SyntheticNetworkOptions o;
            o.n1 = n1;
            o.n2 = n2;
            o.seed = seed;
            return network_to_json(make_synthetic_network(o));
        },
        py::arg("n1") = 3, py::arg("n2") = 5, py::arg("seed") = 1);
}
