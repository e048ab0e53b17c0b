#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "silmpc/config.hpp"
#include "silmpc/errors.hpp"
#include "silmpc/qp_solver.hpp"
#include "silmpc/sil_harness.hpp"

namespace py = pybind11;
using namespace silmpc;

namespace {

// Configs cross the boundary as JSON text; the Python side wraps json.dumps/loads.
StudyConfig parse_config(const std::string& text) {
    return study_config_from_json(text.empty() ? nlohmann::json::object() : nlohmann::json::parse(text));
}

py::dict metrics_dict(const MetricSummary& m) {
    py::list months;
    for (const MonthlyMetrics& mm : m.monthly) {
        py::dict d;
        d["month"] = mm.month;
        d["steps"] = mm.steps;
        d["wmare"] = mm.wmare;
        d["wmre"] = mm.wmre;
        d["rmse"] = mm.rmse;
        months.append(d);
    }
    py::dict d;
    d["wmare"] = m.wmare;
    d["wmre"] = m.wmre;
    d["rmse"] = m.rmse;
    d["monthly"] = months;
    return d;
}

py::dict scenario_dict(const ScenarioResult& r) {
    std::ostringstream log;
    write_log_csv(r.log, log);
    py::dict d = metrics_dict(r.metrics);
    d["label"] = r.label;
    d["steps"] = r.log.size();
    d["failsafe_count"] = r.failsafe_count;
    d["retrain_steps"] = r.retrain_steps;
    d["log_csv"] = log.str();
    return d;
}

SparseMatrix to_sparse(const Eigen::MatrixXd& m) { return m.sparseView(); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Building MPC software-in-the-loop core";

    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
    py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);

    m.def("effective_config", [](const std::string& text) { return to_json(parse_config(text)).dump(); },
          py::arg("config_json") = "");
    m.def("config_fingerprint", [](const std::string& text) { return config_fingerprint(parse_config(text)); },
          py::arg("config_json") = "");

    m.def(
        "discretize",
        [](const std::string& text) {
            const StudyConfig cfg = parse_config(text);
            const DiscreteModel d = discretize(cfg.building);
            return py::make_tuple(d.a, d.b, d.s);
        },
        py::arg("config_json") = "");

    py::class_<QpResult>(m, "QpResult")
        .def_readonly("x", &QpResult::x)
        .def_readonly("y", &QpResult::y)
        .def_readonly("objective", &QpResult::objective)
        .def_readonly("iterations", &QpResult::iterations)
        .def_readonly("polished", &QpResult::polished)
        .def_property_readonly("status", [](const QpResult& r) { return to_string(r.status); })
        .def("__repr__", [](const QpResult& r) {
            return "QpResult(status=" + to_string(r.status) + ", objective=" + std::to_string(r.objective) + ")";
        });

    m.def(
        "solve_qp",
        [](const Eigen::MatrixXd& p, const Eigen::VectorXd& q, const Eigen::MatrixXd& a, const Eigen::VectorXd& l,
           const Eigen::VectorXd& u, double eps_abs, double eps_rel, int max_iter, bool polish) {
            QpProblem prob;
            prob.p = to_sparse(p);
            prob.q = q;
            prob.a = to_sparse(a);
            prob.l = l;
            prob.u = u;
            QpSettings s;
            s.eps_abs = eps_abs;
            s.eps_rel = eps_rel;
            s.max_iter = max_iter;
            s.polish = polish;
            py::gil_scoped_release release;
            return solve_qp(prob, s);
        },
        py::arg("P"), py::arg("q"), py::arg("A"), py::arg("l"), py::arg("u"), py::arg("eps_abs") = 1e-6,
        py::arg("eps_rel") = 1e-6, py::arg("max_iter") = 20000, py::arg("polish") = true);

    m.def(
        "run_study",
        [](const std::string& text, const std::vector<std::string>& names, int jobs) {
            const StudyConfig cfg = parse_config(text);
            std::vector<ScenarioId> ids;
            for (const auto& n : names) ids.push_back(scenario_from_string(n));
            StudyResults res;
            {
                py::gil_scoped_release release;
                res = run_study(cfg, ids, jobs);
            }
            py::dict out;
            for (const auto& [id, r] : res.scenarios) out[py::str(to_string(id))] = scenario_dict(r);
            return out;
        },
        py::arg("config_json"), py::arg("scenarios"), py::arg("jobs") = 1);

    m.def(
        "log_metrics",
        [](const std::string& log_csv, const std::string& text) {
            const StudyConfig cfg = parse_config(text);
            std::istringstream in(log_csv);
            const StepLog log = read_log_csv(in);
            CalendarClock clock;
            clock.year = cfg.harness.study_year;
            clock.start_weekday = cfg.harness.study_start_weekday;
            clock.ts = cfg.building.ts;
            return metrics_dict(summarize(log, clock, cfg.building, cfg.ocp.theta_ref));
        },
        py::arg("log_csv"), py::arg("config_json") = "");
}
