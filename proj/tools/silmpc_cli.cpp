// silmpc: run the closed-loop study, recompute metrics from a log, generate a
// disturbance CSV, print the effective config or solve a QP file.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "silmpc/config.hpp"
#include "silmpc/qp_solver.hpp"
#include "silmpc/sil_harness.hpp"

namespace {

silmpc::StudyConfig config_or_default(const std::string& path) {
    return path.empty() ? silmpc::StudyConfig{} : silmpc::load_study_config(path);
}

std::vector<silmpc::ScenarioId> parse_scenarios(const std::string& arg) {
    if (arg == "all") return {silmpc::kAllScenarios.begin(), silmpc::kAllScenarios.end()};
    std::vector<silmpc::ScenarioId> out;
    std::size_t begin = 0;
    while (begin <= arg.size()) {
        const std::size_t end = std::min(arg.find(',', begin), arg.size());
        out.push_back(silmpc::scenario_from_string(arg.substr(begin, end - begin)));
        begin = end + 1;
    }
    return out;
}

int cmd_run(const std::string& scenario, const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed, std::optional<std::int64_t> year_steps, const std::string& data,
            int jobs, bool save_models) {
    silmpc::StudyConfig cfg = config_or_default(config_path);
    if (seed) cfg.harness.seed = *seed;
    if (year_steps) cfg.harness.year_steps = *year_steps;
    if (!data.empty()) cfg.harness.data_csv = data;
    if (save_models) cfg.harness.save_models = true;
    cfg.validate();

    const silmpc::StudyResults results = silmpc::run_study(cfg, parse_scenarios(scenario), jobs);
    silmpc::write_outputs(results, cfg, out_dir);
    std::cout << silmpc::summary_csv(results, cfg);
    for (const auto& [id, r] : results.scenarios)
        if (r.failsafe_count > 0)
            std::cerr << silmpc::to_string(id) << ": " << r.failsafe_count << " failsafe steps\n";
    return 0;
}

int cmd_metrics(const std::string& log_path, const std::string& config_path) {
    const silmpc::StudyConfig cfg = config_or_default(config_path);
    const silmpc::StepLog log = silmpc::read_log_csv(std::filesystem::path(log_path));
    silmpc::CalendarClock clock;
    clock.year = cfg.harness.study_year;
    clock.start_weekday = cfg.harness.study_start_weekday;
    clock.ts = cfg.building.ts;
    const silmpc::MetricSummary s = silmpc::summarize(log, clock, cfg.building, cfg.ocp.theta_ref);
    std::printf("steps,%zu\nwmare_K,%.17g\nwmre_K,%.17g\nrmse_K,%.17g\n", log.size(), s.wmare, s.wmre, s.rmse);
    std::printf("month,steps,wmare_K,wmre_K,rmse_K\n");
    for (const auto& m : s.monthly) std::printf("%d,%zu,%.17g,%.17g,%.17g\n", m.month, m.steps, m.wmare, m.wmre, m.rmse);
    return 0;
}

int cmd_gen_data(const std::string& config_path, const std::string& out) {
    const silmpc::StudyConfig cfg = config_or_default(config_path);
    silmpc::StudyConfig gen = cfg;
    gen.harness.data_csv.reset();
    const silmpc::YearData y = silmpc::make_year(gen, silmpc::YearRole::Study);
    silmpc::TimeSeriesFrame f = y.frame;
    const auto n = static_cast<std::size_t>(y.n_steps);
    for (auto* v : {&f.theta_air, &f.p_pv, &f.p_dem, &f.p_server1, &f.p_server2, &f.tod}) v->resize(n);
    f.dow.resize(n);
    silmpc::write_csv(f, std::filesystem::path(out));
    return 0;
}

// Like dump(2), but arrays of scalars stay on one line.
void print_json(std::ostream& out, const nlohmann::json& j, int indent) {
    const std::string pad(static_cast<std::size_t>(indent), ' ');
    const std::string inner(static_cast<std::size_t>(indent + 2), ' ');
    if (j.is_object() && !j.empty()) {
        out << "{\n";
        std::size_t i = 0;
        for (auto it = j.begin(); it != j.end(); ++it, ++i) {
            out << inner << nlohmann::json(it.key()).dump() << ": ";
            print_json(out, it.value(), indent + 2);
            out << (i + 1 < j.size() ? ",\n" : "\n");
        }
        out << pad << '}';
    } else if (j.is_array() && !j.empty() && j.front().is_structured()) {
        out << "[\n";
        for (std::size_t i = 0; i < j.size(); ++i) {
            out << inner;
            print_json(out, j[i], indent + 2);
            out << (i + 1 < j.size() ? ",\n" : "\n");
        }
        out << pad << ']';
    } else if (j.is_array()) {
        out << '[';
        for (std::size_t i = 0; i < j.size(); ++i) out << (i ? ", " : "") << j[i].dump();
        out << ']';
    } else {
        out << j.dump();
    }
}

int cmd_config(const std::string& config_path) {
    print_json(std::cout, silmpc::to_json(config_or_default(config_path)), 0);
    std::cout << '\n';
    return 0;
}

int cmd_solve_qp(const std::string& path, double eps, bool polish) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    silmpc::QpSettings settings;
    settings.eps_abs = settings.eps_rel = eps;
    settings.polish = polish;
    const silmpc::QpResult r = silmpc::solve_qp(silmpc::read_qp(in), settings);
    std::printf("status,%s\nobjective,%.17g\niterations,%d\npolished,%d\n", silmpc::to_string(r.status).c_str(),
                r.objective, r.iterations, r.polished ? 1 : 0);
    std::printf("primal_residual,%.3g\ndual_residual,%.3g\n", r.residuals.primal, r.residuals.dual);
    for (Eigen::Index i = 0; i < r.x.size(); ++i) std::printf("x%ld,%.17g\n", static_cast<long>(i), r.x[i]);
    return r.status == silmpc::QpStatus::Optimal ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Software-in-the-loop study of a building MPC with learned residual compensation"};
    app.require_subcommand(1);

    std::string scenario = "all", config_path, out_dir = "out", data, log_path, csv_out;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> year_steps;
    int jobs = 1;
    bool save_models = false;

    auto* run = app.add_subcommand("run", "simulate scenarios and write logs, tables and charts");
    run->add_option("--scenario", scenario, "S0..S5, a comma list, or all")->capture_default_str();
    run->add_option("--config", config_path, "study config (JSON, comments allowed)");
    run->add_option("--out", out_dir, "output directory")->capture_default_str();
    run->add_option("--seed", seed, "master seed");
    run->add_option("--year-steps", year_steps, "steps per simulated year (0 = full year)");
    run->add_option("--data", data, "study-year disturbance CSV");
    run->add_option("--jobs", jobs, "scenarios run in parallel")->check(CLI::PositiveNumber)->capture_default_str();
    run->add_flag("--save-models", save_models, "write the final estimator of each scenario as JSON");

    auto* metrics = app.add_subcommand("metrics", "recompute metrics from a step log");
    metrics->add_option("--log", log_path, "log CSV")->required();
    metrics->add_option("--config", config_path, "study config for weights and calendar");

    auto* gen = app.add_subcommand("gen-data", "write the generated study-year disturbances as CSV");
    gen->add_option("--config", config_path, "study config");
    gen->add_option("--out", csv_out, "output CSV")->required();

    auto* show = app.add_subcommand("config", "print the effective configuration with every key");
    show->add_option("--config", config_path, "study config to merge over the defaults");

    auto* qp = app.add_subcommand("solve-qp", "solve a QP file (docs/qp_format.md) and print the solution");
    std::string qp_path;
    double eps = 1e-6;
    bool no_polish = false;
    qp->add_option("file", qp_path, "QP file")->required();
    qp->add_option("--eps", eps, "absolute and relative tolerance")->capture_default_str();
    qp->add_flag("--no-polish", no_polish, "skip the active-set refinement");

    CLI11_PARSE(app, argc, argv);
    try {
        if (run->parsed()) return cmd_run(scenario, config_path, out_dir, seed, year_steps, data, jobs, save_models);
        if (metrics->parsed()) return cmd_metrics(log_path, config_path);
        if (gen->parsed()) return cmd_gen_data(config_path, csv_out);
        if (show->parsed()) return cmd_config(config_path);
        if (qp->parsed()) return cmd_solve_qp(qp_path, eps, !no_polish);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
