#include "silmpc/sil_harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <future>
#include <sstream>

#include "silmpc/errors.hpp"
#include "silmpc/format.hpp"
#include "silmpc/rng.hpp"

namespace silmpc {
namespace {

constexpr std::uint64_t kSaltPre = 1;
constexpr std::uint64_t kSaltStudy = 2;

std::uint64_t year_seed(std::uint64_t master, std::uint64_t module_seed, std::uint64_t salt) {
    return mix_seed(mix_seed(master, module_seed), salt);
}

// Estimator outputs for a contiguous block of frame rows.
class PredictionCache {
public:
    void clear() {
        begin_ = 0;
        rows_.resize(0, kNumZones);
    }
    void fill(const ResidualEstimator& est, const TimeSeriesFrame& frame, std::int64_t begin, std::int64_t end) {
        end = std::min(end, frame.length());
        begin_ = begin;
        rows_.resize(std::max<std::int64_t>(0, end - begin), kNumZones);
        for (std::int64_t k = begin; k < end; ++k) rows_.row(k - begin) = est.predict(frame, k).transpose();
    }
    // Np x 9; zeros when no estimator is active.
    Eigen::MatrixXd horizon(std::int64_t k, int np) const {
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero(np, kNumZones);
        if (rows_.rows() == 0) return out;
        for (int n = 0; n < np; ++n) {
            const std::int64_t r = k + n - begin_;
            if (r < 0 || r >= rows_.rows()) throw std::logic_error("prediction cache does not cover the horizon");
            out.row(n) = rows_.row(r);
        }
        return out;
    }

private:
    std::int64_t begin_ = 0;
    Eigen::MatrixXd rows_ = Eigen::MatrixXd(0, kNumZones);
};

template <std::size_t N>
void copy_to(std::array<double, N>& dst, const Eigen::VectorXd& src, Eigen::Index offset = 0) {
    for (std::size_t i = 0; i < N; ++i) dst[i] = src[offset + static_cast<Eigen::Index>(i)];
}

ScenarioResult simulate(const std::string& label, ScenarioId id, const ScenarioSpec& spec, const StudyConfig& cfg,
                        const YearData& year, const ResidualDataset* prior_b, const ResidualDataset* prior_s,
                        std::optional<ResidualEstimator> fixed) {
    const auto t0 = std::chrono::steady_clock::now();
    const BuildingParameters& params = cfg.building;
    const DiscreteModel model = discretize(params);
    const DiscreteModel plant = plant_model(params, cfg.mismatch);
    const int np = cfg.ocp.np;
    const TimeSeriesFrame& frame = year.frame;
    if (frame.length() < year.n_steps + np) throw DimensionError("year frame shorter than n_steps + Np");

    ScenarioResult res;
    res.id = id;
    res.label = label;
    res.clock = year.clock;
    res.fingerprint = config_fingerprint(cfg);
    res.log.reserve(static_cast<std::size_t>(year.n_steps));

    MpcController controller(params, model, cfg.ocp);
    TwinState state;
    state.thermal.theta = Eigen::VectorXd::Constant(kNumZones, cfg.harness.initial_building_temp);
    state.thermal.theta.tail(kNumServerZones).setConstant(cfg.harness.initial_server_temp);
    state.electrical.e_bat = cfg.harness.initial_e_bat;
    state.k = 0;

    PredictionCache cache;
    std::optional<ResidualEstimator> active = std::move(fixed);
    if (active) {
        cache.fill(*active, frame, 0, frame.length());
        res.retrain_steps.push_back(year.step_offset);
    }

    auto [x_meas, e_meas] = measure(state, year.measurement, 0);
    for (std::int64_t k = 0; k < year.n_steps; ++k) {
        if (spec.cadence == RetrainCadence::Monthly) {
            const std::int64_t month = month_index(year.clock, k);
            if (k == month_start_step(year.clock, month)) {
                const std::int64_t now = year.step_offset + k;
                const ResidualDataset b = assemble_dataset(res.building, prior_b, spec.window_months, now, year.clock);
                const ResidualDataset s = assemble_dataset(res.server, prior_s, spec.window_months, now, year.clock);
                if (b.size() >= cfg.harness.min_training_rows && s.size() >= cfg.harness.min_training_rows) {
                    active = ResidualEstimator::train(cfg.estimator, b, s);
                    res.retrain_steps.push_back(now);
                }
                if (active) cache.fill(*active, frame, k, month_start_step(year.clock, month + 1) + np);
            }
        }

        OcpInputs in;
        in.x0 = x_meas;
        in.e0 = e_meas;
        in.frame = &frame;
        in.k = k;
        in.eps_hat = cache.horizon(k, np);
        const MpcDecision dec = controller.step(in);
        const Eigen::VectorXd eps_hat0 = in.eps_hat.row(0).transpose();

        const TwinState next = twin_step(params, plant, state, dec.thermal, dec.electrical, frame, year.twin);
        auto [x_next, e_next] = measure(next, year.measurement, static_cast<std::uint64_t>(k + 1));
        const Disturbance d = frame.disturbance(k, params.q_other);
        const ThermalState pred = corrected_prediction(model, x_meas, dec.thermal, d, eps_hat0);
        const Eigen::VectorXd target = compute_target(x_next, pred, eps_hat0);

        StepRecord r;
        r.k = k;
        copy_to(r.theta, x_meas.theta);
        r.e_bat = e_meas.e_bat;
        copy_to(r.q_heat, dec.thermal.q_heat);
        copy_to(r.q_cool, dec.thermal.q_cool);
        r.p_grid = dec.electrical.p_grid;
        r.p_chp = dec.electrical.p_chp;
        r.p_bat = dec.electrical.p_bat;
        r.q_rad = dec.electrical.q_rad;
        copy_to(r.eps_true, true_exogenous(year.twin, frame, k));
        copy_to(r.eps_hat, eps_hat0);
        copy_to(r.target, target);
        r.j_comf = dec.solution.breakdown.j_comf;
        r.j_server = dec.solution.breakdown.j_server;
        r.j_mon = dec.solution.breakdown.j_mon;
        r.status = dec.solution.status;
        r.iterations = dec.solution.iterations;
        r.failsafe = dec.failsafe;
        if (dec.failsafe) ++res.failsafe_count;
        res.log.push_back(r);

        if (k >= 2) {
            const std::int64_t g = year.step_offset + k;
            res.building.append(g, extract_features(frame, k, ZoneGroup::Building),
                                target.head(kNumBuildingZones));
            res.server.append(g, extract_features(frame, k, ZoneGroup::Server), target.tail(kNumServerZones));
        }

        state = next;
        x_meas = std::move(x_next);
        e_meas = e_next;
    }

    res.metrics = summarize(res.log, year.clock, params, cfg.ocp.theta_ref);
    res.final_estimator = std::move(active);
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

std::vector<ScenarioResult> run_bounded(std::vector<std::function<ScenarioResult()>> tasks, int jobs) {
    std::vector<ScenarioResult> out;
    out.reserve(tasks.size());
    const std::size_t width = static_cast<std::size_t>(std::max(1, jobs));
    for (std::size_t begin = 0; begin < tasks.size(); begin += width) {
        const std::size_t end = std::min(tasks.size(), begin + width);
        if (end - begin == 1) {
            out.push_back(tasks[begin]());
            continue;
        }
        std::vector<std::future<ScenarioResult>> running;
        for (std::size_t i = begin; i < end; ++i) running.push_back(std::async(std::launch::async, tasks[i]));
        for (auto& f : running) out.push_back(f.get());
    }
    return out;
}

std::string fixed4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::string> log_header() {
    std::vector<std::string> h{"k"};
    auto add = [&](const char* name, int n) {
        for (int i = 1; i <= n; ++i) h.push_back(std::string(name) + "_" + std::to_string(i));
    };
    add("theta", kNumZones);
    h.push_back("e_bat");
    add("q_heat", kNumBuildingZones);
    add("q_cool", kNumZones);
    for (const char* s : {"p_grid", "p_chp", "p_bat", "q_rad"}) h.push_back(s);
    add("eps_true", kNumZones);
    add("eps_hat", kNumZones);
    add("target", kNumZones);
    for (const char* s : {"j_comf", "j_server", "j_mon", "status", "iterations", "failsafe"}) h.push_back(s);
    return h;
}

QpStatus status_from_string(const std::string& s) {
    for (QpStatus st : {QpStatus::Optimal, QpStatus::MaxIterations, QpStatus::Infeasible})
        if (to_string(st) == s) return st;
    throw ParseError("unknown solver status '" + s + "'");
}

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};

}  // namespace

std::string to_string(ScenarioId id) { return "S" + std::to_string(static_cast<int>(id)); }

ScenarioId scenario_from_string(const std::string& s) {
    for (ScenarioId id : kAllScenarios)
        if (to_string(id) == s) return id;
    throw std::invalid_argument("unknown scenario '" + s + "' (expected S0..S5)");
}

ScenarioSpec ScenarioSpec::make(ScenarioId id, int window_months) {
    ScenarioSpec s;
    s.id = id;
    switch (id) {
        case ScenarioId::S0: break;
        case ScenarioId::S1:
            s.cadence = RetrainCadence::Monthly;
            s.source = EstimatorSource::InLoop;
            break;
        case ScenarioId::S2:
            s.cadence = RetrainCadence::Monthly;
            s.source = EstimatorSource::InLoop;
            s.use_prior = true;
            break;
        case ScenarioId::S3:
            s.cadence = RetrainCadence::Monthly;
            s.source = EstimatorSource::InLoop;
            s.use_prior = true;
            s.window_months = window_months;
            break;
        case ScenarioId::S4: s.source = EstimatorSource::PretrainedPrior; break;
        case ScenarioId::S5: s.source = EstimatorSource::OracleFromS0; break;
    }
    return s;
}

YearData make_year(const StudyConfig& cfg, YearRole role) {
    const HarnessConfig& h = cfg.harness;
    const std::uint64_t salt = role == YearRole::Pre ? kSaltPre : kSaltStudy;
    YearData y;
    y.clock.ts = cfg.building.ts;
    y.clock.year = role == YearRole::Pre ? h.study_year - 1 : h.study_year;
    y.clock.start_weekday =
        role == YearRole::Pre ? ((h.study_start_weekday - kDaysPerYear % 7) % 7 + 7) % 7 : h.study_start_weekday;
    const int np = cfg.ocp.np;

    if (role == YearRole::Study && h.data_csv) {
        TimeSeriesFrame f = load_csv(*h.data_csv);
        if (f.start_step != 0) throw ParameterError(h.data_csv->string() + ": data must start on Jan 1 00:00");
        if (std::abs(f.clock.ts - cfg.building.ts) > 1e-9)
            throw ParameterError(h.data_csv->string() + ": sample time differs from the building's");
        y.clock = f.clock;
        y.n_steps = h.year_steps > 0 ? std::min(h.year_steps, f.length()) : f.length();
        while (f.length() < y.n_steps + np) {
            const std::size_t last = f.size() - 1;
            const std::int64_t k = f.length();
            f.theta_air.push_back(f.theta_air[last]);
            f.p_pv.push_back(f.p_pv[last]);
            f.p_dem.push_back(f.p_dem[last]);
            f.p_server1.push_back(f.p_server1[last]);
            f.p_server2.push_back(f.p_server2[last]);
            f.tod.push_back(tod(f.clock, f.start_step + k));
            f.dow.push_back(dow(f.clock, f.start_step + k));
        }
        y.frame = std::move(f);
    } else {
        y.n_steps = h.year_steps > 0 ? h.year_steps : y.clock.steps_per_year();
        GeneratorConfig g = cfg.generator;
        g.seed = year_seed(h.seed, g.seed, salt);
        y.frame = generate_span(g, y.clock, y.n_steps + np);
    }
    y.step_offset = role == YearRole::Pre ? -y.clock.steps_per_year() : 0;

    y.twin = cfg.twin;
    y.twin.seed = year_seed(h.seed, cfg.twin.seed, salt);
    if (cfg.calibrate_twin_noise) y.twin = calibrate_noise(y.twin, y.frame);
    y.measurement = cfg.measurement;
    y.measurement.seed = year_seed(h.seed, cfg.measurement.seed, salt);
    return y;
}

ScenarioResult run_scenario(const ScenarioSpec& spec, const StudyConfig& cfg, const YearData& year,
                            const Prerequisites& prereq) {
    if (spec.needs_prior_year() && prereq.pre_year == nullptr)
        throw DependencyError(to_string(spec.id) + " needs the pre-year run");
    if (spec.needs_s0() && prereq.study_s0 == nullptr)
        throw DependencyError(to_string(spec.id) + " needs the completed S0 run of the study year");

    std::optional<ResidualEstimator> fixed;
    if (spec.source == EstimatorSource::PretrainedPrior)
        fixed = ResidualEstimator::train(cfg.estimator, prereq.pre_year->building, prereq.pre_year->server);
    if (spec.source == EstimatorSource::OracleFromS0)
        fixed = ResidualEstimator::train(cfg.estimator, prereq.study_s0->building, prereq.study_s0->server);

    const ResidualDataset* pb = spec.use_prior ? &prereq.pre_year->building : nullptr;
    const ResidualDataset* ps = spec.use_prior ? &prereq.pre_year->server : nullptr;
    return simulate(to_string(spec.id), spec.id, spec, cfg, year, pb, ps, std::move(fixed));
}

ScenarioResult run_pre_year(const StudyConfig& cfg, const YearData& pre) {
    return simulate("pre_S0", ScenarioId::S0, ScenarioSpec::make(ScenarioId::S0), cfg, pre, nullptr, nullptr,
                    std::nullopt);
}

StudyResults run_study(const StudyConfig& cfg, const std::vector<ScenarioId>& requested, int jobs) {
    cfg.validate();
    const int window = cfg.harness.window_months;
    bool need_pre = false, need_s0 = false;
    for (ScenarioId id : requested) {
        const ScenarioSpec s = ScenarioSpec::make(id, window);
        need_pre = need_pre || s.needs_prior_year();
        need_s0 = need_s0 || s.needs_s0() || id == ScenarioId::S0;
    }
    auto requested_has = [&](ScenarioId id) {
        return std::find(requested.begin(), requested.end(), id) != requested.end();
    };

    const YearData study = make_year(cfg, YearRole::Study);
    std::optional<YearData> pre;
    if (need_pre) pre = make_year(cfg, YearRole::Pre);

    // Phase 1: runs without prerequisites.
    std::vector<std::function<ScenarioResult()>> first;
    if (need_pre) first.emplace_back([&] { return run_pre_year(cfg, *pre); });
    if (need_s0) first.emplace_back([&] { return run_scenario(ScenarioSpec::make(ScenarioId::S0), cfg, study); });
    if (requested_has(ScenarioId::S1))
        first.emplace_back([&] { return run_scenario(ScenarioSpec::make(ScenarioId::S1), cfg, study); });

    StudyResults out;
    std::optional<ScenarioResult> s0;
    for (ScenarioResult& r : run_bounded(std::move(first), jobs)) {
        if (r.label == "pre_S0")
            out.pre_year = std::move(r);
        else if (r.id == ScenarioId::S0)
            s0 = std::move(r);
        else
            out.scenarios.emplace(r.id, std::move(r));
    }

    Prerequisites prereq;
    prereq.pre_year = out.pre_year ? &*out.pre_year : nullptr;
    prereq.study_s0 = s0 ? &*s0 : nullptr;
    std::vector<std::function<ScenarioResult()>> second;
    for (ScenarioId id : {ScenarioId::S2, ScenarioId::S3, ScenarioId::S4, ScenarioId::S5}) {
        if (!requested_has(id)) continue;
        second.emplace_back([&, id] { return run_scenario(ScenarioSpec::make(id, window), cfg, study, prereq); });
    }
    for (ScenarioResult& r : run_bounded(std::move(second), jobs)) out.scenarios.emplace(r.id, std::move(r));
    if (s0 && requested_has(ScenarioId::S0)) out.scenarios.emplace(ScenarioId::S0, std::move(*s0));
    return out;
}

void write_log_csv(const StepLog& log, std::ostream& out) {
    const auto header = log_header();
    std::string line;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) line += ',';
        line += header[i];
    }
    out << line << '\n';
    for (const StepRecord& r : log) {
        line = std::to_string(r.k);
        auto put = [&](double v) {
            line += ',';
            append_double(line, v);
        };
        for (double v : r.theta) put(v);
        put(r.e_bat);
        for (double v : r.q_heat) put(v);
        for (double v : r.q_cool) put(v);
        for (double v : {r.p_grid, r.p_chp, r.p_bat, r.q_rad}) put(v);
        for (double v : r.eps_true) put(v);
        for (double v : r.eps_hat) put(v);
        for (double v : r.target) put(v);
        for (double v : {r.j_comf, r.j_server, r.j_mon}) put(v);
        line += ',' + to_string(r.status) + ',' + std::to_string(r.iterations) + ',' + (r.failsafe ? "1" : "0");
        out << line << '\n';
    }
}

void write_log_csv(const StepLog& log, const std::filesystem::path& path) {
    std::ostringstream s;
    write_log_csv(log, s);
    write_text(path, s.str());
}

StepLog read_log_csv(std::istream& in) {
    const auto header = log_header();
    std::string line;
    if (!std::getline(in, line)) throw ParseError("log: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    {
        std::string expected;
        for (std::size_t i = 0; i < header.size(); ++i) expected += (i ? "," : "") + header[i];
        if (line != expected) throw ParseError("log: unexpected header");
    }
    StepLog log;
    std::size_t row = 0;  // data rows, header excluded
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != header.size())
            throw ParseError("log row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                             " fields, got " + std::to_string(f.size()));
        std::size_t c = 0;
        auto num = [&]() {
            double v = 0.0;
            if (!parse_double(f[c], v))
                throw ParseError("log row " + std::to_string(row) + ", column " + header[c] + ": bad number");
            ++c;
            return v;
        };
        auto integer = [&]() {
            const double v = num();
            if (v != std::floor(v))
                throw ParseError("log row " + std::to_string(row) + ", column " + header[c - 1] + ": not an integer");
            return static_cast<std::int64_t>(v);
        };
        StepRecord r;
        r.k = integer();
        for (double& v : r.theta) v = num();
        r.e_bat = num();
        for (double& v : r.q_heat) v = num();
        for (double& v : r.q_cool) v = num();
        r.p_grid = num();
        r.p_chp = num();
        r.p_bat = num();
        r.q_rad = num();
        for (double& v : r.eps_true) v = num();
        for (double& v : r.eps_hat) v = num();
        for (double& v : r.target) v = num();
        r.j_comf = num();
        r.j_server = num();
        r.j_mon = num();
        try {
            r.status = status_from_string(f[c++]);
        } catch (const ParseError& e) {
            throw ParseError("log row " + std::to_string(row) + ": " + e.what());
        }
        r.iterations = static_cast<int>(integer());
        r.failsafe = integer() != 0;
        log.push_back(r);
    }
    return log;
}

StepLog read_log_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    return read_log_csv(in);
}

std::string summary_csv(const StudyResults& results, const StudyConfig& cfg) {
    std::string out = "metric,year";
    for (const auto& [id, _] : results.scenarios) out += "," + to_string(id);
    out += '\n';
    const std::string year = std::to_string(cfg.harness.study_year);
    out += "WMARE_1e-3K," + year;
    for (const auto& [_, r] : results.scenarios) out += "," + fixed4(1e3 * r.metrics.wmare);
    out += "\nRMSE_K," + year;
    for (const auto& [_, r] : results.scenarios) out += "," + fixed4(r.metrics.rmse);
    out += '\n';
    return out;
}

std::string monthly_csv(const StudyResults& results) {
    std::string out = "scenario,month,steps,wmare,wmre,rmse\n";
    for (const auto& [id, r] : results.scenarios) {
        for (const MonthlyMetrics& m : r.metrics.monthly) {
            out += to_string(id) + ',' + std::to_string(m.month) + ',' + std::to_string(m.steps) + ',';
            append_double(out, m.wmare);
            out += ',';
            append_double(out, m.wmre);
            out += ',';
            append_double(out, m.rmse);
            out += '\n';
        }
    }
    return out;
}

std::string monthly_svg(const StudyResults& results, const std::string& metric) {
    std::function<double(const MonthlyMetrics&)> pick;
    std::string title;
    if (metric == "wmare") {
        pick = [](const MonthlyMetrics& m) { return 1e3 * m.wmare; };
        title = "Monthly WMARE [1e-3 K]";
    } else if (metric == "wmre") {
        pick = [](const MonthlyMetrics& m) { return 1e3 * m.wmre; };
        title = "Monthly WMRE [1e-3 K]";
    } else if (metric == "rmse") {
        pick = [](const MonthlyMetrics& m) { return m.rmse; };
        title = "Monthly tracking RMSE [K]";
    } else {
        throw std::invalid_argument("unknown chart metric '" + metric + "'");
    }

    double lo = 0.0, hi = 0.0;
    for (const auto& [_, r] : results.scenarios)
        for (const MonthlyMetrics& m : r.metrics.monthly) {
            lo = std::min(lo, pick(m));
            hi = std::max(hi, pick(m));
        }
    if (hi - lo < 1e-12) hi = lo + 1.0;

    const double w = 720, h = 400, left = 70, right = 110, top = 40, bottom = 50;
    const double pw = w - left - right, ph = h - top - bottom;
    auto px = [&](int month) { return left + pw * (month - 1) / 11.0; };
    auto py = [&](double v) { return top + ph * (hi - v) / (hi - lo); };
    char buf[256];
    std::string s;
    std::snprintf(buf, sizeof(buf),
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" font-family=\"sans-serif\" "
                  "font-size=\"12\">\n",
                  w, h);
    s += buf;
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof(buf), "<text x=\"%.1f\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">%s</text>\n",
                  left + pw / 2, title.c_str());
    s += buf;
    std::snprintf(buf, sizeof(buf),
                  "<polyline fill=\"none\" stroke=\"black\" points=\"%.1f,%.1f %.1f,%.1f %.1f,%.1f\"/>\n", left, top,
                  left, top + ph, left + pw, top + ph);
    s += buf;
    for (int t = 0; t <= 4; ++t) {
        const double v = lo + (hi - lo) * t / 4.0;
        std::snprintf(buf, sizeof(buf),
                      "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ddd\"/>"
                      "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.3g</text>\n",
                      left, py(v), left + pw, py(v), left - 6, py(v) + 4, v);
        s += buf;
    }
    for (int m = 1; m <= 12; ++m) {
        std::snprintf(buf, sizeof(buf), "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%d</text>\n", px(m),
                      top + ph + 18, m);
        s += buf;
    }
    std::snprintf(buf, sizeof(buf), "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">month</text>\n",
                  left + pw / 2, h - 10);
    s += buf;

    int series = 0;
    for (const auto& [id, r] : results.scenarios) {
        const char* color = kPalette[static_cast<int>(id) % 6];
        s += "<polyline fill=\"none\" stroke-width=\"2\" stroke=\"";
        s += color;
        s += "\" points=\"";
        bool first = true;
        for (const MonthlyMetrics& m : r.metrics.monthly) {
            std::snprintf(buf, sizeof(buf), "%s%.2f,%.2f", first ? "" : " ", px(m.month), py(pick(m)));
            s += buf;
            first = false;
        }
        s += "\"/>\n";
        const double ly = top + 16.0 * series;
        std::snprintf(buf, sizeof(buf),
                      "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"%s\" stroke-width=\"2\"/>"
                      "<text x=\"%.1f\" y=\"%.1f\">%s</text>\n",
                      left + pw + 12, ly, left + pw + 36, ly, color, left + pw + 42, ly + 4, to_string(id).c_str());
        s += buf;
        ++series;
    }
    s += "</svg>\n";
    return s;
}

void write_outputs(const StudyResults& results, const StudyConfig& cfg, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());

    if (results.pre_year) write_log_csv(results.pre_year->log, out_dir / "pre_S0_log.csv");
    for (const auto& [id, r] : results.scenarios) {
        write_log_csv(r.log, out_dir / (to_string(id) + "_log.csv"));
        if (cfg.harness.save_models && r.final_estimator)
            r.final_estimator->save(out_dir / (to_string(id) + "_estimator.json"));
    }
    if (results.scenarios.empty()) return;
    write_text(out_dir / "summary.csv", summary_csv(results, cfg));
    write_text(out_dir / "monthly.csv", monthly_csv(results));
    for (const char* m : {"wmare", "wmre", "rmse"})
        write_text(out_dir / (std::string("monthly_") + m + ".svg"), monthly_svg(results, m));

    nlohmann::json timing = nlohmann::json::object();
    auto entry = [](const ScenarioResult& r) {
        double iters = 0.0;
        for (const StepRecord& s : r.log) iters += s.iterations;
        return nlohmann::json{{"wall_seconds", r.wall_seconds},
                              {"steps", r.log.size()},
                              {"mean_solver_iterations", r.log.empty() ? 0.0 : iters / r.log.size()},
                              {"failsafe_steps", r.failsafe_count},
                              {"retrain_steps", r.retrain_steps},
                              {"config_fingerprint", r.fingerprint}};
    };
    if (results.pre_year) timing["pre_S0"] = entry(*results.pre_year);
    for (const auto& [id, r] : results.scenarios) timing[to_string(id)] = entry(r);
    write_text(out_dir / "timing.json", timing.dump(2) + "\n");
}

}  // namespace silmpc
