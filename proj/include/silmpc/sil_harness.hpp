#pragma once

// Closed-loop study: one pre-year plus the study year, scenarios S0..S5 with
// monthly retraining, metrics and output files.
//
// Global steps: row k of the study year is step k, row k of the pre-year is
// step k - steps_per_year. Training rows of both years share this axis so
// that windows reach back across the year boundary.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "silmpc/config.hpp"
#include "silmpc/metrics.hpp"
#include "silmpc/residual_estimator.hpp"

namespace silmpc {

enum class ScenarioId { S0, S1, S2, S3, S4, S5 };
inline constexpr std::array<ScenarioId, 6> kAllScenarios{ScenarioId::S0, ScenarioId::S1, ScenarioId::S2,
                                                         ScenarioId::S3, ScenarioId::S4, ScenarioId::S5};

std::string to_string(ScenarioId id);
// Throws std::invalid_argument.
ScenarioId scenario_from_string(const std::string& s);

enum class RetrainCadence { None, Monthly };
enum class EstimatorSource { None, InLoop, PretrainedPrior, OracleFromS0 };

struct ScenarioSpec {
    ScenarioId id = ScenarioId::S0;
    RetrainCadence cadence = RetrainCadence::None;
    bool use_prior = false;
    std::optional<int> window_months;
    EstimatorSource source = EstimatorSource::None;

    static ScenarioSpec make(ScenarioId id, int window_months = 12);
    bool needs_prior_year() const { return use_prior || source == EstimatorSource::PretrainedPrior; }
    bool needs_s0() const { return source == EstimatorSource::OracleFromS0; }
};

// One simulated year: calendar, disturbance frame with Np rows of lookahead
// beyond n_steps, and the per-year seeded twin.
struct YearData {
    CalendarClock clock;
    std::int64_t n_steps = 0;
    std::int64_t step_offset = 0;  // global step of row 0
    TimeSeriesFrame frame;
    ExogenousModel twin;
    MeasurementConfig measurement;
};

enum class YearRole { Pre, Study };

// Generated unless role is Study and harness.data_csv is set. CSV data must
// start on Jan 1 00:00 at the building sample time; it is padded with its
// last row to cover the horizon past the final step.
YearData make_year(const StudyConfig& cfg, YearRole role);

struct ScenarioResult {
    ScenarioId id = ScenarioId::S0;
    std::string label;  // "S0".."S5", or "pre_S0" for the pre-year run
    CalendarClock clock;
    StepLog log;
    ResidualDataset building{ZoneGroup::Building};
    ResidualDataset server{ZoneGroup::Server};
    MetricSummary metrics;
    std::string fingerprint;
    std::size_t failsafe_count = 0;
    std::vector<std::int64_t> retrain_steps;  // steps at which a new estimator took over
    std::optional<ResidualEstimator> final_estimator;
    double wall_seconds = 0.0;  // not part of any deterministic output
};

// Runs the prior-data and S5 prerequisites must be supplied from.
struct Prerequisites {
    const ScenarioResult* pre_year = nullptr;  // S0 over the pre-year
    const ScenarioResult* study_s0 = nullptr;  // S0 over the study year
};

// Throws DependencyError when a required prerequisite is missing.
ScenarioResult run_scenario(const ScenarioSpec& spec, const StudyConfig& cfg, const YearData& year,
                            const Prerequisites& prereq = {});

// S0 over the pre-year, labelled "pre_S0".
ScenarioResult run_pre_year(const StudyConfig& cfg, const YearData& pre);

struct StudyResults {
    std::optional<ScenarioResult> pre_year;
    std::map<ScenarioId, ScenarioResult> scenarios;
};

// Runs the requested scenarios plus whatever they depend on, at most `jobs`
// at a time. Only requested scenarios appear in `scenarios`.
StudyResults run_study(const StudyConfig& cfg, const std::vector<ScenarioId>& requested, int jobs = 1);

// Log CSV: header then one row per step; doubles in shortest round-trip form.
void write_log_csv(const StepLog& log, std::ostream& out);
void write_log_csv(const StepLog& log, const std::filesystem::path& path);
StepLog read_log_csv(std::istream& in);
StepLog read_log_csv(const std::filesystem::path& path);

// Per-scenario logs, summary.csv, monthly.csv, three SVG charts and
// timing.json. Everything except timing.json is deterministic.
void write_outputs(const StudyResults& results, const StudyConfig& cfg, const std::filesystem::path& out_dir);

std::string summary_csv(const StudyResults& results, const StudyConfig& cfg);
std::string monthly_csv(const StudyResults& results);
// metric: "wmare", "wmre" or "rmse".
std::string monthly_svg(const StudyResults& results, const std::string& metric);

}  // namespace silmpc
