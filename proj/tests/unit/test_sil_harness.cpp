#include <algorithm>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "silmpc/errors.hpp"
#include "silmpc/sil_harness.hpp"

using namespace silmpc;

namespace {

// Two-hour steps keep a month at 372 steps; the run covers January and the
// first days of February.
StudyConfig small_study() {
    StudyConfig cfg = study_config_from_json(nlohmann::json{
        {"building", {{"ts", 2.0}}},
        {"ocp", {{"np", 6}}},
        {"estimator", {{"gbt", {{"n_trees", 40}}}}},
        {"harness", {{"year_steps", 31 * 12 + 60}, {"min_training_rows", 24}}},
    });
    return cfg;
}

std::string log_text(const StepLog& log) {
    std::ostringstream s;
    write_log_csv(log, s);
    return s.str();
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class SmallStudy : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        cfg_ = new StudyConfig(small_study());
        results_ = new StudyResults(run_study(*cfg_, {kAllScenarios.begin(), kAllScenarios.end()}));
    }
    static void TearDownTestSuite() {
        delete results_;
        delete cfg_;
    }
    static const ScenarioResult& get(ScenarioId id) { return results_->scenarios.at(id); }

    static StudyConfig* cfg_;
    static StudyResults* results_;
};

StudyConfig* SmallStudy::cfg_ = nullptr;
StudyResults* SmallStudy::results_ = nullptr;

}  // namespace

TEST(ScenarioSpec, Table) {
    EXPECT_EQ(ScenarioSpec::make(ScenarioId::S0).source, EstimatorSource::None);
    const ScenarioSpec s3 = ScenarioSpec::make(ScenarioId::S3, 6);
    EXPECT_EQ(s3.cadence, RetrainCadence::Monthly);
    EXPECT_TRUE(s3.use_prior);
    EXPECT_EQ(s3.window_months, 6);
    EXPECT_FALSE(ScenarioSpec::make(ScenarioId::S2).window_months.has_value());
    EXPECT_TRUE(ScenarioSpec::make(ScenarioId::S4).needs_prior_year());
    EXPECT_TRUE(ScenarioSpec::make(ScenarioId::S5).needs_s0());
    EXPECT_FALSE(ScenarioSpec::make(ScenarioId::S1).needs_prior_year());
}

TEST(ScenarioSpec, Names) {
    for (ScenarioId id : kAllScenarios) EXPECT_EQ(scenario_from_string(to_string(id)), id);
    EXPECT_THROW(scenario_from_string("S6"), std::invalid_argument);
}

TEST(MakeYear, PreYearPrecedesStudyYear) {
    const StudyConfig cfg = small_study();
    const YearData pre = make_year(cfg, YearRole::Pre);
    const YearData study = make_year(cfg, YearRole::Study);
    EXPECT_EQ(pre.clock.year, 2018);
    EXPECT_EQ(pre.step_offset, -pre.clock.steps_per_year());
    EXPECT_EQ(study.step_offset, 0);
    EXPECT_EQ((pre.clock.start_weekday + 365) % 7, study.clock.start_weekday);
    EXPECT_GE(study.frame.length(), study.n_steps + cfg.ocp.np);
    EXPECT_NE(pre.frame.theta_air, study.frame.theta_air);
    EXPECT_NE(pre.twin.seed, study.twin.seed);
}

TEST(MakeYear, CsvMustStartOnJanuaryFirst) {
    StudyConfig cfg = small_study();
    const auto path = std::filesystem::temp_directory_path() / "silmpc_late_start.csv";
    {
        std::ofstream out(path);
        out << "timestamp,theta_air_C,p_pv_kW,p_dem_kW,p_server1_kW,p_server2_kW\n"
               "2019-01-02T00:00:00,1,0,-100,10,10\n";
    }
    cfg.harness.data_csv = path;
    EXPECT_THROW(make_year(cfg, YearRole::Study), ParameterError);
    std::filesystem::remove(path);
}

TEST(RunScenario, MissingPrerequisiteIsDependencyError) {
    const StudyConfig cfg = small_study();
    const YearData study = make_year(cfg, YearRole::Study);
    for (ScenarioId id : {ScenarioId::S2, ScenarioId::S3, ScenarioId::S4, ScenarioId::S5})
        EXPECT_THROW(run_scenario(ScenarioSpec::make(id), cfg, study), DependencyError) << to_string(id);
}

TEST_F(SmallStudy, EveryScenarioLogsEveryStep) {
    ASSERT_EQ(results_->scenarios.size(), 6u);
    ASSERT_TRUE(results_->pre_year.has_value());
    for (const auto& [id, r] : results_->scenarios) {
        ASSERT_EQ(r.log.size(), static_cast<std::size_t>(cfg_->harness.year_steps)) << to_string(id);
        for (std::size_t i = 0; i < r.log.size(); ++i) ASSERT_EQ(r.log[i].k, static_cast<std::int64_t>(i));
        EXPECT_EQ(r.failsafe_count, 0u);
        EXPECT_EQ(r.label, to_string(id));
    }
    EXPECT_EQ(results_->pre_year->label, "pre_S0");
}

TEST_F(SmallStudy, ExactTwinTargetIsTrueResidual) {
    for (const auto& [id, r] : results_->scenarios)
        for (const StepRecord& s : r.log)
            for (int i = 0; i < kNumZones; ++i)
                ASSERT_NEAR(s.target[static_cast<std::size_t>(i)], s.eps_true[static_cast<std::size_t>(i)], 1e-9)
                    << to_string(id) << " step " << s.k;
}

TEST_F(SmallStudy, S0NeverCompensates) {
    const ScenarioResult& s0 = get(ScenarioId::S0);
    EXPECT_TRUE(s0.retrain_steps.empty());
    EXPECT_FALSE(s0.final_estimator.has_value());
    for (const StepRecord& s : s0.log)
        for (double e : s.eps_hat) ASSERT_EQ(e, 0.0);
}

TEST_F(SmallStudy, S1LearnsFromFebruary) {
    const ScenarioResult& s1 = get(ScenarioId::S1);
    const std::int64_t feb = month_start_step(s1.clock, 1);
    ASSERT_EQ(s1.retrain_steps, std::vector<std::int64_t>{feb});
    bool compensated = false;
    for (const StepRecord& s : s1.log) {
        for (double e : s.eps_hat) {
            if (s.k < feb) ASSERT_EQ(e, 0.0) << "step " << s.k;
            compensated = compensated || e != 0.0;
        }
    }
    EXPECT_TRUE(compensated);
    // January is identical to S0: same seeds, no compensation.
    EXPECT_EQ(log_text({get(ScenarioId::S0).log.begin(), get(ScenarioId::S0).log.begin() + feb}),
              log_text({s1.log.begin(), s1.log.begin() + feb}));
    ASSERT_EQ(s1.metrics.monthly.size(), 2u);
    EXPECT_LT(s1.metrics.monthly[1].wmare, s1.metrics.monthly[0].wmare);
}

TEST_F(SmallStudy, PriorScenariosCompensateFromTheStart) {
    for (ScenarioId id : {ScenarioId::S2, ScenarioId::S3, ScenarioId::S4, ScenarioId::S5}) {
        const ScenarioResult& r = get(id);
        ASSERT_FALSE(r.retrain_steps.empty()) << to_string(id);
        EXPECT_EQ(r.retrain_steps.front(), 0) << to_string(id);
        // Rows 0 and 1 lack lagged ambient data and are never predicted.
        bool any = false;
        for (double e : r.log[2].eps_hat) any = any || e != 0.0;
        EXPECT_TRUE(any) << to_string(id);
        EXPECT_LT(r.metrics.wmare, get(ScenarioId::S0).metrics.wmare) << to_string(id);
    }
    EXPECT_EQ(get(ScenarioId::S4).retrain_steps.size(), 1u);
    EXPECT_EQ(get(ScenarioId::S2).retrain_steps.size(), 2u);
}

TEST_F(SmallStudy, MetricsRecomputedFromCsvMatch) {
    for (const auto& [id, r] : results_->scenarios) {
        std::istringstream in(log_text(r.log));
        const StepLog back = read_log_csv(in);
        EXPECT_EQ(log_text(back), log_text(r.log));
        const MetricSummary m = summarize(back, r.clock, cfg_->building, cfg_->ocp.theta_ref);
        EXPECT_EQ(m.wmare, r.metrics.wmare);
        EXPECT_EQ(m.wmre, r.metrics.wmre);
        EXPECT_EQ(m.rmse, r.metrics.rmse);
    }
}

TEST_F(SmallStudy, SummaryAndCharts) {
    const std::string summary = summary_csv(*results_, *cfg_);
    EXPECT_EQ(summary.substr(0, summary.find('\n')), "metric,year,S0,S1,S2,S3,S4,S5");
    EXPECT_NE(summary.find("\nWMARE_1e-3K,2019,"), std::string::npos);
    EXPECT_NE(summary.find("\nRMSE_K,2019,"), std::string::npos);

    const std::string monthly = monthly_csv(*results_);
    EXPECT_EQ(std::count(monthly.begin(), monthly.end(), '\n'), 1 + 6 * 2);

    for (const char* m : {"wmare", "wmre", "rmse"}) {
        const std::string svg = monthly_svg(*results_, m);
        EXPECT_EQ(svg.rfind("<svg", 0), 0u);
        std::size_t series = 0;
        for (std::size_t pos = 0; (pos = svg.find("stroke-width=\"2\" stroke=", pos)) != std::string::npos; ++pos)
            ++series;
        EXPECT_EQ(series, 6u) << m;
    }
    EXPECT_THROW(monthly_svg(*results_, "mae"), std::invalid_argument);
}

TEST_F(SmallStudy, RerunIsByteIdentical) {
    const auto a = std::filesystem::temp_directory_path() / "silmpc_rerun_a";
    const auto b = std::filesystem::temp_directory_path() / "silmpc_rerun_b";
    std::filesystem::remove_all(a);
    std::filesystem::remove_all(b);
    write_outputs(*results_, *cfg_, a);
    const StudyResults again = run_study(*cfg_, {kAllScenarios.begin(), kAllScenarios.end()});
    write_outputs(again, *cfg_, b);
    std::size_t compared = 0;
    for (const auto& entry : std::filesystem::directory_iterator(a)) {
        const std::string name = entry.path().filename().string();
        if (name == "timing.json") continue;
        EXPECT_EQ(slurp(entry.path()), slurp(b / name)) << name;
        ++compared;
    }
    EXPECT_EQ(compared, 7u + 2u + 3u);  // logs, tables, charts
    std::filesystem::remove_all(a);
    std::filesystem::remove_all(b);
}

TEST_F(SmallStudy, SeedChangesTheRun) {
    StudyConfig other = *cfg_;
    other.harness.seed += 1;
    other.harness.year_steps = 50;
    StudyConfig same = *cfg_;
    same.harness.year_steps = 50;
    const StudyResults a = run_study(same, {ScenarioId::S0});
    const StudyResults b = run_study(other, {ScenarioId::S0});
    EXPECT_NE(log_text(a.scenarios.at(ScenarioId::S0).log), log_text(b.scenarios.at(ScenarioId::S0).log));
}

TEST(LogCsv, Errors) {
    std::istringstream empty("");
    EXPECT_THROW(read_log_csv(empty), ParseError);
    std::istringstream header("k,theta_1\n");
    EXPECT_THROW(read_log_csv(header), ParseError);

    StepRecord r;
    r.k = 3;
    std::ostringstream good;
    write_log_csv(StepLog{r}, good);
    const std::string text = good.str();
    const std::string head = text.substr(0, text.find('\n') + 1);
    std::istringstream short_row(head + "3,1,2\n");
    try {
        read_log_csv(short_row);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos) << e.what();
    }
    std::string bad = text;
    bad.replace(bad.find('\n') + 1, 1, "x");
    std::istringstream bad_number(bad);
    EXPECT_THROW(read_log_csv(bad_number), ParseError);
}
