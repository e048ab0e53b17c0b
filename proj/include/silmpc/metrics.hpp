#pragma once

// Per-step closed-loop log records and the residual / tracking metrics
// computed from them.

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "silmpc/building_model.hpp"
#include "silmpc/qp_solver.hpp"
#include "silmpc/scenario_data.hpp"

namespace silmpc {

struct StepRecord {
    std::int64_t k = 0;  // row of the simulated year
    std::array<double, kNumZones> theta{};  // state seen by the controller at k
    double e_bat = 0.0;
    std::array<double, kNumBuildingZones> q_heat{};
    std::array<double, kNumZones> q_cool{};
    double p_grid = 0.0;
    double p_chp = 0.0;
    double p_bat = 0.0;
    double q_rad = 0.0;
    std::array<double, kNumZones> eps_true{};
    std::array<double, kNumZones> eps_hat{};
    std::array<double, kNumZones> target{};
    double j_comf = 0.0;
    double j_server = 0.0;
    double j_mon = 0.0;
    QpStatus status = QpStatus::Optimal;
    int iterations = 0;
    bool failsafe = false;

    // target - eps_hat, the error left after compensation.
    std::array<double, kNumZones> residual() const;
};

using StepLog = std::vector<StepRecord>;

// wth_i = C_th,i / sum_j C_th,j over all nine zones.
Eigen::VectorXd metric_weights(const BuildingParameters& params);

double ware(const Eigen::VectorXd& eps, const Eigen::VectorXd& wth);

// Throw std::invalid_argument on an empty log.
double wmare(const StepLog& log, const Eigen::VectorXd& wth);
double wmre(const StepLog& log, const Eigen::VectorXd& wth);
double rmse_tracking(const StepLog& log, const Eigen::VectorXd& wthb, double theta_ref = 22.0);

struct MonthlyMetrics {
    int month = 0;  // 1..12
    std::size_t steps = 0;
    double wmare = 0.0;
    double wmre = 0.0;
    double rmse = 0.0;
};

// One entry per calendar month with at least one logged step.
std::vector<MonthlyMetrics> monthly_metrics(const StepLog& log, const CalendarClock& clock, const Eigen::VectorXd& wth,
                                            const Eigen::VectorXd& wthb, double theta_ref = 22.0);

struct MetricSummary {
    double wmare = 0.0;
    double wmre = 0.0;
    double rmse = 0.0;
    std::vector<MonthlyMetrics> monthly;
};

MetricSummary summarize(const StepLog& log, const CalendarClock& clock, const BuildingParameters& params,
                        double theta_ref = 22.0);

}  // namespace silmpc
