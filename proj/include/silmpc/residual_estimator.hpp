#pragma once

// Data-driven estimation of the model residual: feature extraction, target
// computation with disturbance correction, training-data management and the
// building/server estimator pair.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "silmpc/building_model.hpp"
#include "silmpc/regressors.hpp"
#include "silmpc/scenario_data.hpp"

namespace silmpc {

enum class ZoneGroup { Building, Server };

// Building: p_dem, theta_air, theta_air(k-1), theta_air(k-2), tod, dow.
inline constexpr int kBuildingFeatures = 6;
// Server: p_dem, theta_air, p_server1, p_server2.
inline constexpr int kServerFeatures = 4;

int feature_dim(ZoneGroup group);
int target_dim(ZoneGroup group);
// First zone index covered by the group's targets.
int target_offset(ZoneGroup group);

// Throws LagUnavailableError for building features at k < 2.
Eigen::VectorXd extract_features(const TimeSeriesFrame& frame, std::int64_t k, ZoneGroup group);

// eps(k) = (x_meas(k+1) - x_pred(k+1)) + eps_hat(k)
Eigen::VectorXd compute_target(const ThermalState& x_measured_next, const ThermalState& x_predicted_next,
                               const Eigen::VectorXd& eps_hat_applied);

// One-step prediction re-evaluated with realized disturbances, so targets
// carry no disturbance-forecast error.
ThermalState corrected_prediction(const DiscreteModel& model, const ThermalState& x, const ThermalInput& u,
                                  const Disturbance& d_measured, const Eigen::VectorXd& eps_hat);

// Rows of (step, features, targets) for one zone group, strictly increasing
// in step. Steps are global: rows from a previous year carry negative steps.
class ResidualDataset {
public:
    explicit ResidualDataset(ZoneGroup group = ZoneGroup::Building);

    ZoneGroup group() const { return group_; }
    int feature_dim() const { return silmpc::feature_dim(group_); }
    int target_dim() const { return silmpc::target_dim(group_); }
    std::size_t size() const { return steps_.size(); }
    bool empty() const { return steps_.empty(); }

    // Throws DimensionError on size mismatch or non-increasing step.
    void append(std::int64_t step, const Eigen::VectorXd& features, const Eigen::VectorXd& target);
    void append(const ResidualDataset& later);

    std::int64_t step(std::size_t row) const { return steps_[row]; }
    const std::vector<std::int64_t>& steps() const { return steps_; }
    ConstRowMatrixMap features() const;
    ConstRowMatrixMap targets() const;

    // Rows with step >= first_step.
    ResidualDataset from_step(std::int64_t first_step) const;

private:
    ZoneGroup group_;
    std::vector<std::int64_t> steps_;
    std::vector<double> features_;
    std::vector<double> targets_;
};

// S1: history only. S2: prior ++ history. S3: (prior ++ history) restricted
// to the trailing window_months calendar months before the month containing
// `now` (now is the first step the new estimator will serve).
ResidualDataset assemble_dataset(const ResidualDataset& history, const ResidualDataset* prior,
                                 std::optional<int> window_months, std::int64_t now, const CalendarClock& clock);

enum class RegressorKind { Ridge, GradientBoosting };

struct EstimatorConfig {
    RegressorKind building_kind = RegressorKind::GradientBoosting;
    RegressorKind server_kind = RegressorKind::Ridge;
    GbtParams gbt;
    double ridge_lambda = 1e-6;
};

std::unique_ptr<Regressor> make_regressor(RegressorKind kind, const EstimatorConfig& cfg);

// Building regressor for zones 1..7 and server regressor for zones 8..9.
class ResidualEstimator {
public:
    ResidualEstimator() = default;
    ResidualEstimator(std::unique_ptr<Regressor> building, std::unique_ptr<Regressor> server);
    ResidualEstimator(const ResidualEstimator& other);
    ResidualEstimator& operator=(const ResidualEstimator& other);
    ResidualEstimator(ResidualEstimator&&) noexcept = default;
    ResidualEstimator& operator=(ResidualEstimator&&) noexcept = default;

    static ResidualEstimator train(const EstimatorConfig& cfg, const ResidualDataset& building,
                                   const ResidualDataset& server);

    // 9-vector in K; zero for k < 2 where building lags are unavailable.
    Eigen::VectorXd predict(const TimeSeriesFrame& frame, std::int64_t k) const;

    const Regressor& building() const;
    const Regressor& server() const;

    nlohmann::json to_json() const;
    static ResidualEstimator from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static ResidualEstimator load(const std::filesystem::path& path);

private:
    std::unique_ptr<Regressor> building_;
    std::unique_ptr<Regressor> server_;
};

}  // namespace silmpc
