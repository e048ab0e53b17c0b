#include "silmpc/residual_estimator.hpp"

#include <algorithm>
#include <fstream>

#include "silmpc/errors.hpp"

namespace silmpc {
namespace {

constexpr int kEstimatorFormatVersion = 1;

}  // namespace

int feature_dim(ZoneGroup group) { return group == ZoneGroup::Building ? kBuildingFeatures : kServerFeatures; }
int target_dim(ZoneGroup group) { return group == ZoneGroup::Building ? kNumBuildingZones : kNumServerZones; }
int target_offset(ZoneGroup group) { return group == ZoneGroup::Building ? 0 : kNumBuildingZones; }

Eigen::VectorXd extract_features(const TimeSeriesFrame& frame, std::int64_t k, ZoneGroup group) {
    if (k < 0 || k >= frame.length()) throw DimensionError("extract_features: step outside frame");
    const auto i = static_cast<std::size_t>(k);
    Eigen::VectorXd f(feature_dim(group));
    if (group == ZoneGroup::Building) {
        if (k < 2) throw LagUnavailableError("building features need two ambient lags (k >= 2)");
        f << frame.p_dem[i], frame.theta_air[i], frame.theta_air[i - 1], frame.theta_air[i - 2], frame.tod[i],
            static_cast<double>(frame.dow[i]);
    } else {
        f << frame.p_dem[i], frame.theta_air[i], frame.p_server1[i], frame.p_server2[i];
    }
    return f;
}

Eigen::VectorXd compute_target(const ThermalState& x_measured_next, const ThermalState& x_predicted_next,
                               const Eigen::VectorXd& eps_hat_applied) {
    if (x_measured_next.theta.size() != x_predicted_next.theta.size() ||
        eps_hat_applied.size() != x_measured_next.theta.size())
        throw DimensionError("compute_target: dimension mismatch");
    return (x_measured_next.theta - x_predicted_next.theta) + eps_hat_applied;
}

ThermalState corrected_prediction(const DiscreteModel& model, const ThermalState& x, const ThermalInput& u,
                                  const Disturbance& d_measured, const Eigen::VectorXd& eps_hat) {
    return step_thermal(model, x, u, d_measured, eps_hat);
}

ResidualDataset::ResidualDataset(ZoneGroup group) : group_(group) {}

void ResidualDataset::append(std::int64_t step, const Eigen::VectorXd& features, const Eigen::VectorXd& target) {
    if (features.size() != feature_dim() || target.size() != target_dim())
        throw DimensionError("ResidualDataset: row dimension mismatch");
    if (!steps_.empty() && step <= steps_.back()) throw DimensionError("ResidualDataset: steps must increase");
    steps_.push_back(step);
    features_.insert(features_.end(), features.data(), features.data() + features.size());
    targets_.insert(targets_.end(), target.data(), target.data() + target.size());
}

void ResidualDataset::append(const ResidualDataset& later) {
    if (later.group_ != group_) throw DimensionError("ResidualDataset: zone groups differ");
    if (later.empty()) return;
    if (!steps_.empty() && later.steps_.front() <= steps_.back())
        throw DimensionError("ResidualDataset: appended rows must follow existing ones");
    steps_.insert(steps_.end(), later.steps_.begin(), later.steps_.end());
    features_.insert(features_.end(), later.features_.begin(), later.features_.end());
    targets_.insert(targets_.end(), later.targets_.begin(), later.targets_.end());
}

ConstRowMatrixMap ResidualDataset::features() const {
    return {features_.data(), static_cast<Eigen::Index>(size()), feature_dim()};
}

ConstRowMatrixMap ResidualDataset::targets() const {
    return {targets_.data(), static_cast<Eigen::Index>(size()), target_dim()};
}

ResidualDataset ResidualDataset::from_step(std::int64_t first_step) const {
    ResidualDataset out(group_);
    const auto it = std::lower_bound(steps_.begin(), steps_.end(), first_step);
    const auto row = static_cast<std::size_t>(it - steps_.begin());
    out.steps_.assign(it, steps_.end());
    out.features_.assign(features_.begin() + static_cast<std::ptrdiff_t>(row * static_cast<std::size_t>(feature_dim())),
                         features_.end());
    out.targets_.assign(targets_.begin() + static_cast<std::ptrdiff_t>(row * static_cast<std::size_t>(target_dim())),
                        targets_.end());
    return out;
}

ResidualDataset assemble_dataset(const ResidualDataset& history, const ResidualDataset* prior,
                                 std::optional<int> window_months, std::int64_t now, const CalendarClock& clock) {
    ResidualDataset out(history.group());
    if (prior != nullptr) out.append(*prior);
    out.append(history);
    if (window_months) {
        if (*window_months < 1) throw ParameterError("window_months must be positive");
        const std::int64_t first = month_start_step(clock, month_index(clock, now) - *window_months);
        out = out.from_step(first);
    }
    return out;
}

std::unique_ptr<Regressor> make_regressor(RegressorKind kind, const EstimatorConfig& cfg) {
    if (kind == RegressorKind::Ridge) return std::make_unique<RidgeLinear>(cfg.ridge_lambda);
    return std::make_unique<GradientBoostedTrees>(cfg.gbt);
}

ResidualEstimator::ResidualEstimator(std::unique_ptr<Regressor> building, std::unique_ptr<Regressor> server)
    : building_(std::move(building)), server_(std::move(server)) {
    if (!building_ || !server_) throw std::invalid_argument("ResidualEstimator needs both regressors");
}

ResidualEstimator::ResidualEstimator(const ResidualEstimator& other)
    : building_(other.building_ ? other.building_->clone() : nullptr),
      server_(other.server_ ? other.server_->clone() : nullptr) {}

ResidualEstimator& ResidualEstimator::operator=(const ResidualEstimator& other) {
    if (this != &other) *this = ResidualEstimator(other);
    return *this;
}

ResidualEstimator ResidualEstimator::train(const EstimatorConfig& cfg, const ResidualDataset& building,
                                           const ResidualDataset& server) {
    if (building.group() != ZoneGroup::Building || server.group() != ZoneGroup::Server)
        throw std::invalid_argument("train: datasets passed in the wrong order");
    auto b = make_regressor(cfg.building_kind, cfg);
    auto s = make_regressor(cfg.server_kind, cfg);
    b->fit(building.features(), building.targets());
    s->fit(server.features(), server.targets());
    return {std::move(b), std::move(s)};
}

Eigen::VectorXd ResidualEstimator::predict(const TimeSeriesFrame& frame, std::int64_t k) const {
    if (!building_ || !server_) throw NotFittedError("ResidualEstimator has no regressors");
    Eigen::VectorXd eps = Eigen::VectorXd::Zero(kNumZones);
    if (k < 2) return eps;
    eps.head(kNumBuildingZones) = building_->predict(extract_features(frame, k, ZoneGroup::Building));
    eps.tail(kNumServerZones) = server_->predict(extract_features(frame, k, ZoneGroup::Server));
    return eps;
}

const Regressor& ResidualEstimator::building() const {
    if (!building_) throw NotFittedError("ResidualEstimator has no building regressor");
    return *building_;
}

const Regressor& ResidualEstimator::server() const {
    if (!server_) throw NotFittedError("ResidualEstimator has no server regressor");
    return *server_;
}

nlohmann::json ResidualEstimator::to_json() const {
    return {{"format", "silmpc-residual-estimator"},
            {"version", kEstimatorFormatVersion},
            {"building", building().to_json()},
            {"server", server().to_json()}};
}

ResidualEstimator ResidualEstimator::from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "silmpc-residual-estimator")
            throw ParseError("not a residual estimator file");
        if (j.at("version").get<int>() != kEstimatorFormatVersion) throw ParseError("unsupported estimator version");
        auto b = regressor_from_json(j.at("building"));
        auto s = regressor_from_json(j.at("server"));
        if (b->fitted() && b->num_features() != kBuildingFeatures) throw ParseError("building regressor: wrong width");
        if (s->fitted() && s->num_features() != kServerFeatures) throw ParseError("server regressor: wrong width");
        return {std::move(b), std::move(s)};
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed estimator JSON: ") + e.what());
    }
}

void ResidualEstimator::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << to_json().dump() << '\n';
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

ResidualEstimator ResidualEstimator::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return from_json(j);
}

}  // namespace silmpc
