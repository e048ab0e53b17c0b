#include "silmpc/digital_twin.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "silmpc/errors.hpp"
#include "silmpc/rng.hpp"

namespace silmpc {
namespace {

Eigen::VectorXd vec(std::initializer_list<double> values) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v[i++] = x;
    return v;
}

double transition_bump(const ExogenousModel& m, double theta) {
    const double z = (theta - m.transition_center) / m.transition_width;
    return std::exp(-z * z);
}

constexpr std::uint64_t kMeasurementStream = 101;

}  // namespace

ExogenousModel ExogenousModel::defaults(const BuildingParameters& params) {
    ExogenousModel m;
    m.occupancy_gain = vec({6.0, 10.0, 8.0, 3.0, 7.0, 4.0, 2.0});
    m.solar_gain = vec({4.0, 8.0, 6.0, 2.0, 5.0, 3.0, 2.0});
    m.lag1_gain = vec({0.5, 0.9, 0.7, 0.3, 0.6, 0.25, 0.4});
    m.lag2_gain = vec({0.3, 0.5, 0.4, 0.2, 0.3, 0.15, 0.2});
    m.demand_gain = vec({0.02, 0.03, 0.03, 0.01, 0.02, 0.01, 0.01});
    m.transition_gain = vec({-3.0, -5.0, -4.0, -1.5, -3.0, -1.0, -2.0});
    m.server_load_gain = vec({0.4, 0.4});
    m.server_ambient_gain = vec({0.1, 0.08});
    m.server_demand_gain = vec({0.005, 0.005});
    m.kelvin_per_kw = params.ts * params.network.cth.cwiseInverse();
    m.noise_std = Eigen::VectorXd::Zero(kNumZones);
    return m;
}

ExogenousModel ExogenousModel::zero(const BuildingParameters& params) {
    ExogenousModel m = defaults(params);
    for (auto* v : {&m.occupancy_gain, &m.solar_gain, &m.lag1_gain, &m.lag2_gain, &m.demand_gain, &m.transition_gain,
                    &m.server_load_gain, &m.server_ambient_gain, &m.server_demand_gain, &m.noise_std})
        v->setZero();
    return m;
}

void ExogenousModel::validate() const {
    for (const auto* v : {&occupancy_gain, &solar_gain, &lag1_gain, &lag2_gain, &demand_gain, &transition_gain})
        if (v->size() != kNumBuildingZones) throw ParameterError("building-zone gains need 7 entries");
    for (const auto* v : {&server_load_gain, &server_ambient_gain, &server_demand_gain})
        if (v->size() != kNumServerZones) throw ParameterError("server-zone gains need 2 entries");
    if (kelvin_per_kw.size() != kNumZones || noise_std.size() != kNumZones)
        throw ParameterError("kelvin_per_kw and noise_std need 9 entries");
    if ((noise_std.array() < 0.0).any() || noise_ratio < 0.0) throw ParameterError("noise must be nonnegative");
    if (!(transition_width > 0.0) || !(ramp_hours > 0.0) || !(work_end > work_start))
        throw ParameterError("invalid schedule or transition shape");
}

double occupancy(const ExogenousModel& m, double tod, int dow) {
    if (((m.weekday_mask >> dow) & 1U) == 0U) return 0.0;
    if (tod >= m.work_start && tod < m.work_end) return 1.0;
    if (tod >= m.work_start - m.ramp_hours && tod < m.work_start)
        return (tod - (m.work_start - m.ramp_hours)) / m.ramp_hours;
    if (tod >= m.work_end && tod < m.work_end + m.ramp_hours) return 1.0 - (tod - m.work_end) / m.ramp_hours;
    return 0.0;
}

double solar_proxy(double tod, double theta_air) {
    const double sun = std::max(0.0, std::sin(std::numbers::pi * (tod - 6.0) / 12.0));
    const double season = std::clamp(0.25 + 0.75 * theta_air / 25.0, 0.25, 1.0);
    return sun * season;
}

Eigen::VectorXd deterministic_exogenous(const ExogenousModel& m, const TimeSeriesFrame& frame, std::int64_t k) {
    if (k < 0 || k >= frame.length()) throw DimensionError("true_exogenous: step outside frame");
    const auto i = static_cast<std::size_t>(k);
    const double theta = frame.theta_air[i];
    const double lag1 = k >= 1 ? frame.theta_air[i - 1] : m.theta_ref;
    const double lag2 = k >= 2 ? frame.theta_air[i - 2] : m.theta_ref;
    const double occ = occupancy(m, frame.tod[i], frame.dow[i]);
    const double sol = solar_proxy(frame.tod[i], theta);
    const double dem = std::abs(frame.p_dem[i]) - m.p_dem_ref;
    const double transition = transition_bump(m, theta) - transition_bump(m, m.theta_ref);

    Eigen::VectorXd kw(kNumZones);
    for (int z = 0; z < kNumBuildingZones; ++z) {
        kw[z] = m.occupancy_gain[z] * occ + m.solar_gain[z] * sol + m.lag1_gain[z] * (lag1 - m.theta_ref) +
                m.lag2_gain[z] * (lag2 - m.theta_ref) + m.demand_gain[z] * dem + m.transition_gain[z] * transition;
    }
    const double server_load[kNumServerZones] = {frame.p_server1[i], frame.p_server2[i]};
    for (int s = 0; s < kNumServerZones; ++s) {
        kw[kNumBuildingZones + s] = m.server_load_gain[s] * (server_load[s] - m.p_server_ref[s]) +
                                    m.server_ambient_gain[s] * (theta - m.theta_ref) + m.server_demand_gain[s] * dem;
    }
    return m.scale * kw.cwiseProduct(m.kelvin_per_kw);
}

Eigen::VectorXd true_exogenous(const ExogenousModel& m, const TimeSeriesFrame& frame, std::int64_t k) {
    Eigen::VectorXd eps = deterministic_exogenous(m, frame, k);
    const auto index = static_cast<std::uint64_t>(frame.start_step + k);
    for (int z = 0; z < kNumZones; ++z) {
        if (m.noise_std[z] > 0.0) eps[z] += m.noise_std[z] * hashed_gaussian(m.seed, static_cast<std::uint64_t>(z), index);
    }
    return eps;
}

ExogenousModel calibrate_noise(ExogenousModel m, const TimeSeriesFrame& frame) {
    m.validate();
    const std::int64_t n = frame.length();
    if (n < 2) throw ParameterError("calibrate_noise needs at least two steps");
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(kNumZones);
    Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(kNumZones);
    for (std::int64_t k = 0; k < n; ++k) {
        const Eigen::VectorXd e = deterministic_exogenous(m, frame, k);
        sum += e;
        sum_sq += e.cwiseAbs2();
    }
    const Eigen::VectorXd mean = sum / static_cast<double>(n);
    const Eigen::VectorXd var = (sum_sq / static_cast<double>(n) - mean.cwiseAbs2()).cwiseMax(0.0);
    m.noise_std = m.noise_ratio * var.cwiseSqrt();
    return m;
}

DiscreteModel plant_model(const BuildingParameters& params, const ParameterMismatch& mismatch) {
    if (!mismatch.enabled) return discretize(params);
    ThermalNetwork net = params.network;
    const int n = net.size();
    std::uint64_t draw = 0;
    const auto factor = [&] { return 1.0 + mismatch.amplitude * (2.0 * hashed_uniform(mismatch.seed, 0, draw++) - 1.0); };
    for (int i = 0; i < n; ++i) net.cth[i] *= factor();
    for (int i = 0; i < n; ++i) net.ha[i] *= factor();
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double f = factor();
            net.beta(i, j) *= f;
            net.beta(j, i) = net.beta(i, j);
        }
    }
    return discretize(net, params.ts);
}

TwinState twin_step(const BuildingParameters& params, const DiscreteModel& plant, const TwinState& s,
                    const ThermalInput& thermal, const ElectricalInput& electrical, const TimeSeriesFrame& frame,
                    const ExogenousModel& m) {
    const Disturbance d = frame.disturbance(s.k, params.q_other);
    const double coupling = coupling_residual(thermal, electrical, params.c_chp);
    if (coupling > kConstraintTolerance)
        throw ConstraintViolation("coupling equations violated by " + std::to_string(coupling) + " kW at step " +
                                  std::to_string(s.k));
    const double balance = balance_residual(electrical, d, params.eps_c);
    if (std::abs(balance) > kConstraintTolerance)
        throw ConstraintViolation("power balance violated by " + std::to_string(balance) + " kW at step " +
                                  std::to_string(s.k));

    TwinState next;
    next.thermal = step_thermal(plant, s.thermal, thermal, d, true_exogenous(m, frame, s.k));
    next.electrical = step_battery(s.electrical, electrical.p_bat, params.ts);
    next.k = s.k + 1;
    return next;
}

std::pair<ThermalState, ElectricalState> measure(const TwinState& s, const MeasurementConfig& cfg, std::uint64_t draw) {
    ThermalState x = s.thermal;
    if (cfg.noise_std > 0.0) {
        const auto n = static_cast<std::uint64_t>(x.theta.size());
        for (Eigen::Index z = 0; z < x.theta.size(); ++z)
            x.theta[z] += cfg.noise_std *
                          hashed_gaussian(cfg.seed, kMeasurementStream, draw * n + static_cast<std::uint64_t>(z));
    }
    return {x, s.electrical};
}

}  // namespace silmpc
