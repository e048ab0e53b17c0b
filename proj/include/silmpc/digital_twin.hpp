#pragma once

// Plant model for closed-loop simulation: the controller's own dynamics plus a
// time-variant exogenous heat disturbance the controller cannot see.
//
// The building-zone disturbance is a function of (tod, dow, theta_air at k,
// k-1, k-2, p_dem) and the server-zone disturbance of (p_server, p_dem,
// theta_air), plus seeded Gaussian noise. Every driver enters as a deviation
// from a fixed reference, so a frame sitting at the references at night on a
// weekend yields exactly zero.

#include <array>
#include <cstdint>
#include <utility>

#include <Eigen/Dense>

#include "silmpc/building_model.hpp"
#include "silmpc/scenario_data.hpp"

namespace silmpc {

struct ExogenousModel {
    // Building zones, kW.
    Eigen::VectorXd occupancy_gain;   // at full occupancy
    Eigen::VectorXd solar_gain;       // at full solar proxy
    Eigen::VectorXd lag1_gain;        // kW/K on theta_air(k-1) - theta_ref
    Eigen::VectorXd lag2_gain;        // kW/K on theta_air(k-2) - theta_ref
    Eigen::VectorXd demand_gain;      // kW/kW on |p_dem| - p_dem_ref
    Eigen::VectorXd transition_gain;  // kW, bump around mild ambient temperatures
    double transition_center = 14.0;  // degC
    double transition_width = 3.0;    // K

    double work_start = 7.0;
    double work_end = 19.0;
    double ramp_hours = 1.0;
    unsigned weekday_mask = 0x1F;  // bit d set: weekday d is a workday (Monday = bit 0)

    // Server zones.
    Eigen::VectorXd server_load_gain;     // kW heat per kW electrical
    Eigen::VectorXd server_ambient_gain;  // kW/K
    Eigen::VectorXd server_demand_gain;   // kW/kW

    double theta_ref = 10.0;
    double p_dem_ref = 254.0;
    std::array<double, kNumServerZones> p_server_ref{20.0, 12.0};

    double scale = 0.815;            // puts the uncompensated full-year WMARE near 40e-3 K
    Eigen::VectorXd kelvin_per_kw;   // ts / cth per zone
    Eigen::VectorXd noise_std;       // K per step; zero disables noise
    double noise_ratio = 0.2;        // used by calibrate_noise
    std::uint64_t seed = 7;

    static ExogenousModel defaults(const BuildingParameters& params);
    // All gains and noise zero: the twin reproduces the controller model.
    static ExogenousModel zero(const BuildingParameters& params);

    void validate() const;
};

// Occupancy level in [0, 1].
double occupancy(const ExogenousModel& m, double tod, int dow);
// Solar gain proxy in [0, 1] from hour of day and ambient temperature.
double solar_proxy(double tod, double theta_air);

// Deterministic part of the disturbance, K per step. Missing lags (k < 2)
// are taken as theta_ref.
Eigen::VectorXd deterministic_exogenous(const ExogenousModel& m, const TimeSeriesFrame& frame, std::int64_t k);
Eigen::VectorXd true_exogenous(const ExogenousModel& m, const TimeSeriesFrame& frame, std::int64_t k);

// Sets noise_std to noise_ratio times the per-zone standard deviation of the
// deterministic disturbance over the frame.
ExogenousModel calibrate_noise(ExogenousModel m, const TimeSeriesFrame& frame);

struct TwinState {
    ThermalState thermal;
    ElectricalState electrical;
    std::int64_t k = 0;
};

struct ParameterMismatch {
    bool enabled = false;
    double amplitude = 0.05;  // relative, uniform in [-a, a]
    std::uint64_t seed = 11;
};

// Plant dynamics; equals discretize(params) unless the mismatch is enabled.
DiscreteModel plant_model(const BuildingParameters& params, const ParameterMismatch& mismatch);

// Throws ConstraintViolation when the inputs break a coupling or the balance.
TwinState twin_step(const BuildingParameters& params, const DiscreteModel& plant, const TwinState& s,
                    const ThermalInput& thermal, const ElectricalInput& electrical, const TimeSeriesFrame& frame,
                    const ExogenousModel& m);

struct MeasurementConfig {
    double noise_std = 0.0;  // K
    std::uint64_t seed = 13;
};

// Identity read-out unless noise is configured; `draw` selects the noise sample.
std::pair<ThermalState, ElectricalState> measure(const TwinState& s, const MeasurementConfig& cfg = {},
                                                 std::uint64_t draw = 0);

inline constexpr double kConstraintTolerance = 1e-6;

}  // namespace silmpc
