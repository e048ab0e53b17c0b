#pragma once

// Multi-zone RC thermal model of the building, its exact zero-order-hold
// discretization, and the algebraic couplings of the electrical side.
//
// Units: temperatures in degC, thermal and electrical powers in kW, energies
// in kWh, capacities in kWh/K, conductances in kW/K, time in hours.
// Sign conventions: P_grid > 0 import, P_dem <= 0 consumption, P_PV >= 0,
// Q_cool <= 0 removes heat, P_bat > 0 charges the battery.

#include <array>

#include <Eigen/Dense>

namespace silmpc {

inline constexpr int kNumZones = 9;
inline constexpr int kNumBuildingZones = 7;
inline constexpr int kNumServerZones = 2;
inline constexpr int kNumThermalInputs = kNumBuildingZones + kNumZones;
inline constexpr int kNumThermalDisturbances = 1 + kNumZones;

// Thermal network of n zones. Zones [0, n_heated) own a heating channel,
// every zone owns a cooling channel.
struct ThermalNetwork {
    Eigen::VectorXd cth;   // kWh/K
    Eigen::MatrixXd beta;  // kW/K, symmetric, zero diagonal
    Eigen::VectorXd ha;    // kW/K
    int n_heated = 0;

    int size() const { return static_cast<int>(cth.size()); }
    int num_inputs() const { return n_heated + size(); }
    int num_disturbances() const { return 1 + size(); }

    // Throws ParameterError.
    void validate() const;
};

// Box limits used by the controller's optimal control problem.
struct OperatingBounds {
    double p_bat_min = -50.0;
    double p_bat_max = 50.0;
    double e_bat_min = 0.0;  // upper limits are BuildingParameters::e_bat_max / p_chp_max
    double p_chp_min = 0.0;
    double q_heat_max = 80.0;   // per heated zone
    double q_cool_min = -80.0;  // per zone
    double q_rad_max = 1000.0;
    double theta_min = 10.0;
    double theta_max = 35.0;
    double p_buy_max = 1000.0;
    double p_sell_max = 1000.0;
};

struct BuildingParameters {
    ThermalNetwork network;
    Eigen::VectorXd q_other;  // kW, constant heat disturbance per zone
    double eps_c = 1.78;      // cooling energy efficiency ratio
    double c_chp = 0.677;     // CHP power-to-heat ratio
    double p_chp_max = 199.0;
    double e_bat_max = 98.0;
    double ts = 0.5;
    OperatingBounds bounds;

    // Synthetic 9-zone building (7 regular zones, 2 server rooms).
    static BuildingParameters defaults();

    void validate() const;
};

struct ContinuousModel {
    Eigen::MatrixXd ac;  // n x n, 1/h
    Eigen::MatrixXd bc;  // n x (n_heated + n), K/kWh
    Eigen::MatrixXd sc;  // n x (1 + n); column 0 ambient (1/h), rest K/kWh
};

// x(k+1) = a x(k) + b u(k) + s d(k) + eps(k), with u = [q_heat; q_cool]
// and d = [theta_air; q_other].
struct DiscreteModel {
    Eigen::MatrixXd a;
    Eigen::MatrixXd b;
    Eigen::MatrixXd s;
    double ts = 0.0;
    int n_heated = 0;

    int num_zones() const { return static_cast<int>(a.rows()); }
};

struct ThermalState {
    Eigen::VectorXd theta;
};

struct ElectricalState {
    double e_bat = 0.0;
};

struct ThermalInput {
    Eigen::VectorXd q_heat;  // >= 0, one per heated zone
    Eigen::VectorXd q_cool;  // <= 0, one per zone

    static ThermalInput zero(int n_heated, int n_zones);
    Eigen::VectorXd stacked() const;
};

struct ElectricalInput {
    double p_grid = 0.0;
    double p_chp = 0.0;
    double p_bat = 0.0;
    double q_rad = 0.0;
    double q_cool_total = 0.0;
    double q_heat_total = 0.0;
};

struct Disturbance {
    double theta_air = 0.0;
    Eigen::VectorXd q_other;
    double p_pv = 0.0;
    double p_dem = 0.0;
    std::array<double, kNumServerZones> p_server{};

    Eigen::VectorXd thermal_vector() const;
};

ContinuousModel continuous_matrices(const ThermalNetwork& network);

// Exact ZOH sampling via the exponential of the augmented matrix
// [[Ac, Bc, Sc], [0, 0, 0]].
DiscreteModel discretize(const ThermalNetwork& network, double ts);
DiscreteModel discretize(const BuildingParameters& params);

ThermalState step_thermal(const DiscreteModel& model, const ThermalState& x, const ThermalInput& u,
                          const Disturbance& d, const Eigen::VectorXd& eps);

Eigen::VectorXd step_thermal(const DiscreteModel& model, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& u, const Eigen::VectorXd& d,
                             const Eigen::VectorXd& eps);

ElectricalState step_battery(ElectricalState e, double p_bat, double ts);

// Zero for any feasible operating point; the value is the power mismatch in kW.
double balance_residual(const ElectricalInput& u, const Disturbance& d, double eps_c);

// Largest absolute violation of the four CHP/heat/cool coupling equations.
double coupling_residual(const ThermalInput& thermal, const ElectricalInput& electrical, double c_chp);

// Residual in K per step expressed as an equivalent heat flow in kW.
Eigen::VectorXd residual_to_kw(const Eigen::VectorXd& eps, const Eigen::VectorXd& cth, double ts);

}  // namespace silmpc
