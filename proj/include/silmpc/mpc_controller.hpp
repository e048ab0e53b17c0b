#pragma once

// Receding-horizon controller: the optimal control problem as a sparse QP
// with the predicted states kept as decision variables.
//
// Stage n (0-based, n < Np) owns a block of kStageSize variables holding the
// inputs applied at n and the states reached at n+1; the horizon peak
// variable follows the last stage. Constraint rows: per stage the 9 thermal
// dynamics rows, the battery row, the power balance, three heat/cool coupling
// rows, four server-band slack rows and one peak epigraph row; then one bound
// row per variable.

#include <cstdint>
#include <optional>

#include <Eigen/Dense>

#include "silmpc/building_model.hpp"
#include "silmpc/qp_solver.hpp"
#include "silmpc/scenario_data.hpp"

namespace silmpc {

struct ZoneWeights {
    Eigen::VectorXd wthb;  // building zones, sums to 1
    Eigen::VectorXd wths;  // server zones, sums to 1
};

// Capacity-proportional weights within each zone group.
ZoneWeights zone_weights(const BuildingParameters& params);

struct OcpConfig {
    int np = 48;
    double w_comf = 0.99;
    double w_server = 1.0;
    double w_mon = 0.01;
    double theta_ref = 22.0;
    double server_lo = 15.0;
    double server_hi = 21.0;
    std::optional<ZoneWeights> weights;  // overrides zone_weights(params)

    double c_buy = 0.30;   // EUR/kWh
    double c_sell = 0.08;  // EUR/kWh
    double c_gas = 0.09;   // EUR/kWh
    double c_peak = 1.0;   // EUR/kW over the horizon
    double eta_boiler = 0.9;
    double eta_chp_el = 0.38;

    QpSettings solver = default_solver_settings();

    static QpSettings default_solver_settings();
    void validate() const;
};

// Decision vector layout. The kTheta block holds theta - theta_ref in K, which
// keeps the comfort term free of large linear coefficients.
struct OcpLayout {
    static constexpr int kQHeat = 0;
    static constexpr int kQCool = kQHeat + kNumBuildingZones;
    static constexpr int kPBuy = kQCool + kNumZones;
    static constexpr int kPSell = kPBuy + 1;
    static constexpr int kPChp = kPSell + 1;
    static constexpr int kPBat = kPChp + 1;
    static constexpr int kQRad = kPBat + 1;
    static constexpr int kQCoolTotal = kQRad + 1;
    static constexpr int kQHeatTotal = kQCoolTotal + 1;
    static constexpr int kTheta = kQHeatTotal + 1;
    static constexpr int kEBat = kTheta + kNumZones;
    static constexpr int kSLo = kEBat + 1;
    static constexpr int kSHi = kSLo + kNumServerZones;
    static constexpr int kStageSize = kSHi + kNumServerZones;

    static constexpr int kRowDynamics = 0;
    static constexpr int kRowBattery = kRowDynamics + kNumZones;
    static constexpr int kRowBalance = kRowBattery + 1;
    static constexpr int kRowHeatSum = kRowBalance + 1;
    static constexpr int kRowCoolSum = kRowHeatSum + 1;
    static constexpr int kRowHeatSplit = kRowCoolSum + 1;
    static constexpr int kRowServerLo = kRowHeatSplit + 1;
    static constexpr int kRowServerHi = kRowServerLo + kNumServerZones;
    static constexpr int kRowPeak = kRowServerHi + kNumServerZones;
    static constexpr int kStageRows = kRowPeak + 1;

    int np = 0;

    int var(int stage, int offset) const { return stage * kStageSize + offset; }
    int peak() const { return np * kStageSize; }
    int num_variables() const { return np * kStageSize + 1; }
    int row(int stage, int offset) const { return stage * kStageRows + offset; }
    int bound_row(int variable) const { return np * kStageRows + variable; }
    int num_constraints() const { return np * kStageRows + num_variables(); }
};

// Horizon data for one OCP instance. eps_hat is Np x 9 in K.
struct OcpInputs {
    ThermalState x0;
    ElectricalState e0;
    const TimeSeriesFrame* frame = nullptr;
    std::int64_t k = 0;  // frame row of stage 0; rows k .. k+Np-1 must exist
    Eigen::MatrixXd eps_hat;
};

// Throws ParameterError when the configured bounds are infeasible by
// construction, DimensionError on inconsistent inputs.
QpProblem build_ocp(const OcpConfig& cfg, const BuildingParameters& params, const DiscreteModel& model,
                    const OcpInputs& inputs);

// Writes the row bounds that depend on (x0, e0, forecast, eps_hat).
void ocp_bounds(const OcpConfig& cfg, const BuildingParameters& params, const DiscreteModel& model,
                const OcpInputs& inputs, Eigen::VectorXd& l, Eigen::VectorXd& u);

struct ObjectiveBreakdown {
    double j_comf = 0.0;
    double j_server = 0.0;
    double j_mon = 0.0;
    double total = 0.0;  // w_comf J_comf + w_server J_server + w_mon J_mon
};

ObjectiveBreakdown objective_breakdown(const OcpConfig& cfg, const BuildingParameters& params,
                                       const Eigen::VectorXd& z);

// Absolute zone temperatures (degC) predicted for the end of stage `stage`.
Eigen::VectorXd predicted_theta(const OcpConfig& cfg, const Eigen::VectorXd& z, int stage);

struct OcpSolution {
    QpStatus status = QpStatus::MaxIterations;
    Eigen::VectorXd z;
    Eigen::VectorXd y;
    double objective = 0.0;
    ObjectiveBreakdown breakdown;
    int iterations = 0;
    bool polished = false;
    KktResiduals residuals;
};

struct MpcDecision {
    ThermalInput thermal;
    ElectricalInput electrical;
    OcpSolution solution;
    bool failsafe = false;
};

// Owns the QP workspace; the matrices are built once and every step only
// updates row bounds and warm-starts from the shifted previous solution.
class MpcController {
public:
    MpcController(BuildingParameters params, OcpConfig cfg);
    MpcController(BuildingParameters params, DiscreteModel model, OcpConfig cfg);

    MpcDecision step(const OcpInputs& inputs);
    void reset_warm_start() { warm_ = false; }

    const OcpConfig& config() const { return cfg_; }
    const BuildingParameters& params() const { return params_; }
    const DiscreteModel& model() const { return model_; }
    OcpLayout layout() const { return {cfg_.np}; }

private:
    BuildingParameters params_;
    DiscreteModel model_;
    OcpConfig cfg_;
    std::optional<QpSolver> solver_;
    Eigen::VectorXd l_, u_;
    Eigen::VectorXd z_prev_, y_prev_;
    bool warm_ = false;
};

// First-step inputs satisfying the couplings and the balance exactly, derived
// from an OCP solution by clamping to the physical limits.
std::pair<ThermalInput, ElectricalInput> applied_inputs(const BuildingParameters& params, const Eigen::VectorXd& z,
                                                        const ElectricalState& e0, const Disturbance& d);

// Zero thermal actuation; the grid covers the whole electrical balance.
std::pair<ThermalInput, ElectricalInput> failsafe_inputs(const Disturbance& d);

// One controller step without warm start.
MpcDecision mpc_step(const OcpConfig& cfg, const BuildingParameters& params, const DiscreteModel& model,
                     const OcpInputs& inputs);

}  // namespace silmpc
