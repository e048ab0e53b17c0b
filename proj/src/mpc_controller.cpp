#include "silmpc/mpc_controller.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "silmpc/errors.hpp"

namespace silmpc {
namespace {

using L = OcpLayout;
using Triplet = Eigen::Triplet<double, int>;

ZoneWeights effective_weights(const OcpConfig& cfg, const BuildingParameters& params) {
    return cfg.weights ? *cfg.weights : zone_weights(params);
}

struct VarBounds {
    double lo;
    double hi;
};

// Static box of every variable in a stage block.
std::vector<VarBounds> stage_bounds(const OcpConfig& cfg, const BuildingParameters& params) {
    const OperatingBounds& b = params.bounds;
    std::vector<VarBounds> v(L::kStageSize);
    for (int i = 0; i < kNumBuildingZones; ++i) v[L::kQHeat + i] = {0.0, b.q_heat_max};
    for (int i = 0; i < kNumZones; ++i) v[L::kQCool + i] = {b.q_cool_min, 0.0};
    v[L::kPBuy] = {0.0, b.p_buy_max};
    v[L::kPSell] = {0.0, b.p_sell_max};
    v[L::kPChp] = {b.p_chp_min, params.p_chp_max};
    v[L::kPBat] = {b.p_bat_min, b.p_bat_max};
    v[L::kQRad] = {0.0, b.q_rad_max};
    // The totals are sums of bounded entries; bounding them too makes the active set degenerate.
    v[L::kQCoolTotal] = {-kQpInfinity, kQpInfinity};
    v[L::kQHeatTotal] = {-kQpInfinity, kQpInfinity};
    for (int i = 0; i < kNumZones; ++i) v[L::kTheta + i] = {b.theta_min - cfg.theta_ref, b.theta_max - cfg.theta_ref};
    v[L::kEBat] = {b.e_bat_min, params.e_bat_max};
    for (int j = 0; j < kNumServerZones; ++j) {
        v[L::kSLo + j] = {0.0, kQpInfinity};
        v[L::kSHi + j] = {0.0, kQpInfinity};
    }
    for (int i = 0; i < L::kStageSize; ++i)
        if (v[i].lo > v[i].hi) throw ParameterError("OCP: lower bound exceeds upper bound for stage variable " +
                                                    std::to_string(i));
    return v;
}

void check_model(const DiscreteModel& model) {
    if (model.num_zones() != kNumZones || model.n_heated != kNumBuildingZones ||
        model.b.cols() != kNumThermalInputs || model.s.cols() != kNumThermalDisturbances)
        throw DimensionError("OCP: model must have 9 zones, 7 heated zones and 10 disturbance channels");
}

QpProblem ocp_structure(const OcpConfig& cfg, const BuildingParameters& params, const DiscreteModel& model) {
    cfg.validate();
    params.validate();
    check_model(model);
    const L lay{cfg.np};
    const int nv = lay.num_variables();
    const ZoneWeights w = effective_weights(cfg, params);
    const double ts = params.ts;

    QpProblem qp;
    qp.q = Eigen::VectorXd::Zero(nv);
    std::vector<Triplet> pt;
    for (int n = 0; n < cfg.np; ++n) {
        for (int i = 0; i < kNumBuildingZones; ++i) {
            const int v = lay.var(n, L::kTheta + i);
            pt.emplace_back(v, v, 2.0 * cfg.w_comf * w.wthb[i]);
        }
        for (int j = 0; j < kNumServerZones; ++j) {
            qp.q[lay.var(n, L::kSLo + j)] = cfg.w_server * w.wths[j];
            qp.q[lay.var(n, L::kSHi + j)] = cfg.w_server * w.wths[j];
        }
        qp.q[lay.var(n, L::kPBuy)] = cfg.w_mon * cfg.c_buy * ts;
        qp.q[lay.var(n, L::kPSell)] = -cfg.w_mon * cfg.c_sell * ts;
        qp.q[lay.var(n, L::kQRad)] = cfg.w_mon * cfg.c_gas * ts / cfg.eta_boiler;
        qp.q[lay.var(n, L::kPChp)] = cfg.w_mon * cfg.c_gas * ts / cfg.eta_chp_el;
    }
    qp.q[lay.peak()] = cfg.w_mon * cfg.c_peak;
    qp.p.resize(nv, nv);
    qp.p.setFromTriplets(pt.begin(), pt.end());

    std::vector<Triplet> at;
    for (int n = 0; n < cfg.np; ++n) {
        const auto var = [&](int off) { return lay.var(n, off); };
        const auto row = [&](int off) { return lay.row(n, off); };
        for (int i = 0; i < kNumZones; ++i) {
            const int r = row(L::kRowDynamics + i);
            at.emplace_back(r, var(L::kTheta + i), 1.0);
            if (n > 0)
                for (int j = 0; j < kNumZones; ++j)
                    if (model.a(i, j) != 0.0) at.emplace_back(r, lay.var(n - 1, L::kTheta + j), -model.a(i, j));
            for (int c = 0; c < kNumThermalInputs; ++c) {
                if (model.b(i, c) == 0.0) continue;
                const int off = c < kNumBuildingZones ? L::kQHeat + c : L::kQCool + (c - kNumBuildingZones);
                at.emplace_back(r, var(off), -model.b(i, c));
            }
        }
        at.emplace_back(row(L::kRowBattery), var(L::kEBat), 1.0);
        if (n > 0) at.emplace_back(row(L::kRowBattery), lay.var(n - 1, L::kEBat), -1.0);
        at.emplace_back(row(L::kRowBattery), var(L::kPBat), -ts);

        const int rb = row(L::kRowBalance);
        at.emplace_back(rb, var(L::kPBuy), 1.0);
        at.emplace_back(rb, var(L::kPSell), -1.0);
        at.emplace_back(rb, var(L::kPBat), -1.0);
        at.emplace_back(rb, var(L::kPChp), 1.0);
        at.emplace_back(rb, var(L::kQCoolTotal), 1.0 / params.eps_c);

        at.emplace_back(row(L::kRowHeatSum), var(L::kQHeatTotal), 1.0);
        for (int i = 0; i < kNumBuildingZones; ++i) at.emplace_back(row(L::kRowHeatSum), var(L::kQHeat + i), -1.0);
        at.emplace_back(row(L::kRowCoolSum), var(L::kQCoolTotal), 1.0);
        for (int i = 0; i < kNumZones; ++i) at.emplace_back(row(L::kRowCoolSum), var(L::kQCool + i), -1.0);
        at.emplace_back(row(L::kRowHeatSplit), var(L::kQHeatTotal), 1.0);
        at.emplace_back(row(L::kRowHeatSplit), var(L::kQRad), -1.0);
        at.emplace_back(row(L::kRowHeatSplit), var(L::kPChp), -1.0 / params.c_chp);

        for (int j = 0; j < kNumServerZones; ++j) {
            const int theta = var(L::kTheta + kNumBuildingZones + j);
            at.emplace_back(row(L::kRowServerLo + j), var(L::kSLo + j), 1.0);
            at.emplace_back(row(L::kRowServerLo + j), theta, 1.0);
            at.emplace_back(row(L::kRowServerHi + j), var(L::kSHi + j), 1.0);
            at.emplace_back(row(L::kRowServerHi + j), theta, -1.0);
        }
        at.emplace_back(row(L::kRowPeak), lay.peak(), 1.0);
        at.emplace_back(row(L::kRowPeak), var(L::kPBuy), -1.0);
    }
    for (int v = 0; v < nv; ++v) at.emplace_back(lay.bound_row(v), v, 1.0);
    qp.a.resize(lay.num_constraints(), nv);
    qp.a.setFromTriplets(at.begin(), at.end());
    qp.a.makeCompressed();

    // Forecast-independent rows; the equality right-hand sides are filled by ocp_bounds.
    qp.l = Eigen::VectorXd::Zero(lay.num_constraints());
    qp.u = Eigen::VectorXd::Zero(lay.num_constraints());
    const auto box = stage_bounds(cfg, params);
    for (int n = 0; n < cfg.np; ++n) {
        for (int j = 0; j < kNumServerZones; ++j) {
            qp.l[lay.row(n, L::kRowServerLo + j)] = cfg.server_lo - cfg.theta_ref;
            qp.u[lay.row(n, L::kRowServerLo + j)] = kQpInfinity;
            qp.l[lay.row(n, L::kRowServerHi + j)] = cfg.theta_ref - cfg.server_hi;
            qp.u[lay.row(n, L::kRowServerHi + j)] = kQpInfinity;
        }
        qp.u[lay.row(n, L::kRowPeak)] = kQpInfinity;
        for (int off = 0; off < L::kStageSize; ++off) {
            qp.l[lay.bound_row(lay.var(n, off))] = box[static_cast<std::size_t>(off)].lo;
            qp.u[lay.bound_row(lay.var(n, off))] = box[static_cast<std::size_t>(off)].hi;
        }
    }
    qp.l[lay.bound_row(lay.peak())] = 0.0;
    qp.u[lay.bound_row(lay.peak())] = kQpInfinity;
    return qp;
}

// Moves every stage block one stage forward and repeats the last one.
Eigen::VectorXd shift_stages(const Eigen::VectorXd& v, int np, int block, int head_rows) {
    Eigen::VectorXd out = v;
    const auto shift = [&](int base, int size) {
        for (int n = 0; n + 1 < np; ++n) out.segment(base + n * size, size) = v.segment(base + (n + 1) * size, size);
    };
    if (head_rows > 0) shift(0, head_rows);
    shift(np * head_rows, block);
    return out;
}

}  // namespace

ZoneWeights zone_weights(const BuildingParameters& params) {
    const Eigen::VectorXd& c = params.network.cth;
    if (c.size() != kNumZones || (c.array() <= 0.0).any())
        throw ParameterError("zone_weights: need 9 positive thermal capacities");
    ZoneWeights w;
    w.wthb = c.head(kNumBuildingZones) / c.head(kNumBuildingZones).sum();
    w.wths = c.tail(kNumServerZones) / c.tail(kNumServerZones).sum();
    return w;
}

QpSettings OcpConfig::default_solver_settings() {
    QpSettings s;
    s.eps_abs = 1e-4;
    s.eps_rel = 1e-4;
    s.max_iter = 4000;
    s.check_interval = 5;
    s.polish = false;
    return s;
}

void OcpConfig::validate() const {
    if (np < 1) throw ParameterError("OCP: horizon must be at least one step");
    if (w_comf < 0.0 || w_server < 0.0 || w_mon < 0.0) throw ParameterError("OCP: weights must be nonnegative");
    if (c_buy < 0.0 || c_sell < 0.0 || c_gas < 0.0 || c_peak < 0.0) throw ParameterError("OCP: prices must be >= 0");
    if (!(eta_boiler > 0.0) || !(eta_chp_el > 0.0)) throw ParameterError("OCP: efficiencies must be positive");
    if (!(server_lo <= server_hi)) throw ParameterError("OCP: server band is empty");
    if (weights) {
        if (weights->wthb.size() != kNumBuildingZones || weights->wths.size() != kNumServerZones)
            throw ParameterError("OCP: weight overrides need 7 + 2 entries");
        if ((weights->wthb.array() < 0.0).any() || (weights->wths.array() < 0.0).any())
            throw ParameterError("OCP: weight overrides must be nonnegative");
    }
    solver.validate();
}

void ocp_bounds(const OcpConfig& cfg, const BuildingParameters& params, const DiscreteModel& model,
                const OcpInputs& in, Eigen::VectorXd& l, Eigen::VectorXd& u) {
    const L lay{cfg.np};
    if (in.frame == nullptr) throw DimensionError("OCP: no forecast frame");
    if (in.k < 0 || in.k + cfg.np > in.frame->length())
        throw DimensionError("OCP: forecast frame does not cover the horizon from row " + std::to_string(in.k));
    if (in.x0.theta.size() != kNumZones || !in.x0.theta.allFinite()) throw DimensionError("OCP: bad initial state");
    if (in.eps_hat.rows() != cfg.np || in.eps_hat.cols() != kNumZones || !in.eps_hat.allFinite())
        throw DimensionError("OCP: eps_hat must be a finite Np x 9 matrix");
    if (l.size() != lay.num_constraints() || u.size() != lay.num_constraints())
        throw DimensionError("OCP: bound vectors have the wrong size");

    // Temperatures are deviations from theta_ref, so each stage carries (A - I) ref.
    const Eigen::VectorXd ref = Eigen::VectorXd::Constant(kNumZones, cfg.theta_ref);
    const Eigen::VectorXd ax0 = model.a * in.x0.theta - ref;
    const Eigen::VectorXd aref = model.a * ref - ref;
    for (int n = 0; n < cfg.np; ++n) {
        const Disturbance d = in.frame->disturbance(in.k + n, params.q_other);
        Eigen::VectorXd rhs = model.s * d.thermal_vector() + in.eps_hat.row(n).transpose();
        rhs += n == 0 ? ax0 : aref;
        for (int i = 0; i < kNumZones; ++i) l[lay.row(n, L::kRowDynamics + i)] = u[lay.row(n, L::kRowDynamics + i)] = rhs[i];
        const double eb = n == 0 ? in.e0.e_bat : 0.0;
        l[lay.row(n, L::kRowBattery)] = u[lay.row(n, L::kRowBattery)] = eb;
        const double bal = -d.p_dem - d.p_pv;
        l[lay.row(n, L::kRowBalance)] = u[lay.row(n, L::kRowBalance)] = bal;
    }
}

QpProblem build_ocp(const OcpConfig& cfg, const BuildingParameters& params, const DiscreteModel& model,
                    const OcpInputs& inputs) {
    QpProblem qp = ocp_structure(cfg, params, model);
    ocp_bounds(cfg, params, model, inputs, qp.l, qp.u);
    return qp;
}

ObjectiveBreakdown objective_breakdown(const OcpConfig& cfg, const BuildingParameters& params,
                                       const Eigen::VectorXd& z) {
    const L lay{cfg.np};
    if (z.size() != lay.num_variables()) throw DimensionError("objective_breakdown: wrong decision vector size");
    const ZoneWeights w = effective_weights(cfg, params);
    const double ts = params.ts;
    ObjectiveBreakdown b;
    for (int n = 0; n < cfg.np; ++n) {
        for (int i = 0; i < kNumBuildingZones; ++i) {
            const double dev = z[lay.var(n, L::kTheta + i)];
            b.j_comf += w.wthb[i] * dev * dev;
        }
        for (int j = 0; j < kNumServerZones; ++j)
            b.j_server += w.wths[j] * (z[lay.var(n, L::kSLo + j)] + z[lay.var(n, L::kSHi + j)]);
        b.j_mon += (cfg.c_buy * z[lay.var(n, L::kPBuy)] - cfg.c_sell * z[lay.var(n, L::kPSell)] +
                    cfg.c_gas * (z[lay.var(n, L::kQRad)] / cfg.eta_boiler + z[lay.var(n, L::kPChp)] / cfg.eta_chp_el)) *
                   ts;
    }
    b.j_mon += cfg.c_peak * z[lay.peak()];
    b.total = cfg.w_comf * b.j_comf + cfg.w_server * b.j_server + cfg.w_mon * b.j_mon;
    return b;
}

Eigen::VectorXd predicted_theta(const OcpConfig& cfg, const Eigen::VectorXd& z, int stage) {
    const L lay{cfg.np};
    if (stage < 0 || stage >= cfg.np || z.size() != lay.num_variables())
        throw DimensionError("predicted_theta: stage or decision vector out of range");
    return z.segment(lay.var(stage, L::kTheta), kNumZones).array() + cfg.theta_ref;
}

std::pair<ThermalInput, ElectricalInput> applied_inputs(const BuildingParameters& params, const Eigen::VectorXd& z,
                                                        const ElectricalState& e0, const Disturbance& d) {
    const OperatingBounds& b = params.bounds;
    ThermalInput th = ThermalInput::zero(kNumBuildingZones, kNumZones);
    for (int i = 0; i < kNumBuildingZones; ++i) th.q_heat[i] = std::clamp(z[L::kQHeat + i], 0.0, b.q_heat_max);
    for (int i = 0; i < kNumZones; ++i) th.q_cool[i] = std::clamp(z[L::kQCool + i], b.q_cool_min, 0.0);

    ElectricalInput el;
    el.q_heat_total = th.q_heat.sum();
    el.q_cool_total = th.q_cool.sum();
    const double chp_hi = std::min(params.p_chp_max, params.c_chp * el.q_heat_total);
    el.p_chp = std::clamp(z[L::kPChp], std::min(b.p_chp_min, chp_hi), chp_hi);
    el.q_rad = std::max(0.0, el.q_heat_total - el.p_chp / params.c_chp);
    const double bat_lo = std::max(b.p_bat_min, (b.e_bat_min - e0.e_bat) / params.ts);
    const double bat_hi = std::min(b.p_bat_max, (params.e_bat_max - e0.e_bat) / params.ts);
    el.p_bat = bat_lo <= bat_hi ? std::clamp(z[L::kPBat], bat_lo, bat_hi) : 0.0;
    el.p_grid = el.p_bat - el.p_chp - el.q_cool_total / params.eps_c - d.p_dem - d.p_pv;
    return {th, el};
}

std::pair<ThermalInput, ElectricalInput> failsafe_inputs(const Disturbance& d) {
    ElectricalInput el;
    el.p_grid = -d.p_dem - d.p_pv;
    return {ThermalInput::zero(kNumBuildingZones, kNumZones), el};
}

MpcController::MpcController(BuildingParameters params, OcpConfig cfg)
    : MpcController(params, discretize(params), std::move(cfg)) {}

MpcController::MpcController(BuildingParameters params, DiscreteModel model, OcpConfig cfg)
    : params_(std::move(params)), model_(std::move(model)), cfg_(std::move(cfg)) {
    QpProblem qp = ocp_structure(cfg_, params_, model_);
    l_ = qp.l;
    u_ = qp.u;
    solver_.emplace(std::move(qp), cfg_.solver);
}

MpcDecision MpcController::step(const OcpInputs& inputs) {
    const L lay{cfg_.np};
    ocp_bounds(cfg_, params_, model_, inputs, l_, u_);
    solver_->update_bounds(l_, u_);
    if (warm_) {
        solver_->warm_start(shift_stages(z_prev_, cfg_.np, L::kStageSize, 0),
                            shift_stages(y_prev_, cfg_.np, L::kStageSize, L::kStageRows));
    } else {
        solver_->warm_start(Eigen::VectorXd::Zero(lay.num_variables()), Eigen::VectorXd::Zero(lay.num_constraints()));
    }
    const QpResult r = solver_->solve();

    MpcDecision out;
    out.solution.status = r.status;
    out.solution.z = r.x;
    out.solution.y = r.y;
    out.solution.objective = r.objective;
    out.solution.iterations = r.iterations;
    out.solution.polished = r.polished;
    out.solution.residuals = r.residuals;
    out.solution.breakdown = objective_breakdown(cfg_, params_, r.x);

    const Disturbance d = inputs.frame->disturbance(inputs.k, params_.q_other);
    if (r.status == QpStatus::Infeasible || !r.x.allFinite()) {
        std::tie(out.thermal, out.electrical) = failsafe_inputs(d);
        out.failsafe = true;
        warm_ = false;
    } else {
        std::tie(out.thermal, out.electrical) = applied_inputs(params_, r.x, inputs.e0, d);
        z_prev_ = r.x;
        y_prev_ = r.y;
        warm_ = true;
    }
    return out;
}

MpcDecision mpc_step(const OcpConfig& cfg, const BuildingParameters& params, const DiscreteModel& model,
                     const OcpInputs& inputs) {
    MpcController c(params, model, cfg);
    return c.step(inputs);
}

}  // namespace silmpc
