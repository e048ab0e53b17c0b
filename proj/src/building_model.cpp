#include "silmpc/building_model.hpp"

#include <cmath>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "silmpc/errors.hpp"

namespace silmpc {

void ThermalNetwork::validate() const {
    const int n = size();
    if (n == 0) throw ParameterError("thermal network has no zones");
    if (beta.rows() != n || beta.cols() != n || ha.size() != n)
        throw ParameterError("thermal network dimensions disagree");
    if (n_heated < 0 || n_heated > n) throw ParameterError("n_heated out of range");
    for (int i = 0; i < n; ++i) {
        if (!(cth[i] > 0.0) || !std::isfinite(cth[i]))
            throw ParameterError("cth[" + std::to_string(i) + "] must be positive");
        if (!(ha[i] >= 0.0) || !std::isfinite(ha[i]))
            throw ParameterError("ha[" + std::to_string(i) + "] must be nonnegative");
        if (beta(i, i) != 0.0) throw ParameterError("beta must have a zero diagonal");
        for (int j = 0; j < n; ++j) {
            if (!(beta(i, j) >= 0.0) || !std::isfinite(beta(i, j)))
                throw ParameterError("beta entries must be nonnegative");
            if (beta(i, j) != beta(j, i)) throw ParameterError("beta must be symmetric");
        }
    }
}

BuildingParameters BuildingParameters::defaults() {
    BuildingParameters p;
    ThermalNetwork& net = p.network;
    net.n_heated = kNumBuildingZones;
    // offices, hall A, hall B, emissions lab, workshop, meeting, storage, server 1, server 2
    net.cth.resize(kNumZones);
    net.cth << 60.0, 120.0, 90.0, 40.0, 80.0, 30.0, 50.0, 8.0, 6.0;
    net.ha.resize(kNumZones);
    net.ha << 2.0, 3.0, 2.5, 1.0, 2.2, 0.8, 1.4, 0.5, 0.5;
    net.beta = Eigen::MatrixXd::Zero(kNumZones, kNumZones);
    const double chain[kNumZones - 1] = {1.2, 0.8, 1.5, 0.6, 1.0, 0.7, 0.5, 0.9};
    for (int i = 0; i + 1 < kNumZones; ++i) {
        net.beta(i, i + 1) = chain[i];
        net.beta(i + 1, i) = chain[i];
    }
    p.q_other.resize(kNumZones);
    p.q_other << -3.0, -5.0, -4.0, -1.5, -3.5, -1.0, -2.0, 12.0, 8.0;
    return p;
}

void BuildingParameters::validate() const {
    network.validate();
    if (q_other.size() != network.size()) throw ParameterError("q_other must have one entry per zone");
    if (!(eps_c > 0.0)) throw ParameterError("eps_c must be positive");
    if (!(c_chp > 0.0)) throw ParameterError("c_chp must be positive");
    if (!(ts > 0.0)) throw ParameterError("ts must be positive");
    if (!(p_chp_max >= bounds.p_chp_min)) throw ParameterError("p_chp_max below p_chp_min");
    if (!(e_bat_max >= bounds.e_bat_min)) throw ParameterError("e_bat_max below e_bat_min");
    if (!(bounds.p_bat_max >= bounds.p_bat_min)) throw ParameterError("p_bat bounds inverted");
    if (!(bounds.theta_max > bounds.theta_min)) throw ParameterError("theta bounds inverted");
    if (bounds.q_heat_max < 0.0 || bounds.q_cool_min > 0.0 || bounds.q_rad_max < 0.0)
        throw ParameterError("heating/cooling bounds violate sign conventions");
    if (bounds.p_buy_max < 0.0 || bounds.p_sell_max < 0.0) throw ParameterError("grid bounds must be nonnegative");
}

ThermalInput ThermalInput::zero(int n_heated, int n_zones) {
    return {Eigen::VectorXd::Zero(n_heated), Eigen::VectorXd::Zero(n_zones)};
}

Eigen::VectorXd ThermalInput::stacked() const {
    Eigen::VectorXd u(q_heat.size() + q_cool.size());
    u << q_heat, q_cool;
    return u;
}

Eigen::VectorXd Disturbance::thermal_vector() const {
    Eigen::VectorXd d(1 + q_other.size());
    d << theta_air, q_other;
    return d;
}

ContinuousModel continuous_matrices(const ThermalNetwork& network) {
    network.validate();
    const int n = network.size();
    ContinuousModel m;
    m.ac = Eigen::MatrixXd::Zero(n, n);
    m.bc = Eigen::MatrixXd::Zero(n, network.num_inputs());
    m.sc = Eigen::MatrixXd::Zero(n, network.num_disturbances());
    for (int i = 0; i < n; ++i) {
        const double inv_c = 1.0 / network.cth[i];
        double outflow = network.ha[i];
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            m.ac(i, j) = network.beta(i, j) * inv_c;
            outflow += network.beta(i, j);
        }
        m.ac(i, i) = -outflow * inv_c;
        if (i < network.n_heated) m.bc(i, i) = inv_c;
        m.bc(i, network.n_heated + i) = inv_c;
        m.sc(i, 0) = network.ha[i] * inv_c;
        m.sc(i, 1 + i) = inv_c;
    }
    return m;
}

DiscreteModel discretize(const ThermalNetwork& network, double ts) {
    if (!(ts > 0.0)) throw ParameterError("sampling time must be positive");
    const ContinuousModel c = continuous_matrices(network);
    const int n = network.size();
    const int nu = network.num_inputs();
    const int nd = network.num_disturbances();
    const int dim = n + nu + nd;

    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(dim, dim);
    aug.block(0, 0, n, n) = c.ac * ts;
    aug.block(0, n, n, nu) = c.bc * ts;
    aug.block(0, n + nu, n, nd) = c.sc * ts;
    const Eigen::MatrixXd phi = aug.exp();
    if (!phi.allFinite()) throw NumericalError("matrix exponential did not converge");

    DiscreteModel m;
    m.a = phi.block(0, 0, n, n);
    m.b = phi.block(0, n, n, nu);
    m.s = phi.block(0, n + nu, n, nd);
    m.ts = ts;
    m.n_heated = network.n_heated;
    return m;
}

DiscreteModel discretize(const BuildingParameters& params) {
    params.validate();
    return discretize(params.network, params.ts);
}

Eigen::VectorXd step_thermal(const DiscreteModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                             const Eigen::VectorXd& d, const Eigen::VectorXd& eps) {
    const int n = model.num_zones();
    if (x.size() != n || u.size() != model.b.cols() || d.size() != model.s.cols() || eps.size() != n)
        throw DimensionError("step_thermal: dimension mismatch");
    return model.a * x + model.b * u + model.s * d + eps;
}

ThermalState step_thermal(const DiscreteModel& model, const ThermalState& x, const ThermalInput& u,
                          const Disturbance& d, const Eigen::VectorXd& eps) {
    return {step_thermal(model, x.theta, u.stacked(), d.thermal_vector(), eps)};
}

ElectricalState step_battery(ElectricalState e, double p_bat, double ts) {
    e.e_bat += p_bat * ts;
    return e;
}

double balance_residual(const ElectricalInput& u, const Disturbance& d, double eps_c) {
    return u.p_grid - u.p_bat + u.p_chp + u.q_cool_total / eps_c + d.p_dem + d.p_pv;
}

double coupling_residual(const ThermalInput& thermal, const ElectricalInput& electrical, double c_chp) {
    const double q_chp = electrical.p_chp / c_chp;
    double r = std::abs(electrical.q_heat_total - (electrical.q_rad + q_chp));
    r = std::max(r, std::abs(electrical.q_heat_total - thermal.q_heat.sum()));
    r = std::max(r, std::abs(electrical.q_cool_total - thermal.q_cool.sum()));
    return r;
}

Eigen::VectorXd residual_to_kw(const Eigen::VectorXd& eps, const Eigen::VectorXd& cth, double ts) {
    if (eps.size() != cth.size()) throw DimensionError("residual_to_kw: dimension mismatch");
    return eps.cwiseProduct(cth) / ts;
}

}  // namespace silmpc
