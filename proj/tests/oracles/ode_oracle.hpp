#pragma once

// Fine-step RK4 integration of the zone heat balance, written directly from
// the network parameters so it shares no code with the library's matrices.

#include <Eigen/Dense>

#include "silmpc/building_model.hpp"
#include "silmpc/rng.hpp"

namespace silmpc::oracle {

// dtheta_i/dt = (sum_j beta_ij (theta_j - theta_i) + ha_i (theta_air - theta_i) + u_i + q_other_i) / cth_i
inline Eigen::VectorXd zone_derivative(const ThermalNetwork& net, const Eigen::VectorXd& theta, double theta_air,
                                       const Eigen::VectorXd& heat_in) {
    const int n = net.size();
    Eigen::VectorXd dx(n);
    for (int i = 0; i < n; ++i) {
        double q = heat_in[i] + net.ha[i] * (theta_air - theta[i]);
        for (int j = 0; j < n; ++j) q += net.beta(i, j) * (theta[j] - theta[i]);
        dx[i] = q / net.cth[i];
    }
    return dx;
}

// Inputs held constant over [0, t_end]; heat_in collects q_heat, q_cool and q_other per zone.
inline Eigen::VectorXd integrate_rk4(const ThermalNetwork& net, Eigen::VectorXd theta, double theta_air,
                                     const Eigen::VectorXd& heat_in, double t_end, double h = 1e-4) {
    const long steps = std::lround(t_end / h);
    const double dt = t_end / static_cast<double>(steps);
    for (long s = 0; s < steps; ++s) {
        const Eigen::VectorXd k1 = zone_derivative(net, theta, theta_air, heat_in);
        const Eigen::VectorXd k2 = zone_derivative(net, theta + 0.5 * dt * k1, theta_air, heat_in);
        const Eigen::VectorXd k3 = zone_derivative(net, theta + 0.5 * dt * k2, theta_air, heat_in);
        const Eigen::VectorXd k4 = zone_derivative(net, theta + dt * k3, theta_air, heat_in);
        theta += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return theta;
}

// Random valid 9-zone network on a chain with a few extra links.
inline ThermalNetwork random_network(std::uint64_t seed) {
    auto u = [&, i = std::uint64_t{0}](double lo, double hi) mutable {
        return lo + (hi - lo) * hashed_uniform(seed, 0, i++);
    };
    ThermalNetwork net;
    net.n_heated = kNumBuildingZones;
    net.cth.resize(kNumZones);
    net.ha.resize(kNumZones);
    net.beta = Eigen::MatrixXd::Zero(kNumZones, kNumZones);
    for (int i = 0; i < kNumZones; ++i) {
        net.cth[i] = i < kNumBuildingZones ? u(20.0, 120.0) : u(5.0, 10.0);
        net.ha[i] = u(0.5, 3.0);
    }
    for (int i = 0; i + 1 < kNumZones; ++i) net.beta(i, i + 1) = net.beta(i + 1, i) = u(0.5, 2.0);
    for (int extra = 0; extra < 3; ++extra) {
        const int i = static_cast<int>(u(0.0, kNumZones - 0.001));
        const int j = static_cast<int>(u(0.0, kNumZones - 0.001));
        if (i != j) net.beta(i, j) = net.beta(j, i) = u(0.1, 1.0);
    }
    return net;
}

}  // namespace silmpc::oracle
