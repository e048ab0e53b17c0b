#pragma once

// Random strictly convex box + equality QPs with a known feasible point.

#include <random>
#include <vector>

#include "qp_oracle.hpp"
#include "silmpc/qp_solver.hpp"

namespace silmpc::oracle {

inline BoxEqQp random_box_eq_qp(std::mt19937_64& rng, int n, int n_eq) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> width(0.05, 1.0);
    BoxEqQp qp;
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = unit(rng);
    qp.p = m.transpose() * m / n + 0.1 * Eigen::MatrixXd::Identity(n, n);
    qp.q.resize(n);
    for (int i = 0; i < n; ++i) qp.q[i] = 3.0 * unit(rng);
    Eigen::VectorXd x0(n);
    for (int i = 0; i < n; ++i) x0[i] = unit(rng);
    qp.lo.resize(n);
    qp.hi.resize(n);
    for (int i = 0; i < n; ++i) {
        qp.lo[i] = x0[i] - width(rng);
        qp.hi[i] = x0[i] + width(rng);
    }
    qp.e.resize(n_eq, n);
    for (int i = 0; i < n_eq; ++i)
        for (int j = 0; j < n; ++j) qp.e(i, j) = unit(rng);
    qp.b = qp.e * x0;
    return qp;
}

inline QpProblem to_qp_problem(const BoxEqQp& qp) {
    const auto n = static_cast<int>(qp.q.size());
    const auto n_eq = static_cast<int>(qp.e.rows());
    QpProblem p;
    p.p = qp.p.sparseView();
    p.q = qp.q;
    std::vector<Eigen::Triplet<double, int>> t;
    for (int i = 0; i < n_eq; ++i)
        for (int j = 0; j < n; ++j) t.emplace_back(i, j, qp.e(i, j));
    for (int j = 0; j < n; ++j) t.emplace_back(n_eq + j, j, 1.0);
    p.a.resize(n_eq + n, n);
    p.a.setFromTriplets(t.begin(), t.end());
    p.l.resize(n_eq + n);
    p.u.resize(n_eq + n);
    p.l << qp.b, qp.lo;
    p.u << qp.b, qp.hi;
    return p;
}

}  // namespace silmpc::oracle
