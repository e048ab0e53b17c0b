#pragma once

// Convex QP solver based on operator splitting (ADMM) with Ruiz
// equilibration, adaptive step size, primal infeasibility detection and
// active-set polishing.
//
//   minimize    0.5 x'Px + q'x + constant
//   subject to  l <= Ax <= u
//
// Bounds at or beyond +-kQpInfinity are treated as absent. Variable bounds are
// ordinary rows of A.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace silmpc {

inline constexpr double kQpInfinity = 1e30;

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

struct QpProblem {
    SparseMatrix p;  // n x n, symmetric PSD, both triangles stored
    Eigen::VectorXd q;
    SparseMatrix a;  // m x n
    Eigen::VectorXd l;
    Eigen::VectorXd u;
    double constant = 0.0;

    int num_variables() const { return static_cast<int>(q.size()); }
    int num_constraints() const { return static_cast<int>(l.size()); }
    double objective(const Eigen::VectorXd& x) const;

    // Throws DimensionError / ParameterError.
    void validate() const;
};

enum class QpStatus { Optimal, MaxIterations, Infeasible };
std::string to_string(QpStatus status);

struct QpSettings {
    double eps_abs = 1e-6;
    double eps_rel = 1e-6;
    double eps_prim_inf = 1e-8;
    int max_iter = 20000;
    double rho = 0.1;
    double sigma = 1e-6;
    double alpha = 1.6;
    bool adaptive_rho = true;
    double adaptive_rho_tolerance = 5.0;  // refactor when rho would change by more than this factor
    int check_interval = 5;
    int adaptive_rho_interval = 25;
    int scaling_iter = 10;
    bool polish = true;
    int polish_refine_iter = 5;
    double polish_delta = 1e-7;

    void validate() const;
};

struct KktResiduals {
    double primal = 0.0;           // ||Ax - proj_[l,u](Ax)||_inf
    double dual = 0.0;             // ||Px + q + A'y||_inf
    double complementarity = 0.0;  // max_i |y_i| times the gap to the bound its sign selects
};

// y > 0 prices the upper bound, y < 0 the lower bound.
KktResiduals kkt_residuals(const QpProblem& p, const Eigen::VectorXd& x, const Eigen::VectorXd& y);

struct QpResult {
    QpStatus status = QpStatus::MaxIterations;
    Eigen::VectorXd x;
    Eigen::VectorXd y;
    double objective = 0.0;
    int iterations = 0;
    int refactorizations = 0;
    bool polished = false;
    KktResiduals residuals;
};

// Keeps the scaled problem and the KKT factorization between solves, so a
// sequence of problems sharing P and A only pays for vector updates.
class QpSolver {
public:
    explicit QpSolver(QpProblem problem, QpSettings settings = {});
    ~QpSolver();
    QpSolver(QpSolver&&) noexcept;
    QpSolver& operator=(QpSolver&&) noexcept;

    void update_bounds(const Eigen::VectorXd& l, const Eigen::VectorXd& u);
    void update_linear_cost(const Eigen::VectorXd& q, double constant);
    void warm_start(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

    QpResult solve();

    const QpProblem& problem() const;
    const QpSettings& settings() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

QpResult solve_qp(const QpProblem& problem, const QpSettings& settings = {});

// Plain-text problem file; see docs/qp_format.md.
void write_qp(const QpProblem& problem, std::ostream& out);
QpProblem read_qp(std::istream& in);

}  // namespace silmpc
