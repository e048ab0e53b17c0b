#include "silmpc/qp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <vector>

#include <Eigen/SparseCholesky>

#include "silmpc/errors.hpp"
#include "silmpc/format.hpp"

namespace silmpc {
namespace {

constexpr double kInfThreshold = 1e20;
constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;
constexpr double kEqualityRhoFactor = 1e3;
constexpr int kPolishPasses = 4;
constexpr double kScalingMin = 1e-4;
constexpr double kScalingMax = 1e4;
constexpr double kDivGuard = 1e-10;

using Ldlt = Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;
using Triplet = Eigen::Triplet<double, int>;

bool is_inf(double v) { return std::abs(v) >= kInfThreshold; }

double inf_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

Eigen::VectorXd col_inf_norms(const SparseMatrix& m) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(m.cols());
    for (int j = 0; j < m.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(m, j); it; ++it) out[j] = std::max(out[j], std::abs(it.value()));
    return out;
}

Eigen::VectorXd row_inf_norms(const SparseMatrix& m) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(m.rows());
    for (int j = 0; j < m.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(m, j); it; ++it)
            out[it.row()] = std::max(out[it.row()], std::abs(it.value()));
    return out;
}

Eigen::VectorXd scaling_from_norms(const Eigen::VectorXd& norms) {
    Eigen::VectorXd s(norms.size());
    for (Eigen::Index i = 0; i < norms.size(); ++i) {
        const double v = norms[i] < kScalingMin ? 1.0 : std::min(norms[i], kScalingMax);
        s[i] = 1.0 / std::sqrt(v);
    }
    return s;
}

Eigen::VectorXd project(const Eigen::VectorXd& v, const Eigen::VectorXd& l, const Eigen::VectorXd& u) {
    return v.cwiseMax(l).cwiseMin(u);
}

// Solves K x = b for the quasi-definite factorization `f` and refines the
// result against the exact matrix `exact` (lower triangle, symmetric).
Eigen::VectorXd refined_solve(const Ldlt& f, const SparseMatrix& exact, const Eigen::VectorXd& b, int iters) {
    Eigen::VectorXd x = f.solve(b);
    for (int i = 0; i < iters; ++i) {
        const Eigen::VectorXd r = b - exact.selfadjointView<Eigen::Lower>() * x;
        x += f.solve(r);
    }
    return x;
}

}  // namespace

double QpProblem::objective(const Eigen::VectorXd& x) const { return 0.5 * x.dot(p * x) + q.dot(x) + constant; }

void QpProblem::validate() const {
    const auto n = q.size();
    if (p.rows() != n || p.cols() != n) throw DimensionError("QP: P must be n x n");
    if (a.cols() != n) throw DimensionError("QP: A must have n columns");
    if (l.size() != a.rows() || u.size() != a.rows()) throw DimensionError("QP: bounds must match rows of A");
    for (Eigen::Index i = 0; i < l.size(); ++i) {
        if (std::isnan(l[i]) || std::isnan(u[i])) throw ParameterError("QP: NaN bound in row " + std::to_string(i));
        if (l[i] > u[i]) throw ParameterError("QP: l > u in row " + std::to_string(i));
    }
    if (!q.allFinite() || !std::isfinite(constant)) throw ParameterError("QP: non-finite cost data");
    for (const SparseMatrix* m : {&p, &a})
        for (int j = 0; j < m->outerSize(); ++j)
            for (SparseMatrix::InnerIterator it(*m, j); it; ++it)
                if (!std::isfinite(it.value())) throw ParameterError("QP: non-finite matrix entry");
    if (n > 0) {
        const SparseMatrix asym = SparseMatrix(p.transpose()) - p;
        double scale = 1.0;
        for (int j = 0; j < p.outerSize(); ++j)
            for (SparseMatrix::InnerIterator it(p, j); it; ++it) scale = std::max(scale, std::abs(it.value()));
        for (int j = 0; j < asym.outerSize(); ++j)
            for (SparseMatrix::InnerIterator it(asym, j); it; ++it)
                if (std::abs(it.value()) > 1e-12 * scale) throw ParameterError("QP: P is not symmetric");
    }
}

std::string to_string(QpStatus status) {
    switch (status) {
        case QpStatus::Optimal: return "optimal";
        case QpStatus::MaxIterations: return "max-iter";
        case QpStatus::Infeasible: return "infeasible";
    }
    return "unknown";
}

void QpSettings::validate() const {
    if (!(eps_abs >= 0.0) || !(eps_rel >= 0.0) || eps_abs + eps_rel <= 0.0) throw ParameterError("QP tolerances");
    if (max_iter < 1 || check_interval < 1 || adaptive_rho_interval < 1 || scaling_iter < 0)
        throw ParameterError("QP iteration settings");
    if (!(rho > 0.0) || !(sigma > 0.0) || !(alpha > 0.0 && alpha < 2.0)) throw ParameterError("QP step settings");
    if (!(adaptive_rho_tolerance > 1.0) || !(polish_delta > 0.0) || polish_refine_iter < 0)
        throw ParameterError("QP polish/adaptation settings");
}

KktResiduals kkt_residuals(const QpProblem& p, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    KktResiduals r;
    const Eigen::VectorXd ax = p.a * x;
    for (Eigen::Index i = 0; i < ax.size(); ++i) {
        if (!is_inf(p.u[i])) r.primal = std::max(r.primal, ax[i] - p.u[i]);
        if (!is_inf(p.l[i])) r.primal = std::max(r.primal, p.l[i] - ax[i]);
        if (y[i] > 0.0)
            r.complementarity = std::max(r.complementarity, is_inf(p.u[i]) ? y[i] : y[i] * std::abs(p.u[i] - ax[i]));
        else if (y[i] < 0.0)
            r.complementarity =
                std::max(r.complementarity, is_inf(p.l[i]) ? -y[i] : -y[i] * std::abs(ax[i] - p.l[i]));
    }
    r.dual = inf_norm(p.p * x + p.q + p.a.transpose() * y);
    return r;
}

struct QpSolver::Impl {
    QpProblem orig;
    QpSettings set;
    int n = 0;
    int m = 0;

    SparseMatrix ps, as, ast;
    Eigen::VectorXd qs, ls, us;
    Eigen::VectorXd d, e, dinv, einv;
    double c = 1.0;

    enum class RowKind { Free, Inequality, Equality };
    std::vector<RowKind> kinds;
    double rho = 0.1;
    Eigen::VectorXd rho_vec, rho_inv;

    SparseMatrix kkt;
    std::vector<int> rho_slots;
    Ldlt ldlt;
    int refactorizations = 0;

    Eigen::VectorXd x, z, y;

    Impl(QpProblem p, QpSettings s) : orig(std::move(p)), set(s) {
        orig.validate();
        set.validate();
        n = orig.num_variables();
        m = orig.num_constraints();
        orig.p.makeCompressed();
        orig.a.makeCompressed();
        scale();
        rho = set.rho;
        classify_rows();
        build_kkt();
        x = Eigen::VectorXd::Zero(n);
        z = Eigen::VectorXd::Zero(m);
        y = Eigen::VectorXd::Zero(m);
    }

    void scale() {
        ps = orig.p;
        as = orig.a;
        d = Eigen::VectorXd::Ones(n);
        e = Eigen::VectorXd::Ones(m);
        c = 1.0;
        Eigen::VectorXd q = orig.q;
        for (int it = 0; it < set.scaling_iter; ++it) {
            const Eigen::VectorXd pn = col_inf_norms(ps);
            const Eigen::VectorXd an = col_inf_norms(as);
            const Eigen::VectorXd dt = scaling_from_norms(pn.cwiseMax(an));
            const Eigen::VectorXd et = scaling_from_norms(row_inf_norms(as));
            ps = dt.asDiagonal() * ps * dt.asDiagonal();
            as = et.asDiagonal() * as * dt.asDiagonal();
            q = q.cwiseProduct(dt);
            d = d.cwiseProduct(dt);
            e = e.cwiseProduct(et);

            const double mean_p = n > 0 ? col_inf_norms(ps).mean() : 0.0;
            double cost = std::max(mean_p, inf_norm(q));
            cost = cost < kScalingMin ? 1.0 : std::min(cost, kScalingMax);
            const double ct = 1.0 / cost;
            ps *= ct;
            q *= ct;
            c *= ct;
        }
        ps.makeCompressed();
        as.makeCompressed();
        ast = as.transpose();
        dinv = d.cwiseInverse();
        einv = e.cwiseInverse();
        qs = q;
        scale_bounds();
    }

    void scale_bounds() {
        ls.resize(m);
        us.resize(m);
        for (int i = 0; i < m; ++i) {
            ls[i] = is_inf(orig.l[i]) ? -kQpInfinity : e[i] * orig.l[i];
            us[i] = is_inf(orig.u[i]) ? kQpInfinity : e[i] * orig.u[i];
        }
    }

    void classify_rows() {
        kinds.assign(static_cast<std::size_t>(m), RowKind::Inequality);
        for (int i = 0; i < m; ++i) {
            if (is_inf(orig.l[i]) && is_inf(orig.u[i]))
                kinds[static_cast<std::size_t>(i)] = RowKind::Free;
            else if (orig.u[i] - orig.l[i] <= 1e-12 * std::max(1.0, std::abs(orig.l[i])))
                kinds[static_cast<std::size_t>(i)] = RowKind::Equality;
        }
        set_rho_vector();
    }

    void set_rho_vector() {
        rho_vec.resize(m);
        for (int i = 0; i < m; ++i) {
            switch (kinds[static_cast<std::size_t>(i)]) {
                case RowKind::Free: rho_vec[i] = kRhoMin; break;
                case RowKind::Equality: rho_vec[i] = kEqualityRhoFactor * rho; break;
                case RowKind::Inequality: rho_vec[i] = rho; break;
            }
        }
        rho_inv = rho_vec.cwiseInverse();
    }

    void build_kkt() {
        std::vector<Triplet> t;
        t.reserve(static_cast<std::size_t>(ps.nonZeros() + as.nonZeros() + n + m));
        for (int j = 0; j < n; ++j) {
            bool diag = false;
            for (SparseMatrix::InnerIterator it(ps, j); it; ++it) {
                if (it.row() < j) continue;
                t.emplace_back(it.row(), j, it.value() + (it.row() == j ? set.sigma : 0.0));
                diag = diag || it.row() == j;
            }
            if (!diag) t.emplace_back(j, j, set.sigma);
            for (SparseMatrix::InnerIterator it(as, j); it; ++it) t.emplace_back(n + it.row(), j, it.value());
        }
        for (int i = 0; i < m; ++i) t.emplace_back(n + i, n + i, -rho_inv[i]);
        kkt.resize(n + m, n + m);
        kkt.setFromTriplets(t.begin(), t.end());
        kkt.makeCompressed();
        rho_slots.resize(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) rho_slots[static_cast<std::size_t>(i)] = kkt.outerIndexPtr()[n + i];
        ldlt.analyzePattern(kkt);
        factorize();
    }

    void factorize() {
        for (int i = 0; i < m; ++i) kkt.valuePtr()[rho_slots[static_cast<std::size_t>(i)]] = -rho_inv[i];
        ldlt.factorize(kkt);
        if (ldlt.info() != Eigen::Success) throw NumericalError("QP: KKT factorization failed");
        ++refactorizations;
    }

    struct Residuals {
        double prim, dual, prim_norm, dual_norm;
    };

    Residuals residuals() const {
        const Eigen::VectorXd ax = as * x;
        const Eigen::VectorXd px = ps * x;
        const Eigen::VectorXd aty = ast * y;
        Residuals r{};
        r.prim = inf_norm(einv.cwiseProduct(ax - z));
        r.prim_norm = std::max(inf_norm(einv.cwiseProduct(ax)), inf_norm(einv.cwiseProduct(z)));
        const double cinv = 1.0 / c;
        r.dual = cinv * inf_norm(dinv.cwiseProduct(px + qs + aty));
        r.dual_norm = cinv * std::max({inf_norm(dinv.cwiseProduct(px)), inf_norm(dinv.cwiseProduct(aty)),
                                       inf_norm(dinv.cwiseProduct(qs))});
        return r;
    }

    bool converged(const Residuals& r) const {
        return r.prim <= set.eps_abs + set.eps_rel * r.prim_norm && r.dual <= set.eps_abs + set.eps_rel * r.dual_norm;
    }

    bool primal_infeasible(const Eigen::VectorXd& dy_scaled) const {
        const Eigen::VectorXd dy = e.cwiseProduct(dy_scaled);
        const double norm = inf_norm(dy);
        if (norm <= 1e-30) return false;
        const double tol = set.eps_prim_inf * norm;
        if (inf_norm(dinv.cwiseProduct(ast * dy_scaled)) > tol) return false;
        double support = 0.0;
        for (int i = 0; i < m; ++i) {
            if (dy[i] > 0.0) {
                if (is_inf(orig.u[i])) {
                    if (dy[i] > tol) return false;
                } else {
                    support += orig.u[i] * dy[i];
                }
            } else if (dy[i] < 0.0) {
                if (is_inf(orig.l[i])) {
                    if (-dy[i] > tol) return false;
                } else {
                    support += orig.l[i] * dy[i];
                }
            }
        }
        return support < -tol;
    }

    void adapt_rho(const Residuals& r) {
        const double prim_rel = r.prim / (r.prim_norm + kDivGuard);
        const double dual_rel = r.dual / (r.dual_norm + kDivGuard);
        const double proposed = std::clamp(rho * std::sqrt(prim_rel / (dual_rel + kDivGuard)), kRhoMin, kRhoMax);
        if (proposed > rho * set.adaptive_rho_tolerance || proposed < rho / set.adaptive_rho_tolerance) {
            rho = proposed;
            set_rho_vector();
            factorize();
        }
    }

    // Returns true when the polished iterate replaced (x, z, y). Degenerate
    // active sets can give multipliers of the wrong sign; those rows are
    // released and the reduced system is solved again.
    bool polish(const Residuals& admm) {
        std::vector<int> side(static_cast<std::size_t>(m), 0);  // -1 lower, +1 upper, 2 equality, 0 inactive
        for (int i = 0; i < m; ++i) {
            const auto kind = kinds[static_cast<std::size_t>(i)];
            if (kind == RowKind::Free) continue;
            if (kind == RowKind::Equality)
                side[static_cast<std::size_t>(i)] = 2;
            else if (z[i] - ls[i] < -y[i])
                side[static_cast<std::size_t>(i)] = -1;
            else if (us[i] - z[i] < y[i])
                side[static_cast<std::size_t>(i)] = 1;
        }
        for (int pass = 0; pass < kPolishPasses; ++pass) {
            std::vector<int> rows;
            for (int i = 0; i < m; ++i)
                if (side[static_cast<std::size_t>(i)] != 0) rows.push_back(i);
            Eigen::VectorXd sol;
            if (!reduced_kkt_solve(rows, side, sol)) return false;

            const int na = static_cast<int>(rows.size());
            bool released = false;
            Eigen::VectorXd yp = Eigen::VectorXd::Zero(m);
            for (int k = 0; k < na; ++k) {
                const int i = rows[static_cast<std::size_t>(k)];
                const int sd = side[static_cast<std::size_t>(i)];
                double v = sol[n + k];
                if ((sd == -1 && v > 0.0) || (sd == 1 && v < 0.0)) {
                    if (std::abs(v) > set.eps_abs) {
                        side[static_cast<std::size_t>(i)] = 0;
                        released = true;
                    }
                    v = 0.0;
                }
                yp[i] = v;
            }
            if (released) continue;

            const Eigen::VectorXd x_saved = x, z_saved = z, y_saved = y;
            x = sol.head(n);
            z = project(as * x, ls, us);
            y = yp;
            const Residuals r = residuals();
            if (r.prim <= std::max(admm.prim, set.eps_abs) && r.dual <= std::max(admm.dual, set.eps_abs)) return true;
            x = x_saved;
            z = z_saved;
            y = y_saved;
            return false;
        }
        return false;
    }

    bool reduced_kkt_solve(const std::vector<int>& rows, const std::vector<int>& side, Eigen::VectorXd& sol) const {
        const int na = static_cast<int>(rows.size());
        std::vector<int> row_pos(static_cast<std::size_t>(m), -1);
        for (int k = 0; k < na; ++k) row_pos[static_cast<std::size_t>(rows[static_cast<std::size_t>(k)])] = k;

        std::vector<Triplet> t_exact;
        for (int j = 0; j < n; ++j) {
            bool diag = false;
            for (SparseMatrix::InnerIterator it(ps, j); it; ++it) {
                if (it.row() < j) continue;
                t_exact.emplace_back(it.row(), j, it.value());
                diag = diag || it.row() == j;
            }
            if (!diag) t_exact.emplace_back(j, j, 0.0);
            for (SparseMatrix::InnerIterator it(as, j); it; ++it) {
                const int k = row_pos[static_cast<std::size_t>(it.row())];
                if (k >= 0) t_exact.emplace_back(n + k, j, it.value());
            }
        }
        for (int k = 0; k < na; ++k) t_exact.emplace_back(n + k, n + k, 0.0);
        std::vector<Triplet> t = t_exact;
        for (int j = 0; j < n; ++j) t.emplace_back(j, j, set.polish_delta);
        for (int k = 0; k < na; ++k) t.emplace_back(n + k, n + k, -set.polish_delta);

        SparseMatrix k_exact(n + na, n + na), k_reg(n + na, n + na);
        k_exact.setFromTriplets(t_exact.begin(), t_exact.end());
        k_reg.setFromTriplets(t.begin(), t.end());
        Ldlt f;
        f.compute(k_reg);
        if (f.info() != Eigen::Success) return false;

        Eigen::VectorXd rhs(n + na);
        rhs.head(n) = -qs;
        for (int k = 0; k < na; ++k) {
            const int i = rows[static_cast<std::size_t>(k)];
            rhs[n + k] = side[static_cast<std::size_t>(i)] == 1 ? us[i] : ls[i];
        }
        sol = refined_solve(f, k_exact, rhs, set.polish_refine_iter);
        return sol.allFinite();
    }

    QpResult solve() {
        QpResult res;
        Eigen::VectorXd rhs(n + m);
        Eigen::VectorXd y_prev = y;
        Eigen::VectorXd xt(n), zt(m), zrelax(m);
        bool done = false;
        int iter = 0;
        Residuals r{};
        const int start_refactorizations = refactorizations;
        for (iter = 1; iter <= set.max_iter; ++iter) {
            y_prev = y;
            rhs.head(n) = set.sigma * x - qs;
            rhs.tail(m) = z - rho_inv.cwiseProduct(y);
            const Eigen::VectorXd sol = ldlt.solve(rhs);
            xt = sol.head(n);
            zt = z + rho_inv.cwiseProduct(sol.tail(m) - y);
            x = set.alpha * xt + (1.0 - set.alpha) * x;
            zrelax = set.alpha * zt + (1.0 - set.alpha) * z;
            z = project(zrelax + rho_inv.cwiseProduct(y), ls, us);
            y += rho_vec.cwiseProduct(zrelax - z);

            const bool check = iter % set.check_interval == 0 || iter == set.max_iter;
            if (!check) continue;
            r = residuals();
            if (converged(r)) {
                res.status = QpStatus::Optimal;
                done = true;
                break;
            }
            if (primal_infeasible(y - y_prev)) {
                res.status = QpStatus::Infeasible;
                done = true;
                break;
            }
            if (set.adaptive_rho && iter % set.adaptive_rho_interval == 0) adapt_rho(r);
        }
        if (!done) {
            res.status = QpStatus::MaxIterations;
            iter = set.max_iter;
        }
        if (res.status == QpStatus::Optimal && set.polish) res.polished = polish(r);

        res.iterations = iter;
        res.refactorizations = refactorizations - start_refactorizations;
        res.x = d.cwiseProduct(x);
        res.y = e.cwiseProduct(y) / c;
        res.objective = orig.objective(res.x);
        res.residuals = kkt_residuals(orig, res.x, res.y);
        return res;
    }
};

QpSolver::QpSolver(QpProblem problem, QpSettings settings)
    : impl_(std::make_unique<Impl>(std::move(problem), settings)) {}
QpSolver::~QpSolver() = default;
QpSolver::QpSolver(QpSolver&&) noexcept = default;
QpSolver& QpSolver::operator=(QpSolver&&) noexcept = default;

void QpSolver::update_bounds(const Eigen::VectorXd& l, const Eigen::VectorXd& u) {
    auto& s = *impl_;
    if (l.size() != s.m || u.size() != s.m) throw DimensionError("update_bounds: size mismatch");
    for (int i = 0; i < s.m; ++i) {
        if (std::isnan(l[i]) || std::isnan(u[i]) || l[i] > u[i])
            throw ParameterError("update_bounds: invalid bounds in row " + std::to_string(i));
        const bool eq_before = s.kinds[static_cast<std::size_t>(i)] == Impl::RowKind::Equality;
        const bool free_before = s.kinds[static_cast<std::size_t>(i)] == Impl::RowKind::Free;
        const bool eq_now = u[i] - l[i] <= 1e-12 * std::max(1.0, std::abs(l[i]));
        const bool free_now = is_inf(l[i]) && is_inf(u[i]);
        if (eq_before != eq_now || free_before != free_now)
            throw ParameterError("update_bounds: row " + std::to_string(i) + " changes its constraint type");
    }
    s.orig.l = l;
    s.orig.u = u;
    s.scale_bounds();
}

void QpSolver::update_linear_cost(const Eigen::VectorXd& q, double constant) {
    auto& s = *impl_;
    if (q.size() != s.n) throw DimensionError("update_linear_cost: size mismatch");
    if (!q.allFinite()) throw ParameterError("update_linear_cost: non-finite entries");
    s.orig.q = q;
    s.orig.constant = constant;
    s.qs = s.c * s.d.cwiseProduct(q);
}

void QpSolver::warm_start(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    auto& s = *impl_;
    if (x.size() != s.n || y.size() != s.m) throw DimensionError("warm_start: size mismatch");
    s.x = s.dinv.cwiseProduct(x);
    s.y = s.c * s.einv.cwiseProduct(y);
    s.z = project(s.as * s.x, s.ls, s.us);
}

QpResult QpSolver::solve() { return impl_->solve(); }
const QpProblem& QpSolver::problem() const { return impl_->orig; }
const QpSettings& QpSolver::settings() const { return impl_->set; }

QpResult solve_qp(const QpProblem& problem, const QpSettings& settings) {
    QpSolver solver(problem, settings);
    return solver.solve();
}

namespace {

void write_value(std::ostream& out, double v) {
    if (v >= kInfThreshold)
        out << "inf";
    else if (v <= -kInfThreshold)
        out << "-inf";
    else
        out << format_double(v);
}

void write_triplets(std::ostream& out, const char* name, const SparseMatrix& mat) {
    out << name << ' ' << mat.nonZeros() << '\n';
    for (int j = 0; j < mat.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(mat, j); it; ++it) {
            out << it.row() << ' ' << j << ' ';
            write_value(out, it.value());
            out << '\n';
        }
}

class Tokens {
public:
    explicit Tokens(std::istream& in) : in_(in) {}

    std::string word(const char* what) {
        std::string w;
        if (!(in_ >> w)) throw ParseError(std::string("QP file: expected ") + what);
        return w;
    }
    void expect(const std::string& keyword) {
        if (word(keyword.c_str()) != keyword) throw ParseError("QP file: expected keyword '" + keyword + "'");
    }
    long integer(const char* what) {
        const std::string w = word(what);
        std::size_t pos = 0;
        long v = 0;
        try {
            v = std::stol(w, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != w.size() || v < 0) throw ParseError(std::string("QP file: bad ") + what + " '" + w + "'");
        return v;
    }
    double number(const char* what) {
        const std::string w = word(what);
        double v = 0.0;
        if (!parse_double(w, v) || std::isnan(v)) throw ParseError(std::string("QP file: bad ") + what + " '" + w + "'");
        if (std::isinf(v)) v = v > 0 ? kQpInfinity : -kQpInfinity;
        return v;
    }

private:
    std::istream& in_;
};

SparseMatrix read_triplets(Tokens& tok, const char* name, long rows, long cols) {
    tok.expect(name);
    const long nnz = tok.integer("nonzero count");
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(nnz));
    for (long k = 0; k < nnz; ++k) {
        const long i = tok.integer("row index");
        const long j = tok.integer("column index");
        const double v = tok.number("matrix value");
        if (i >= rows || j >= cols) throw ParseError(std::string("QP file: ") + name + " index out of range");
        t.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
    }
    SparseMatrix mat(rows, cols);
    mat.setFromTriplets(t.begin(), t.end());
    return mat;
}

}  // namespace

void write_qp(const QpProblem& problem, std::ostream& out) {
    out << "silmpc-qp 1\n" << problem.num_variables() << ' ' << problem.num_constraints() << '\n';
    out << "constant ";
    write_value(out, problem.constant);
    out << "\nq\n";
    for (Eigen::Index i = 0; i < problem.q.size(); ++i) {
        write_value(out, problem.q[i]);
        out << '\n';
    }
    write_triplets(out, "P", problem.p);
    write_triplets(out, "A", problem.a);
    for (const auto& [name, v] : {std::pair{"l", &problem.l}, std::pair{"u", &problem.u}}) {
        out << name << '\n';
        for (Eigen::Index i = 0; i < v->size(); ++i) {
            write_value(out, (*v)[i]);
            out << '\n';
        }
    }
}

QpProblem read_qp(std::istream& in) {
    Tokens tok(in);
    tok.expect("silmpc-qp");
    if (tok.integer("format version") != 1) throw ParseError("QP file: unsupported version");
    const long n = tok.integer("variable count");
    const long m = tok.integer("constraint count");
    QpProblem p;
    tok.expect("constant");
    p.constant = tok.number("constant");
    tok.expect("q");
    p.q.resize(n);
    for (long i = 0; i < n; ++i) p.q[i] = tok.number("q entry");
    p.p = read_triplets(tok, "P", n, n);
    p.a = read_triplets(tok, "A", m, n);
    tok.expect("l");
    p.l.resize(m);
    for (long i = 0; i < m; ++i) p.l[i] = tok.number("l entry");
    tok.expect("u");
    p.u.resize(m);
    for (long i = 0; i < m; ++i) p.u[i] = tok.number("u entry");
    p.validate();
    return p;
}

}  // namespace silmpc
