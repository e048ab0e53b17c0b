#include "silmpc/metrics.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

#include "silmpc/errors.hpp"
#include "silmpc/mpc_controller.hpp"

namespace silmpc {
namespace {

template <typename Pick>
double weighted_sum(const std::array<double, kNumZones>& v, const Eigen::VectorXd& wth, Pick pick) {
    double s = 0.0;
    for (int i = 0; i < kNumZones; ++i) s += wth[i] * pick(v[static_cast<std::size_t>(i)]);
    return s;
}

void check_log(const StepLog& log, const Eigen::VectorXd& w, int expected) {
    if (log.empty()) throw std::invalid_argument("metrics need a non-empty log");
    if (w.size() != expected) throw DimensionError("metric weights have the wrong size");
}

double mean_over(const StepLog& log, const std::function<double(const StepRecord&)>& f) {
    double s = 0.0;
    for (const StepRecord& r : log) s += f(r);
    return s / static_cast<double>(log.size());
}

}  // namespace

std::array<double, kNumZones> StepRecord::residual() const {
    std::array<double, kNumZones> r{};
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = target[i] - eps_hat[i];
    return r;
}

Eigen::VectorXd metric_weights(const BuildingParameters& params) {
    const Eigen::VectorXd& c = params.network.cth;
    if (c.size() != kNumZones || (c.array() <= 0.0).any())
        throw ParameterError("metric_weights: need 9 positive thermal capacities");
    return c / c.sum();
}

double ware(const Eigen::VectorXd& eps, const Eigen::VectorXd& wth) {
    if (eps.size() != wth.size()) throw DimensionError("ware: dimension mismatch");
    return wth.dot(eps.cwiseAbs());
}

double wmare(const StepLog& log, const Eigen::VectorXd& wth) {
    check_log(log, wth, kNumZones);
    return mean_over(log, [&](const StepRecord& r) {
        return weighted_sum(r.residual(), wth, [](double v) { return std::abs(v); });
    });
}

double wmre(const StepLog& log, const Eigen::VectorXd& wth) {
    check_log(log, wth, kNumZones);
    return mean_over(log, [&](const StepRecord& r) { return weighted_sum(r.residual(), wth, [](double v) { return v; }); });
}

double rmse_tracking(const StepLog& log, const Eigen::VectorXd& wthb, double theta_ref) {
    check_log(log, wthb, kNumBuildingZones);
    double total = 0.0;
    for (int i = 0; i < kNumBuildingZones; ++i) {
        const double ms = mean_over(log, [&](const StepRecord& r) {
            const double dev = r.theta[static_cast<std::size_t>(i)] - theta_ref;
            return dev * dev;
        });
        total += wthb[i] * std::sqrt(ms);
    }
    return total;
}

std::vector<MonthlyMetrics> monthly_metrics(const StepLog& log, const CalendarClock& clock, const Eigen::VectorXd& wth,
                                            const Eigen::VectorXd& wthb, double theta_ref) {
    std::vector<MonthlyMetrics> out;
    std::size_t begin = 0;
    while (begin < log.size()) {
        const std::int64_t month = month_index(clock, log[begin].k);
        std::size_t end = begin;
        while (end < log.size() && month_index(clock, log[end].k) == month) ++end;
        const StepLog part(log.begin() + static_cast<std::ptrdiff_t>(begin), log.begin() + static_cast<std::ptrdiff_t>(end));
        MonthlyMetrics m;
        m.month = static_cast<int>(((month % kMonthsPerYear) + kMonthsPerYear) % kMonthsPerYear) + 1;
        m.steps = part.size();
        m.wmare = wmare(part, wth);
        m.wmre = wmre(part, wth);
        m.rmse = rmse_tracking(part, wthb, theta_ref);
        out.push_back(m);
        begin = end;
    }
    return out;
}

MetricSummary summarize(const StepLog& log, const CalendarClock& clock, const BuildingParameters& params,
                        double theta_ref) {
    const Eigen::VectorXd wth = metric_weights(params);
    const Eigen::VectorXd wthb = zone_weights(params).wthb;
    MetricSummary s;
    s.wmare = wmare(log, wth);
    s.wmre = wmre(log, wth);
    s.rmse = rmse_tracking(log, wthb, theta_ref);
    s.monthly = monthly_metrics(log, clock, wth, wthb, theta_ref);
    return s;
}

}  // namespace silmpc
