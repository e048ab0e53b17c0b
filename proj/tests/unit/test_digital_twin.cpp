#include <cmath>

#include <gtest/gtest.h>

#include "silmpc/digital_twin.hpp"
#include "silmpc/errors.hpp"
#include "test_util.hpp"

using namespace silmpc;
using silmpc::testing::constant_frame;

namespace {

ExogenousModel noiseless(const BuildingParameters& p) { return ExogenousModel::defaults(p); }

// Inputs that satisfy the couplings and the balance for row k of the frame.
std::pair<ThermalInput, ElectricalInput> balanced(const BuildingParameters& p, const TimeSeriesFrame& f,
                                                  std::int64_t k) {
    ThermalInput t = ThermalInput::zero(kNumBuildingZones, kNumZones);
    t.q_heat[0] = 10.0;
    t.q_cool[8] = -5.0;
    ElectricalInput e;
    e.q_heat_total = 10.0;
    e.q_cool_total = -5.0;
    e.p_chp = 0.5 * p.c_chp * 10.0;
    e.q_rad = 10.0 - e.p_chp / p.c_chp;
    e.p_bat = 2.0;
    const Disturbance d = f.disturbance(k, p.q_other);
    e.p_grid = -(-e.p_bat + e.p_chp + e.q_cool_total / p.eps_c + d.p_dem + d.p_pv);
    return {t, e};
}

}  // namespace

TEST(TrueExogenous, ZeroAtBaseline) {
    const BuildingParameters p = BuildingParameters::defaults();
    const ExogenousModel m = noiseless(p);
    CalendarClock c;  // Monday start
    TimeSeriesFrame f = constant_frame(48 * 7, m.theta_ref, 0.0, -m.p_dem_ref, m.p_server_ref[0], m.p_server_ref[1], c);
    const std::int64_t k = 6 * 48 + 6;  // Sunday 03:00
    ASSERT_EQ(f.dow[static_cast<std::size_t>(k)], 6);
    ASSERT_DOUBLE_EQ(f.tod[static_cast<std::size_t>(k)], 3.0);
    EXPECT_LE(true_exogenous(m, f, k).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(TrueExogenous, OccupancyHandArithmetic) {
    BuildingParameters p = BuildingParameters::defaults();
    p.network.cth[0] = 40.0;
    ExogenousModel m = ExogenousModel::zero(p);
    m.occupancy_gain[0] = 2.0;
    m.scale = 1.0;
    const TimeSeriesFrame f = constant_frame(48, m.theta_ref);
    const Eigen::VectorXd e = true_exogenous(m, f, 24);  // Monday 12:00
    EXPECT_NEAR(e[0], 0.025, 1e-15);
    EXPECT_LE(e.tail(8).cwiseAbs().maxCoeff(), 0.0);
    m.scale = 0.5;
    EXPECT_NEAR(true_exogenous(m, f, 24)[0], 0.0125, 1e-15);
}

TEST(TrueExogenous, DeterministicAndSeeded) {
    const BuildingParameters p = BuildingParameters::defaults();
    ExogenousModel m = noiseless(p);
    const TimeSeriesFrame f = generate_span(GeneratorConfig{}, CalendarClock{}, 200);
    m = calibrate_noise(m, f);
    EXPECT_EQ(true_exogenous(m, f, 17), true_exogenous(m, f, 17));
    ExogenousModel other = m;
    other.seed = m.seed + 1;
    EXPECT_NE(true_exogenous(m, f, 17), true_exogenous(other, f, 17));
}

TEST(TrueExogenous, BuildingZonesDependOnlyOnFeatures) {
    // Changing the server loads leaves building zones untouched; changing
    // anything but server loads, demand and ambient leaves server zones untouched.
    const BuildingParameters p = BuildingParameters::defaults();
    const ExogenousModel m = noiseless(p);
    TimeSeriesFrame a = generate_span(GeneratorConfig{}, CalendarClock{}, 100);
    TimeSeriesFrame b = a;
    for (auto& v : b.p_server1) v *= 0.7;
    TimeSeriesFrame c = a;
    for (auto& t : c.tod) t = std::fmod(t + 5.0, 24.0);
    for (std::int64_t k = 2; k < 100; ++k) {
        const Eigen::VectorXd ea = true_exogenous(m, a, k);
        EXPECT_EQ(ea.head(kNumBuildingZones), true_exogenous(m, b, k).head(kNumBuildingZones));
        EXPECT_EQ(ea.tail(kNumServerZones), true_exogenous(m, c, k).tail(kNumServerZones));
    }
}

TEST(CalibrateNoise, RatioOfDeterministicStd) {
    const BuildingParameters p = BuildingParameters::defaults();
    const TimeSeriesFrame f = generate_span(GeneratorConfig{}, CalendarClock{}, 48 * 60);
    const ExogenousModel m = calibrate_noise(noiseless(p), f);
    for (int z = 0; z < kNumZones; ++z) {
        double mean = 0.0, sq = 0.0;
        for (std::int64_t k = 0; k < f.length(); ++k) mean += deterministic_exogenous(m, f, k)[z];
        mean /= static_cast<double>(f.length());
        for (std::int64_t k = 0; k < f.length(); ++k) sq += std::pow(deterministic_exogenous(m, f, k)[z] - mean, 2);
        const double sd = std::sqrt(sq / static_cast<double>(f.length()));
        EXPECT_NEAR(m.noise_std[z], 0.2 * sd, 0.2 * sd * 0.02 + 1e-15);
    }
}

TEST(TwinStep, ZeroExogenousReproducesModel) {
    const BuildingParameters p = BuildingParameters::defaults();
    const DiscreteModel model = discretize(p);
    const ExogenousModel m = ExogenousModel::zero(p);
    const TimeSeriesFrame f = generate_span(GeneratorConfig{}, CalendarClock{}, 10);
    TwinState s;
    s.thermal.theta = Eigen::VectorXd::Constant(kNumZones, 21.0);
    s.electrical.e_bat = 40.0;
    const auto [t, e] = balanced(p, f, 0);
    const TwinState next = twin_step(p, model, s, t, e, f, m);
    const ThermalState pred = step_thermal(model, s.thermal, t, f.disturbance(0, p.q_other),
                                           Eigen::VectorXd::Zero(kNumZones));
    EXPECT_EQ(next.thermal.theta, pred.theta);
    EXPECT_DOUBLE_EQ(next.electrical.e_bat, 41.0);
    EXPECT_EQ(next.k, 1);
}

TEST(TwinStep, MeasuredMinusPredictedIsTrueExogenous) {
    const BuildingParameters p = BuildingParameters::defaults();
    const DiscreteModel model = discretize(p);
    const TimeSeriesFrame f = generate_span(GeneratorConfig{}, CalendarClock{}, 200);
    const ExogenousModel m = calibrate_noise(noiseless(p), f);
    TwinState s;
    s.thermal.theta = Eigen::VectorXd::Constant(kNumZones, 21.0);
    s.electrical.e_bat = 40.0;
    s.k = 57;
    const auto [t, e] = balanced(p, f, s.k);
    const TwinState next = twin_step(p, model, s, t, e, f, m);
    const ThermalState pred = step_thermal(model, s.thermal, t, f.disturbance(s.k, p.q_other),
                                           Eigen::VectorXd::Zero(kNumZones));
    EXPECT_LE((next.thermal.theta - pred.theta - true_exogenous(m, f, s.k)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TwinStep, RejectsBrokenBalanceOrCoupling) {
    const BuildingParameters p = BuildingParameters::defaults();
    const DiscreteModel model = discretize(p);
    const TimeSeriesFrame f = generate_span(GeneratorConfig{}, CalendarClock{}, 10);
    TwinState s;
    s.thermal.theta = Eigen::VectorXd::Constant(kNumZones, 21.0);
    s.electrical.e_bat = 40.0;
    auto [t, e] = balanced(p, f, 0);
    ElectricalInput bad = e;
    bad.p_grid += 1.0;
    EXPECT_THROW(twin_step(p, model, s, t, bad, f, noiseless(p)), ConstraintViolation);
    ThermalInput bad_t = t;
    bad_t.q_heat[3] = 5.0;
    EXPECT_THROW(twin_step(p, model, s, bad_t, e, f, noiseless(p)), ConstraintViolation);
}

TEST(PlantModel, MismatchOffEqualsController) {
    const BuildingParameters p = BuildingParameters::defaults();
    const DiscreteModel a = discretize(p);
    const DiscreteModel b = plant_model(p, ParameterMismatch{});
    EXPECT_EQ(a.a, b.a);
    EXPECT_EQ(a.b, b.b);
    ParameterMismatch on;
    on.enabled = true;
    const DiscreteModel c = plant_model(p, on);
    EXPECT_GT((a.a - c.a).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(plant_model(p, on).a, c.a);
}

TEST(Measure, IdentityWithoutNoise) {
    TwinState s;
    s.thermal.theta = Eigen::VectorXd::LinSpaced(kNumZones, 18.0, 26.0);
    s.electrical.e_bat = 12.0;
    const auto [x1, e1] = measure(s);
    const auto [x2, e2] = measure(s);
    EXPECT_EQ(x1.theta, s.thermal.theta);
    EXPECT_EQ(x1.theta, x2.theta);
    EXPECT_EQ(e1.e_bat, 12.0);
}

TEST(Measure, NoiseMeanConverges) {
    TwinState s;
    s.thermal.theta = Eigen::VectorXd::Constant(kNumZones, 21.0);
    MeasurementConfig cfg;
    cfg.noise_std = 0.01;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(kNumZones);
    for (std::uint64_t i = 0; i < 10000; ++i) sum += measure(s, cfg, i).first.theta;
    const Eigen::VectorXd mean = sum / 10000.0;
    EXPECT_LE((mean.array() - 21.0).abs().maxCoeff(), 0.001);
}
