#include "hvacpd/interconnect.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace hvacpd;
using hvacpd::testing::config;
using hvacpd::testing::desk;

namespace {

double max_abs_block(const TrajectoryLog& log, const std::string& g, int len) {
    double m = 0.0;
    for (std::size_t k = 0; k < log.rows(); ++k) m = std::max(m, log.block(k, g, len).cwiseAbs().maxCoeff());
    return m;
}

std::string csv(const TrajectoryLog& log) {
    std::ostringstream os;
    log.write_csv(os);
    return os.str();
}

}  // namespace

TEST(Scenario, ValidationErrors) {
    ScenarioConfig cfg = desk();
    Scenario sc = cfg.scenario;
    sc.horizon = 100.5;
    EXPECT_THROW(sc.validate(), std::invalid_argument);
    sc = cfg.scenario;
    sc.log_every = 0;
    EXPECT_THROW(sc.validate(), std::invalid_argument);
    sc = cfg.scenario;
    sc.resolution = Resolution::Lagged;
    EXPECT_GT(sc.lagged_loop_gain(), 1.0);
    EXPECT_THROW(sc.validate(), std::invalid_argument);
}

TEST(Coupled, StationaryAtEquilibrium) {
    const ScenarioConfig cfg = config("equilibrium.json");
    const RunResult res = run_scenario(cfg.scenario);
    const TrajectoryLog& log = res.log;
    for (const char* g : {"x", "xi", "z_u", "r", "d_q_hat"}) {
        const int len = std::string(g) == "x" ? 8 : 3;
        const Vec first = log.block(0, g, len);
        for (std::size_t k = 1; k < log.rows(); ++k) {
            ASSERT_LT((log.block(k, g, len) - first).cwiseAbs().maxCoeff(), 1e-8 * std::max(1.0, first.norm())) << g;
        }
    }
}

TEST(Coupled, ConvergesToOracle) {
    const ScenarioConfig cfg = desk(R"({"mode": "coupled", "horizon": 60000})");
    const RunResult res = run_scenario(cfg.scenario, Architecture::Coupled, false);
    EXPECT_LT(res.summary.final_tracking_error, 1e-4);
    EXPECT_LT(res.summary.final_estimate_error, 1e-4);
    EXPECT_EQ(res.log.rows(), 0u);
}

TEST(Coupled, PiecewiseReconverges) {
    const ScenarioConfig cfg = config("piecewise.json");
    const RunResult res = run_scenario(cfg.scenario);
    ASSERT_EQ(res.summary.settling_times.size(), 3u);
    for (double s : res.summary.settling_times) EXPECT_TRUE(std::isfinite(s));
    // row just before each breakpoint and the last row
    std::vector<std::size_t> rows;
    for (double b : cfg.scenario.profile.breakpoints) rows.push_back(static_cast<std::size_t>(b / 10.0) - 1);
    rows.push_back(res.log.rows() - 1);
    for (std::size_t k : rows) {
        const double t = res.log.time(k);
        const Vec dq = cfg.scenario.profile.dc_heat(t);
        EXPECT_LT((res.log.block(k, "d_q_hat", 3) - dq).cwiseAbs().maxCoeff(), 1e-4) << "t = " << t;
    }
}

TEST(Coupled, NoiseIsLowPassed) {
    const ScenarioConfig cfg = config("noisy.json");
    const RunResult res = run_scenario(cfg.scenario);
    const double amp = cfg.scenario.profile.noise_amplitude;
    EXPECT_LT(res.summary.d_hat_variance, amp * amp);
    const RunResult ff = run_feedforward_baseline(cfg.scenario, false);
    EXPECT_LT(res.summary.r_variance, ff.summary.r_variance);
}

TEST(Coupled, ZeroDataStaysAtOrigin) {
    const ScenarioConfig cfg = desk(
        R"({"mode": "coupled", "horizon": 2000, "optimization": {"h": 0.0},
            "disturbance": {"d_q": 0.0, "ambient_offset": 0.0}})");
    const RunResult res = run_scenario(cfg.scenario);
    for (const char* g : {"x", "xi", "z_u", "lambda", "d_q_hat", "y_o", "r", "y_p"}) {
        const int len = std::string(g) == "x" ? 8 : std::string(g) == "lambda" ? 14 : 3;
        EXPECT_EQ(max_abs_block(res.log, g, len), 0.0) << g;
    }
}

TEST(Feedforward, ReachesSameLimit) {
    const ScenarioConfig cfg = desk(R"({"horizon": 60000})");
    const RunResult c = run_scenario(cfg.scenario, Architecture::Coupled, false);
    const RunResult f = run_feedforward_baseline(cfg.scenario, false);
    EXPECT_LT(c.summary.final_tracking_error, 1e-4);
    EXPECT_LT(f.summary.final_tracking_error, 1e-4);
    EXPECT_EQ(f.summary.architecture, "feedforward");
}

TEST(Feedforward, SettlesFasterThanCoupledAtDefaultTheta) {
    const ScenarioConfig cfg = config("theta15.json");
    const RunResult c = run_scenario(cfg.scenario, Architecture::Coupled, false);
    const RunResult f = run_feedforward_baseline(cfg.scenario, false);
    ASSERT_EQ(c.summary.settling_times.size(), 2u);
    EXPECT_LT(f.summary.settling_times[1], c.summary.settling_times[1]);
}

TEST(Gain, ZeroProbeRejected) {
    const ScenarioConfig cfg = config("equilibrium.json");
    const Probe zero = pulse_probe(Vec::Zero(3), 100.0, 50.0);
    EXPECT_THROW(estimate_l2_gain(cfg.scenario, {zero}), std::invalid_argument);
    // without a probe the tracking energy is zero from the equilibrium start
    EXPECT_LT(run_scenario(cfg.scenario, Architecture::Coupled, false).summary.tracking_l2_sq, 1e-12);
}

TEST(Gain, PulseSignAndAmplitude) {
    // d_q = 0.1 keeps every constraint inactive, so the loop is linear
    const ScenarioConfig cfg =
        config("equilibrium.json", R"({"horizon": 6000, "disturbance": {"d_q": [0.1, 0.1, 0.1]}})");
    const Vec amp = Vec::Constant(3, 0.05);
    const GainEstimate g = estimate_l2_gain(
        cfg.scenario, {pulse_probe(amp, 100.0, 200.0), pulse_probe(-amp, 100.0, 200.0),
                       pulse_probe(2.0 * amp, 100.0, 200.0), sine_burst_probe(amp, 300.0, 100.0, 900.0)});
    for (double r : g.ratios) EXPECT_TRUE(std::isfinite(r) && r > 0.0);
    EXPECT_NEAR(g.ratios[1] / g.ratios[0], 1.0, 1e-6);
    EXPECT_NEAR(g.ratios[2] / g.ratios[0], 1.0, 0.05);
    EXPECT_GT(g.bound_coefficient, 0.0);
}

TEST(Determinism, RepeatedRunsAreIdentical) {
    const ScenarioConfig cfg = config("noisy.json", R"({"horizon": 4000})");
    const std::string a = csv(run_scenario(cfg.scenario).log);
    const std::string b = csv(run_scenario(cfg.scenario).log);
    EXPECT_EQ(a, b);
    const ScenarioConfig other = parse_config(hvacpd::testing::config_json("noisy.json").dump(), HVACPD_CONFIG_DIR, 8);
    Scenario sc = other.scenario;
    sc.horizon = 4000;
    EXPECT_NE(a, csv(run_scenario(sc).log));
}

TEST(Log, CsvRoundTripIsExact) {
    const ScenarioConfig cfg = config("noisy.json", R"({"horizon": 2000})");
    const TrajectoryLog log = run_scenario(cfg.scenario).log;
    const std::string text = csv(log);
    std::istringstream is(text);
    const TrajectoryLog back = TrajectoryLog::read_csv(is);
    ASSERT_EQ(back.rows(), log.rows());
    ASSERT_EQ(back.columns(), log.columns());
    for (std::size_t k = 0; k < log.rows(); ++k)
        for (std::size_t c = 0; c < log.cols(); ++c) ASSERT_EQ(back.at(k, c), log.at(k, c));
    EXPECT_EQ(csv(back), text);
}

TEST(Log, MalformedCsvRejected) {
    std::istringstream bad_header("t,x_0\n0,1\n");
    EXPECT_THROW(TrajectoryLog::read_csv(bad_header), std::runtime_error);
    const ScenarioConfig cfg = config("equilibrium.json", R"({"horizon": 10})");
    std::string text = csv(run_scenario(cfg.scenario).log);
    text.replace(text.rfind(',') + 1, 1, "x");
    std::istringstream bad_field(text);
    EXPECT_THROW(TrajectoryLog::read_csv(bad_field), std::runtime_error);
}

TEST(Compare, SelfComparisonIsZero) {
    const ScenarioConfig cfg = config("noisy.json", R"({"horizon": 2000})");
    const TrajectoryLog log = run_scenario(cfg.scenario).log;
    const Comparison c = compare_logs(log, log);
    EXPECT_EQ(c.max_abs_difference, 0.0);
    EXPECT_EQ(c.r_variance_a, c.r_variance_b);
    EXPECT_EQ(c.tracking_rms_a, c.tracking_rms_b);
    const TrajectoryLog shorter = run_scenario(config("noisy.json", R"({"horizon": 1000})").scenario).log;
    EXPECT_THROW(compare_logs(log, shorter), std::invalid_argument);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
    EXPECT_THROW(desk(R"({"horizn": 10})"), ConfigError);
    EXPECT_THROW(desk(R"({"controller": {"k_P": -1.0}})"), std::exception);
    EXPECT_THROW(desk(R"({"mode": "sideways"})"), ConfigError);
    EXPECT_THROW(desk(R"({"disturbance": {"d_q": [1.0, 2.0]}})"), ConfigError);
    EXPECT_THROW(parse_config("{not json", "."), ConfigError);
}

TEST(Config, NetworkJsonRoundTrip) {
    const ThermalNetwork net = make_synthetic_network({3, 5, 1});
    const ThermalNetwork back = parse_network(network_to_json(net));
    EXPECT_EQ(back.capacitance, net.capacitance);
    EXPECT_EQ(back.pair_resistance, net.pair_resistance);
    EXPECT_EQ(back.wall_resistance, net.wall_resistance);
}
