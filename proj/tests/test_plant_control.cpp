#include "hvacpd/plant_control.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace hvacpd;
using hvacpd::testing::desk;

namespace {

Mat random_general_spd(std::mt19937_64& gen, int n) {
    std::normal_distribution<double> d(0.0, 1.0);
    Mat l(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) l(i, j) = d(gen) * std::exp(2.0 * d(gen));
    return l * l.transpose() + 1e-2 * Mat::Identity(n, n);
}

struct Desk {
    ScenarioConfig cfg = desk();
    const Plant& p = cfg.scenario.plant;
    const ControllerConfig& c = cfg.scenario.ctrl;
};

}  // namespace

TEST(ActuationCondition, FullActuationPasses) {
    std::mt19937_64 gen(1);
    const Plant p = make_plant(hvacpd::testing::random_spd(gen, 4), 4);
    const ActuationCheck a = check_actuation_condition(p);
    EXPECT_TRUE(a.pass);
    EXPECT_NEAR(a.min_eig, 2.0, 1e-10);
}

TEST(ActuationCondition, DiagonalPasses) {
    Mat a = Mat::Zero(4, 4);
    a.diagonal() << 1.0, 7.0, 0.3, 2.0;
    EXPECT_TRUE(check_actuation_condition(make_plant(a, 2)).pass);
}

TEST(ActuationCondition, AdversarialInstanceFails) {
    std::mt19937_64 gen(17);
    bool found = false;
    for (int trial = 0; trial < 2000 && !found; ++trial) {
        const Mat a = random_general_spd(gen, 3);
        const Plant p = make_plant(a, 2);
        const ActuationCheck chk = check_actuation_condition(p);
        if (!chk.pass) {
            found = true;
            EXPECT_LT(chk.min_eig, 0.0);
            EXPECT_THROW(make_controller(p, 0.06, 1e-3, 1e-3), std::invalid_argument);
            EXPECT_THROW(select_kappa(p, 0.0), std::invalid_argument);
        }
    }
    EXPECT_TRUE(found);
}

TEST(Kappa, ZeroLimitAndDeskValue) {
    Desk d;
    const Mat P0 = d.p.M * d.p.A1 + d.p.A1 * d.p.M;
    EXPECT_GT(min_sym_eig(P0), 0.0);
    EXPECT_GT(min_sym_eig(d.c.P), 0.0);
    EXPECT_LT((d.c.P - (P0 - 2e-3 * d.p.M)).cwiseAbs().maxCoeff(), 1e-12 * P0.cwiseAbs().maxCoeff());
}

TEST(Kappa, AboveBoundRejected) {
    Desk d;
    const Mat P0 = d.p.M * d.p.A1 + d.p.A1 * d.p.M;
    const double bound = min_sym_eig(P0) / (2.0 * max_sym_eig(d.p.M));
    // exceeding λ_min(P0)/(2σ) guarantees an indefinite P
    const double sigma_bound = min_sym_eig(P0) / (2.0 * d.p.sigma);
    EXPECT_LE(bound, sigma_bound);
    EXPECT_THROW(make_controller(d.p, 0.06, 1e-3, 1.01 * sigma_bound), std::invalid_argument);
    EXPECT_NO_THROW(make_controller(d.p, 0.06, 1e-3, 0.99 * bound));
}

TEST(Kappa, SelectionMeetsMargin) {
    Desk d;
    const KappaSelection sel = select_kappa(d.p, 1.0);
    EXPECT_GE(min_sym_eig(sel.P), 1.0);
    // the next grid point up violates the margin
    const double up = sel.kappa * std::pow(10.0, 1.0 / 20.0);
    const Mat Pup = d.p.M * d.p.A1 + d.p.A1 * d.p.M - 2.0 * up * d.p.M;
    EXPECT_LT(min_sym_eig(Pup), 1.0);
}

TEST(ClosedLoop, TwoFormsAgree) {
    Desk d;
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 10; ++trial) {
        const PlantState s{hvacpd::testing::random_vec(gen, 8), hvacpd::testing::random_vec(gen, 3)};
        const Vec r = hvacpd::testing::random_vec(gen, 3);
        const Vec wq = hvacpd::testing::random_vec(gen, 3);
        const Vec wa = hvacpd::testing::random_vec(gen, 8);
        const PlantRate a = closed_loop_rhs(s, r, wq, wa, d.p, d.c);
        const PlantRate b = closed_loop_rhs_direct(s, r, wq, wa, d.p, d.c);
        const double scale = std::max(1.0, a.dx.cwiseAbs().maxCoeff());
        EXPECT_LT((a.dx - b.dx).cwiseAbs().maxCoeff(), 1e-12 * scale);
        EXPECT_LT((a.dxi - b.dxi).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(ClosedLoop, HomogeneousCase) {
    // ζ = k̄_P M (r − x1) + M ξ vanishes only when x1 = r as well
    Desk d;
    Vec x(8);
    x << 0, 0, 0, 3, -1, 0.2, 0.7, -0.4;
    PlantRate r = closed_loop_rhs({x, Vec::Zero(3)}, Vec::Zero(3), Vec::Zero(3), Vec::Zero(8), d.p, d.c);
    EXPECT_LT((r.dx + d.c.Abar * x).cwiseAbs().maxCoeff(), 1e-12);
    x.head(3) << 1, -2, 0.5;
    r = closed_loop_rhs({x, Vec::Zero(3)}, Vec::Zero(3), Vec::Zero(3), Vec::Zero(8), d.p, d.c);
    const Vec expected = -d.c.Abar * x - d.c.kbar_P * d.p.B * x.head(3);
    EXPECT_LT((r.dx - expected).cwiseAbs().maxCoeff(), 1e-12 * expected.cwiseAbs().maxCoeff());
}

TEST(SteadyState, Origin) {
    Desk d;
    const SteadyState ss = steady_state(Vec::Zero(3), Vec::Zero(3), Vec::Zero(8), d.p, d.c);
    EXPECT_EQ(ss.x_star.norm(), 0.0);
    EXPECT_EQ(ss.xi_star.norm(), 0.0);
}

TEST(SteadyState, RateVanishesAndTracks) {
    Desk d;
    std::mt19937_64 gen(13);
    for (int trial = 0; trial < 10; ++trial) {
        const Vec r = hvacpd::testing::random_vec(gen, 3, -5.0, 5.0);
        const Vec dq = hvacpd::testing::random_vec(gen, 3);
        const Vec da = hvacpd::testing::random_vec(gen, 8);
        const SteadyState ss = steady_state(r, dq, da, d.p, d.c);
        const PlantRate rate = closed_loop_rhs({ss.x_star, ss.xi_star}, r, dq, da, d.p, d.c);
        EXPECT_LT(rate.dx.cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_LT(rate.dxi.cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_LT((ss.x_star.head(3) - r).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, r.norm()));
        const PlantOutputs o = outputs_p({ss.x_star, ss.xi_star}, r, d.p, d.c);
        EXPECT_LT((o.y_p + d.p.M * dq).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_LT((o.zeta - ss.zeta_star).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(SteadyState, NoHeatDisturbanceGivesZeroOutput) {
    Desk d;
    Vec r(3);
    r << 1, 2, 3;
    const Vec da = Vec::Constant(8, 0.3);
    const SteadyState ss = steady_state(r, Vec::Zero(3), da, d.p, d.c);
    EXPECT_LT(outputs_p({ss.x_star, ss.xi_star}, r, d.p, d.c).y_p.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Outputs, ZeroZetaCase) {
    Desk d;
    Vec x(8);
    x << 0.3, -0.1, 0.2, 1.0, 2.0, -1.0, 0.5, 0.1;
    const Vec r = x.head(3);
    const PlantOutputs o = outputs_p({x, Vec::Zero(3)}, r, d.p, d.c);
    EXPECT_LT((o.y_p + d.c.K * r).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_EQ(o.v_p, r);
}

TEST(IntegralAction, TracksConstantReference) {
    Desk d;
    Vec r(3);
    r << 0.5, -0.4, 0.2;
    const Vec wq = Vec::Constant(3, 0.3);
    const Vec wa = Vec::Constant(8, 0.1);
    PlantState s{Vec::Zero(8), Vec::Zero(3)};
    for (int k = 0; k < 60000; ++k) s = plant_step(s, r, wq, wa, d.p, d.c, 1.0);
    EXPECT_LT((s.x.head(3) - r).cwiseAbs().maxCoeff(), 1e-6);
}
