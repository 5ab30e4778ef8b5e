#include "hvacpd/opt_dynamics.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace hvacpd;
using hvacpd::testing::desk;

namespace {

PrimalDualState at_optimum(const OptimizationSpec& s, const KKTSolution& sol) {
    return {sol.z_u_star, sol.lambda_star, s.d_q, s.d_a};
}

}  // namespace

TEST(PositiveProjection, Cases) {
    Vec a(2), b(2), e(2);
    a << 0, 1;
    b << -1, -1;
    e << 0, -1;
    EXPECT_EQ(positive_projection(a, b), e);
    Vec a3(3), b3(3), e3(3);
    a3 << 0, 0, 2;
    b3 << 5, -3, -3;
    e3 << 5, 0, -3;
    EXPECT_EQ(positive_projection(a3, b3), e3);
    b3 << 0, 1, 4;
    EXPECT_EQ(positive_projection(Vec::Zero(3), b3), b3);
}

TEST(Flow, StationaryAtKkt) {
    const ScenarioConfig cfg = desk();
    const OptimizationSpec& s = cfg.scenario.spec;
    const KKTSolution sol = solve_kkt(s, cfg.scenario.plant);
    const PrimalDualRate r = flow_rhs(at_optimum(s, sol), s, cfg.scenario.plant);
    EXPECT_LT(r.dz.cwiseAbs().maxCoeff(), 1e-9 * s.alpha * 1e3);
    const Vec g = s.scaled_g(sol.z_u_star);
    for (int l = 0; l < s.constraints(); ++l) {
        if (sol.lambda_star[l] > 0.0) {
            EXPECT_NEAR(r.dlambda[l], 0.0, 1e-9);
        } else {
            EXPECT_EQ(r.dlambda[l], 0.0);  // inactive row clamped at λ = 0
            EXPECT_LT(g[l], 1e-9);
        }
    }
}

TEST(Flow, StrictlyFeasibleZeroMultiplierHasNoDualRate) {
    const ScenarioConfig cfg = desk();
    const OptimizationSpec& s = cfg.scenario.spec;
    PrimalDualState st{Vec::Constant(3, 0.1), Vec::Zero(s.constraints()), s.d_q, s.d_a};
    ASSERT_LT(s.scaled_g(st.z_u_hat).maxCoeff(), 0.0);
    EXPECT_EQ(flow_rhs(st, s, cfg.scenario.plant).dlambda.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Flow, MatchesReducedGradient) {
    const ScenarioConfig cfg = desk();
    const Plant& p = cfg.scenario.plant;
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 10; ++trial) {
        OptimizationSpec s = cfg.scenario.spec;
        PrimalDualState st;
        st.z_u_hat = hvacpd::testing::random_vec(gen, 3);
        st.lambda_hat = hvacpd::testing::random_vec(gen, s.constraints(), 0.0, 2.0);
        st.d_q_hat = hvacpd::testing::random_vec(gen, 3);
        st.w_a = hvacpd::testing::random_vec(gen, 8);
        // the reduced problem evaluated with the estimates in place of the DC data
        s.d_q = st.d_q_hat;
        s.d_a = st.w_a;
        const Vec expected =
            -s.alpha * (reduce(s, p).gradient(st.z_u_hat) + s.scaled_jacobian(st.z_u_hat).transpose() * st.lambda_hat);
        const Vec dz = flow_rhs(st, s, p).dz;
        EXPECT_LT((dz - expected).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, expected.cwiseAbs().maxCoeff()));
    }
}

TEST(Step, EulerConsistency) {
    const ScenarioConfig cfg = desk();
    const OptimizationSpec& s = cfg.scenario.spec;
    PrimalDualState st{Vec::Constant(3, 0.2), Vec::Constant(s.constraints(), 0.5), s.d_q, s.d_a};
    const PrimalDualRate r = flow_rhs(st, s, cfg.scenario.plant);
    for (double dt : {1e-2, 1e-3}) {
        const PrimalDualState next = step(st, s, cfg.scenario.plant, dt);
        EXPECT_LT((next.z_u_hat - st.z_u_hat - dt * r.dz).norm(), 1e-15 + dt * dt);
        EXPECT_LT((next.lambda_hat - st.lambda_hat - dt * r.dlambda).norm(), 1e-15 + dt * dt);
    }
}

TEST(Step, MultiplierGrowsByConstraintViolation) {
    const ScenarioConfig cfg = desk();
    const OptimizationSpec& s = cfg.scenario.spec;
    PrimalDualState st{Vec::Constant(3, 0.7), Vec::Zero(s.constraints()), s.d_q, s.d_a};
    const Vec g = s.scaled_g(st.z_u_hat);
    const PrimalDualState next = step(st, s, cfg.scenario.plant, 1.0);
    for (int l = 0; l < s.constraints(); ++l) {
        EXPECT_DOUBLE_EQ(next.lambda_hat[l], std::max(0.0, g[l]));
    }
}

TEST(Step, ConvergesToOracle) {
    const ScenarioConfig cfg = desk();
    const OptimizationSpec& s = cfg.scenario.spec;
    const Plant& p = cfg.scenario.plant;
    const KKTSolution sol = solve_kkt(s, p);
    const double h = stable_step_bound(s, p);
    const int sub = static_cast<int>(std::ceil(1.0 / h));
    PrimalDualState st{Vec::Zero(3), Vec::Zero(s.constraints()), s.d_q, s.d_a};
    for (int k = 0; k < 200000 * sub; ++k) st = step(st, s, p, 1.0 / sub);
    EXPECT_LT((st.z_u_hat - sol.z_u_star).cwiseAbs().maxCoeff(), 1e-5);
    EXPECT_TRUE((st.lambda_hat.array() >= 0.0).all());
}

TEST(Outputs, OptimalOutputIsOptimalState) {
    const ScenarioConfig cfg = desk();
    const OptimizationSpec& s = cfg.scenario.spec;
    const KKTSolution sol = solve_kkt(s, cfg.scenario.plant);
    const OptOutputs o = outputs(at_optimum(s, sol), cfg.scenario.plant, s);
    EXPECT_LT((o.y_o - sol.z_x_star.head(3)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Outputs, ZeroCase) {
    const ScenarioConfig cfg = desk();
    const OptimizationSpec& s = cfg.scenario.spec;
    PrimalDualState st{Vec::Zero(3), Vec::Zero(s.constraints()), Vec::Zero(3), Vec::Zero(8)};
    const OptOutputs o = outputs(st, cfg.scenario.plant, s);
    EXPECT_EQ(o.y_o.norm(), 0.0);
    EXPECT_EQ(o.nu.norm(), 0.0);
}

TEST(Outputs, AlgebraicIdentity) {
    const ScenarioConfig cfg = desk();
    const Plant& p = cfg.scenario.plant;
    std::mt19937_64 gen(9);
    for (int trial = 0; trial < 10; ++trial) {
        PrimalDualState st{hvacpd::testing::random_vec(gen, 3), Vec::Zero(cfg.scenario.spec.constraints()),
                           hvacpd::testing::random_vec(gen, 3), hvacpd::testing::random_vec(gen, 8)};
        const OptOutputs o = outputs(st, p, cfg.scenario.spec);
        const Vec lhs = o.y_o - p.BtAinv * st.w_a;
        const Vec rhs = -p.M_inv * o.nu;
        EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, lhs.cwiseAbs().maxCoeff()));
    }
}

TEST(Alpha, DefaultIsHalfTheStabilityLimit) {
    const ScenarioConfig cfg = desk();
    OptimizationSpec s = cfg.scenario.spec;
    const Plant& p = cfg.scenario.plant;
    s.alpha = default_alpha(s, p, 1.0);
    const Mat H = p.M * p.M + s.f.hessian(Vec::Zero(3));
    EXPECT_NEAR(s.alpha * max_sym_eig(H), 0.5, 1e-12);
}
