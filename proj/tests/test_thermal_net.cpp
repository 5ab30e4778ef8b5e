#include "hvacpd/thermal_net.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace hvacpd;

namespace {

ThermalNetwork two_zone() {
    ThermalNetwork net;
    net.n1 = 1;
    net.n2 = 1;
    net.capacitance = Vec::Ones(2);
    net.wall_resistance = Vec::Ones(2);
    net.add_edge(0, 1, 1.0);
    net.supply_temperature = Vec::Constant(1, 13.0);
    net.specific_heat = Vec::Constant(1, 1.0);
    net.ambient_nominal = 30.0;
    return net;
}

}  // namespace

TEST(Collective, TwoZoneLaplacian) {
    const CollectiveModel cm = assemble_collective(two_zone());
    Mat expected(2, 2);
    expected << 1, -1, -1, 1;
    EXPECT_EQ(cm.laplacian, expected);
}

TEST(Collective, ThreeZoneChainLaplacian) {
    ThermalNetwork net = two_zone();
    net.n2 = 2;
    net.capacitance = Vec::Ones(3);
    net.wall_resistance = Vec::Ones(3);
    net.pair_resistance.clear();
    net.add_edge(0, 1, 2.0);
    net.add_edge(1, 2, 2.0);
    Mat expected(3, 3);
    expected << 0.5, -0.5, 0, -0.5, 1, -0.5, 0, -0.5, 0.5;
    EXPECT_LT((assemble_collective(net).laplacian - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Collective, LaplacianRowsSumToZero) {
    // dyadic conductances add without rounding, so the row sums vanish exactly
    ThermalNetwork dyadic = two_zone();
    dyadic.n2 = 2;
    dyadic.capacitance = Vec::Ones(3);
    dyadic.wall_resistance = Vec::Ones(3);
    dyadic.pair_resistance.clear();
    dyadic.add_edge(0, 1, 0.5);
    dyadic.add_edge(1, 2, 4.0);
    dyadic.add_edge(0, 2, 8.0);
    EXPECT_EQ((assemble_collective(dyadic).laplacian * Vec::Ones(3)).cwiseAbs().maxCoeff(), 0.0);
    // otherwise only rounding remains
    const ThermalNetwork net = make_synthetic_network({3, 5, 11});
    const Mat l = assemble_collective(net).laplacian;
    const double eps = std::numeric_limits<double>::epsilon();
    EXPECT_LE((l * Vec::Ones(net.size())).cwiseAbs().maxCoeff(), net.size() * eps * l.cwiseAbs().maxCoeff());
}

TEST(Collective, RejectsBadNetworks) {
    ThermalNetwork net = two_zone();
    net.capacitance[1] = -1.0;
    EXPECT_THROW(assemble_collective(net), std::invalid_argument);
    net = two_zone();
    net.pair_resistance[{0, 1}] = 2.0;  // asymmetric
    EXPECT_THROW(net.validate(), std::invalid_argument);
    net = two_zone();
    net.add_edge(0, 1, -3.0);
    EXPECT_THROW(net.validate(), std::invalid_argument);
}

TEST(Linearize, UnitCapacitanceTwoZone) {
    const ThermalNetwork net = two_zone();
    const Equilibrium eq = find_equilibrium(net, Vec::Zero(1), Vec::Zero(1));
    const Linearization lin = linearize(net, eq);
    Mat expected(2, 2);
    expected << 2, -1, -1, 2;
    EXPECT_LT((lin.plant.A - expected).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_NEAR(lin.plant.M(0, 0), 2.0 / 3.0, 1e-14);
    EXPECT_NEAR(lin.plant.sigma, 2.0 / 3.0, 1e-14);
}

TEST(Linearize, NoEdgesGivesWallConductance) {
    ThermalNetwork net = two_zone();
    net.pair_resistance.clear();
    net.wall_resistance << 2.0, 4.0;
    const Linearization lin = linearize(net, find_equilibrium(net, Vec::Zero(1), Vec::Zero(1)));
    Mat expected = Mat::Zero(2, 2);
    expected.diagonal() << 0.5, 0.25;
    EXPECT_LT((lin.plant.A - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Linearize, DeskPlantIsPositiveDefinite) {
    const ThermalNetwork net = make_synthetic_network({});
    const Equilibrium eq = find_equilibrium(net, Vec::Constant(3, 0.3), Vec::Constant(3, 1.0));
    EXPECT_LT(equilibrium_residual(net, eq), 1e-9);
    const Plant p = linearize(net, eq).plant;
    EXPECT_GT(min_sym_eig(p.A), 0.0);
    EXPECT_LT((p.M * p.M_inv - Mat::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Linearize, RejectsNonEquilibrium) {
    const ThermalNetwork net = make_synthetic_network({});
    Equilibrium eq = find_equilibrium(net, Vec::Constant(3, 0.3), Vec::Constant(3, 1.0));
    eq.temperature[0] += 0.1;
    EXPECT_THROW(linearize(net, eq), std::invalid_argument);
}

TEST(Plant, RejectsIndefiniteMatrix) {
    Mat a(2, 2);
    a << 1, 2, 2, 1;
    EXPECT_THROW(make_plant(a, 1), std::invalid_argument);
}

TEST(Simulate, EquilibriumIsInvariant) {
    const ThermalNetwork net = make_synthetic_network({});
    const Equilibrium eq = find_equilibrium(net, Vec::Constant(3, 0.3), Vec::Constant(3, 1.0));
    const Trajectory tr = simulate_nonlinear(
        net, eq.temperature, [&](double) { return eq.mass_flow; }, [&](double) { return net.ambient_nominal; },
        [&](double) { return eq.heat_gain; }, 5000.0, 10.0);
    for (const Vec& T : tr.states) EXPECT_LT((T - eq.temperature).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Simulate, ZeroFlowRelaxesToAmbientFixedPoint) {
    // one zone: C Ṫ = (Ta − T)/R, exact exponential response
    ThermalNetwork net;
    net.n1 = 1;
    net.n2 = 0;
    net.capacitance = Vec::Constant(1, 50.0);
    net.wall_resistance = Vec::Constant(1, 2.0);
    net.supply_temperature = Vec::Constant(1, 13.0);
    net.specific_heat = Vec::Constant(1, 1.0);
    net.ambient_nominal = 20.0;
    const double ta = 25.0;
    const Trajectory tr = simulate_nonlinear(
        net, Vec::Constant(1, 20.0), [](double) { return Vec::Zero(1); }, [&](double) { return ta; },
        [](double) { return Vec::Zero(1); }, 400.0, 1.0);
    for (std::size_t k = 0; k < tr.times.size(); k += 50) {
        const double exact = ta + (20.0 - ta) * std::exp(-tr.times[k] / 100.0);
        EXPECT_NEAR(tr.states[k][0], exact, 1e-9);
    }
}

// Deviation between the nonlinear model and its linearization, max over the run.
double linearization_gap(double eps) {
    const ThermalNetwork net = make_synthetic_network({});
    const Equilibrium eq = find_equilibrium(net, Vec::Constant(3, 0.3), Vec::Constant(3, 1.0));
    const Linearization lin = linearize(net, eq);
    Vec dm(3);
    dm << 1.0, -0.5, 0.7;
    dm *= eps;
    const double horizon = 3000.0, dt = 5.0;
    const Trajectory nl = simulate_nonlinear(
        net, eq.temperature, [&](double) { return Vec(eq.mass_flow + dm); },
        [&](double) { return net.ambient_nominal; }, [&](double) { return eq.heat_gain; }, horizon, dt);
    const Vec u = lin.map.to_input(dm);
    const Vec zero_n = Vec::Zero(net.size());
    const Trajectory li = simulate_linear(
        lin.plant, zero_n, [&](double) { return u; }, [](double) { return Vec::Zero(3); },
        [&](double) { return zero_n; }, horizon, dt);
    double gap = 0.0;
    for (std::size_t k = 0; k < nl.states.size(); ++k) {
        const Vec dT = nl.states[k] - eq.temperature;
        gap = std::max(gap, (lin.map.to_state(dT) - li.states[k]).cwiseAbs().maxCoeff());
    }
    return gap;
}

TEST(Simulate, LinearizationErrorIsQuadratic) {
    const double g1 = linearization_gap(0.02);
    const double g2 = linearization_gap(0.01);
    EXPECT_GT(g1, 0.0);
    EXPECT_NEAR(g1 / g2, 4.0, 2.0);
}

TEST(Simulate, LinearHeatAndAmbientChannels) {
    // a small δq and δTa enter through to_heat and to_ambient
    const ThermalNetwork net = make_synthetic_network({});
    const Equilibrium eq = find_equilibrium(net, Vec::Constant(3, 0.3), Vec::Constant(3, 1.0));
    const Linearization lin = linearize(net, eq);
    Vec dq(3);
    dq << 0.01, -0.02, 0.015;
    const double dta = 0.02;
    const double horizon = 2000.0, dt = 5.0;
    const Trajectory nl = simulate_nonlinear(
        net, eq.temperature, [&](double) { return eq.mass_flow; },
        [&](double) { return net.ambient_nominal + dta; }, [&](double) { return Vec(eq.heat_gain + dq); },
        horizon, dt);
    const Vec wq = lin.map.to_heat(dq);
    const Vec wa = lin.map.to_ambient(dta);
    const Trajectory li = simulate_linear(
        lin.plant, Vec::Zero(net.size()), [](double) { return Vec::Zero(3); }, [&](double) { return wq; },
        [&](double) { return wa; }, horizon, dt);
    // heat gains and ambient enter affinely, so only the mass-flow channel is nonlinear
    for (std::size_t k = 0; k < nl.states.size(); ++k) {
        EXPECT_LT((lin.map.to_state(nl.states[k] - eq.temperature) - li.states[k]).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Synthetic, Deterministic) {
    const ThermalNetwork a = make_synthetic_network({3, 5, 42});
    const ThermalNetwork b = make_synthetic_network({3, 5, 42});
    EXPECT_EQ(a.capacitance, b.capacitance);
    EXPECT_EQ(a.pair_resistance, b.pair_resistance);
    const ThermalNetwork c = make_synthetic_network({3, 5, 43});
    EXPECT_NE(a.capacitance, c.capacitance);
}
