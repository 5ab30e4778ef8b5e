#include "hvacpd/plant_control.hpp"

#include <cmath>

namespace hvacpd {

ActuationCheck check_actuation_condition(const Plant& plant) {
    const Mat s = plant.M * plant.A1 + plant.A1 * plant.M;
    ActuationCheck out;
    out.min_eig = min_sym_eig(s);
    out.pass = out.min_eig > 0.0;
    return out;
}

namespace {

Mat feedforward_p(const Plant& plant, double kappa) {
    const Mat p = plant.M * plant.A1 + plant.A1 * plant.M - 2.0 * kappa * plant.M;
    return 0.5 * (p + p.transpose());
}

}  // namespace

ControllerConfig make_controller(const Plant& plant, double k_P, double k_I, double kappa) {
    require(k_P > 0.0 && k_I > 0.0 && kappa > 0.0, "controller: gains must be positive");
    const ActuationCheck a2 = check_actuation_condition(plant);
    if (!a2.pass) {
        throw std::invalid_argument("controller: actuation condition sym(MA1 + A1M) > 0 fails, min eig(MA1 + A1M) = " +
                                    std::to_string(a2.min_eig));
    }
    ControllerConfig c;
    c.k_P = k_P;
    c.k_I = k_I;
    c.kappa = kappa;
    c.F = plant.F;
    c.K = Mat::Identity(plant.n1, plant.n1) - kappa * plant.M;
    c.P = feedforward_p(plant, kappa);
    const double pmin = min_sym_eig(c.P);
    if (!(pmin > 0.0)) {
        throw std::invalid_argument("controller: kappa too large, min eig(P) = " + std::to_string(pmin));
    }
    c.kbar_P = k_P + kappa;
    c.Abar = plant.A - kappa * plant.B * plant.B.transpose();
    c.Fbar = plant.B * plant.F + Mat::Identity(plant.size(), plant.size());
    return c;
}

KappaSelection select_kappa(const Plant& plant, double margin) {
    const ActuationCheck a2 = check_actuation_condition(plant);
    if (!a2.pass) {
        throw std::invalid_argument("select_kappa: actuation condition sym(MA1 + A1M) > 0 fails, min eig = " + std::to_string(a2.min_eig));
    }
    for (int j = 40; j >= -240; --j) {
        const double kappa = std::pow(10.0, j / 20.0);
        Mat p = feedforward_p(plant, kappa);
        if (min_sym_eig(p) >= margin) return {kappa, std::move(p)};
    }
    throw std::invalid_argument("select_kappa: no kappa on the grid meets the margin");
}

Vec control_input(const PlantState& s, const Vec& r, const Vec& w_a, const Plant& plant,
                  const ControllerConfig& ctrl) {
    const Vec e = r - s.x.head(plant.n1);
    return ctrl.k_P * e + s.xi + ctrl.kappa * r + ctrl.F * w_a;
}

PlantRate closed_loop_rhs(const PlantState& s, const Vec& r, const Vec& w_q, const Vec& w_a,
                          const Plant& plant, const ControllerConfig& ctrl) {
    const Vec e = r - s.x.head(plant.n1);
    const Vec zeta = ctrl.kbar_P * (plant.M * e) + plant.M * s.xi;
    PlantRate rate;
    rate.dx = -ctrl.Abar * s.x + plant.B * (plant.M_inv * zeta) + plant.B * w_q + ctrl.Fbar * w_a;
    rate.dxi = ctrl.k_I * e;
    return rate;
}

PlantRate closed_loop_rhs_direct(const PlantState& s, const Vec& r, const Vec& w_q, const Vec& w_a,
                                 const Plant& plant, const ControllerConfig& ctrl) {
    const Vec u = control_input(s, r, w_a, plant, ctrl);
    PlantRate rate;
    rate.dx = -plant.A * s.x + plant.B * u + plant.B * w_q + w_a;
    rate.dxi = ctrl.k_I * (r - s.x.head(plant.n1));
    return rate;
}

SteadyState steady_state(const Vec& r_star, const Vec& d_q, const Vec& d_a, const Plant& plant,
                         const ControllerConfig& ctrl) {
    require_size(r_star, plant.n1, "steady_state r*");
    require_size(d_q, plant.n1, "steady_state d_q");
    require_size(d_a, plant.size(), "steady_state d_a");
    SteadyState ss;
    ss.x_star = -ctrl.F.transpose() * r_star;
    if (plant.n2 > 0) ss.x_star.tail(plant.n2) += plant.A3_inv * d_a.tail(plant.n2);
    ss.xi_star = (plant.M_inv - ctrl.kappa * Mat::Identity(plant.n1, plant.n1)) * r_star - d_q;
    ss.zeta_star = plant.M * ss.xi_star;
    return ss;
}

PlantOutputs outputs_p(const PlantState& s, const Vec& r, const Plant& plant, const ControllerConfig& ctrl) {
    PlantOutputs o;
    o.zeta = ctrl.kbar_P * (plant.M * (r - s.x.head(plant.n1))) + plant.M * s.xi;
    o.y_p = o.zeta - ctrl.K * r;
    o.v_p = r;
    return o;
}

PlantState plant_step(const PlantState& s, const Vec& r, const Vec& w_q, const Vec& w_a, const Plant& plant,
                      const ControllerConfig& ctrl, double dt) {
    const int n = plant.size();
    const int n1 = plant.n1;
    Vec y(n + n1);
    y << s.x, s.xi;
    const auto f = [&](double, const Vec& v) -> Vec {
        const PlantRate rate = closed_loop_rhs({v.head(n), v.tail(n1)}, r, w_q, w_a, plant, ctrl);
        Vec out(n + n1);
        out << rate.dx, rate.dxi;
        return out;
    };
    const Vec next = rk4_step(f, 0.0, y, dt);
    return {next.head(n), next.tail(n1)};
}

}  // namespace hvacpd
