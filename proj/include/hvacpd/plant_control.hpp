#pragma once

#include "hvacpd/thermal_net.hpp"

namespace hvacpd {

struct ActuationCheck {
    double min_eig = 0.0;  // λ_min of sym(M A1 + A1 M)
    bool pass = false;
};

ActuationCheck check_actuation_condition(const Plant& plant);

/// Local PI controller with reference and disturbance feedforward:
///   ξ̇ = k_I (r − x1),  u = k_P (r − x1) + ξ + κ r + F w_a.
struct ControllerConfig {
    double k_P = 6.0e-2;
    double k_I = 1.0e-3;
    double kappa = 1.0e-3;
    Mat F;        // [−I  A2ᵀA3⁻¹]
    Mat K;        // I − κ M
    Mat P;        // M A1 + A1 M − 2κ M
    double kbar_P = 0.0;  // k_P + κ
    Mat Abar;     // A − κ B Bᵀ
    Mat Fbar;     // B F + I
};

/// Validates gains, MA1 + A1M ≻ 0 and P ≻ 0; throws std::invalid_argument otherwise.
ControllerConfig make_controller(const Plant& plant, double k_P, double k_I, double kappa);

struct KappaSelection {
    double kappa = 0.0;
    Mat P;
};

/// Largest κ of the grid 10^{j/20} (j = 40 … −240) with λ_min(P) ≥ margin.
KappaSelection select_kappa(const Plant& plant, double margin);

struct PlantState {
    Vec x;   // length n
    Vec xi;  // length n1
};

struct PlantRate {
    Vec dx;
    Vec dxi;
};

/// ẋ = −Ā x + B M⁻¹ ζ + B w_q + F̄ w_a,  ξ̇ = k_I (r − x1),  ζ = k̄_P M (r − x1) + M ξ.
PlantRate closed_loop_rhs(const PlantState& s, const Vec& r, const Vec& w_q, const Vec& w_a,
                          const Plant& plant, const ControllerConfig& ctrl);

/// Same dynamics written as the plant driven by the controller's input u.
PlantRate closed_loop_rhs_direct(const PlantState& s, const Vec& r, const Vec& w_q, const Vec& w_a,
                                 const Plant& plant, const ControllerConfig& ctrl);

/// Control input u of the PI + feedforward law.
Vec control_input(const PlantState& s, const Vec& r, const Vec& w_a, const Plant& plant,
                  const ControllerConfig& ctrl);

struct SteadyState {
    Vec x_star;
    Vec xi_star;
    Vec zeta_star;
};

SteadyState steady_state(const Vec& r_star, const Vec& d_q, const Vec& d_a, const Plant& plant,
                         const ControllerConfig& ctrl);

struct PlantOutputs {
    Vec zeta;
    Vec y_p;  // ζ − K r
    Vec v_p;  // r
};

PlantOutputs outputs_p(const PlantState& s, const Vec& r, const Plant& plant, const ControllerConfig& ctrl);

/// RK4 step with r, w_q, w_a held over the interval.
PlantState plant_step(const PlantState& s, const Vec& r, const Vec& w_q, const Vec& w_a, const Plant& plant,
                      const ControllerConfig& ctrl, double dt);

}  // namespace hvacpd
