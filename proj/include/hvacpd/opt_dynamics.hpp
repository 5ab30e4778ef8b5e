#pragma once

#include "hvacpd/opt_problem.hpp"

namespace hvacpd {

/// State of the projected primal-dual flow together with its current inputs.
struct PrimalDualState {
    Vec z_u_hat;     // length n1
    Vec lambda_hat;  // length c, nonnegative
    Vec d_q_hat;     // disturbance estimate input, length n1
    Vec w_a;         // measured ambient disturbance, length n
};

struct PrimalDualRate {
    Vec dz;
    Vec dlambda;
};

/// ([b]⁺_a)_l = 0 if a_l = 0 and b_l < 0, else b_l.
Vec positive_projection(const Vec& a, const Vec& b);

/// ż = −α{M²(ẑ + d̂_q) + N(w_a − h̄) + ∇f(ẑ) + ∇g(ẑ)λ̂},  λ̇ = [θ g(ẑ)]⁺_λ̂.
PrimalDualRate flow_rhs(const PrimalDualState& s, const OptimizationSpec& spec, const Plant& plant);

/// One explicit Euler step followed by clamping λ̂ to the nonnegative orthant.
PrimalDualState step(const PrimalDualState& s, const OptimizationSpec& spec, const Plant& plant, double dt);

struct OptOutputs {
    Vec nu;   // −M²(ẑ + d̂_q)
    Vec y_o;  // M(ẑ + d̂_q) + Bᵀ A⁻¹ w_a
    Vec v_o;  // M d̂_q
};

OptOutputs outputs(const PrimalDualState& s, const Plant& plant, const OptimizationSpec& spec);

/// Largest Euler step that keeps the linearized saddle flow stable, with a
/// safety factor of 2: min(1/(α λmax(H)), ½ λmin(H) / (θ² λmax(GᵀG))).
double stable_step_bound(const OptimizationSpec& spec, const Plant& plant);

/// α = 0.5 / (λmax(M² + ∇²f) · dt), half the largest Euler-stable value.
double default_alpha(const OptimizationSpec& spec, const Plant& plant, double dt);

}  // namespace hvacpd
