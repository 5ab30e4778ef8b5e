#include "hvacpd/opt_dynamics.hpp"

#include <limits>

namespace hvacpd {

Vec positive_projection(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("positive_projection: dimension mismatch");
    Vec out = b;
    for (Eigen::Index l = 0; l < a.size(); ++l) {
        if (a[l] == 0.0 && b[l] < 0.0) out[l] = 0.0;
    }
    return out;
}

PrimalDualRate flow_rhs(const PrimalDualState& s, const OptimizationSpec& spec, const Plant& plant) {
    const Vec hbar = plant.A * (plant.B * spec.h);
    Vec drift = plant.M * (plant.M * (s.z_u_hat + s.d_q_hat)) + plant.N * (s.w_a - hbar) +
                spec.f.gradient(s.z_u_hat);
    PrimalDualRate rate;
    if (spec.g.count > 0) {
        drift += spec.scaled_jacobian(s.z_u_hat).transpose() * s.lambda_hat;
        rate.dlambda = positive_projection(s.lambda_hat, spec.scaled_g(s.z_u_hat));
    } else {
        rate.dlambda = Vec::Zero(0);
    }
    rate.dz = -spec.alpha * drift;
    return rate;
}

PrimalDualState step(const PrimalDualState& s, const OptimizationSpec& spec, const Plant& plant, double dt) {
    require(dt > 0.0, "step: dt must be positive");
    const PrimalDualRate rate = flow_rhs(s, spec, plant);
    PrimalDualState next = s;
    next.z_u_hat += dt * rate.dz;
    next.lambda_hat = (s.lambda_hat + dt * rate.dlambda).cwiseMax(0.0);
    return next;
}

OptOutputs outputs(const PrimalDualState& s, const Plant& plant, const OptimizationSpec&) {
    OptOutputs o;
    const Vec mz = plant.M * (s.z_u_hat + s.d_q_hat);
    o.nu = -plant.M * mz;
    o.y_o = mz + plant.BtAinv * s.w_a;
    o.v_o = plant.M * s.d_q_hat;
    return o;
}

double stable_step_bound(const OptimizationSpec& spec, const Plant& plant) {
    const Vec z0 = Vec::Zero(plant.n1);
    Mat hess = plant.M * plant.M;
    if (spec.f.hessian) hess += spec.f.hessian(z0);
    double bound = 1.0 / (spec.alpha * max_sym_eig(hess));
    if (spec.g.count > 0) {
        const Mat jac = spec.g.jacobian(z0);
        const double gram = max_sym_eig(jac.transpose() * jac);
        if (gram > 0.0) {
            bound = std::min(bound, 0.5 * min_sym_eig(hess) / (spec.theta * spec.theta * gram));
        }
    }
    return bound;
}

double default_alpha(const OptimizationSpec& spec, const Plant& plant, double dt) {
    Mat hess = plant.M * plant.M;
    if (spec.f.hessian) hess += spec.f.hessian(Vec::Zero(plant.n1));
    return 0.5 / (max_sym_eig(hess) * dt);
}

}  // namespace hvacpd
