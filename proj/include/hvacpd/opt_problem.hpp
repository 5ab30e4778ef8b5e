#pragma once

#include "hvacpd/linalg.hpp"
#include "hvacpd/thermal_net.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace hvacpd {

/// Convex cost f(z_u) with derivatives.
struct CostFunction {
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> gradient;
    std::function<Mat(const Vec&)> hessian;
};

/// f(z) = weight · ‖z‖².
CostFunction quadratic_cost(double weight, int n1);

/// g(z) = G z − b.
struct AffineConstraints {
    Mat G;
    Vec b;
};

/// Convex constraint map g: R^{n1} → R^c. `jacobian` is c × n1, so ∇g = jacobianᵀ.
struct ConstraintFunction {
    int count = 0;
    std::function<Vec(const Vec&)> value;
    std::function<Mat(const Vec&)> jacobian;
    std::optional<AffineConstraints> affine;
};

ConstraintFunction affine_constraints(AffineConstraints ac);

/// |z_i| ≤ box (2·n1 rows) and Σ|z_i| ≤ sum (2^{n1} rows, one per sign pattern).
AffineConstraints box_and_sum_constraints(int n1, double box, double sum);

/// An unconstrained problem has zero rows.
AffineConstraints no_constraints(int n1);

struct OptimizationSpec {
    Vec h;        // comfort target, transformed units, length n1
    CostFunction f;
    ConstraintFunction g;
    double theta = 1.0;   // constraint scaling: θ g(z) ≤ 0
    Vec d_q;      // DC heat disturbance, length n1
    Vec d_a;      // DC ambient disturbance, length n
    double alpha = 1.0;
    Vec interior_point;   // strictly feasible point; empty = origin

    int n1() const { return static_cast<int>(h.size()); }
    int constraints() const { return g.count; }

    /// θ g(z) and its Jacobian.
    Vec scaled_g(const Vec& z) const { return theta * g.value(z); }
    Mat scaled_jacobian(const Vec& z) const { return theta * g.jacobian(z); }
};

/// Throws std::invalid_argument unless dimensions match the plant and the
/// interior point is strictly feasible.
void validate_spec(const OptimizationSpec& spec, const Plant& plant);

/// Reduced objective J(z_u) = ½‖Bᵀ A⁻¹(B z_u + B d_q + d_a − h̄)‖² + f(z_u), h̄ = A B h.
struct ReducedProblem {
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> gradient;
    std::function<Mat(const Vec&)> hessian;
    double strong_convexity = 0.0;  // λ_min(M²)
};

ReducedProblem reduce(const OptimizationSpec& spec, const Plant& plant);

struct KKTResiduals {
    double stationarity = 0.0;     // ‖∇J + ∇g λ‖∞ relative to term scale
    double feasibility = 0.0;      // max(θ g, 0)
    double complementarity = 0.0;  // max |λ_l θ g_l|
    double dual_feasibility = 0.0; // max(−λ, 0)
};

struct KKTSolution {
    Vec z_u_star;
    Vec lambda_star;
    Vec z_x_star;
    KKTResiduals residuals;
    std::vector<int> active_set;
    bool multiplier_unique = true;
};

KKTResiduals kkt_residuals(const OptimizationSpec& spec, const Plant& plant, const Vec& z, const Vec& lambda);

/// Exact oracle: enumerates every active set of linearly independent rows.
/// Requires affine constraints.
KKTSolution solve_kkt_active_set(const OptimizationSpec& spec, const Plant& plant);

/// Independent oracle: projected gradient on the reduced problem with a
/// Dykstra projection onto the polyhedron; multipliers recovered by
/// least squares on the active rows.
KKTSolution solve_kkt_projected_gradient(const OptimizationSpec& spec, const Plant& plant,
                                         double tol = 1e-12, int max_iter = 200000);

/// Validated solution of the reduced problem plus z_x* = A⁻¹(B z_u* + B d_q + d_a).
/// Throws std::runtime_error when no strictly feasible point exists or the
/// KKT residuals exceed 1e-8.
KKTSolution solve_kkt(const OptimizationSpec& spec, const Plant& plant);

/// Euclidean projection onto {z : G z ≤ b} by Dykstra's alternating projections.
Vec project_polyhedron(const AffineConstraints& ac, const Vec& y, double tol = 1e-14, int max_cycles = 1000000);

}  // namespace hvacpd
