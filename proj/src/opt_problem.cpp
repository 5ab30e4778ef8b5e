#include "hvacpd/opt_problem.hpp"

#include <algorithm>
#include <cmath>

namespace hvacpd {

CostFunction quadratic_cost(double weight, int n1) {
    require(weight >= 0.0, "quadratic_cost: weight must be nonnegative");
    CostFunction f;
    f.value = [weight](const Vec& z) { return weight * z.squaredNorm(); };
    f.gradient = [weight](const Vec& z) -> Vec { return 2.0 * weight * z; };
    f.hessian = [weight, n1](const Vec&) -> Mat { return 2.0 * weight * Mat::Identity(n1, n1); };
    return f;
}

ConstraintFunction affine_constraints(AffineConstraints ac) {
    require(ac.G.rows() == ac.b.size(), "affine_constraints: G and b disagree");
    ConstraintFunction g;
    g.count = static_cast<int>(ac.b.size());
    g.value = [G = ac.G, b = ac.b](const Vec& z) -> Vec { return G * z - b; };
    g.jacobian = [G = ac.G](const Vec&) -> Mat { return G; };
    g.affine = std::move(ac);
    return g;
}

AffineConstraints box_and_sum_constraints(int n1, double box, double sum) {
    require(n1 >= 1 && n1 <= 16, "box_and_sum_constraints: n1 out of range");
    require(box > 0.0 && sum > 0.0, "box_and_sum_constraints: bounds must be positive");
    const int sign_rows = 1 << n1;
    AffineConstraints ac{Mat::Zero(2 * n1 + sign_rows, n1), Vec::Zero(2 * n1 + sign_rows)};
    for (int i = 0; i < n1; ++i) {
        ac.G(2 * i, i) = 1.0;
        ac.G(2 * i + 1, i) = -1.0;
        ac.b(2 * i) = box;
        ac.b(2 * i + 1) = box;
    }
    for (int s = 0; s < sign_rows; ++s) {
        for (int i = 0; i < n1; ++i) ac.G(2 * n1 + s, i) = ((s >> i) & 1) ? -1.0 : 1.0;
        ac.b(2 * n1 + s) = sum;
    }
    return ac;
}

AffineConstraints no_constraints(int n1) { return {Mat::Zero(0, n1), Vec::Zero(0)}; }

void validate_spec(const OptimizationSpec& spec, const Plant& plant) {
    const int n1 = plant.n1;
    require_size(spec.h, n1, "spec h");
    require_size(spec.d_q, n1, "spec d_q");
    require_size(spec.d_a, plant.size(), "spec d_a");
    require(spec.theta > 0.0, "spec: theta must be positive");
    require(spec.alpha > 0.0, "spec: alpha must be positive");
    require(static_cast<bool>(spec.f.value) && static_cast<bool>(spec.f.gradient), "spec: cost f missing");
    if (spec.g.count > 0) {
        require(static_cast<bool>(spec.g.value) && static_cast<bool>(spec.g.jacobian),
                "spec: constraint callbacks missing");
        const Vec z0 = spec.interior_point.size() ? spec.interior_point : Vec::Zero(n1);
        require_size(z0, n1, "spec interior_point");
        const Vec g0 = spec.g.value(z0);
        require_size(g0, spec.g.count, "spec g(z)");
        if (!(g0.maxCoeff() < 0.0)) {
            throw std::runtime_error("spec: no strictly feasible point (max g at interior point = " +
                                     std::to_string(g0.maxCoeff()) + ")");
        }
    }
}

ReducedProblem reduce(const OptimizationSpec& spec, const Plant& plant) {
    const Vec hbar = plant.A * plant.B * spec.h;
    const Vec offset = plant.BtAinv * (plant.B * spec.d_q + spec.d_a - hbar);
    const Mat M2 = plant.M * plant.M;
    const Vec lin = M2 * spec.d_q + plant.N * (spec.d_a - hbar);
    ReducedProblem rp;
    rp.value = [M = plant.M, offset, f = spec.f.value](const Vec& z) {
        return 0.5 * (M * z + offset).squaredNorm() + f(z);
    };
    rp.gradient = [M2, lin, df = spec.f.gradient](const Vec& z) -> Vec { return M2 * z + lin + df(z); };
    rp.hessian = [M2, d2f = spec.f.hessian](const Vec& z) -> Mat {
        return d2f ? Mat(M2 + d2f(z)) : M2;
    };
    rp.strong_convexity = min_sym_eig(M2);
    return rp;
}

KKTResiduals kkt_residuals(const OptimizationSpec& spec, const Plant& plant, const Vec& z, const Vec& lambda) {
    const ReducedProblem rp = reduce(spec, plant);
    KKTResiduals r;
    const Vec grad = rp.gradient(z);
    Vec dual_term = Vec::Zero(z.size());
    if (spec.g.count > 0) {
        const Vec g = spec.scaled_g(z);
        dual_term = spec.scaled_jacobian(z).transpose() * lambda;
        r.feasibility = std::max(0.0, g.maxCoeff());
        r.complementarity = lambda.cwiseProduct(g).cwiseAbs().maxCoeff();
        r.dual_feasibility = std::max(0.0, -lambda.minCoeff());
    }
    const Mat M2 = plant.M * plant.M;
    double scale = 1.0;
    scale = std::max(scale, (M2 * (z + spec.d_q)).cwiseAbs().maxCoeff());
    scale = std::max(scale, spec.f.gradient(z).cwiseAbs().maxCoeff());
    scale = std::max(scale, dual_term.cwiseAbs().maxCoeff());
    r.stationarity = (grad + dual_term).cwiseAbs().maxCoeff() / scale;
    return r;
}

namespace {

const AffineConstraints& affine_or_throw(const OptimizationSpec& spec) {
    if (!spec.g.affine) throw std::invalid_argument("KKT oracle requires affine constraints");
    return *spec.g.affine;
}

// Next k-subset of {0..c-1} in lexicographic order.
double inf_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

bool next_subset(std::vector<int>& idx, int c) {
    const int k = static_cast<int>(idx.size());
    for (int i = k - 1; i >= 0; --i) {
        if (idx[i] < c - k + i) {
            ++idx[i];
            for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
            return true;
        }
    }
    return false;
}

struct Candidate {
    Vec z;
    Vec lambda;  // full length c
    std::vector<int> set;
};

// Newton iteration for min J(z) s.t. G_S z = b_S (scaled by θ in the multiplier).
std::optional<Candidate> solve_equality_subproblem(const OptimizationSpec& spec, const ReducedProblem& rp,
                                                   const AffineConstraints& ac, const std::vector<int>& set) {
    const int n1 = spec.n1();
    const int k = static_cast<int>(set.size());
    Mat gs(k, n1);
    Vec bs(k);
    for (int i = 0; i < k; ++i) {
        gs.row(i) = spec.theta * ac.G.row(set[i]);
        bs[i] = spec.theta * ac.b[set[i]];
    }
    if (k > 0) {
        Eigen::FullPivLU<Mat> rank_lu(gs);
        rank_lu.setThreshold(1e-10);
        if (rank_lu.rank() < k) return std::nullopt;
    }
    Vec z = Vec::Zero(n1);
    Vec lam = Vec::Zero(k);
    for (int it = 0; it < 60; ++it) {
        Mat kkt = Mat::Zero(n1 + k, n1 + k);
        kkt.topLeftCorner(n1, n1) = rp.hessian(z);
        kkt.topRightCorner(n1, k) = gs.transpose();
        kkt.bottomLeftCorner(k, n1) = gs;
        Vec rhs(n1 + k);
        rhs.head(n1) = -(rp.gradient(z) + gs.transpose() * lam);
        rhs.tail(k) = bs - gs * z;
        const Vec step = kkt.fullPivLu().solve(rhs);
        z += step.head(n1);
        lam += step.tail(k);
        if (step.head(n1).norm() <= 1e-15 * std::max(1.0, z.norm())) break;
    }
    Candidate c;
    c.z = z;
    c.lambda = Vec::Zero(ac.b.size());
    for (int i = 0; i < k; ++i) c.lambda[set[i]] = lam[i];
    c.set = set;
    return c;
}

}  // namespace

KKTSolution solve_kkt_active_set(const OptimizationSpec& spec, const Plant& plant) {
    const AffineConstraints& ac = affine_or_throw(spec);
    const ReducedProblem rp = reduce(spec, plant);
    const int c = static_cast<int>(ac.b.size());
    const int n1 = spec.n1();
    const double feas_tol = 1e-10 * std::max(1.0, spec.theta * inf_norm(ac.b));

    std::vector<Candidate> valid;
    for (int k = 0; k <= std::min(c, n1); ++k) {
        std::vector<int> idx(k);
        for (int i = 0; i < k; ++i) idx[i] = i;
        do {
            auto cand = solve_equality_subproblem(spec, rp, ac, idx);
            if (!cand) continue;
            const Vec g = spec.theta * (ac.G * cand->z - ac.b);
            const double lam_scale = std::max(1.0, inf_norm(cand->lambda));
            if ((c == 0 || g.maxCoeff() <= feas_tol) &&
                (k == 0 || cand->lambda.minCoeff() >= -1e-10 * lam_scale)) {
                valid.push_back(std::move(*cand));
            }
        } while (k > 0 && next_subset(idx, c));
    }
    if (valid.empty()) throw std::runtime_error("solve_kkt_active_set: no KKT point (problem infeasible)");

    KKTSolution sol;
    sol.z_u_star = valid.front().z;
    sol.lambda_star = valid.front().lambda.cwiseMax(0.0);
    sol.active_set = valid.front().set;
    for (const auto& v : valid) {
        const double lam_scale = std::max(1.0, inf_norm(sol.lambda_star));
        if (inf_norm(v.lambda - sol.lambda_star) > 1e-8 * lam_scale) {
            sol.multiplier_unique = false;
        }
    }
    sol.z_x_star = plant.A_inv * (plant.B * (sol.z_u_star + spec.d_q) + spec.d_a);
    sol.residuals = kkt_residuals(spec, plant, sol.z_u_star, sol.lambda_star);
    return sol;
}

Vec project_polyhedron(const AffineConstraints& ac, const Vec& y, double tol, int max_cycles) {
    const auto c = ac.b.size();
    if (c == 0) return y;
    Vec x = y;
    std::vector<Vec> corr(c, Vec::Zero(y.size()));
    for (int cycle = 0; cycle < max_cycles; ++cycle) {
        const Vec start = x;
        double corr_change = 0.0;
        for (Eigen::Index l = 0; l < c; ++l) {
            const Vec v = x + corr[l];
            const auto row = ac.G.row(l);
            const double viol = row.dot(v) - ac.b[l];
            Vec p = v;
            if (viol > 0.0) p -= (viol / row.squaredNorm()) * row.transpose();
            const Vec new_corr = v - p;
            corr_change += (new_corr - corr[l]).squaredNorm();
            corr[l] = new_corr;
            x = p;
        }
        if ((x - start).norm() <= tol * std::max(1.0, x.norm()) && corr_change <= tol * tol) break;
    }
    return x;
}

KKTSolution solve_kkt_projected_gradient(const OptimizationSpec& spec, const Plant& plant, double tol,
                                         int max_iter) {
    const AffineConstraints& ac = affine_or_throw(spec);
    const ReducedProblem rp = reduce(spec, plant);
    const int n1 = spec.n1();
    Vec z = project_polyhedron(ac, Vec::Zero(n1));
    double step = 1.0 / max_sym_eig(rp.hessian(z));
    for (int it = 0; it < max_iter; ++it) {
        const Vec grad = rp.gradient(z);
        const double jz = rp.value(z);
        Vec next;
        // backtracking on the projected-gradient majorization
        for (int bt = 0; bt < 60; ++bt) {
            next = project_polyhedron(ac, z - step * grad);
            const Vec d = next - z;
            if (rp.value(next) <= jz + grad.dot(d) + d.squaredNorm() / (2.0 * step) + 1e-14 * std::abs(jz)) break;
            step *= 0.5;
        }
        const double move = (next - z).norm();
        z = next;
        if (move <= tol * std::max(1.0, z.norm())) break;
    }

    // Multipliers on near-active rows: nonnegative least squares by subset search.
    const Vec grad = rp.gradient(z);
    const Vec g = ac.G * z - ac.b;
    std::vector<int> near;
    for (Eigen::Index l = 0; l < g.size(); ++l) {
        if (g[l] >= -1e-7 * std::max(1.0, std::abs(ac.b[l]))) near.push_back(static_cast<int>(l));
    }
    Vec best_lambda = Vec::Zero(ac.b.size());
    double best_res = grad.norm();
    const int m = static_cast<int>(near.size());
    for (int k = 1; k <= std::min(m, n1); ++k) {
        std::vector<int> idx(k);
        for (int i = 0; i < k; ++i) idx[i] = i;
        do {
            Mat gt(n1, k);
            for (int i = 0; i < k; ++i) gt.col(i) = spec.theta * ac.G.row(near[idx[i]]).transpose();
            const Vec lam = gt.completeOrthogonalDecomposition().solve(-grad);
            if (lam.minCoeff() < 0.0) continue;
            const double res = (grad + gt * lam).norm();
            if (res < best_res) {
                best_res = res;
                best_lambda.setZero();
                for (int i = 0; i < k; ++i) best_lambda[near[idx[i]]] = lam[i];
            }
        } while (next_subset(idx, m));
    }

    KKTSolution sol;
    sol.z_u_star = z;
    sol.lambda_star = best_lambda;
    for (Eigen::Index l = 0; l < best_lambda.size(); ++l) {
        if (best_lambda[l] > 0.0) sol.active_set.push_back(static_cast<int>(l));
    }
    sol.z_x_star = plant.A_inv * (plant.B * (z + spec.d_q) + spec.d_a);
    sol.residuals = kkt_residuals(spec, plant, z, best_lambda);
    return sol;
}

KKTSolution solve_kkt(const OptimizationSpec& spec, const Plant& plant) {
    validate_spec(spec, plant);
    KKTSolution sol;
    if (spec.g.count == 0) {
        OptimizationSpec unconstrained = spec;
        unconstrained.g = affine_constraints(no_constraints(spec.n1()));
        sol = solve_kkt_active_set(unconstrained, plant);
        sol.lambda_star = Vec::Zero(0);
    } else {
        sol = solve_kkt_active_set(spec, plant);
    }
    const KKTResiduals& r = sol.residuals;
    const double worst = std::max({r.stationarity, r.feasibility, r.complementarity, r.dual_feasibility});
    if (worst > 1e-8) {
        throw std::runtime_error("solve_kkt: KKT residual " + std::to_string(worst) + " above 1e-8");
    }
    const Vec zx1 = plant.M * (sol.z_u_star + spec.d_q) + plant.BtAinv * spec.d_a;
    const double gap = (zx1 - sol.z_x_star.head(plant.n1)).cwiseAbs().maxCoeff();
    if (gap > 1e-8 * std::max(1.0, zx1.cwiseAbs().maxCoeff())) {
        throw std::runtime_error("solve_kkt: z_x1* cross-check failed");
    }
    return sol;
}

}  // namespace hvacpd
