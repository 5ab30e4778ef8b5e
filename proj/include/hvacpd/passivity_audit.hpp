#pragma once

#include "hvacpd/disturbance.hpp"
#include "hvacpd/opt_problem.hpp"
#include "hvacpd/plant_control.hpp"
#include "hvacpd/trajectory_log.hpp"

#include <memory>
#include <string>
#include <vector>

namespace hvacpd {

/// Certificate for the storage matrix Ψ of the passive zones.
///
/// The inequality enforced is the Schur complement of Ψ̄Ā + ĀᵀΨ̄ ≻ 0:
///   Ā3 Ψ + Ψ Ā3ᵀ + Ψ A2 P⁻¹ A2ᵀ Ψ + A2 M P⁻¹ M A2ᵀ ≺ 0,  Ā3 = −A3 + A2 M P⁻¹ A2ᵀ.
/// `opposite_sign_max_eig` is λ_max of the same expression with the linear
/// term negated; it is reported for comparison only and cannot be negative
/// together with the enforced one.
struct RiccatiCertificate {
    Mat Psi;
    Mat Psi_bar;                      // blockdiag(M, Ψ)
    double riccati_max_eig = 0.0;     // < 0 required
    double opposite_sign_max_eig = 0.0;
    double block_min_eig = 0.0;       // λ_min(Ψ̄Ā + ĀᵀΨ̄) > 0 required
    double psi_min_eig = 0.0;
    double abar3_max_real = 0.0;      // spectral abscissa of Ā3
    double slack = 0.0;               // η in the equation form
    int iterations = 0;
};

/// Solves Ā3Ψ + ΨĀ3ᵀ + ΨGΨ + Q + ηI = 0 by Lyapunov fixed-point iteration from
/// Ψ = 0 (the minimal solution), then verifies by substitution. Throws
/// std::runtime_error when Ā3 is not Hurwitz, the iteration diverges or the
/// verification fails.
RiccatiCertificate solve_riccati(const Plant& plant, const ControllerConfig& ctrl);

/// Reference equilibrium (z_u*, λ*, x*, ξ*) for one set of DC disturbances,
/// from the KKT oracle and the closed-loop steady-state formulas.
struct Reference {
    Vec d_q, d_a;
    KKTSolution kkt;
    SteadyState ss;
    Vec r_star;       // z_x1*
    Vec nu_star;      // −M²(z_u* + d_q)
    Vec p_star;       // ∇g(z_u*) λ*
    Vec grad_f_star;
    Vec y_p_star;     // −M d_q
};

Reference make_reference(const OptimizationSpec& spec, const Plant& plant, const ControllerConfig& ctrl,
                         const Vec& d_q, const Vec& d_a);

/// References for each DC segment of a disturbance profile.
class ReferenceSchedule {
public:
    ReferenceSchedule(const OptimizationSpec& spec, const Plant& plant, const ControllerConfig& ctrl,
                      const DisturbanceProfile& profile);
    const Reference& at(double t) const { return refs_[profile_->segment(t)]; }
    std::size_t segment(double t) const { return profile_->segment(t); }
    const std::vector<Reference>& all() const { return refs_; }

private:
    std::shared_ptr<const DisturbanceProfile> profile_;
    std::vector<Reference> refs_;
};

/// Storage functions of both subsystems about a reference.
class StorageSuite {
public:
    StorageSuite(const Plant& plant, const ControllerConfig& ctrl, const OptimizationSpec& spec,
                 RiccatiCertificate cert);

    const RiccatiCertificate& certificate() const { return cert_; }

    double U(const Vec& lambda, const Reference& ref) const;
    double V(const Vec& z_u, const Reference& ref) const;
    double S_o(const Vec& z_u, const Vec& lambda, const Reference& ref) const;
    double S_x(const Vec& x, const Reference& ref) const;
    double S_xi(const Vec& xi, const Reference& ref) const;
    double S_p(const Vec& x, const Vec& xi, const Reference& ref) const;

    /// Storage quadratic forms evaluated on increments; Δsᵀ W Δs = 2 · form(Δs).
    double U_form(const Vec& dlambda) const;
    double V_form(const Vec& dz) const;
    double S_x_form(const Vec& dx) const;
    double S_xi_form(const Vec& dxi) const;

    const Plant& plant() const { return plant_; }
    const ControllerConfig& controller() const { return ctrl_; }
    const OptimizationSpec& spec() const { return spec_; }

private:
    Plant plant_;
    ControllerConfig ctrl_;
    OptimizationSpec spec_;
    RiccatiCertificate cert_;
};

enum class LemmaId {
    OptPassive,          // D⁺S_o ≤ −ν̃ᵀ d̃_q
    OptOutputFeedback,   // D⁺S_o ≤ ỹ_oᵀṽ_o − ‖ỹ_o‖²
    PlantPassive,        // Ṡ_p ≤ ζ̃ᵀ r̃
    PlantShortage,       // Ṡ_p ≤ ỹ_pᵀṽ_p + (1 − κσ)‖ṽ_p‖² − k_P σ‖ṽ_p − x̃1‖²
    DualPassive,         // D⁺U ≤ p̃ᵀ z̃_u
    PrimalPassive,       // V̇ ≤ −z̃ᵀ(∇f − ∇f*) + z̃ᵀ μ̃
    Combined,            // D⁺S ≤ −κσ‖ỹ_o‖² − k_P σ‖ṽ_p − x̃1‖²
};

std::string lemma_name(LemmaId id);
std::vector<LemmaId> all_lemmas();

struct LemmaVerdict {
    LemmaId id{};
    std::string name;
    bool pass = true;
    double max_residual = 0.0;   // max over intervals of ΔS/Δt − supply
    double max_excess = 0.0;     // max over intervals of residual − tol
    double tol_at_worst = 0.0;
    std::size_t worst_row = 0;
    std::size_t intervals_checked = 0;
    std::size_t intervals_skipped = 0;  // reference change or non-DC disturbance
};

struct CombinedVerdict {
    LemmaVerdict base;
    double storage_initial = 0.0;
    double storage_final = 0.0;
    double integral_y_o = 0.0;       // ∫‖ỹ_o‖²
    double integral_tracking = 0.0;  // ∫‖ṽ_p − x̃1‖² = ∫‖ỹ_o − x̃1‖²
    double integrated_tol = 0.0;
    bool storage_nonincreasing = true;
    bool l2_consistent = true;
    bool pass = true;
};

struct PassivityReport {
    std::vector<LemmaVerdict> lemmas;
    CombinedVerdict combined;
    RiccatiCertificate riccati;
    double tol_abs = 1e-6;
    double tol_rel_factor = 10.0;
    bool all_pass() const;
};

/// Per-interval audit data, exposed for logging.
struct IntervalResidual {
    double residual = 0.0;
    double tol = 0.0;
    bool applicable = false;
};

/// Checks one dissipation inequality on consecutive log rows:
///   (S_{k+1} − S_k)/Δt − ½(σ_k + σ_{k+1}) ≤ 1e-6 + 10·Δt·(Δsᵀ W Δs/Δt² + δσ_k/Δt),
/// where δσ_k is the largest |σ_{j+1} − σ_j| over intervals k − 1, k, k + 1.
/// Intervals whose reference changes or whose disturbances are not at the DC
/// value are skipped. Throws std::invalid_argument on a schema mismatch.
LemmaVerdict audit_lemma(const TrajectoryLog& log, LemmaId id, const StorageSuite& suite,
                         const ReferenceSchedule& refs, const DisturbanceProfile& profile,
                         std::vector<IntervalResidual>* per_interval = nullptr);

CombinedVerdict audit_combined(const TrajectoryLog& log, const StorageSuite& suite, const ReferenceSchedule& refs,
                               const DisturbanceProfile& profile,
                               std::vector<IntervalResidual>* per_interval = nullptr);

PassivityReport audit_all(const TrajectoryLog& log, const StorageSuite& suite, const ReferenceSchedule& refs,
                          const DisturbanceProfile& profile);

}  // namespace hvacpd
