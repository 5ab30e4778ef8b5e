#pragma once

#include "hvacpd/disturbance.hpp"
#include "hvacpd/opt_dynamics.hpp"
#include "hvacpd/passivity_audit.hpp"
#include "hvacpd/plant_control.hpp"
#include "hvacpd/trajectory_log.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace hvacpd {

/// How the high-level loop r = y_o, d̂_q = −M⁻¹ y_p is closed within one step.
///
/// The lagged form iterates r ← (I − (k_P + 2κ)M) r + … across samples, so it
/// is only usable when that matrix has spectral radius below one.
enum class Resolution {
    Exact,   // the affine loop equation solved for r directly
    Lagged,  // y_p from the previous reference, then y_o; one-sample delay
};

enum class Architecture {
    Coupled,      // d̂_q = −M⁻¹ y_p
    Feedforward,  // d̂_q = w_q(t), measured heat gains
};

enum class InitialCondition { Origin, Equilibrium };

struct CoupledState {
    PrimalDualState opt;
    PlantState phys;
    Vec r;  // reference held by the plant, carried for the lagged resolution
};

struct Scenario {
    Plant plant;
    ControllerConfig ctrl;
    OptimizationSpec spec;
    DisturbanceProfile profile;
    double horizon = 0.0;
    double dt = 1.0;
    int log_every = 1;
    Resolution resolution = Resolution::Exact;
    InitialCondition initial = InitialCondition::Origin;
    int opt_substeps = 0;  // 0: smallest count meeting the Euler bound

    long steps() const;
    int substeps() const;
    /// Spectral radius of I − (k_P + 2κ)M, the sample-to-sample gain of the lagged loop.
    double lagged_loop_gain() const;
    void validate() const;
};

/// Signals of one resolved interconnection; they are held over the next step.
struct ResolvedSignals {
    Vec d_q_hat, y_o, r, y_p, zeta, nu, w_q, w_a;
};

/// Closes the loop at time t and writes the resolved d̂_q, w_a and r into `cs`.
ResolvedSignals resolve(CoupledState& cs, const Scenario& sc, double t, Architecture arch);

/// Advances both subsystems by dt with the resolved signals held.
void advance(CoupledState& cs, const ResolvedSignals& sig, const Scenario& sc);

/// resolve followed by advance.
CoupledState coupled_step(const CoupledState& cs, const Scenario& sc, double t,
                          Architecture arch = Architecture::Coupled);

CoupledState initial_state(const Scenario& sc, const ReferenceSchedule& refs);

struct RunSummary {
    std::string architecture;
    long steps = 0;
    double final_tracking_error = 0.0;   // sup over the last 10% of ‖x1 − z_x1*‖∞
    double final_estimate_error = 0.0;   // sup over the last 10% of ‖d̂_q − DC(w_q)‖∞
    std::vector<double> settling_times;  // per DC segment, 2% band; NaN if never settled
    double r_variance = 0.0;             // Σ_i sample variance of r_i over the second half
    double d_hat_variance = 0.0;         // same for d̂_q
    double tracking_l2_sq = 0.0;         // ∫‖x1 − z_x1*‖²
    double probe_l2_sq = 0.0;            // ∫‖w_q − DC(w_q)‖²
    double max_lambda = 0.0;
    double wall_seconds = 0.0;
};

struct RunResult {
    TrajectoryLog log;
    RunSummary summary;
};

/// Runs the coupled scheme or the feedforward cascade over the horizon.
/// Rows are logged every `log_every` steps, storage and combined-audit columns
/// are filled afterwards. With `keep_log` false only the summary is produced.
RunResult run_scenario(const Scenario& sc, Architecture arch = Architecture::Coupled, bool keep_log = true);

RunResult run_feedforward_baseline(const Scenario& sc, bool keep_log = true);

/// Storage values and the combined residual per row, written into the log.
void annotate_storages(TrajectoryLog& log, const Scenario& sc, const ReferenceSchedule& refs,
                       const StorageSuite& suite);

/// Finite-energy heat-gain probe w̃_q.
struct Probe {
    std::string name;
    std::function<Vec(double)> signal;
};

Probe pulse_probe(const Vec& amplitude, double start, double width);
Probe sine_burst_probe(const Vec& amplitude, double period, double start, double duration);

struct GainEstimate {
    std::vector<std::string> probes;
    std::vector<double> ratios;  // ‖x1 − z_x1*‖_L2 / ‖w̃_q‖_L2
    double gain = 0.0;           // max ratio
    double bound_coefficient = 0.0;  // κ k_P σ / (κ + k_P)
};

/// Throws std::invalid_argument for a zero-energy probe.
GainEstimate estimate_l2_gain(const Scenario& sc, const std::vector<Probe>& probes);

/// Differences between two logs on the same grid. Settling is measured per
/// segment against the value x1 reaches at the segment's last row.
struct Comparison {
    std::vector<double> settling_a, settling_b;
    double r_variance_a = 0.0, r_variance_b = 0.0;
    double estimate_error_a = 0.0, estimate_error_b = 0.0;  // ‖d̂_q − w_q‖ RMS
    Vec tracking_rms_a, tracking_rms_b;  // per zone, ‖x1 − r‖ RMS
    double max_abs_difference = 0.0;     // over every shared column
};

/// Throws std::invalid_argument when the schemas or time grids differ.
Comparison compare_logs(const TrajectoryLog& a, const TrajectoryLog& b,
                        const std::vector<double>& breakpoints = {});

/// Per-zone sample variance summed over zones, rows with t ≥ t_from.
double sum_variance(const TrajectoryLog& log, const std::string& group, int len, double t_from);

/// Time after `t_step` at which ‖x1 − target‖∞ last exceeds `band`; 0 if it never does,
/// NaN if it still exceeds at the end of the window [t_step, t_end).
double settling_time(const TrajectoryLog& log, const Vec& target, double band, double t_step, double t_end);

std::string to_string(Architecture arch);
std::string to_string(Resolution res);

}  // namespace hvacpd
