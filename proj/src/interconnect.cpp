#include "hvacpd/interconnect.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace hvacpd {

std::string to_string(Architecture arch) { return arch == Architecture::Coupled ? "coupled" : "feedforward"; }
std::string to_string(Resolution res) { return res == Resolution::Lagged ? "lagged" : "exact"; }

long Scenario::steps() const { return std::lround(horizon / dt); }

int Scenario::substeps() const {
    if (opt_substeps > 0) return opt_substeps;
    const double bound = stable_step_bound(spec, plant);
    return std::max(1, static_cast<int>(std::ceil(dt / bound - 1e-12)));
}

double Scenario::lagged_loop_gain() const {
    const Mat g = Mat::Identity(plant.n1, plant.n1) - (ctrl.kbar_P + ctrl.kappa) * plant.M;
    return std::max(std::abs(min_sym_eig(g)), std::abs(max_sym_eig(g)));
}

void Scenario::validate() const {
    require(dt > 0.0 && std::isfinite(dt), "scenario: dt must be positive");
    require(horizon > 0.0 && std::isfinite(horizon), "scenario: horizon must be positive");
    require(std::abs(horizon / dt - static_cast<double>(steps())) < 1e-9 * std::max(1.0, horizon / dt),
            "scenario: horizon must be a multiple of dt");
    require(log_every >= 1, "scenario: log_every must be at least 1");
    require(opt_substeps >= 0, "scenario: opt_substeps must be nonnegative");
    require(spec.alpha > 0.0, "scenario: alpha must be positive");
    validate_spec(spec, plant);
    profile.validate(plant.n1, plant.size());
    if (resolution == Resolution::Lagged) {
        const double g = lagged_loop_gain();
        require(g < 1.0, "scenario: lagged interconnection is unstable for these gains (loop gain " +
                             std::to_string(g) + " >= 1); use the exact resolution");
    }
}

ResolvedSignals resolve(CoupledState& cs, const Scenario& sc, double t, Architecture arch) {
    const Plant& plant = sc.plant;
    const ControllerConfig& ctrl = sc.ctrl;
    ResolvedSignals sig;
    sig.w_q = sc.profile.heat(t);
    sig.w_a = sc.profile.ambient(t);
    cs.opt.w_a = sig.w_a;

    if (arch == Architecture::Feedforward) {
        sig.d_q_hat = sig.w_q;
    } else if (sc.resolution == Resolution::Lagged) {
        sig.d_q_hat = -plant.M_inv * outputs_p(cs.phys, cs.r, plant, ctrl).y_p;
    } else {
        const Vec rhs = cs.opt.z_u_hat + ctrl.kbar_P * cs.phys.x.head(plant.n1) - cs.phys.xi +
                        plant.M_inv * (plant.BtAinv * sig.w_a);
        const Vec r = rhs / (ctrl.kbar_P + ctrl.kappa);
        sig.d_q_hat = -plant.M_inv * outputs_p(cs.phys, r, plant, ctrl).y_p;
    }
    cs.opt.d_q_hat = sig.d_q_hat;
    const OptOutputs oo = outputs(cs.opt, plant, sc.spec);
    sig.y_o = oo.y_o;
    sig.nu = oo.nu;
    sig.r = sig.y_o;
    cs.r = sig.r;
    const PlantOutputs po = outputs_p(cs.phys, sig.r, plant, ctrl);
    sig.y_p = po.y_p;
    sig.zeta = po.zeta;
    return sig;
}

void advance(CoupledState& cs, const ResolvedSignals& sig, const Scenario& sc) {
    const int k = sc.substeps();
    const double h = sc.dt / k;
    for (int i = 0; i < k; ++i) cs.opt = step(cs.opt, sc.spec, sc.plant, h);
    cs.phys = plant_step(cs.phys, sig.r, sig.w_q, sig.w_a, sc.plant, sc.ctrl, sc.dt);
}

CoupledState coupled_step(const CoupledState& cs, const Scenario& sc, double t, Architecture arch) {
    CoupledState next = cs;
    const ResolvedSignals sig = resolve(next, sc, t, arch);
    advance(next, sig, sc);
    return next;
}

CoupledState initial_state(const Scenario& sc, const ReferenceSchedule& refs) {
    const int n1 = sc.plant.n1;
    CoupledState cs;
    cs.opt.w_a = sc.profile.ambient(0.0);
    cs.opt.d_q_hat = Vec::Zero(n1);
    if (sc.initial == InitialCondition::Equilibrium) {
        const Reference& ref = refs.at(0.0);
        cs.opt.z_u_hat = ref.kkt.z_u_star;
        cs.opt.lambda_hat = ref.kkt.lambda_star;
        cs.phys.x = ref.ss.x_star;
        cs.phys.xi = ref.ss.xi_star;
    } else {
        cs.opt.z_u_hat = Vec::Zero(n1);
        cs.opt.lambda_hat = Vec::Zero(sc.spec.g.count);
        cs.phys.x = Vec::Zero(sc.plant.size());
        cs.phys.xi = Vec::Zero(n1);
    }
    // the first lagged resolution uses the loop's exact solution
    const ControllerConfig& c = sc.ctrl;
    cs.r = (cs.opt.z_u_hat + c.kbar_P * cs.phys.x.head(n1) - cs.phys.xi +
            sc.plant.M_inv * (sc.plant.BtAinv * cs.opt.w_a)) /
           (c.kbar_P + c.kappa);
    return cs;
}

namespace {

class RunningVariance {
public:
    void add(const Vec& v) {
        if (count_ == 0) {
            mean_ = Vec::Zero(v.size());
            m2_ = Vec::Zero(v.size());
        }
        ++count_;
        const Vec delta = v - mean_;
        mean_ += delta / static_cast<double>(count_);
        m2_ += delta.cwiseProduct(v - mean_);
    }
    double sum() const { return count_ > 1 ? m2_.sum() / static_cast<double>(count_ - 1) : 0.0; }

private:
    long count_ = 0;
    Vec mean_, m2_;
};

void write_row(TrajectoryLog& log, double t, const CoupledState& cs, const ResolvedSignals& sig) {
    std::vector<double> row;
    row.reserve(log.cols());
    row.push_back(t);
    auto put = [&](const Vec& v) { row.insert(row.end(), v.data(), v.data() + v.size()); };
    put(cs.phys.x);
    put(cs.phys.xi);
    put(cs.opt.z_u_hat);
    put(cs.opt.lambda_hat);
    put(sig.d_q_hat);
    put(sig.y_o);
    put(sig.r);
    put(sig.y_p);
    put(sig.zeta);
    put(sig.nu);
    put(sig.w_q);
    put(sig.w_a);
    row.resize(log.cols(), 0.0);
    log.append_row(row);
}

}  // namespace

RunResult run_scenario(const Scenario& sc, Architecture arch, bool keep_log) {
    sc.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const ReferenceSchedule refs(sc.spec, sc.plant, sc.ctrl, sc.profile);
    const int n1 = sc.plant.n1;
    const long steps = sc.steps();
    const double t_final = steps * sc.dt;

    RunResult out;
    if (keep_log) {
        out.log = TrajectoryLog(LogSchema{n1, sc.plant.n2, sc.spec.g.count});
        out.log.reserve(static_cast<std::size_t>(steps / sc.log_every + 1));
    }
    RunSummary& sum = out.summary;
    sum.architecture = to_string(arch);
    sum.steps = steps;

    // settling bookkeeping per DC segment
    const std::size_t nseg = refs.all().size();
    std::vector<double> seg_start(nseg, 0.0), band(nseg, 0.0), last_violation(nseg, -1.0);
    std::vector<bool> violated_at_end(nseg, false);
    for (std::size_t s = 1; s < nseg; ++s) {
        seg_start[s] = sc.profile.breakpoints[s - 1];
    }

    CoupledState cs = initial_state(sc, refs);
    for (std::size_t s = 0; s < nseg; ++s) {
        const Vec prev = s == 0 ? Vec(cs.phys.x.head(n1)) : refs.all()[s - 1].r_star;
        band[s] = std::max(0.02 * (refs.all()[s].r_star - prev).cwiseAbs().maxCoeff(), 1e-9);
    }

    RunningVariance var_r, var_d;
    for (long k = 0; k <= steps; ++k) {
        const double t = k * sc.dt;
        const ResolvedSignals sig = resolve(cs, sc, t, arch);
        const Reference& ref = refs.at(t);
        const std::size_t seg = refs.segment(t);
        const double track = (cs.phys.x.head(n1) - ref.r_star).cwiseAbs().maxCoeff();
        const Vec dc = sc.profile.dc_heat(t);
        if (t >= 0.9 * t_final) {
            sum.final_tracking_error = std::max(sum.final_tracking_error, track);
            sum.final_estimate_error = std::max(sum.final_estimate_error, (sig.d_q_hat - dc).cwiseAbs().maxCoeff());
        }
        if (t >= 0.5 * t_final) {
            var_r.add(sig.r);
            var_d.add(sig.d_q_hat);
        }
        if (track > band[seg]) {
            last_violation[seg] = t;
            violated_at_end[seg] = true;
        } else {
            violated_at_end[seg] = false;
        }
        if (k < steps) {
            sum.tracking_l2_sq += sc.dt * (cs.phys.x.head(n1) - ref.r_star).squaredNorm();
            sum.probe_l2_sq += sc.dt * (sig.w_q - dc).squaredNorm();
        }
        if (cs.opt.lambda_hat.size()) sum.max_lambda = std::max(sum.max_lambda, cs.opt.lambda_hat.maxCoeff());
        if (keep_log && k % sc.log_every == 0) write_row(out.log, t, cs, sig);
        if (!cs.phys.x.allFinite() || !cs.opt.z_u_hat.allFinite()) {
            throw std::runtime_error("run_scenario: state diverged at t = " + std::to_string(t));
        }
        if (k < steps) advance(cs, sig, sc);
    }

    for (std::size_t s = 0; s < nseg; ++s) {
        if (violated_at_end[s]) {
            sum.settling_times.push_back(std::numeric_limits<double>::quiet_NaN());
        } else if (last_violation[s] < 0.0) {
            sum.settling_times.push_back(0.0);
        } else {
            sum.settling_times.push_back(last_violation[s] + sc.dt - seg_start[s]);
        }
    }
    sum.r_variance = var_r.sum();
    sum.d_hat_variance = var_d.sum();

    if (keep_log) {
        const StorageSuite suite(sc.plant, sc.ctrl, sc.spec, solve_riccati(sc.plant, sc.ctrl));
        annotate_storages(out.log, sc, refs, suite);
    }
    sum.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

RunResult run_feedforward_baseline(const Scenario& sc, bool keep_log) {
    return run_scenario(sc, Architecture::Feedforward, keep_log);
}

void annotate_storages(TrajectoryLog& log, const Scenario& sc, const ReferenceSchedule& refs,
                       const StorageSuite& suite) {
    const int n = sc.plant.size();
    const int n1 = sc.plant.n1;
    const int c = sc.spec.g.count;
    for (std::size_t k = 0; k < log.rows(); ++k) {
        const Reference& ref = refs.at(log.time(k));
        const double so = suite.S_o(log.block(k, "z_u", n1), log.block(k, "lambda", c), ref);
        const double sp = suite.S_p(log.block(k, "x", n), log.block(k, "xi", n1), ref);
        log.set_value(k, "S_o", so);
        log.set_value(k, "S_p", sp);
        log.set_value(k, "S", so + sp);
    }
    if (log.rows() < 2) return;
    std::vector<IntervalResidual> per;
    audit_combined(log, suite, refs, sc.profile, &per);
    for (std::size_t k = 0; k < log.rows(); ++k) {
        log.set_value(k, "res_combined", per[k].applicable ? per[k].residual : 0.0);
        log.set_value(k, "tol_combined", per[k].applicable ? per[k].tol : 0.0);
    }
}

Probe pulse_probe(const Vec& amplitude, double start, double width) {
    require(width > 0.0, "pulse probe: width must be positive");
    return {"pulse", [=](double t) -> Vec {
                return (t >= start && t < start + width) ? amplitude : Vec(Vec::Zero(amplitude.size()));
            }};
}

Probe sine_burst_probe(const Vec& amplitude, double period, double start, double duration) {
    require(period > 0.0 && duration > 0.0, "sine burst probe: period and duration must be positive");
    return {"sine_burst", [=](double t) -> Vec {
                if (t < start || t >= start + duration) return Vec::Zero(amplitude.size());
                return amplitude * std::sin(2.0 * M_PI * (t - start) / period);
            }};
}

GainEstimate estimate_l2_gain(const Scenario& sc, const std::vector<Probe>& probes) {
    require(!probes.empty(), "estimate_l2_gain: no probes");
    GainEstimate est;
    const double sigma = sc.plant.sigma;
    est.bound_coefficient = sc.ctrl.kappa * sc.ctrl.k_P * sigma / (sc.ctrl.kappa + sc.ctrl.k_P);
    for (const Probe& p : probes) {
        Scenario s = sc;
        s.profile.probe = p.signal;
        const RunSummary sum = run_scenario(s, Architecture::Coupled, false).summary;
        if (!(sum.probe_l2_sq > 0.0)) {
            throw std::invalid_argument("estimate_l2_gain: probe '" + p.name + "' has zero energy on the horizon");
        }
        const double ratio = std::sqrt(sum.tracking_l2_sq / sum.probe_l2_sq);
        est.probes.push_back(p.name);
        est.ratios.push_back(ratio);
        est.gain = std::max(est.gain, ratio);
    }
    return est;
}

double sum_variance(const TrajectoryLog& log, const std::string& group, int len, double t_from) {
    RunningVariance v;
    for (std::size_t k = 0; k < log.rows(); ++k) {
        if (log.time(k) >= t_from) v.add(log.block(k, group, len));
    }
    return v.sum();
}

double settling_time(const TrajectoryLog& log, const Vec& target, double band, double t_step, double t_end) {
    const int n1 = static_cast<int>(target.size());
    double last = -1.0;
    bool at_end = false;
    double last_t = t_step;
    for (std::size_t k = 0; k < log.rows(); ++k) {
        const double t = log.time(k);
        if (t < t_step || t >= t_end) continue;
        const bool out = (log.block(k, "x", n1) - target).cwiseAbs().maxCoeff() > band;
        if (out) last = t;
        at_end = out;
        last_t = t;
    }
    if (at_end) return std::numeric_limits<double>::quiet_NaN();
    if (last < 0.0) return 0.0;
    // first row after the last violation
    double next = last_t;
    for (std::size_t k = 0; k < log.rows(); ++k) {
        if (log.time(k) > last) {
            next = log.time(k);
            break;
        }
    }
    return next - t_step;
}

Comparison compare_logs(const TrajectoryLog& a, const TrajectoryLog& b, const std::vector<double>& breakpoints) {
    if (a.columns() != b.columns()) throw std::invalid_argument("compare: logs have different schemas");
    if (a.rows() != b.rows()) throw std::invalid_argument("compare: logs have different row counts");
    for (std::size_t k = 0; k < a.rows(); ++k) {
        if (std::abs(a.time(k) - b.time(k)) > 1e-9 * std::max(1.0, std::abs(a.time(k)))) {
            throw std::invalid_argument("compare: time grids differ at row " + std::to_string(k));
        }
    }
    require(a.rows() >= 2, "compare: logs need at least two rows");
    const LogSchema& s = a.schema();
    const int n1 = s.n1;
    const double t_end = a.time(a.rows() - 1);
    Comparison cmp;

    std::vector<double> starts{0.0};
    starts.insert(starts.end(), breakpoints.begin(), breakpoints.end());
    auto settle = [&](const TrajectoryLog& log) {
        std::vector<double> out;
        for (std::size_t i = 0; i < starts.size(); ++i) {
            const double end = i + 1 < starts.size() ? starts[i + 1] : t_end + 1.0;
            std::size_t first = 0, last = 0;
            bool any = false;
            for (std::size_t k = 0; k < log.rows(); ++k) {
                const double t = log.time(k);
                if (t < starts[i] || t >= end) continue;
                if (!any) first = k;
                last = k;
                any = true;
            }
            if (!any) {
                out.push_back(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            const Vec target = log.block(last, "x", n1);
            const Vec start = first > 0 ? log.block(first - 1, "x", n1) : log.block(first, "x", n1);
            const double band = std::max(0.02 * (target - start).cwiseAbs().maxCoeff(), 1e-9);
            out.push_back(settling_time(log, target, band, starts[i], end));
        }
        return out;
    };
    cmp.settling_a = settle(a);
    cmp.settling_b = settle(b);
    cmp.r_variance_a = sum_variance(a, "r", n1, 0.5 * t_end);
    cmp.r_variance_b = sum_variance(b, "r", n1, 0.5 * t_end);

    auto rms = [&](const TrajectoryLog& log, Vec& tracking) {
        double est = 0.0;
        tracking = Vec::Zero(n1);
        for (std::size_t k = 0; k < log.rows(); ++k) {
            est += (log.block(k, "d_q_hat", n1) - log.block(k, "w_q", n1)).squaredNorm();
            tracking += (log.block(k, "x", n1) - log.block(k, "r", n1)).cwiseAbs2();
        }
        const double m = static_cast<double>(log.rows());
        tracking = (tracking / m).cwiseSqrt();
        return std::sqrt(est / m);
    };
    cmp.estimate_error_a = rms(a, cmp.tracking_rms_a);
    cmp.estimate_error_b = rms(b, cmp.tracking_rms_b);

    for (std::size_t k = 0; k < a.rows(); ++k) {
        for (std::size_t c = 0; c < a.cols(); ++c) {
            cmp.max_abs_difference = std::max(cmp.max_abs_difference, std::abs(a.at(k, c) - b.at(k, c)));
        }
    }
    return cmp;
}

}  // namespace hvacpd
