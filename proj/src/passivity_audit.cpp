#include "hvacpd/passivity_audit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hvacpd {

RiccatiCertificate solve_riccati(const Plant& plant, const ControllerConfig& ctrl) {
    RiccatiCertificate cert;
    const int n1 = plant.n1;
    const int n2 = plant.n2;
    const int n = plant.size();
    if (n2 == 0) {
        cert.Psi = Mat(0, 0);
        cert.Psi_bar = plant.M;
        cert.riccati_max_eig = -std::numeric_limits<double>::infinity();
        cert.opposite_sign_max_eig = -std::numeric_limits<double>::infinity();
        cert.abar3_max_real = -std::numeric_limits<double>::infinity();
        cert.block_min_eig = min_sym_eig(cert.Psi_bar * ctrl.Abar + ctrl.Abar.transpose() * cert.Psi_bar);
        if (!(cert.block_min_eig > 0.0)) throw std::runtime_error("solve_riccati: P is not positive definite");
        return cert;
    }

    const Mat p_inv = spd_inverse(ctrl.P, "P");
    const Mat abar3 = -plant.A3 + plant.A2 * plant.M * p_inv * plant.A2.transpose();
    const Mat g = plant.A2 * p_inv * plant.A2.transpose();
    const Mat q = plant.A2 * plant.M * p_inv * plant.M * plant.A2.transpose();

    cert.abar3_max_real = Eigen::EigenSolver<Mat>(abar3, false).eigenvalues().real().maxCoeff();
    if (!(cert.abar3_max_real < 0.0)) {
        throw std::runtime_error("solve_riccati: Abar3 is not Hurwitz (spectral abscissa " +
                                 std::to_string(cert.abar3_max_real) + ")");
    }

    const double scale = std::max({1.0, q.norm(), abar3.norm(), g.norm()});
    cert.slack = 1e-8 * scale;
    const Mat q_slack = q + cert.slack * Mat::Identity(n2, n2);

    const LyapunovSolver lyap(abar3);
    Mat psi = Mat::Zero(n2, n2);
    for (int it = 1; it <= 2000; ++it) {
        const Mat next = lyap.solve(q_slack + psi * g * psi);
        const double change = (next - psi).norm();
        psi = next;
        cert.iterations = it;
        if (!psi.allFinite() || psi.norm() > 1e14) {
            throw std::runtime_error("solve_riccati: fixed-point iteration diverged (no solution)");
        }
        if (change <= 1e-15 * std::max(1.0, psi.norm())) break;
    }

    const Mat residual = abar3 * psi + psi * abar3.transpose() + psi * g * psi + q;
    cert.riccati_max_eig = max_sym_eig(residual);
    cert.opposite_sign_max_eig = max_sym_eig(-abar3 * psi - psi * abar3.transpose() + psi * g * psi + q);
    cert.psi_min_eig = min_sym_eig(psi);
    cert.Psi = psi;
    cert.Psi_bar = Mat::Zero(n, n);
    cert.Psi_bar.topLeftCorner(n1, n1) = plant.M;
    cert.Psi_bar.bottomRightCorner(n2, n2) = psi;
    cert.block_min_eig = min_sym_eig(cert.Psi_bar * ctrl.Abar + ctrl.Abar.transpose() * cert.Psi_bar);

    if (!(cert.riccati_max_eig < 0.0)) {
        throw std::runtime_error("solve_riccati: verification failed, residual max eig " +
                                 std::to_string(cert.riccati_max_eig));
    }
    if (!(cert.block_min_eig > 0.0)) {
        throw std::runtime_error("solve_riccati: Psi_bar Abar + Abar' Psi_bar not positive definite (" +
                                 std::to_string(cert.block_min_eig) + ")");
    }
    if (cert.psi_min_eig < -1e-12 * std::max(1.0, psi.norm())) {
        throw std::runtime_error("solve_riccati: Psi is not positive semidefinite");
    }
    return cert;
}

Reference make_reference(const OptimizationSpec& spec, const Plant& plant, const ControllerConfig& ctrl,
                         const Vec& d_q, const Vec& d_a) {
    OptimizationSpec s = spec;
    s.d_q = d_q;
    s.d_a = d_a;
    Reference ref;
    ref.d_q = d_q;
    ref.d_a = d_a;
    ref.kkt = solve_kkt(s, plant);
    ref.r_star = ref.kkt.z_x_star.head(plant.n1);
    ref.ss = steady_state(ref.r_star, d_q, d_a, plant, ctrl);
    ref.nu_star = -plant.M * plant.M * (ref.kkt.z_u_star + d_q);
    ref.p_star = s.g.count ? Vec(s.scaled_jacobian(ref.kkt.z_u_star).transpose() * ref.kkt.lambda_star)
                           : Vec(Vec::Zero(plant.n1));
    ref.grad_f_star = s.f.gradient(ref.kkt.z_u_star);
    ref.y_p_star = -plant.M * d_q;
    return ref;
}

ReferenceSchedule::ReferenceSchedule(const OptimizationSpec& spec, const Plant& plant,
                                     const ControllerConfig& ctrl, const DisturbanceProfile& profile)
    : profile_(std::make_shared<const DisturbanceProfile>(profile)) {
    for (const Vec& dq : profile.dc_levels()) refs_.push_back(make_reference(spec, plant, ctrl, dq, profile.d_a));
}

StorageSuite::StorageSuite(const Plant& plant, const ControllerConfig& ctrl, const OptimizationSpec& spec,
                           RiccatiCertificate cert)
    : plant_(plant), ctrl_(ctrl), spec_(spec), cert_(std::move(cert)) {}

double StorageSuite::U(const Vec& lambda, const Reference& ref) const {
    return U_form(lambda - ref.kkt.lambda_star);
}
double StorageSuite::V(const Vec& z_u, const Reference& ref) const { return V_form(z_u - ref.kkt.z_u_star); }
double StorageSuite::S_o(const Vec& z_u, const Vec& lambda, const Reference& ref) const {
    return V(z_u, ref) + U(lambda, ref);
}
double StorageSuite::S_x(const Vec& x, const Reference& ref) const { return S_x_form(x - ref.ss.x_star); }
double StorageSuite::S_xi(const Vec& xi, const Reference& ref) const { return S_xi_form(xi - ref.ss.xi_star); }
double StorageSuite::S_p(const Vec& x, const Vec& xi, const Reference& ref) const {
    return S_x(x, ref) + S_xi(xi, ref);
}

double StorageSuite::U_form(const Vec& dlambda) const { return 0.5 * dlambda.squaredNorm(); }
double StorageSuite::V_form(const Vec& dz) const { return dz.squaredNorm() / (2.0 * spec_.alpha); }
double StorageSuite::S_x_form(const Vec& dx) const { return 0.5 * dx.dot(cert_.Psi_bar * dx); }
double StorageSuite::S_xi_form(const Vec& dxi) const {
    return dxi.dot(plant_.M * dxi) / (2.0 * ctrl_.k_I);
}

std::string lemma_name(LemmaId id) {
    switch (id) {
        case LemmaId::OptPassive: return "opt_passive";
        case LemmaId::OptOutputFeedback: return "opt_output_feedback";
        case LemmaId::PlantPassive: return "plant_passive";
        case LemmaId::PlantShortage: return "plant_passivity_short";
        case LemmaId::DualPassive: return "dual_passive";
        case LemmaId::PrimalPassive: return "primal_passive";
        case LemmaId::Combined: return "combined";
    }
    return "unknown";
}

std::vector<LemmaId> all_lemmas() {
    return {LemmaId::OptPassive,  LemmaId::OptOutputFeedback, LemmaId::PlantPassive, LemmaId::PlantShortage,
            LemmaId::DualPassive, LemmaId::PrimalPassive};
}

bool PassivityReport::all_pass() const {
    return combined.pass && std::all_of(lemmas.begin(), lemmas.end(), [](const auto& l) { return l.pass; });
}

namespace {

struct RowView {
    double t;
    Vec x, xi, z, lambda, d_hat, y_o, r, y_p, zeta, nu, w_q, w_a;
};

struct Offsets {
    std::size_t x, xi, z, lambda, d_hat, y_o, r, y_p, zeta, nu, w_q, w_a;
};

class LogReader {
public:
    LogReader(const TrajectoryLog& log, const Plant& plant, const OptimizationSpec& spec)
        : log_(log), n1_(plant.n1), n_(plant.size()), c_(spec.g.count) {
        const LogSchema& s = log.schema();
        if (s.n1 != plant.n1 || s.n2 != plant.n2 || s.c != spec.g.count) {
            throw std::invalid_argument("audit: log schema (n1=" + std::to_string(s.n1) + ", n2=" +
                                        std::to_string(s.n2) + ", c=" + std::to_string(s.c) +
                                        ") does not match the scenario");
        }
        if (log.rows() < 2) throw std::invalid_argument("audit: log needs at least two rows");
        off_.x = log.offset("x");
        off_.xi = log.offset("xi");
        off_.z = log.offset("z_u");
        off_.lambda = c_ ? log.offset("lambda") : 0;
        off_.d_hat = log.offset("d_q_hat");
        off_.y_o = log.offset("y_o");
        off_.r = log.offset("r");
        off_.y_p = log.offset("y_p");
        off_.zeta = log.offset("zeta");
        off_.nu = log.offset("nu");
        off_.w_q = log.offset("w_q");
        off_.w_a = log.offset("w_a");
    }

    RowView row(std::size_t k) const {
        RowView v;
        v.t = log_.time(k);
        v.x = slice(k, off_.x, n_);
        v.xi = slice(k, off_.xi, n1_);
        v.z = slice(k, off_.z, n1_);
        v.lambda = slice(k, off_.lambda, c_);
        v.d_hat = slice(k, off_.d_hat, n1_);
        v.y_o = slice(k, off_.y_o, n1_);
        v.r = slice(k, off_.r, n1_);
        v.y_p = slice(k, off_.y_p, n1_);
        v.zeta = slice(k, off_.zeta, n1_);
        v.nu = slice(k, off_.nu, n1_);
        v.w_q = slice(k, off_.w_q, n1_);
        v.w_a = slice(k, off_.w_a, n_);
        return v;
    }

private:
    Vec slice(std::size_t k, std::size_t off, int len) const {
        Vec v(len);
        for (int i = 0; i < len; ++i) v[i] = log_.at(k, off + i);
        return v;
    }

    const TrajectoryLog& log_;
    int n1_, n_, c_;
    Offsets off_{};
};

struct Terms {
    double storage = 0.0;
    double supply = 0.0;
};

Terms evaluate(LemmaId id, const RowView& v, const Reference& ref, const StorageSuite& suite) {
    const Plant& plant = suite.plant();
    const ControllerConfig& ctrl = suite.controller();
    const OptimizationSpec& spec = suite.spec();
    const double sigma = plant.sigma;
    const int n1 = plant.n1;
    Terms t;
    auto dual_term = [&](const Vec& z, const Vec& lambda) -> Vec {
        if (spec.g.count == 0) return Vec::Zero(n1);
        return spec.scaled_jacobian(z).transpose() * lambda;
    };
    switch (id) {
        case LemmaId::OptPassive: {
            t.storage = suite.S_o(v.z, v.lambda, ref);
            t.supply = -(v.nu - ref.nu_star).dot(v.d_hat - ref.d_q);
            break;
        }
        case LemmaId::OptOutputFeedback: {
            t.storage = suite.S_o(v.z, v.lambda, ref);
            const Vec y = v.y_o - ref.r_star;
            const Vec u = plant.M * (v.d_hat - ref.d_q);
            t.supply = y.dot(u) - y.squaredNorm();
            break;
        }
        case LemmaId::PlantPassive: {
            t.storage = suite.S_p(v.x, v.xi, ref);
            t.supply = (v.zeta - ref.ss.zeta_star).dot(v.r - ref.r_star);
            break;
        }
        case LemmaId::PlantShortage: {
            t.storage = suite.S_p(v.x, v.xi, ref);
            const Vec y = v.y_p - ref.y_p_star;
            const Vec u = v.r - ref.r_star;
            const Vec x1 = v.x.head(n1) - ref.ss.x_star.head(n1);
            t.supply = y.dot(u) + (1.0 - ctrl.kappa * sigma) * u.squaredNorm() -
                       ctrl.k_P * sigma * (u - x1).squaredNorm();
            break;
        }
        case LemmaId::DualPassive: {
            t.storage = suite.U(v.lambda, ref);
            t.supply = (dual_term(v.z, v.lambda) - ref.p_star).dot(v.z - ref.kkt.z_u_star);
            break;
        }
        case LemmaId::PrimalPassive: {
            t.storage = suite.V(v.z, ref);
            const Vec dz = v.z - ref.kkt.z_u_star;
            const Vec mu = v.nu - dual_term(v.z, v.lambda);
            const Vec mu_star = ref.nu_star - ref.p_star;
            t.supply = -dz.dot(spec.f.gradient(v.z) - ref.grad_f_star) + dz.dot(mu - mu_star);
            break;
        }
        case LemmaId::Combined: {
            t.storage = suite.S_o(v.z, v.lambda, ref) + suite.S_p(v.x, v.xi, ref);
            const Vec y = v.y_o - ref.r_star;
            const Vec track = v.r - v.x.head(n1);
            t.supply = -ctrl.kappa * sigma * y.squaredNorm() - ctrl.k_P * sigma * track.squaredNorm();
            break;
        }
    }
    return t;
}

double increment_form(LemmaId id, const RowView& a, const RowView& b, const StorageSuite& suite) {
    const double opt = suite.V_form(b.z - a.z) + suite.U_form(b.lambda - a.lambda);
    const double phys = suite.S_x_form(b.x - a.x) + suite.S_xi_form(b.xi - a.xi);
    switch (id) {
        case LemmaId::OptPassive:
        case LemmaId::OptOutputFeedback: return opt;
        case LemmaId::PlantPassive:
        case LemmaId::PlantShortage: return phys;
        case LemmaId::DualPassive: return suite.U_form(b.lambda - a.lambda);
        case LemmaId::PrimalPassive: return suite.V_form(b.z - a.z);
        case LemmaId::Combined: return opt + phys;
    }
    return 0.0;
}

bool needs_dc_heat(LemmaId id) {
    return id == LemmaId::PlantPassive || id == LemmaId::PlantShortage || id == LemmaId::Combined;
}

bool at_dc(const RowView& v, const Reference& ref, bool check_heat) {
    const double tol = 1e-12;
    if ((v.w_a - ref.d_a).cwiseAbs().maxCoeff() > tol * std::max(1.0, ref.d_a.cwiseAbs().maxCoeff())) return false;
    if (check_heat && (v.w_q - ref.d_q).cwiseAbs().maxCoeff() > tol * std::max(1.0, ref.d_q.cwiseAbs().maxCoeff())) {
        return false;
    }
    return true;
}

constexpr double kTolAbs = 1e-6;
constexpr double kTolFactor = 10.0;

struct Sweep {
    LemmaVerdict verdict;
    double dissipated = 0.0;     // Σ (S_k − S_{k+1}) over applicable intervals
    double integrated_tol = 0.0;
    double integral_y = 0.0;
    double integral_track = 0.0;
};

Sweep sweep(const TrajectoryLog& log, LemmaId id, const StorageSuite& suite, const ReferenceSchedule& refs,
            const DisturbanceProfile& profile, std::vector<IntervalResidual>* per_interval) {
    const LogReader reader(log, suite.plant(), suite.spec());
    const bool noisy = profile.probe ||
                       (profile.kind == DisturbanceKind::ConstantPlusNoise && profile.noise_amplitude > 0.0);
    const bool heat = needs_dc_heat(id);
    Sweep out;
    out.verdict.id = id;
    out.verdict.name = lemma_name(id);
    out.verdict.max_residual = -std::numeric_limits<double>::infinity();
    out.verdict.max_excess = -std::numeric_limits<double>::infinity();
    if (per_interval) per_interval->assign(log.rows(), IntervalResidual{});

    // first pass: storage, supply and increment form per interval
    struct Interval {
        bool applicable = false;
        double dt = 0.0, s0 = 0.0, s1 = 0.0, q0 = 0.0, q1 = 0.0, form = 0.0, y2 = 0.0, tr2 = 0.0;
    };
    const std::size_t m = log.rows() - 1;
    std::vector<Interval> iv(m);
    const int n1 = suite.plant().n1;
    RowView a = reader.row(0);
    for (std::size_t k = 0; k < m; ++k) {
        RowView b = reader.row(k + 1);
        Interval& in = iv[k];
        in.dt = b.t - a.t;
        if (!(in.dt > 0.0)) throw std::invalid_argument("audit: time column is not strictly increasing");
        const Reference& ref = refs.at(a.t);
        in.applicable = refs.segment(a.t) == refs.segment(b.t) && !(heat && noisy) && at_dc(a, ref, heat) &&
                        at_dc(b, ref, heat);
        if (in.applicable) {
            const Terms ta = evaluate(id, a, ref, suite);
            const Terms tb = evaluate(id, b, ref, suite);
            in.s0 = ta.storage;
            in.s1 = tb.storage;
            in.q0 = ta.supply;
            in.q1 = tb.supply;
            in.form = increment_form(id, a, b, suite);
            if (id == LemmaId::Combined) {
                auto y2 = [&](const RowView& v) { return (v.y_o - ref.r_star).squaredNorm(); };
                auto tr2 = [&](const RowView& v) { return (v.r - v.x.head(n1)).squaredNorm(); };
                in.y2 = 0.5 * in.dt * (y2(a) + y2(b));
                in.tr2 = 0.5 * in.dt * (tr2(a) + tr2(b));
            }
        }
        a = std::move(b);
    }

    // second pass: the supply variation is taken over the interval and its
    // applicable neighbours so turning points of the supply keep a nonzero slack
    auto variation = [&](std::size_t k) {
        return iv[k].applicable ? std::abs(iv[k].q1 - iv[k].q0) : 0.0;
    };
    for (std::size_t k = 0; k < m; ++k) {
        const Interval& in = iv[k];
        if (!in.applicable) {
            ++out.verdict.intervals_skipped;
            continue;
        }
        double dq = variation(k);
        if (k > 0) dq = std::max(dq, variation(k - 1));
        if (k + 1 < m) dq = std::max(dq, variation(k + 1));
        const double local = 2.0 * in.form / (in.dt * in.dt) + dq / in.dt;
        const double tol = kTolAbs + kTolFactor * in.dt * local;
        const double residual = (in.s1 - in.s0) / in.dt - 0.5 * (in.q0 + in.q1);
        ++out.verdict.intervals_checked;
        if (residual > out.verdict.max_residual) out.verdict.max_residual = residual;
        if (residual - tol > out.verdict.max_excess) {
            out.verdict.max_excess = residual - tol;
            out.verdict.tol_at_worst = tol;
            out.verdict.worst_row = k;
        }
        out.dissipated += in.s0 - in.s1;
        out.integrated_tol += tol * in.dt;
        out.integral_y += in.y2;
        out.integral_track += in.tr2;
        if (per_interval) (*per_interval)[k] = {residual, tol, true};
    }
    if (out.verdict.intervals_checked == 0) {
        out.verdict.max_residual = 0.0;
        out.verdict.max_excess = 0.0;
    }
    out.verdict.pass = out.verdict.max_excess <= 0.0;
    return out;
}

}  // namespace

LemmaVerdict audit_lemma(const TrajectoryLog& log, LemmaId id, const StorageSuite& suite,
                         const ReferenceSchedule& refs, const DisturbanceProfile& profile,
                         std::vector<IntervalResidual>* per_interval) {
    return sweep(log, id, suite, refs, profile, per_interval).verdict;
}

CombinedVerdict audit_combined(const TrajectoryLog& log, const StorageSuite& suite, const ReferenceSchedule& refs,
                               const DisturbanceProfile& profile, std::vector<IntervalResidual>* per_interval) {
    const Sweep s = sweep(log, LemmaId::Combined, suite, refs, profile, per_interval);
    CombinedVerdict out;
    out.base = s.verdict;
    const LogReader reader(log, suite.plant(), suite.spec());
    const RowView first = reader.row(0);
    const RowView last = reader.row(log.rows() - 1);
    out.storage_initial = evaluate(LemmaId::Combined, first, refs.at(first.t), suite).storage;
    out.storage_final = evaluate(LemmaId::Combined, last, refs.at(last.t), suite).storage;
    out.integral_y_o = s.integral_y;
    out.integral_tracking = s.integral_track;
    out.integrated_tol = s.integrated_tol;
    const double ks = suite.controller().kappa * suite.plant().sigma;
    const double ps = suite.controller().k_P * suite.plant().sigma;
    out.storage_nonincreasing = -s.dissipated <= s.integrated_tol;
    out.l2_consistent = std::isfinite(s.integral_y) && std::isfinite(s.integral_track) &&
                        ks * s.integral_y + ps * s.integral_track <= s.dissipated + s.integrated_tol;
    out.pass = out.base.pass && out.storage_nonincreasing && out.l2_consistent;
    return out;
}

PassivityReport audit_all(const TrajectoryLog& log, const StorageSuite& suite, const ReferenceSchedule& refs,
                          const DisturbanceProfile& profile) {
    PassivityReport report;
    for (LemmaId id : all_lemmas()) report.lemmas.push_back(audit_lemma(log, id, suite, refs, profile));
    report.combined = audit_combined(log, suite, refs, profile);
    report.riccati = suite.certificate();
    report.tol_abs = kTolAbs;
    report.tol_rel_factor = kTolFactor;
    return report;
}

}  // namespace hvacpd
