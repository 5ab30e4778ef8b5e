// Scenario runner: coupled / feedforward simulation, passivity audit, log comparison.

#include "hvacpd/interconnect.hpp"
#include "hvacpd/passivity_audit.hpp"
#include "hvacpd/scenario_config.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

using nlohmann::json;
using namespace hvacpd;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitAudit = 3;

json vec_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json nums(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

json summary_json(const RunSummary& s) {
    return {{"architecture", s.architecture},
            {"steps", s.steps},
            {"final_tracking_error", num(s.final_tracking_error)},
            {"final_estimate_error", num(s.final_estimate_error)},
            {"settling_times", nums(s.settling_times)},
            {"r_variance", num(s.r_variance)},
            {"d_hat_variance", num(s.d_hat_variance)},
            {"tracking_l2_sq", num(s.tracking_l2_sq)},
            {"probe_l2_sq", num(s.probe_l2_sq)},
            {"max_lambda", num(s.max_lambda)}};
}

json certificate_json(const RiccatiCertificate& c) {
    return {{"riccati_max_eig", num(c.riccati_max_eig)},
            {"opposite_sign_max_eig", num(c.opposite_sign_max_eig)},
            {"block_min_eig", num(c.block_min_eig)},
            {"psi_min_eig", num(c.psi_min_eig)},
            {"abar3_max_real", num(c.abar3_max_real)},
            {"slack", num(c.slack)},
            {"iterations", c.iterations}};
}

json verdict_json(const LemmaVerdict& v) {
    return {{"lemma", v.name},
            {"pass", v.pass},
            {"max_residual", num(v.max_residual)},
            {"max_excess", num(v.max_excess)},
            {"tol_at_worst", num(v.tol_at_worst)},
            {"worst_row", v.worst_row},
            {"intervals_checked", v.intervals_checked},
            {"intervals_skipped", v.intervals_skipped}};
}

json comparison_json(const Comparison& c) {
    return {{"settling_a", nums(c.settling_a)},
            {"settling_b", nums(c.settling_b)},
            {"r_variance_a", num(c.r_variance_a)},
            {"r_variance_b", num(c.r_variance_b)},
            {"estimate_error_a", num(c.estimate_error_a)},
            {"estimate_error_b", num(c.estimate_error_b)},
            {"tracking_rms_a", vec_json(c.tracking_rms_a)},
            {"tracking_rms_b", vec_json(c.tracking_rms_b)},
            {"max_abs_difference", num(c.max_abs_difference)}};
}

// Audits one log; the combined inequality only describes the feedback loop.
json audit_report(const TrajectoryLog& log, const ScenarioConfig& cfg, Architecture arch, bool& all_pass) {
    const Scenario& sc = cfg.scenario;
    const ReferenceSchedule refs(sc.spec, sc.plant, sc.ctrl, sc.profile);
    const StorageSuite suite(sc.plant, sc.ctrl, sc.spec, solve_riccati(sc.plant, sc.ctrl));
    json lemmas = json::array();
    all_pass = true;
    for (LemmaId id : all_lemmas()) {
        const LemmaVerdict v = audit_lemma(log, id, suite, refs, sc.profile);
        all_pass = all_pass && v.pass;
        lemmas.push_back(verdict_json(v));
    }
    json combined = {{"applicable", arch == Architecture::Coupled}};
    if (arch == Architecture::Coupled) {
        const CombinedVerdict c = audit_combined(log, suite, refs, sc.profile);
        all_pass = all_pass && c.pass;
        combined.update(verdict_json(c.base));
        combined["pass"] = c.pass;
        combined["storage_initial"] = num(c.storage_initial);
        combined["storage_final"] = num(c.storage_final);
        combined["integral_y_o"] = num(c.integral_y_o);
        combined["integral_tracking"] = num(c.integral_tracking);
        combined["integrated_tol"] = num(c.integrated_tol);
        combined["storage_nonincreasing"] = c.storage_nonincreasing;
        combined["l2_consistent"] = c.l2_consistent;
    }
    json multipliers = json::array();
    for (const Reference& r : refs.all()) multipliers.push_back(r.kkt.multiplier_unique);
    return {{"architecture", to_string(arch)},
            {"pass", all_pass},
            {"tol_abs", 1e-6},
            {"tol_rel_factor", 10.0},
            {"lemmas", lemmas},
            {"combined", combined},
            {"riccati", certificate_json(suite.certificate())},
            {"multiplier_unique", multipliers}};
}

void write_json(const std::filesystem::path& p, const json& j) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    os << j.dump(2) << '\n';
}

Architecture parse_architecture(const std::string& s) {
    if (s == "coupled") return Architecture::Coupled;
    if (s == "feedforward") return Architecture::Feedforward;
    throw ConfigError("architecture must be coupled or feedforward, got '" + s + "'");
}

int cmd_run(const std::string& config, const std::string& mode_flag, std::optional<std::uint64_t> seed,
            const std::string& out_dir, bool audit) {
    ScenarioConfig cfg = load_config(config, seed);
    if (!mode_flag.empty()) cfg.mode = parse_mode(mode_flag);
    const std::filesystem::path out(out_dir);
    std::filesystem::create_directories(out);
    const Scenario& sc = cfg.scenario;

    std::vector<Architecture> archs;
    if (cfg.mode != RunMode::Feedforward) archs.push_back(Architecture::Coupled);
    if (cfg.mode != RunMode::Coupled) archs.push_back(Architecture::Feedforward);

    json summary = {{"config", cfg.path},
                    {"seed", cfg.seed},
                    {"mode", to_string(cfg.mode)},
                    {"n1", sc.plant.n1},
                    {"n2", sc.plant.n2},
                    {"constraints", sc.spec.g.count},
                    {"sigma", sc.plant.sigma},
                    {"alpha", sc.spec.alpha},
                    {"theta", sc.spec.theta},
                    {"dt", sc.dt},
                    {"horizon", sc.horizon},
                    {"opt_substeps", sc.substeps()},
                    {"interconnection", to_string(sc.resolution)},
                    {"riccati", certificate_json(solve_riccati(sc.plant, sc.ctrl))}};
    json runs = json::object();
    std::vector<TrajectoryLog> logs;
    bool audits_pass = true;
    json audits = json::object();
    for (Architecture a : archs) {
        RunResult res = run_scenario(sc, a);
        const std::string name = to_string(a);
        res.log.write_csv((out / (name + ".csv")).string());
        std::cerr << name << ": " << res.summary.steps << " steps in " << res.summary.wall_seconds << " s\n";
        runs[name] = summary_json(res.summary);
        if (audit) {
            bool pass = false;
            json rep = audit_report(res.log, cfg, a, pass);
            audits_pass = audits_pass && pass;
            audits[name] = rep["pass"];
            write_json(out / ("audit_" + name + ".json"), rep);
        }
        logs.push_back(std::move(res.log));
    }
    summary["runs"] = runs;
    if (logs.size() == 2) summary["comparison"] = comparison_json(compare_logs(logs[0], logs[1], sc.profile.breakpoints));
    if (audit) summary["audit"] = audits;
    write_json(out / "summary.json", summary);
    if (audit && !audits_pass) {
        std::cerr << "audit failed, see " << (out / "audit_*.json").string() << "\n";
        return kExitAudit;
    }
    return 0;
}

int cmd_audit(const std::string& log_path, const std::string& config, std::optional<std::uint64_t> seed,
              const std::string& arch_flag, const std::string& out_path) {
    const ScenarioConfig cfg = load_config(config, seed);
    TrajectoryLog log;
    try {
        log = TrajectoryLog::read_csv(log_path);
    } catch (const std::runtime_error& e) {
        throw ConfigError(e.what());
    }
    check_log_matches(log, cfg.scenario);
    Architecture arch = cfg.mode == RunMode::Feedforward ? Architecture::Feedforward : Architecture::Coupled;
    if (!arch_flag.empty()) arch = parse_architecture(arch_flag);
    bool pass = false;
    const json rep = audit_report(log, cfg, arch, pass);
    if (out_path.empty()) {
        std::cout << rep.dump(2) << '\n';
    } else {
        write_json(out_path, rep);
    }
    return pass ? 0 : kExitAudit;
}

int cmd_compare(const std::string& a_path, const std::string& b_path, const std::string& config) {
    TrajectoryLog a, b;
    try {
        a = TrajectoryLog::read_csv(a_path);
        b = TrajectoryLog::read_csv(b_path);
    } catch (const std::runtime_error& e) {
        throw ConfigError(e.what());
    }
    std::vector<double> breakpoints;
    if (!config.empty()) breakpoints = load_config(config).scenario.profile.breakpoints;
    Comparison c;
    try {
        c = compare_logs(a, b, breakpoints);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    json j = comparison_json(c);
    j["a"] = a_path;
    j["b"] = b_path;
    std::cout << j.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"HVAC primal-dual optimization coupled with a PI plant: simulate, audit, compare"};
    app.require_subcommand(1);

    std::string config, mode, out_dir = ".", log_path, arch, report, a_path, b_path, net_out;
    std::optional<std::uint64_t> seed;
    bool audit = false;
    SyntheticNetworkOptions net_opts;

    auto* run = app.add_subcommand("run", "simulate a scenario and write CSV logs plus summary.json");
    run->add_option("--config", config, "scenario file (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--mode", mode, "coupled, feedforward or both (overrides the file)")
        ->check(CLI::IsMember({"coupled", "feedforward", "both"}));
    run->add_option("--seed", seed, "noise seed (overrides the file)");
    run->add_option("--out", out_dir, "output directory");
    run->add_flag("--audit", audit, "audit every log and fail with exit code 3 on a violated inequality");

    auto* aud = app.add_subcommand("audit", "check every dissipation inequality along a logged run");
    aud->add_option("--log", log_path, "CSV written by run")->required()->check(CLI::ExistingFile);
    aud->add_option("--config", config, "scenario the log was produced with")->required()->check(CLI::ExistingFile);
    aud->add_option("--seed", seed, "seed used for the run");
    aud->add_option("--architecture", arch, "coupled or feedforward (default from the config mode)")
        ->check(CLI::IsMember({"coupled", "feedforward"}));
    aud->add_option("--report", report, "write the JSON report here instead of stdout");

    auto* cmp = app.add_subcommand("compare", "settling, variance and tracking figures of two logs");
    cmp->add_option("--a", a_path, "first CSV")->required()->check(CLI::ExistingFile);
    cmp->add_option("--b", b_path, "second CSV")->required()->check(CLI::ExistingFile);
    cmp->add_option("--config", config, "scenario providing disturbance breakpoints")->check(CLI::ExistingFile);

    auto* net = app.add_subcommand("make-network", "write a reproducible synthetic network file");
    net->add_option("--n1", net_opts.n1, "actuated rooms");
    net->add_option("--n2", net_opts.n2, "passive zones");
    net->add_option("--seed", net_opts.seed, "generator seed");
    net->add_option("--out", net_out, "output path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run) return cmd_run(config, mode, seed, out_dir, audit);
        if (*aud) return cmd_audit(log_path, config, seed, arch, report);
        if (*cmp) return cmd_compare(a_path, b_path, config);
        if (*net) {
            std::ofstream os(net_out, std::ios::binary);
            if (!os) throw ConfigError("cannot write " + net_out);
            os << network_to_json(make_synthetic_network(net_opts));
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
