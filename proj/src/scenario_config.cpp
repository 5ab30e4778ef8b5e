#include "hvacpd/scenario_config.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace hvacpd {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& item : j.items()) {
        if (!ok.count(item.key())) throw ConfigError(where + ": unknown key '" + item.key() + "'");
    }
}

double number(const json& j, const std::string& where) {
    if (!j.is_number()) throw ConfigError(where + ": expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(where + ": not finite");
    return v;
}

double number_or(const json& j, const char* key, double fallback, const std::string& where) {
    return j.contains(key) ? number(j.at(key), where + "." + key) : fallback;
}

// A scalar broadcasts to length n; an array must have length n.
Vec vector_of(const json& j, int n, const std::string& where) {
    if (j.is_number()) return Vec::Constant(n, number(j, where));
    if (!j.is_array()) throw ConfigError(where + ": expected a number or an array");
    if (static_cast<int>(j.size()) != n) {
        throw ConfigError(where + ": expected " + std::to_string(n) + " entries, got " + std::to_string(j.size()));
    }
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = number(j[i], where + "[" + std::to_string(i) + "]");
    return v;
}

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(what + ": " + e.what());
    }
}

}  // namespace

RunMode parse_mode(const std::string& s) {
    if (s == "coupled") return RunMode::Coupled;
    if (s == "feedforward") return RunMode::Feedforward;
    if (s == "both") return RunMode::Both;
    throw ConfigError("mode must be coupled, feedforward or both, got '" + s + "'");
}

std::string to_string(RunMode mode) {
    switch (mode) {
        case RunMode::Coupled: return "coupled";
        case RunMode::Feedforward: return "feedforward";
        case RunMode::Both: return "both";
    }
    return "?";
}

ThermalNetwork parse_network(const std::string& text) {
    const json j = parse_json(text, "network");
    only_keys(j, "network",
              {"n1", "n2", "capacitance", "wall_resistance", "edges", "supply_temperature", "specific_heat",
               "ambient_nominal"});
    ThermalNetwork net;
    try {
        net.n1 = j.at("n1").get<int>();
        net.n2 = j.at("n2").get<int>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("network: n1/n2: ") + e.what());
    }
    if (net.n1 < 1 || net.n2 < 0) throw ConfigError("network: need n1 >= 1 and n2 >= 0");
    const int n = net.size();
    if (!j.contains("capacitance") || !j.contains("wall_resistance")) {
        throw ConfigError("network: capacitance and wall_resistance are required");
    }
    net.capacitance = vector_of(j.at("capacitance"), n, "network.capacitance");
    net.wall_resistance = vector_of(j.at("wall_resistance"), n, "network.wall_resistance");
    net.supply_temperature = vector_of(j.value("supply_temperature", json(13.0)), net.n1, "network.supply_temperature");
    net.specific_heat = vector_of(j.value("specific_heat", json(1.005)), net.n1, "network.specific_heat");
    net.ambient_nominal = number_or(j, "ambient_nominal", 30.0, "network");
    if (j.contains("edges")) {
        if (!j.at("edges").is_array()) throw ConfigError("network.edges: expected an array");
        for (const auto& e : j.at("edges")) {
            if (!e.is_array() || e.size() != 3) throw ConfigError("network.edges: each edge is [i, j, R]");
            const int a = e[0].get<int>();
            const int b = e[1].get<int>();
            if (a < 0 || b < 0 || a >= n || b >= n || a == b) throw ConfigError("network.edges: bad zone index");
            net.add_edge(a, b, number(e[2], "network.edges R"));
        }
    }
    try {
        net.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("network: ") + e.what());
    }
    return net;
}

ThermalNetwork load_network(const std::string& path) { return parse_network(read_file(path)); }

std::string network_to_json(const ThermalNetwork& net) {
    auto arr = [](const Vec& v) {
        json a = json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
        return a;
    };
    json j;
    j["n1"] = net.n1;
    j["n2"] = net.n2;
    j["capacitance"] = arr(net.capacitance);
    j["wall_resistance"] = arr(net.wall_resistance);
    j["supply_temperature"] = arr(net.supply_temperature);
    j["specific_heat"] = arr(net.specific_heat);
    j["ambient_nominal"] = net.ambient_nominal;
    json edges = json::array();
    for (const auto& [key, r] : net.pair_resistance) {
        if (key.first < key.second) edges.push_back({key.first, key.second, r});
    }
    j["edges"] = edges;
    return j.dump(2) + "\n";
}

ScenarioConfig parse_config(const std::string& text, const std::string& base_dir,
                            std::optional<std::uint64_t> seed_override) {
    const json j = parse_json(text, "config");
    only_keys(j, "config",
              {"network", "equilibrium", "optimization", "controller", "disturbance", "horizon", "dt", "seed",
               "mode", "log_every", "interconnection", "initial", "opt_substeps", "description"});
    ScenarioConfig cfg;

    // network
    if (!j.contains("network")) throw ConfigError("config: network is required");
    const json& jn = j.at("network");
    only_keys(jn, "network", {"file", "synthetic"});
    if (jn.contains("file") == jn.contains("synthetic")) {
        throw ConfigError("network: give exactly one of file or synthetic");
    }
    if (jn.contains("file")) {
        std::filesystem::path p = jn.at("file").get<std::string>();
        if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
        if (!std::filesystem::exists(p)) throw ConfigError("network file not found: " + p.string());
        cfg.network = load_network(p.string());
    } else {
        const json& js = jn.at("synthetic");
        only_keys(js, "network.synthetic", {"n1", "n2", "seed", "supply_temperature", "ambient_nominal"});
        SyntheticNetworkOptions o;
        o.n1 = js.value("n1", o.n1);
        o.n2 = js.value("n2", o.n2);
        o.seed = js.value("seed", o.seed);
        o.supply_temperature = number_or(js, "supply_temperature", o.supply_temperature, "network.synthetic");
        o.ambient_nominal = number_or(js, "ambient_nominal", o.ambient_nominal, "network.synthetic");
        try {
            cfg.network = make_synthetic_network(o);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("network.synthetic: ") + e.what());
        }
    }
    const int n1 = cfg.network.n1;
    const int n = cfg.network.size();

    // operating point and linearization
    const json je = j.value("equilibrium", json::object());
    only_keys(je, "equilibrium", {"mass_flow", "heat_gain"});
    const Vec m_bar = vector_of(je.value("mass_flow", json(0.3)), n1, "equilibrium.mass_flow");
    const Vec q_bar = vector_of(je.value("heat_gain", json(1.0)), n1, "equilibrium.heat_gain");
    try {
        cfg.equilibrium = find_equilibrium(cfg.network, m_bar, q_bar);
        cfg.linearization = linearize(cfg.network, cfg.equilibrium);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("equilibrium: ") + e.what());
    }
    Scenario& sc = cfg.scenario;
    sc.plant = cfg.linearization.plant;

    // controller
    const json jc = j.value("controller", json::object());
    only_keys(jc, "controller", {"k_P", "k_I", "kappa"});
    try {
        sc.ctrl = make_controller(sc.plant, number_or(jc, "k_P", 6.0e-2, "controller"),
                                  number_or(jc, "k_I", 1.0e-3, "controller"),
                                  number_or(jc, "kappa", 1.0e-3, "controller"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    sc.dt = number_or(j, "dt", 1.0, "config");
    sc.horizon = number_or(j, "horizon", 20000.0, "config");
    if (!(sc.dt > 0.0)) throw ConfigError("dt must be positive");
    if (!(sc.horizon > 0.0)) throw ConfigError("horizon must be positive");
    sc.log_every = j.value("log_every", 1);
    sc.opt_substeps = j.value("opt_substeps", 0);
    cfg.mode = parse_mode(j.value("mode", std::string("coupled")));
    const std::string res = j.value("interconnection", std::string("exact"));
    if (res == "lagged") sc.resolution = Resolution::Lagged;
    else if (res == "exact") sc.resolution = Resolution::Exact;
    else throw ConfigError("interconnection must be lagged or exact, got '" + res + "'");
    const std::string init = j.value("initial", std::string("origin"));
    if (init == "origin") sc.initial = InitialCondition::Origin;
    else if (init == "equilibrium") sc.initial = InitialCondition::Equilibrium;
    else throw ConfigError("initial must be origin or equilibrium, got '" + init + "'");
    cfg.seed = seed_override ? *seed_override : j.value("seed", std::uint64_t{1});

    // optimization
    const json jo = j.value("optimization", json::object());
    only_keys(jo, "optimization", {"h", "f_weight", "constraints", "theta", "alpha"});
    OptimizationSpec& spec = sc.spec;
    spec.h = vector_of(jo.value("h", json(22.0)), n1, "optimization.h");
    spec.f = quadratic_cost(number_or(jo, "f_weight", 150.0, "optimization"), n1);
    spec.theta = number_or(jo, "theta", 15.0, "optimization");
    if (!(spec.theta > 0.0)) throw ConfigError("optimization.theta must be positive");
    const json jk = jo.value("constraints", json{{"box", 0.61}, {"sum", 1.25}});
    if (jk.is_null()) {
        spec.g = affine_constraints(no_constraints(n1));
    } else {
        only_keys(jk, "optimization.constraints", {"box", "sum"});
        const double box = number_or(jk, "box", 0.61, "optimization.constraints");
        const double total = number_or(jk, "sum", 1.25, "optimization.constraints");
        if (!(box > 0.0) || !(total > 0.0)) throw ConfigError("optimization.constraints: bounds must be positive");
        spec.g = affine_constraints(box_and_sum_constraints(n1, box, total));
    }

    // disturbances
    const json jd = j.value("disturbance", json::object());
    only_keys(jd, "disturbance", {"kind", "d_q", "d_a", "ambient_offset", "breakpoints", "segments", "noise"});
    DisturbanceProfile& prof = sc.profile;
    const std::string kind = jd.value("kind", std::string("constant"));
    if (kind == "constant") prof.kind = DisturbanceKind::Constant;
    else if (kind == "piecewise") prof.kind = DisturbanceKind::PiecewiseConstant;
    else if (kind == "noisy") prof.kind = DisturbanceKind::ConstantPlusNoise;
    else throw ConfigError("disturbance.kind must be constant, piecewise or noisy, got '" + kind + "'");
    prof.d_q = vector_of(jd.value("d_q", json(0.0)), n1, "disturbance.d_q");
    if (jd.contains("d_a") && jd.contains("ambient_offset")) {
        throw ConfigError("disturbance: give at most one of d_a and ambient_offset");
    }
    if (jd.contains("d_a")) {
        prof.d_a = vector_of(jd.at("d_a"), n, "disturbance.d_a");
    } else {
        cfg.ambient_offset = number_or(jd, "ambient_offset", 0.0, "disturbance");
        prof.d_a = cfg.linearization.map.to_ambient(cfg.ambient_offset);
    }
    if (prof.kind == DisturbanceKind::PiecewiseConstant) {
        if (!jd.contains("breakpoints") || !jd.contains("segments")) {
            throw ConfigError("disturbance: piecewise needs breakpoints and segments");
        }
        for (const auto& b : jd.at("breakpoints")) prof.breakpoints.push_back(number(b, "disturbance.breakpoints"));
        for (const auto& s : jd.at("segments")) prof.segments.push_back(vector_of(s, n1, "disturbance.segments"));
    } else if (jd.contains("breakpoints") || jd.contains("segments")) {
        throw ConfigError("disturbance: breakpoints only apply to kind piecewise");
    }
    if (prof.kind == DisturbanceKind::ConstantPlusNoise) {
        const json jz = jd.value("noise", json::object());
        only_keys(jz, "disturbance.noise", {"amplitude", "period"});
        prof.noise_amplitude = number_or(jz, "amplitude", 1.0e-3, "disturbance.noise");
        prof.noise_period = number_or(jz, "period", 20.0, "disturbance.noise");
    } else if (jd.contains("noise")) {
        throw ConfigError("disturbance: noise only applies to kind noisy");
    }
    prof.seed = cfg.seed;
    spec.d_q = prof.d_q;
    spec.d_a = prof.d_a;

    // α needs the assembled optimization problem
    if (jo.contains("alpha") && !(jo.at("alpha").is_string() && jo.at("alpha") == "auto")) {
        spec.alpha = number(jo.at("alpha"), "optimization.alpha");
    } else {
        spec.alpha = default_alpha(spec, sc.plant, sc.dt);
    }

    try {
        sc.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    } catch (const std::runtime_error& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

ScenarioConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override) {
    const std::filesystem::path p(path);
    ScenarioConfig cfg = parse_config(read_file(path), p.parent_path().string(), seed_override);
    cfg.path = path;
    return cfg;
}

void check_log_matches(const TrajectoryLog& log, const Scenario& sc) {
    const LogSchema& s = log.schema();
    if (s.n1 != sc.plant.n1 || s.n2 != sc.plant.n2 || s.c != sc.spec.g.count) {
        throw ConfigError("log dimensions (n1=" + std::to_string(s.n1) + ", n2=" + std::to_string(s.n2) +
                          ", c=" + std::to_string(s.c) + ") do not match the scenario (n1=" +
                          std::to_string(sc.plant.n1) + ", n2=" + std::to_string(sc.plant.n2) +
                          ", c=" + std::to_string(sc.spec.g.count) + ")");
    }
    const long steps = sc.steps();
    const std::size_t expected = static_cast<std::size_t>(steps / sc.log_every + 1);
    if (log.rows() != expected) {
        throw ConfigError("log has " + std::to_string(log.rows()) + " rows, the scenario produces " +
                          std::to_string(expected) + " (truncated or foreign log)");
    }
    const int n1 = sc.plant.n1;
    const int n = sc.plant.size();
    for (std::size_t k = 0; k < log.rows(); ++k) {
        const double t = static_cast<double>(k) * sc.log_every * sc.dt;
        if (std::abs(log.time(k) - t) > 1e-9 * std::max(1.0, t)) {
            throw ConfigError("log time grid differs from the scenario at row " + std::to_string(k));
        }
        const Vec wq = sc.profile.heat(t);
        const Vec wa = sc.profile.ambient(t);
        const double dq = (log.block(k, "w_q", n1) - wq).cwiseAbs().maxCoeff();
        const double da = (log.block(k, "w_a", n) - wa).cwiseAbs().maxCoeff();
        if (dq > 1e-12 * std::max(1.0, wq.cwiseAbs().maxCoeff()) ||
            da > 1e-12 * std::max(1.0, wa.cwiseAbs().maxCoeff())) {
            throw ConfigError("logged disturbances differ from the scenario at row " + std::to_string(k));
        }
    }
}

}  // namespace hvacpd
