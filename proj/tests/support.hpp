#pragma once

#include "hvacpd/scenario_config.hpp"

#include <json.hpp>

#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace hvacpd::testing {

inline std::string config_path(const std::string& name) { return std::string(HVACPD_CONFIG_DIR) + "/" + name; }

inline nlohmann::json config_json(const std::string& name) {
    std::ifstream is(config_path(name));
    return nlohmann::json::parse(is);
}

// A shipped scenario with `patch` merged in (RFC 7386).
inline ScenarioConfig config(const std::string& name, const std::string& patch = "{}") {
    nlohmann::json j = config_json(name);
    j.merge_patch(nlohmann::json::parse(patch));
    return parse_config(j.dump(), HVACPD_CONFIG_DIR);
}

// Desk plant with the default scenario settings.
inline ScenarioConfig desk(const std::string& patch = "{}") { return config("desk3x5.json", patch); }

inline Vec random_vec(std::mt19937_64& gen, int n, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = d(gen);
    return v;
}

// Symmetric, strictly diagonally dominant, positive diagonal.
inline Mat random_spd(std::mt19937_64& gen, int n) {
    Mat a = Mat::Zero(n, n);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) a(i, j) = a(j, i) = -d(gen);
    }
    for (int i = 0; i < n; ++i) a(i, i) = -a.row(i).sum() + 0.2 + d(gen);
    return a;
}

}  // namespace hvacpd::testing
