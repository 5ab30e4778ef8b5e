#pragma once

#include "hvacpd/interconnect.hpp"
#include "hvacpd/thermal_net.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace hvacpd {

/// Raised for any malformed or inconsistent scenario file.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class RunMode { Coupled, Feedforward, Both };

RunMode parse_mode(const std::string& s);
std::string to_string(RunMode mode);

/// A fully built scenario together with the network it came from.
struct ScenarioConfig {
    std::string path;
    ThermalNetwork network;
    Equilibrium equilibrium;
    Linearization linearization;
    Scenario scenario;
    RunMode mode = RunMode::Coupled;
    std::uint64_t seed = 0;
    double ambient_offset = 0.0;  // °C, when d_a is derived from it
};

/// Parses a JSON scenario. Relative network paths resolve against `base_dir`.
/// A seed override replaces the file's seed (it drives the noise draws).
ScenarioConfig parse_config(const std::string& text, const std::string& base_dir,
                            std::optional<std::uint64_t> seed_override = std::nullopt);

ScenarioConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override = std::nullopt);

ThermalNetwork parse_network(const std::string& text);
ThermalNetwork load_network(const std::string& path);
std::string network_to_json(const ThermalNetwork& net);

/// Throws ConfigError unless the log could have been produced by `sc`:
/// dimensions, time grid, row count and the logged disturbance columns
/// must all agree.
void check_log_matches(const TrajectoryLog& log, const Scenario& sc);

}  // namespace hvacpd
