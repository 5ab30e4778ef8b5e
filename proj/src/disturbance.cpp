#include "hvacpd/disturbance.hpp"

#include <algorithm>
#include <cmath>

namespace hvacpd {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

void DisturbanceProfile::validate(int n1, int n) const {
    require_size(d_q, n1, "disturbance d_q");
    require_size(d_a, n, "disturbance d_a");
    require(breakpoints.size() == segments.size(), "disturbance: breakpoints and segments differ in count");
    for (std::size_t k = 0; k < breakpoints.size(); ++k) {
        require_size(segments[k], n1, "disturbance segment");
        if (k > 0) require(breakpoints[k] > breakpoints[k - 1], "disturbance: breakpoints must increase strictly");
    }
    if (kind == DisturbanceKind::PiecewiseConstant) {
        require(!breakpoints.empty(), "disturbance: piecewise profile needs breakpoints");
    }
    if (kind == DisturbanceKind::ConstantPlusNoise) {
        require(noise_amplitude >= 0.0, "disturbance: negative noise amplitude");
        require(noise_period > 0.0, "disturbance: noise period must be positive");
    }
}

std::size_t DisturbanceProfile::segment(double t) const {
    if (kind != DisturbanceKind::PiecewiseConstant) return 0;
    return static_cast<std::size_t>(std::upper_bound(breakpoints.begin(), breakpoints.end(), t) -
                                    breakpoints.begin());
}

const Vec& DisturbanceProfile::dc_heat(double t) const {
    const std::size_t s = segment(t);
    return s == 0 ? d_q : segments[s - 1];
}

std::vector<Vec> DisturbanceProfile::dc_levels() const {
    std::vector<Vec> out{d_q};
    if (kind == DisturbanceKind::PiecewiseConstant) out.insert(out.end(), segments.begin(), segments.end());
    return out;
}

Vec DisturbanceProfile::noise(double t) const {
    Vec out = Vec::Zero(d_q.size());
    if (kind != DisturbanceKind::ConstantPlusNoise || noise_amplitude == 0.0) return out;
    // piecewise constant, redrawn at every multiple of the period; small guard
    // so a sample exactly on the boundary picks the new draw
    const auto slot = static_cast<std::uint64_t>(std::floor(t / noise_period + 1e-9));
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        const std::uint64_t h = splitmix64(seed ^ splitmix64(slot * 0x100000001b3ULL + static_cast<std::uint64_t>(i)));
        const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
        out[i] = noise_amplitude * (2.0 * u - 1.0);
    }
    return out;
}

Vec DisturbanceProfile::heat(double t) const {
    Vec w = dc_heat(t) + noise(t);
    if (probe) w += probe(t);
    return w;
}

}  // namespace hvacpd
