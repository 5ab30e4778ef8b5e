#pragma once

#include "hvacpd/linalg.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace hvacpd {

enum class DisturbanceKind { Constant, PiecewiseConstant, ConstantPlusNoise };

/// Heat-gain and ambient disturbances in transformed units.
///
/// w_q(t) = DC(t) + noise(t) + probe(t), w_a(t) = d_a. For piecewise profiles
/// `segments[k]` is the DC heat gain for t ≥ breakpoints[k]; before the first
/// breakpoint the base `d_q` applies.
struct DisturbanceProfile {
    DisturbanceKind kind = DisturbanceKind::Constant;
    Vec d_q;
    Vec d_a;
    std::vector<double> breakpoints;
    std::vector<Vec> segments;
    double noise_amplitude = 0.0;
    double noise_period = 20.0;
    std::uint64_t seed = 0;
    std::function<Vec(double)> probe;  // additive w̃_q, optional

    void validate(int n1, int n) const;

    /// Index of the DC segment active at t (0 = base).
    std::size_t segment(double t) const;
    const Vec& dc_heat(double t) const;
    Vec noise(double t) const;
    Vec heat(double t) const;
    const Vec& ambient(double) const { return d_a; }
    /// DC heat gain per segment, base first.
    std::vector<Vec> dc_levels() const;
};

}  // namespace hvacpd
