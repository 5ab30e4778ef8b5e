#pragma once

#include "hvacpd/linalg.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <utility>
#include <vector>

namespace hvacpd {

/// Lumped RC description of a building. Zones [0, n1) carry a VAV unit,
/// zones [n1, n1 + n2) are passive (walls, windows, unused rooms).
///
/// Units: capacitance kJ/°C, resistances °C·s/kJ, temperatures °C,
/// mass flow kg/s, specific heat kJ/(kg·°C), heat gains kW.
struct ThermalNetwork {
    int n1 = 0;
    int n2 = 0;
    Vec capacitance;             // length n
    Vec wall_resistance;         // R_i, length n
    std::map<std::pair<int, int>, double> pair_resistance;  // both orientations stored
    Vec supply_temperature;      // T^s_i, length n1
    Vec specific_heat;           // a_i, length n1
    double ambient_nominal = 0.0;

    int size() const { return n1 + n2; }

    /// Inserts the edge in both orientations.
    void add_edge(int i, int j, double resistance);

    /// Throws std::invalid_argument on a violated invariant.
    void validate() const;
};

/// Matrices of the collective dynamics
///   C Ṫ = R Tᵃ 1 − R T − L T + B G(T) m + B q.
struct CollectiveModel {
    Vec capacitance;     // diagonal of C
    Vec conductance;     // diagonal of R, entries 1/R_i
    Mat laplacian;       // L
    Mat selection;       // B = [I; 0]
    Vec supply_temperature;
    Vec specific_heat;

    /// Diagonal of G(T): a_i (T^s_i − T_i), i < n1.
    Vec heat_exchange(const Vec& temperature) const;

    /// Ṫ for given temperature, mass flow, ambient temperature and heat gains.
    Vec rhs(const Vec& temperature, const Vec& mass_flow, double ambient, const Vec& heat_gain) const;
};

CollectiveModel assemble_collective(const ThermalNetwork& net);

struct Equilibrium {
    Vec temperature;  // T̄, length n
    Vec mass_flow;    // m̄, length n1
    Vec heat_gain;    // q̄, length n1
};

/// Newton iteration on the collective right-hand side with m̄, q̄ and the
/// nominal ambient temperature fixed.
Equilibrium find_equilibrium(const ThermalNetwork& net, const Vec& mass_flow, const Vec& heat_gain,
                             double tol = 1e-9, int max_iter = 50);

/// ‖C Ṫ‖∞ / max(1, ‖inflow terms‖∞) at the equilibrium.
double equilibrium_residual(const ThermalNetwork& net, const Equilibrium& eq);

/// Linear transformed plant ẋ = −A x + B u + B w_q + w_a with its partitions.
struct Plant {
    int n1 = 0;
    int n2 = 0;
    Mat A;
    Mat B;
    Mat A1, A2, A3;
    Mat A_inv;
    Mat M;       // Bᵀ A⁻¹ B
    Mat M_inv;
    Mat N;       // Bᵀ A⁻¹ B Bᵀ A⁻¹
    Mat BtAinv;  // Bᵀ A⁻¹
    Mat A3_inv;
    Mat F;       // [−I  A2ᵀ A3⁻¹], n1 × n
    double sigma = 0.0;  // λ_min(M)

    int size() const { return n1 + n2; }
};

/// Builds and certifies a plant from an SPD A with n1 actuated zones.
/// Throws std::invalid_argument when A is not SPD or A3 is singular.
Plant make_plant(const Mat& a, int n1);

/// The transformation between physical deviations and plant variables.
struct VariableMap {
    Vec sqrt_c;           // C^{1/2} diagonal, length n
    Vec inflow_gain;      // diagonal of G(T̄), length n1
    Vec conductance;      // R diagonal

    Vec to_state(const Vec& dT) const;             // x = C^{1/2} δT
    Vec from_state(const Vec& x) const;            // δT = C^{-1/2} x
    Vec to_input(const Vec& dm) const;             // u = Bᵀ C^{-1/2} B G(T̄) δm
    Vec from_input(const Vec& u) const;
    Vec to_ambient(double dTa) const;              // w_a = C^{-1/2} R δTᵃ 1
    Vec to_heat(const Vec& dq) const;              // w_q = Bᵀ C^{-1/2} B δq
    Vec from_heat(const Vec& wq) const;
};

struct Linearization {
    Plant plant;
    VariableMap map;
};

/// A = C^{-1/2}(R + L + Ū)C^{-1/2} with Ū = diag(a_i m̄_i, 0).
Linearization linearize(const ThermalNetwork& net, const Equilibrium& eq);

/// Fixed-step trajectory; `states[k]` is sampled at `times[k] = k·dt`.
struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;
};

using SignalFn = std::function<Vec(double)>;
using ScalarSignalFn = std::function<double(double)>;

/// RK4 integration of the nonlinear RC model from T(0) = T0. Inputs are
/// evaluated at the RK stage times.
Trajectory simulate_nonlinear(const ThermalNetwork& net, const Vec& T0, const SignalFn& mass_flow,
                              const ScalarSignalFn& ambient, const SignalFn& heat_gain,
                              double horizon, double dt);

/// RK4 integration of ẋ = −A x + B u + B w_q + w_a.
Trajectory simulate_linear(const Plant& plant, const Vec& x0, const SignalFn& input,
                           const SignalFn& heat, const SignalFn& ambient, double horizon, double dt);

/// Options for the reproducible synthetic desk-scale network.
struct SyntheticNetworkOptions {
    int n1 = 3;
    int n2 = 5;
    std::uint64_t seed = 1;
    double supply_temperature = 13.0;
    double ambient_nominal = 30.0;
};

/// A diagonally dominant network: rooms in a chain, each room coupled to a
/// few passive zones, passive zones coupled to ambient and to each other.
ThermalNetwork make_synthetic_network(const SyntheticNetworkOptions& opts);

}  // namespace hvacpd
