#include "hvacpd/thermal_net.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace hvacpd {

void ThermalNetwork::add_edge(int i, int j, double resistance) {
    pair_resistance[{i, j}] = resistance;
    pair_resistance[{j, i}] = resistance;
}

void ThermalNetwork::validate() const {
    require(n1 >= 1, "network: need at least one HVAC zone");
    require(n2 >= 0, "network: negative passive zone count");
    const int n = size();
    require_size(capacitance, n, "network capacitance");
    require_size(wall_resistance, n, "network wall_resistance");
    require_size(supply_temperature, n1, "network supply_temperature");
    require_size(specific_heat, n1, "network specific_heat");
    for (int i = 0; i < n; ++i) {
        require(capacitance[i] > 0.0 && std::isfinite(capacitance[i]),
                "network: capacitance must be positive (zone " + std::to_string(i) + ")");
        require(wall_resistance[i] > 0.0 && std::isfinite(wall_resistance[i]),
                "network: wall resistance must be positive (zone " + std::to_string(i) + ")");
    }
    for (int i = 0; i < n1; ++i) {
        require(specific_heat[i] > 0.0, "network: specific heat must be positive");
        require(std::isfinite(supply_temperature[i]), "network: supply temperature not finite");
    }
    for (const auto& [key, r] : pair_resistance) {
        const auto [i, j] = key;
        require(i >= 0 && i < n && j >= 0 && j < n, "network: edge index out of range");
        require(i != j, "network: self edge");
        require(r > 0.0 && std::isfinite(r), "network: pair resistance must be positive");
        const auto it = pair_resistance.find({j, i});
        if (it == pair_resistance.end() || it->second != r) {
            std::ostringstream os;
            os << "network: pair resistance is not symmetric at (" << i << "," << j << ")";
            throw std::invalid_argument(os.str());
        }
    }
}

Vec CollectiveModel::heat_exchange(const Vec& temperature) const {
    const auto n1 = supply_temperature.size();
    return specific_heat.cwiseProduct(supply_temperature - temperature.head(n1));
}

Vec CollectiveModel::rhs(const Vec& temperature, const Vec& mass_flow, double ambient,
                         const Vec& heat_gain) const {
    Vec flow = conductance.cwiseProduct(Vec::Constant(temperature.size(), ambient) - temperature) -
               laplacian * temperature;
    const auto n1 = supply_temperature.size();
    flow.head(n1) += heat_exchange(temperature).cwiseProduct(mass_flow) + heat_gain;
    return flow.cwiseQuotient(capacitance);
}

CollectiveModel assemble_collective(const ThermalNetwork& net) {
    net.validate();
    const int n = net.size();
    CollectiveModel out;
    out.capacitance = net.capacitance;
    out.conductance = net.wall_resistance.cwiseInverse();
    out.laplacian = Mat::Zero(n, n);
    for (const auto& [key, r] : net.pair_resistance) {
        const auto [i, j] = key;
        // each undirected edge appears twice; add only the row entries for i
        out.laplacian(i, j) -= 1.0 / r;
        out.laplacian(i, i) += 1.0 / r;
    }
    out.selection = Mat::Zero(n, net.n1);
    out.selection.topRows(net.n1).setIdentity();
    out.supply_temperature = net.supply_temperature;
    out.specific_heat = net.specific_heat;
    return out;
}

namespace {

Vec inflow_residual(const CollectiveModel& cm, const Vec& T, const Vec& m, double ta, const Vec& q) {
    return cm.rhs(T, m, ta, q).cwiseProduct(cm.capacitance);
}

}  // namespace

Equilibrium find_equilibrium(const ThermalNetwork& net, const Vec& mass_flow, const Vec& heat_gain,
                             double tol, int max_iter) {
    const CollectiveModel cm = assemble_collective(net);
    require_size(mass_flow, net.n1, "equilibrium mass_flow");
    require_size(heat_gain, net.n1, "equilibrium heat_gain");
    for (int i = 0; i < net.n1; ++i) require(mass_flow[i] >= 0.0, "equilibrium: negative mass flow");

    const int n = net.size();
    Mat jac = -(Mat(cm.conductance.asDiagonal()) + cm.laplacian);
    jac.diagonal().head(net.n1) -= cm.specific_heat.cwiseProduct(mass_flow);
    const Eigen::PartialPivLU<Mat> lu(jac);

    Equilibrium eq{Vec::Constant(n, net.ambient_nominal), mass_flow, heat_gain};
    for (int it = 0; it < max_iter; ++it) {
        const Vec res = inflow_residual(cm, eq.temperature, mass_flow, net.ambient_nominal, heat_gain);
        eq.temperature -= lu.solve(res);
        if (equilibrium_residual(net, eq) < tol) return eq;
    }
    throw std::runtime_error("find_equilibrium: Newton iteration did not converge");
}

double equilibrium_residual(const ThermalNetwork& net, const Equilibrium& eq) {
    const CollectiveModel cm = assemble_collective(net);
    const Vec res = inflow_residual(cm, eq.temperature, eq.mass_flow, net.ambient_nominal, eq.heat_gain);
    const Vec wall = cm.conductance.cwiseProduct(Vec::Constant(net.size(), net.ambient_nominal) -
                                                 eq.temperature);
    double scale = 1.0;
    scale = std::max(scale, wall.cwiseAbs().maxCoeff());
    scale = std::max(scale, (cm.laplacian * eq.temperature).cwiseAbs().maxCoeff());
    scale = std::max(scale, eq.heat_gain.cwiseAbs().maxCoeff());
    return res.cwiseAbs().maxCoeff() / scale;
}

Plant make_plant(const Mat& a, int n1) {
    require(a.rows() == a.cols(), "plant: A must be square");
    require(n1 >= 1 && n1 <= a.rows(), "plant: invalid n1");
    require((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff()),
            "plant: A must be symmetric");
    Plant p;
    p.n1 = n1;
    p.n2 = static_cast<int>(a.rows()) - n1;
    const int n = p.size();
    p.A = 0.5 * (a + a.transpose());
    p.A_inv = spd_inverse(p.A, "plant matrix A");
    p.B = Mat::Zero(n, n1);
    p.B.topRows(n1).setIdentity();
    p.A1 = p.A.topLeftCorner(n1, n1);
    p.A2 = p.A.bottomLeftCorner(p.n2, n1);
    p.A3 = p.A.bottomRightCorner(p.n2, p.n2);
    p.BtAinv = p.A_inv.topRows(n1);
    p.M = p.BtAinv.leftCols(n1);
    p.M = 0.5 * (p.M + p.M.transpose());

    Mat schur = p.A1;
    if (p.n2 > 0) {
        Eigen::LLT<Mat> llt3(p.A3);
        if (llt3.info() != Eigen::Success) throw std::invalid_argument("plant: A3 is singular");
        p.A3_inv = llt3.solve(Mat::Identity(p.n2, p.n2));
        schur -= p.A2.transpose() * p.A3_inv * p.A2;
    } else {
        p.A3_inv = Mat(0, 0);
    }
    const Mat m_block = spd_inverse(schur, "Schur complement A1 - A2ᵀA3⁻¹A2");
    const double gap = (m_block - p.M).cwiseAbs().maxCoeff();
    if (gap > 1e-10 * std::max(1.0, p.M.cwiseAbs().maxCoeff())) {
        throw std::runtime_error("plant: block-inverse identity for M failed (gap " + std::to_string(gap) + ")");
    }
    p.M_inv = schur;
    p.N = p.M * p.BtAinv;
    p.F = Mat::Zero(n1, n);
    p.F.leftCols(n1) = -Mat::Identity(n1, n1);
    if (p.n2 > 0) p.F.rightCols(p.n2) = p.A2.transpose() * p.A3_inv;
    p.sigma = min_sym_eig(p.M);
    require(p.sigma > 0.0, "plant: M is not positive definite");
    return p;
}

Vec VariableMap::to_state(const Vec& dT) const { return sqrt_c.cwiseProduct(dT); }
Vec VariableMap::from_state(const Vec& x) const { return x.cwiseQuotient(sqrt_c); }
Vec VariableMap::to_input(const Vec& dm) const {
    const auto n1 = inflow_gain.size();
    return inflow_gain.cwiseProduct(dm).cwiseQuotient(sqrt_c.head(n1));
}
Vec VariableMap::from_input(const Vec& u) const {
    const auto n1 = inflow_gain.size();
    return u.cwiseProduct(sqrt_c.head(n1)).cwiseQuotient(inflow_gain);
}
Vec VariableMap::to_ambient(double dTa) const { return (dTa * conductance).cwiseQuotient(sqrt_c); }
Vec VariableMap::to_heat(const Vec& dq) const {
    return dq.cwiseQuotient(sqrt_c.head(dq.size()));
}
Vec VariableMap::from_heat(const Vec& wq) const {
    return wq.cwiseProduct(sqrt_c.head(wq.size()));
}

Linearization linearize(const ThermalNetwork& net, const Equilibrium& eq) {
    const CollectiveModel cm = assemble_collective(net);
    require_size(eq.temperature, net.size(), "equilibrium temperature");
    const double res = equilibrium_residual(net, eq);
    if (res > 1e-9) {
        throw std::invalid_argument("linearize: equilibrium residual " + std::to_string(res) + " above 1e-9");
    }
    Mat k = Mat(cm.conductance.asDiagonal()) + cm.laplacian;
    k.diagonal().head(net.n1) += cm.specific_heat.cwiseProduct(eq.mass_flow);
    const Vec inv_sqrt_c = cm.capacitance.cwiseSqrt().cwiseInverse();
    const Mat a = inv_sqrt_c.asDiagonal() * k * inv_sqrt_c.asDiagonal();

    Linearization out{make_plant(0.5 * (a + a.transpose()), net.n1), {}};
    out.map.sqrt_c = cm.capacitance.cwiseSqrt();
    out.map.inflow_gain = cm.heat_exchange(eq.temperature);
    out.map.conductance = cm.conductance;
    return out;
}

Trajectory simulate_nonlinear(const ThermalNetwork& net, const Vec& T0, const SignalFn& mass_flow,
                              const ScalarSignalFn& ambient, const SignalFn& heat_gain, double horizon,
                              double dt) {
    require(dt > 0.0 && horizon >= 0.0, "simulate_nonlinear: dt must be positive");
    const CollectiveModel cm = assemble_collective(net);
    require_size(T0, net.size(), "simulate_nonlinear T0");
    const auto f = [&](double t, const Vec& T) {
        return cm.rhs(T, mass_flow(t), ambient(t), heat_gain(t));
    };
    const auto steps = static_cast<long>(std::llround(horizon / dt));
    Trajectory tr;
    tr.times.reserve(steps + 1);
    tr.states.reserve(steps + 1);
    Vec T = T0;
    tr.times.push_back(0.0);
    tr.states.push_back(T);
    for (long k = 0; k < steps; ++k) {
        const double t = k * dt;
        T = rk4_step(f, t, T, dt);
        tr.times.push_back((k + 1) * dt);
        tr.states.push_back(T);
    }
    return tr;
}

Trajectory simulate_linear(const Plant& plant, const Vec& x0, const SignalFn& input, const SignalFn& heat,
                           const SignalFn& ambient, double horizon, double dt) {
    require(dt > 0.0 && horizon >= 0.0, "simulate_linear: dt must be positive");
    require_size(x0, plant.size(), "simulate_linear x0");
    const auto f = [&](double t, const Vec& x) -> Vec {
        return -plant.A * x + plant.B * (input(t) + heat(t)) + ambient(t);
    };
    const auto steps = static_cast<long>(std::llround(horizon / dt));
    Trajectory tr;
    Vec x = x0;
    tr.times.push_back(0.0);
    tr.states.push_back(x);
    for (long k = 0; k < steps; ++k) {
        x = rk4_step(f, k * dt, x, dt);
        tr.times.push_back((k + 1) * dt);
        tr.states.push_back(x);
    }
    return tr;
}

namespace {

// Portable U[lo, hi): mt19937_64 output is fully specified, distributions are not.
class Uniform {
public:
    explicit Uniform(std::uint64_t seed) : gen_(seed) {}
    double operator()(double lo, double hi) {
        const double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * u;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace

ThermalNetwork make_synthetic_network(const SyntheticNetworkOptions& opts) {
    require(opts.n1 >= 1 && opts.n2 >= 0, "synthetic network: invalid zone counts");
    Uniform rnd(opts.seed);
    ThermalNetwork net;
    net.n1 = opts.n1;
    net.n2 = opts.n2;
    const int n = net.size();
    net.capacitance.resize(n);
    net.wall_resistance.resize(n);
    for (int i = 0; i < n; ++i) {
        if (i < opts.n1) {
            net.capacitance[i] = rnd(150.0, 250.0);
            net.wall_resistance[i] = rnd(8.0, 12.0);
        } else {
            net.capacitance[i] = rnd(600.0, 1200.0);
            net.wall_resistance[i] = rnd(3.0, 6.0);
        }
    }
    for (int i = 0; i + 1 < opts.n1; ++i) net.add_edge(i, i + 1, rnd(15.0, 25.0));
    if (opts.n2 > 0) {
        for (int i = 0; i < opts.n1; ++i) {
            const int p0 = opts.n1 + (i % opts.n2);
            const int p1 = opts.n1 + ((i + 1) % opts.n2);
            net.add_edge(i, p0, rnd(5.0, 9.0));
            if (p1 != p0) net.add_edge(i, p1, rnd(5.0, 9.0));
        }
        for (int j = 0; j + 1 < opts.n2; ++j) {
            net.add_edge(opts.n1 + j, opts.n1 + j + 1, rnd(8.0, 14.0));
        }
    }
    net.supply_temperature = Vec::Constant(opts.n1, opts.supply_temperature);
    net.specific_heat = Vec::Constant(opts.n1, 1.005);
    net.ambient_nominal = opts.ambient_nominal;
    net.validate();
    return net;
}

}  // namespace hvacpd
