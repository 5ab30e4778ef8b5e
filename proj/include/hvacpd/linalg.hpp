#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>

namespace hvacpd {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Smallest eigenvalue of the symmetric part of `m`.
double min_sym_eig(const Mat& m);
/// Largest eigenvalue of the symmetric part of `m`.
double max_sym_eig(const Mat& m);

/// Symmetric positive-definite square root via eigendecomposition.
Mat spd_sqrt(const Mat& m);

/// Inverse of an SPD matrix; throws std::invalid_argument when `m` is not SPD.
Mat spd_inverse(const Mat& m, const std::string& what);

/// Solves A X + X Aᵀ = -Q for X (dense Kronecker formulation).
class LyapunovSolver {
public:
    explicit LyapunovSolver(const Mat& a);
    Mat solve(const Mat& q) const;

private:
    Eigen::Index n_;
    Eigen::PartialPivLU<Mat> lu_;
};

/// Classic fourth-order Runge-Kutta step for dy/dt = f(t, y).
template <typename F>
Vec rk4_step(const F& f, double t, const Vec& y, double dt) {
    const Vec k1 = f(t, y);
    const Vec k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1);
    const Vec k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2);
    const Vec k4 = f(t + dt, y + dt * k3);
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

inline void require_size(const Vec& v, Eigen::Index n, const std::string& what) {
    if (v.size() != n) {
        throw std::invalid_argument(what + ": expected length " + std::to_string(n) + ", got " +
                                    std::to_string(v.size()));
    }
}

}  // namespace hvacpd
