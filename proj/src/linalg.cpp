#include "hvacpd/linalg.hpp"

namespace hvacpd {

namespace {

Eigen::SelfAdjointEigenSolver<Mat> sym_eigs(const Mat& m, bool vectors) {
    const Mat s = 0.5 * (m + m.transpose());
    return Eigen::SelfAdjointEigenSolver<Mat>(s, vectors ? Eigen::ComputeEigenvectors
                                                          : Eigen::EigenvaluesOnly);
}

}  // namespace

double min_sym_eig(const Mat& m) {
    if (m.size() == 0) return 0.0;
    return sym_eigs(m, false).eigenvalues().minCoeff();
}

double max_sym_eig(const Mat& m) {
    if (m.size() == 0) return 0.0;
    return sym_eigs(m, false).eigenvalues().maxCoeff();
}

Mat spd_sqrt(const Mat& m) {
    const auto es = sym_eigs(m, true);
    require(es.eigenvalues().minCoeff() > 0.0, "spd_sqrt: matrix is not positive definite");
    return es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() *
           es.eigenvectors().transpose();
}

Mat spd_inverse(const Mat& m, const std::string& what) {
    Eigen::LLT<Mat> llt(0.5 * (m + m.transpose()));
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument(what + " is not positive definite");
    }
    return llt.solve(Mat::Identity(m.rows(), m.cols()));
}

LyapunovSolver::LyapunovSolver(const Mat& a) : n_(a.rows()) {
    require(a.rows() == a.cols(), "LyapunovSolver: matrix must be square");
    // vec(A X + X Aᵀ) = (I ⊗ A + A ⊗ I) vec(X), column-major vec.
    const Eigen::Index n2 = n_ * n_;
    Mat k = Mat::Zero(n2, n2);
    for (Eigen::Index i = 0; i < n_; ++i) {
        for (Eigen::Index j = 0; j < n_; ++j) {
            for (Eigen::Index l = 0; l < n_; ++l) {
                // (I ⊗ A): block (j,j) holds A
                k(j * n_ + i, j * n_ + l) += a(i, l);
                // (A ⊗ I): block (j,l) holds a(j,l) I
                k(j * n_ + i, l * n_ + i) += a(j, l);
            }
        }
    }
    lu_.compute(k);
}

Mat LyapunovSolver::solve(const Mat& q) const {
    Vec rhs = -Eigen::Map<const Vec>(q.data(), q.size());
    Vec x = lu_.solve(rhs);
    Mat out = Eigen::Map<Mat>(x.data(), n_, n_);
    return 0.5 * (out + out.transpose());
}

}  // namespace hvacpd
