// density_matrix.hpp: validated density matrices and distance measures between them

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <string>

#include "qotto/errors.hpp"

namespace qotto {

using ComplexMatrix = Eigen::MatrixXcd;

class DensityMatrix {
public:
    static constexpr double kHermitianTol = 1e-10;
    static constexpr double kTraceTol = 1e-8;
    static constexpr double kPositivityTol = 1e-8;

    DensityMatrix() = default;

    // Throws PropagationError when the matrix is not Hermitian, not unit-trace, or has
    // eigenvalues below −1e-8.
    explicit DensityMatrix(ComplexMatrix rho) : rho_(std::move(rho)) { validate(); }

    static DensityMatrix maximally_mixed(Eigen::Index dim) {
        return DensityMatrix(ComplexMatrix::Identity(dim, dim) / static_cast<double>(dim));
    }

    static DensityMatrix pure(const Eigen::VectorXcd& psi) {
        const Eigen::VectorXcd v = psi / psi.norm();
        return DensityMatrix(v * v.adjoint());
    }

    // State with the given populations and eigenvectors (columns of basis).
    static DensityMatrix from_spectral(const Eigen::MatrixXd& basis, const Eigen::VectorXd& weights) {
        const Eigen::MatrixXd r = basis * weights.asDiagonal() * basis.transpose();
        return DensityMatrix(r.cast<std::complex<double>>());
    }

    const ComplexMatrix& matrix() const { return rho_; }
    Eigen::Index dim() const { return rho_.rows(); }
    double trace() const { return rho_.trace().real(); }
    double purity() const { return rho_.cwiseAbs2().sum(); }

    // Tr(ρ A) for Hermitian A.
    double expectation(const Eigen::MatrixXd& a) const {
        return (rho_.real().cwiseProduct(a)).sum();
    }

    Eigen::VectorXd eigenvalues() const {
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho_, Eigen::EigenvaluesOnly);
        return es.eigenvalues();
    }

private:
    void validate() const {
        if (rho_.rows() != rho_.cols() || rho_.rows() == 0) {
            throw PropagationError("DensityMatrix: matrix must be square and non-empty");
        }
        const double herm = (rho_ - rho_.adjoint()).norm();
        if (herm > kHermitianTol) {
            throw PropagationError("DensityMatrix: not Hermitian (‖ρ − ρ†‖ = " + std::to_string(herm) + ")");
        }
        const double tr = rho_.trace().real();
        if (std::abs(tr - 1.0) > kTraceTol) {
            throw PropagationError("DensityMatrix: trace " + std::to_string(tr) + " != 1");
        }
        const double mineig = eigenvalues().minCoeff();
        if (mineig < -kPositivityTol) {
            std::ostringstream os;
            os << "DensityMatrix: negative eigenvalue " << mineig;
            throw PropagationError(os.str());
        }
    }

    ComplexMatrix rho_;
};

namespace detail {

inline void check_same_dim(const DensityMatrix& a, const DensityMatrix& b, const char* who) {
    if (a.dim() != b.dim()) throw ParameterError(std::string(who) + ": dimension mismatch");
}

}  // namespace detail

namespace detail {

inline ComplexMatrix matrix_sqrt_psd(const ComplexMatrix& a) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(a);
    const Eigen::VectorXd w = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace detail

// Uhlmann fidelity F = (Tr sqrt(sqrt ρ σ sqrt ρ))² = ‖sqrt ρ sqrt σ‖₁². The singular values
// of sqrt ρ sqrt σ carry absolute rather than square-root accuracy, which matters when
// 1 − F is compared against tolerances near 1e-6.
inline double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
    detail::check_same_dim(rho, sigma, "fidelity");
    const ComplexMatrix a = detail::matrix_sqrt_psd(rho.matrix()) * detail::matrix_sqrt_psd(sigma.matrix());
    Eigen::BDCSVD<ComplexMatrix> svd(a);
    const double root = svd.singularValues().sum();
    return std::min(1.0, root * root);
}

// ½ ‖ρ − σ‖₁
inline double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
    detail::check_same_dim(rho, sigma, "trace_distance");
    const ComplexMatrix d = rho.matrix() - sigma.matrix();
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

// Eigenvalues below this are clipped before logarithms.
inline constexpr double kLogClip = 1e-14;

struct RelativeEntropy {
    double value{};
    bool overflow{false};  // ρ has weight outside the support of σ beyond the clip level
};

// D(ρ‖σ) = Tr[ρ(ln ρ − ln σ)] via eigendecompositions of both states.
inline RelativeEntropy relative_entropy(const DensityMatrix& rho, const DensityMatrix& sigma) {
    detail::check_same_dim(rho, sigma, "relative_entropy");
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> er(rho.matrix());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(sigma.matrix());
    const Eigen::VectorXd p = er.eigenvalues().cwiseMax(kLogClip);
    const Eigen::VectorXd s = es.eigenvalues().cwiseMax(kLogClip);
    // overlap(i, j) = |<r_i|s_j>|²
    const Eigen::MatrixXd overlap = (er.eigenvectors().adjoint() * es.eigenvectors()).cwiseAbs2();
    double cross = 0.0, self = 0.0, outside = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double pi = er.eigenvalues()(i) > 0.0 ? er.eigenvalues()(i) : 0.0;
        self += pi * std::log(p(i));
        for (Eigen::Index j = 0; j < s.size(); ++j) {
            const double w = pi * overlap(i, j);
            cross += w * std::log(s(j));
            if (es.eigenvalues()(j) < kLogClip) outside += w;
        }
    }
    RelativeEntropy out;
    out.value = std::max(0.0, self - cross);
    if (outside > 1e-8) {
        out.overflow = true;
        out.value = std::numeric_limits<double>::max();
    }
    return out;
}

}  // namespace qotto
