// operators.hpp: truncated qubit ⊗ boson operators and the anisotropic Rabi-Stark Hamiltonian
//
// Basis ordering is qubit-major: index(q, n) = q * (n_max + 1) + n with q = 0 for the
// ground state |g> and q = 1 for the excited state |e>, n = 0..n_max the Fock number.
// Every operator of the model has real matrix elements in this basis, so they are
// stored as real matrices.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <string>

#include "qotto/errors.hpp"

namespace qotto {

using OperatorMatrix = Eigen::MatrixXd;

// Largest |u| accepted. At |u| = 1 the spectrum collapses and no finite truncation converges.
inline constexpr double kMaxStark = 0.99;

struct SystemParams {
    double omega{1.0};    // boson frequency
    double delta{1.0};    // qubit splitting
    double u{0.0};        // Stark coupling, in units of omega
    double lambda1{0.0};  // rotating-wave coupling
    double lambda2{0.0};  // counter-rotating coupling
    int n_max{40};        // highest retained Fock number

    Eigen::Index dim() const { return 2 * static_cast<Eigen::Index>(n_max + 1); }

    void validate() const {
        if (n_max < 1) {
            throw ParameterError("SystemParams: n_max must be >= 1, got " + std::to_string(n_max));
        }
        if (!(omega > 0.0) || !std::isfinite(omega)) {
            throw ParameterError("SystemParams: omega must be positive and finite");
        }
        if (!std::isfinite(delta) || !std::isfinite(u) || !std::isfinite(lambda1) ||
            !std::isfinite(lambda2)) {
            throw ParameterError("SystemParams: couplings must be finite");
        }
        if (std::abs(u) > kMaxStark) {
            std::ostringstream os;
            os << "SystemParams: |u| = " << std::abs(u)
               << " lies in the spectral-collapse regime (|u| <= " << kMaxStark << " required)";
            throw SpectralCollapseError(os.str());
        }
    }

    friend bool operator==(const SystemParams&, const SystemParams&) = default;
};

enum class Qubit { ground = 0, excited = 1 };

inline Eigen::Index basis_index(Qubit q, int n, int n_max) {
    return static_cast<Eigen::Index>(q) * (n_max + 1) + n;
}

namespace detail {

inline void check_n_max(int n_max) {
    if (n_max < 1) {
        throw ParameterError("operators: n_max must be >= 1, got " + std::to_string(n_max));
    }
}

// Boson annihilation operator on the Fock space alone.
inline Eigen::MatrixXd annihilation(int n_max) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_max + 1, n_max + 1);
    for (int n = 1; n <= n_max; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

}  // namespace detail

// H = ω a†a + (Δ/2) σz + u ω a†a σz + λ1 (a σ+ + a† σ-) + λ2 (a† σ+ + a σ-)
inline OperatorMatrix build_hamiltonian(const SystemParams& p) {
    p.validate();
    const int nf = p.n_max + 1;
    OperatorMatrix h = OperatorMatrix::Zero(p.dim(), p.dim());
    const double stark = p.u * p.omega;
    for (int n = 0; n < nf; ++n) {
        const auto g = basis_index(Qubit::ground, n, p.n_max);
        const auto e = basis_index(Qubit::excited, n, p.n_max);
        h(g, g) = p.omega * n - 0.5 * p.delta - stark * n;
        h(e, e) = p.omega * n + 0.5 * p.delta + stark * n;
    }
    for (int n = 0; n + 1 < nf; ++n) {
        const double amp = std::sqrt(static_cast<double>(n + 1));
        // a σ+ : |g, n+1> -> |e, n>
        const auto e_n = basis_index(Qubit::excited, n, p.n_max);
        const auto g_n1 = basis_index(Qubit::ground, n + 1, p.n_max);
        h(e_n, g_n1) += p.lambda1 * amp;
        h(g_n1, e_n) += p.lambda1 * amp;
        // a† σ+ : |g, n> -> |e, n+1>
        const auto g_n = basis_index(Qubit::ground, n, p.n_max);
        const auto e_n1 = basis_index(Qubit::excited, n + 1, p.n_max);
        h(e_n1, g_n) += p.lambda2 * amp;
        h(g_n, e_n1) += p.lambda2 * amp;
    }
    return h;
}

// Π = exp(iπ N), N = a†a + σ+σ-. Diagonal, entries (-1)^(n + q).
inline OperatorMatrix parity_operator(int n_max) {
    detail::check_n_max(n_max);
    const Eigen::Index dim = 2 * static_cast<Eigen::Index>(n_max + 1);
    OperatorMatrix pi = OperatorMatrix::Zero(dim, dim);
    for (int q = 0; q < 2; ++q) {
        for (int n = 0; n <= n_max; ++n) {
            const auto i = basis_index(static_cast<Qubit>(q), n, n_max);
            pi(i, i) = ((n + q) % 2 == 0) ? 1.0 : -1.0;
        }
    }
    return pi;
}

enum class CouplingKind { boson, qubit };

inline const char* to_string(CouplingKind k) {
    return k == CouplingKind::boson ? "boson" : "qubit";
}

// System side of the system-bath coupling: X_a = a† + a, X_σ = σ+ + σ-.
inline OperatorMatrix coupling_operator(CouplingKind kind, int n_max) {
    detail::check_n_max(n_max);
    const int nf = n_max + 1;
    const Eigen::Index dim = 2 * static_cast<Eigen::Index>(nf);
    OperatorMatrix x = OperatorMatrix::Zero(dim, dim);
    if (kind == CouplingKind::boson) {
        const Eigen::MatrixXd a = detail::annihilation(n_max);
        const Eigen::MatrixXd xa = a + a.transpose();
        x.topLeftCorner(nf, nf) = xa;
        x.bottomRightCorner(nf, nf) = xa;
    } else {
        x.topRightCorner(nf, nf) = Eigen::MatrixXd::Identity(nf, nf);
        x.bottomLeftCorner(nf, nf) = Eigen::MatrixXd::Identity(nf, nf);
    }
    return x;
}

// Relative Frobenius-norm asymmetry ‖A − A†‖ / ‖A‖ (0 for the zero matrix).
inline double hermiticity_error(const OperatorMatrix& a) {
    const double norm = a.norm();
    if (norm == 0.0) return 0.0;
    return (a - a.transpose()).norm() / norm;
}

}  // namespace qotto
