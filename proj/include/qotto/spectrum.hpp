// spectrum.hpp: parity-resolved diagonalization, critical couplings, and spectrum scans

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "qotto/errors.hpp"
#include "qotto/operators.hpp"
#include "qotto/parallel.hpp"

namespace qotto {

// Eigenvalues closer than this (units of ω) form one degenerate cluster.
inline constexpr double kDegeneracyThreshold = 1e-10;

struct EigenSystem {
    Eigen::VectorXd energies;    // ascending
    Eigen::MatrixXd vectors;     // eigencolumns, orthonormal
    std::vector<int> parities;   // +1 / -1, 0 where the label could not be resolved
    int unresolved_parities{0};  // count of 0 labels

    Eigen::Index dim() const { return energies.size(); }
};

enum class DiagonalizeMethod {
    automatic,  // split into parity sectors when [H, Π] = 0, otherwise full
    full,       // full eigendecomposition, then rotate degenerate clusters onto Π eigenvectors
};

namespace detail {

// Largest-magnitude component made positive, so eigenvectors are reproducible.
inline void fix_phases(Eigen::MatrixXd& v) {
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
        Eigen::Index imax = 0;
        v.col(c).cwiseAbs().maxCoeff(&imax);
        if (v(imax, c) < 0.0) v.col(c) = -v.col(c);
    }
}

inline bool is_parity_diagonal(const OperatorMatrix& pi) {
    for (Eigen::Index i = 0; i < pi.rows(); ++i) {
        for (Eigen::Index j = 0; j < pi.cols(); ++j) {
            const double x = pi(i, j);
            if (i == j ? (x != 1.0 && x != -1.0) : (x != 0.0)) return false;
        }
    }
    return true;
}

inline EigenSystem diagonalize_sectors(const OperatorMatrix& h, const OperatorMatrix& pi) {
    const Eigen::Index dim = h.rows();
    std::vector<Eigen::Index> sector[2];
    for (Eigen::Index i = 0; i < dim; ++i) sector[pi(i, i) > 0 ? 0 : 1].push_back(i);

    struct Level {
        double energy;
        int parity;
        Eigen::VectorXd vec;
    };
    std::vector<Level> levels;
    levels.reserve(static_cast<std::size_t>(dim));
    for (int s = 0; s < 2; ++s) {
        const auto& idx = sector[s];
        const auto n = static_cast<Eigen::Index>(idx.size());
        if (n == 0) continue;
        Eigen::MatrixXd block(n, n);
        for (Eigen::Index a = 0; a < n; ++a)
            for (Eigen::Index b = 0; b < n; ++b) block(a, b) = h(idx[a], idx[b]);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block);
        if (es.info() != Eigen::Success) {
            throw std::runtime_error("diagonalize: eigensolver failed in parity sector");
        }
        for (Eigen::Index k = 0; k < n; ++k) {
            Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
            for (Eigen::Index a = 0; a < n; ++a) v(idx[a]) = es.eigenvectors()(a, k);
            levels.push_back({es.eigenvalues()(k), s == 0 ? 1 : -1, std::move(v)});
        }
    }
    // Stable: on exact ties the even sector stays first.
    std::stable_sort(levels.begin(), levels.end(),
                     [](const Level& a, const Level& b) { return a.energy < b.energy; });

    EigenSystem out;
    out.energies.resize(dim);
    out.vectors.resize(dim, dim);
    out.parities.resize(static_cast<std::size_t>(dim));
    for (Eigen::Index k = 0; k < dim; ++k) {
        const auto& lv = levels[static_cast<std::size_t>(k)];
        out.energies(k) = lv.energy;
        out.vectors.col(k) = lv.vec;
        out.parities[static_cast<std::size_t>(k)] = lv.parity;
    }
    return out;
}

inline EigenSystem diagonalize_full(const OperatorMatrix& h, const OperatorMatrix& pi) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("diagonalize: eigensolver failed");
    }
    EigenSystem out;
    out.energies = es.eigenvalues();
    out.vectors = es.eigenvectors();
    const Eigen::Index dim = h.rows();

    // Rotate each degenerate cluster so its columns diagonalize Π.
    Eigen::Index start = 0;
    while (start < dim) {
        Eigen::Index end = start + 1;
        while (end < dim && out.energies(end) - out.energies(end - 1) < kDegeneracyThreshold) ++end;
        const Eigen::Index size = end - start;
        if (size > 1) {
            const Eigen::MatrixXd vc = out.vectors.middleCols(start, size);
            const Eigen::MatrixXd pc = vc.transpose() * pi * vc;
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ps(0.5 * (pc + pc.transpose()));
            out.vectors.middleCols(start, size) = vc * ps.eigenvectors();
            const double mean = out.energies.segment(start, size).mean();
            out.energies.segment(start, size).setConstant(mean);
        }
        start = end;
    }

    out.parities.resize(static_cast<std::size_t>(dim));
    for (Eigen::Index k = 0; k < dim; ++k) {
        const double x = out.vectors.col(k).dot(pi * out.vectors.col(k));
        int label = 0;
        if (std::abs(x - 1.0) < 1e-8) label = 1;
        else if (std::abs(x + 1.0) < 1e-8) label = -1;
        else ++out.unresolved_parities;
        out.parities[static_cast<std::size_t>(k)] = label;
    }
    return out;
}

}  // namespace detail

// Full eigendecomposition of a real symmetric Hamiltonian with parity labels.
// Unresolvable labels (accidental degeneracy across sectors when [H, Π] ≠ 0) are 0 and
// counted in unresolved_parities; that is not an error.
inline EigenSystem diagonalize(const OperatorMatrix& h, const OperatorMatrix& pi,
                               DiagonalizeMethod method = DiagonalizeMethod::automatic) {
    if (h.rows() != h.cols() || h.rows() == 0) {
        throw ParameterError("diagonalize: Hamiltonian must be square and non-empty");
    }
    if (pi.rows() != h.rows() || pi.cols() != h.cols()) {
        throw ParameterError("diagonalize: parity operator dimension mismatch");
    }
    if (hermiticity_error(h) > 1e-12) {
        throw ParameterError("diagonalize: Hamiltonian is not Hermitian");
    }
    EigenSystem out;
    const double scale = std::max(1.0, h.norm());
    if (method == DiagonalizeMethod::automatic && detail::is_parity_diagonal(pi) &&
        (h * pi - pi * h).norm() <= 1e-12 * scale) {
        out = detail::diagonalize_sectors(h, pi);
    } else {
        out = detail::diagonalize_full(h, pi);
    }
    detail::fix_phases(out.vectors);
    return out;
}

struct SolveOptions {
    bool check_truncation{true};
    int extra_fock{10};            // the check re-diagonalizes at n_max + extra_fock
    int levels_checked{12};
    double tolerance{1e-8};        // allowed eigenvalue shift, units of omega
};

inline void check_truncation(const SystemParams& p, const Eigen::VectorXd& energies,
                             const SolveOptions& opts) {
    SystemParams bigger = p;
    bigger.n_max += opts.extra_fock;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(build_hamiltonian(bigger),
                                                      Eigen::EigenvaluesOnly);
    const Eigen::Index n = std::min<Eigen::Index>(opts.levels_checked, energies.size());
    const double shift = (es.eigenvalues().head(n) - energies.head(n)).cwiseAbs().maxCoeff();
    if (!(shift < opts.tolerance * p.omega)) {
        std::ostringstream os;
        os.precision(6);
        os << "truncation not converged at n_max=" << p.n_max << " (omega=" << p.omega
           << ", delta=" << p.delta << ", u=" << p.u << ", lambda1=" << p.lambda1
           << ", lambda2=" << p.lambda2 << "): lowest " << n << " levels shift by " << shift
           << " when n_max grows by " << opts.extra_fock;
        throw TruncationError(os.str(), shift);
    }
}

// Builds and diagonalizes the Hamiltonian for p, verifying Fock-truncation convergence.
inline EigenSystem solve(const SystemParams& p, const SolveOptions& opts = {}) {
    p.validate();
    EigenSystem eig = diagonalize(build_hamiltonian(p), parity_operator(p.n_max));
    if (opts.check_truncation) check_truncation(p, eig.energies, opts);
    return eig;
}

// ----------------------------- critical couplings ----------------------------

// Ground/first-excited crossing (ω = 1):
//   λ1c = sqrt( Δ(1 − U²) / (U(1 + r²) + 1 − r²) ),  r = λ2/λ1.
// nullopt when the radicand is not positive or the denominator vanishes.
inline std::optional<double> first_order_critical_coupling(double delta, double u, double r) {
    if (!(delta > 0.0)) throw ParameterError("first_order_critical_coupling: delta must be > 0");
    const double denom = u * (1.0 + r * r) + 1.0 - r * r;
    if (denom == 0.0) return std::nullopt;
    const double radicand = delta * (1.0 - u * u) / denom;
    if (!(radicand > 0.0) || !std::isfinite(radicand)) return std::nullopt;
    return std::sqrt(radicand);
}

enum class CriticalKind { first_order, continuous_plus, continuous_minus };

struct CriticalPoint {
    CriticalKind kind;
    double coupling_value;                  // λ1c, or α_c± with α = (λ1 + λ2)/2
    std::optional<double> collapse_energy;  // E_c±, continuous kinds only
};

// Spectral-collapse point at |U| = 1, U = sign:
//   κ = (1 − r)/(1 + r),  α_c± = sqrt((1 ∓ Δ ± κ)/2),  E_c± = ∓Δ/2 − 2 α_c±².
inline std::optional<CriticalPoint> continuous_critical_coupling(double delta, double r, int sign) {
    if (!(delta > 0.0)) throw ParameterError("continuous_critical_coupling: delta must be > 0");
    if (r < 0.0) throw ParameterError("continuous_critical_coupling: r must be >= 0");
    if (sign != 1 && sign != -1) throw ParameterError("continuous_critical_coupling: sign must be +1 or -1");
    const double kappa = (1.0 - r) / (1.0 + r);
    const double s = static_cast<double>(sign);
    const double radicand = (1.0 - s * delta + s * kappa) / 2.0;
    if (radicand < 0.0) return std::nullopt;
    const double alpha = std::sqrt(radicand);
    return CriticalPoint{sign > 0 ? CriticalKind::continuous_plus : CriticalKind::continuous_minus,
                         alpha, -s * delta / 2.0 - 2.0 * alpha * alpha};
}

// ------------------------------- spectrum scans -------------------------------

enum class ScanAxis { lambda1, lambda2, u };

struct SpectrumScanOptions {
    // With axis lambda1, λ2 = ratio·λ1; with axis lambda2, λ1 = ratio·λ2. Ignored for u.
    std::optional<double> ratio;
    int workers{1};
    SolveOptions solve;
};

struct SpectrumRow {
    double axis_value{};
    double ground_energy{};
    Eigen::VectorXd relative_energies;  // E_k − E_0, k < n_levels
    std::vector<int> parities;
    // crossing[k]: levels k and k+1 touch (gap < 1e-9) or swapped parity order since the
    // previous grid point. The last entry is always false.
    std::vector<bool> crossing;
};

inline constexpr double kCrossingGap = 1e-9;

inline SystemParams apply_axis(SystemParams p, ScanAxis axis, double value,
                               const std::optional<double>& ratio) {
    switch (axis) {
        case ScanAxis::lambda1:
            p.lambda1 = value;
            if (ratio) p.lambda2 = *ratio * value;
            break;
        case ScanAxis::lambda2:
            p.lambda2 = value;
            if (ratio) p.lambda1 = *ratio * value;
            break;
        case ScanAxis::u:
            p.u = value;
            break;
    }
    return p;
}

// Lowest n_levels energies relative to E_0 over an ascending grid. Grid points are solved
// independently (optionally in parallel); rows follow grid order. A truncation failure at
// any point aborts the scan with that point in the message.
inline std::vector<SpectrumRow> spectrum_scan(const SystemParams& base, ScanAxis axis,
                                              std::span<const double> grid, int n_levels,
                                              const SpectrumScanOptions& opts = {}) {
    if (n_levels < 1 || n_levels > base.dim()) {
        throw ParameterError("spectrum_scan: n_levels must be in [1, dim]");
    }
    if (!std::is_sorted(grid.begin(), grid.end())) {
        throw ParameterError("spectrum_scan: grid must be ascending");
    }
    std::vector<SpectrumRow> rows(grid.size());
    parallel_for(grid.size(), opts.workers, [&](std::size_t i) {
        const SystemParams p = apply_axis(base, axis, grid[i], opts.ratio);
        EigenSystem eig;
        try {
            eig = solve(p, opts.solve);
        } catch (const TruncationError& e) {
            std::ostringstream os;
            os << "spectrum_scan: grid point " << i << " (axis value " << grid[i] << "): " << e.what();
            throw TruncationError(os.str(), e.shift());
        }
        SpectrumRow& row = rows[i];
        row.axis_value = grid[i];
        row.ground_energy = eig.energies(0);
        row.relative_energies = eig.energies.head(n_levels).array() - eig.energies(0);
        row.parities.assign(eig.parities.begin(), eig.parities.begin() + n_levels);
        row.crossing.assign(static_cast<std::size_t>(n_levels), false);
    });
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto& row = rows[i];
        for (int k = 0; k + 1 < n_levels; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            bool flag = row.relative_energies(k + 1) - row.relative_energies(k) < kCrossingGap;
            if (i > 0) {
                const auto& prev = rows[i - 1];
                const int a = prev.parities[ku], b = prev.parities[ku + 1];
                flag = flag || (a != b && a != 0 && b != 0 && row.parities[ku] == b &&
                                row.parities[ku + 1] == a);
            }
            row.crossing[ku] = flag;
        }
    }
    return rows;
}

// Axis values at which the ground-state parity differs from the previous grid point.
inline std::vector<double> ground_parity_flips(const std::vector<SpectrumRow>& rows) {
    std::vector<double> flips;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].parities.front() != rows[i - 1].parities.front()) {
            flips.push_back(rows[i].axis_value);
        }
    }
    return flips;
}

}  // namespace qotto
