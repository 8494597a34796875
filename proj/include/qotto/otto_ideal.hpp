// otto_ideal.hpp: quasistatic quantum Otto cycle: Gibbs populations, heats, work, regimes

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "qotto/errors.hpp"
#include "qotto/operators.hpp"
#include "qotto/spectrum.hpp"

namespace qotto {

struct ThermalPopulations {
    double temperature{};
    Eigen::VectorXd populations;
    // Z computed with the ground energy as zero: Σ exp(−(E_n − E_0)/T).
    double partition_function{};
    double ground_energy{};

    double log_partition_function() const {
        return std::log(partition_function) - ground_energy / temperature;
    }
};

inline ThermalPopulations gibbs_populations(const Eigen::VectorXd& energies, double temperature) {
    if (!(temperature > 0.0)) {
        throw ParameterError("gibbs_populations: temperature must be > 0");
    }
    if (energies.size() == 0) throw ParameterError("gibbs_populations: empty spectrum");
    ThermalPopulations tp;
    tp.temperature = temperature;
    tp.ground_energy = energies.minCoeff();
    tp.populations = (-(energies.array() - tp.ground_energy) / temperature).exp().matrix();
    tp.partition_function = tp.populations.sum();
    tp.populations /= tp.partition_function;
    return tp;
}

inline ThermalPopulations gibbs_populations(const EigenSystem& eig, double temperature) {
    return gibbs_populations(eig.energies, temperature);
}

// --------------------------------- regimes -----------------------------------

enum class Regime { engine, refrigerator, heater, accelerator, boundary };

inline const char* to_string(Regime r) {
    switch (r) {
        case Regime::engine: return "engine";
        case Regime::refrigerator: return "refrigerator";
        case Regime::heater: return "heater";
        case Regime::accelerator: return "accelerator";
        case Regime::boundary: return "boundary";
    }
    return "unknown";
}

// |x| at or below this counts as zero when classifying.
inline constexpr double kRegimeZero = 1e-12;

// Sign pattern of (Q_h, Q_c, W), positive = absorbed by / done by the medium.
// Patterns with a value inside ±kRegimeZero map to boundary. Patterns no two-bath cycle
// with T_h > T_c can produce throw ThermodynamicsViolation.
inline Regime classify_regime(double q_hot, double q_cold, double work) {
    auto sign = [](double x) { return std::abs(x) <= kRegimeZero ? 0 : (x > 0 ? 1 : -1); };
    const int sh = sign(q_hot), sc = sign(q_cold), sw = sign(work);
    if (sh == 0 || sc == 0 || sw == 0) return Regime::boundary;
    if (sh > 0 && sc < 0 && sw > 0) return Regime::engine;
    if (sh < 0 && sc > 0 && sw < 0) return Regime::refrigerator;
    if (sh < 0 && sc < 0 && sw < 0) return Regime::heater;
    if (sh > 0 && sc < 0 && sw < 0) return Regime::accelerator;
    throw ThermodynamicsViolation("classify_regime: sign pattern (Q_h=" + std::to_string(q_hot) +
                                  ", Q_c=" + std::to_string(q_cold) + ", W=" +
                                  std::to_string(work) + ") violates the Clausius inequality");
}

// ----------------------------- reference engines ------------------------------

enum class ReferenceMedium { qubit, qho };

// Work of a decoupled qubit or harmonic oscillator running the same Otto cycle.
inline double reference_work(ReferenceMedium kind, double omega_h, double omega_c, double t_h,
                             double t_c) {
    if (!(omega_h > 0 && omega_c > 0 && t_h > 0 && t_c > 0)) {
        throw ParameterError("reference_work: frequencies and temperatures must be positive");
    }
    const double xh = omega_h / t_h;
    const double xc = omega_c / t_c;
    if (kind == ReferenceMedium::qubit) {
        return (omega_h - omega_c) * (1.0 / (1.0 + std::exp(xh)) - 1.0 / (1.0 + std::exp(xc)));
    }
    return (omega_h - omega_c) * (1.0 / std::expm1(xh) - 1.0 / std::expm1(xc));
}

// Positive-work condition of a harmonic-spectrum medium: T_h > (ω_h/ω_c) T_c.
inline bool harmonic_pwc(double omega_h, double omega_c, double t_h, double t_c) {
    return t_h > (omega_h / omega_c) * t_c;
}

// -------------------------------- ideal cycle ---------------------------------

enum class LevelPairing {
    energy_index,     // n-th level of H_h ↔ n-th level of H_c
    parity_resolved,  // n-th level of each parity sector ↔ n-th level of the same sector
};

struct OttoEnergetics {
    double q_hot{};
    double q_cold{};
    double work{};
};

struct IdealCycleRecord {
    double q_hot{};
    double q_cold{};
    double work{};
    std::optional<double> efficiency;  // engine only
    std::optional<double> cop;         // refrigerator only
    Regime regime{Regime::boundary};
    double normalized_work{};          // W / (W_qubit + W_QHO)
    bool pairing_ambiguous{false};     // degenerate levels in either spectrum
};

struct IdealCycleOptions {
    LevelPairing pairing{LevelPairing::energy_index};
    SolveOptions solve;
};

namespace detail {

// Permutation of cold levels matched to hot level n.
inline std::vector<Eigen::Index> level_pairing(const EigenSystem& hot, const EigenSystem& cold,
                                               LevelPairing pairing) {
    const Eigen::Index dim = hot.dim();
    std::vector<Eigen::Index> match(static_cast<std::size_t>(dim));
    if (pairing == LevelPairing::energy_index) {
        for (Eigen::Index n = 0; n < dim; ++n) match[static_cast<std::size_t>(n)] = n;
        return match;
    }
    std::vector<Eigen::Index> cold_by_parity[2];
    for (Eigen::Index n = 0; n < dim; ++n) {
        const int p = cold.parities[static_cast<std::size_t>(n)];
        if (p == 0) throw ParameterError("level_pairing: cold spectrum has unresolved parity labels");
        cold_by_parity[p > 0 ? 0 : 1].push_back(n);
    }
    std::size_t next[2] = {0, 0};
    for (Eigen::Index n = 0; n < dim; ++n) {
        const int p = hot.parities[static_cast<std::size_t>(n)];
        if (p == 0) throw ParameterError("level_pairing: hot spectrum has unresolved parity labels");
        const int s = p > 0 ? 0 : 1;
        if (next[s] >= cold_by_parity[s].size()) {
            throw ParameterError("level_pairing: parity sectors differ in size");
        }
        match[static_cast<std::size_t>(n)] = cold_by_parity[s][next[s]++];
    }
    return match;
}

inline bool has_degeneracy(const Eigen::VectorXd& e) {
    for (Eigen::Index i = 1; i < e.size(); ++i) {
        if (e(i) - e(i - 1) < kDegeneracyThreshold) return true;
    }
    return false;
}

}  // namespace detail

// Q_h = Σ E_n^h [P_n(T_h) − P_n(T_c)],  Q_c = Σ E_n^c [P_n(T_c) − P_n(T_h)],  W = Q_h + Q_c.
// P_n(T_h) are hot Gibbs populations, P_n(T_c) cold ones; level n of the hot spectrum is
// carried onto its paired cold level by the adiabats. Any positive temperatures accepted.
inline OttoEnergetics otto_energetics(const EigenSystem& hot, const EigenSystem& cold, double t_h,
                                      double t_c,
                                      LevelPairing pairing = LevelPairing::energy_index) {
    if (hot.dim() != cold.dim()) throw ParameterError("otto_energetics: dimension mismatch");
    const auto match = detail::level_pairing(hot, cold, pairing);
    const Eigen::VectorXd ph = gibbs_populations(hot.energies, t_h).populations;
    const Eigen::VectorXd pc = gibbs_populations(cold.energies, t_c).populations;
    OttoEnergetics out;
    for (Eigen::Index n = 0; n < hot.dim(); ++n) {
        const Eigen::Index m = match[static_cast<std::size_t>(n)];
        const double dp = ph(n) - pc(m);
        out.q_hot += hot.energies(n) * dp;
        out.q_cold -= cold.energies(m) * dp;
    }
    out.work = out.q_hot + out.q_cold;
    return out;
}

inline IdealCycleRecord ideal_cycle_from_spectra(const EigenSystem& hot, const EigenSystem& cold,
                                                 double omega_h, double omega_c, double t_h,
                                                 double t_c,
                                                 LevelPairing pairing = LevelPairing::energy_index) {
    if (!(t_h > 0.0 && t_c > 0.0)) throw ParameterError("ideal_cycle: temperatures must be > 0");
    if (t_h < t_c) throw ParameterError("ideal_cycle: T_h must not be below T_c");
    if (!(omega_h > omega_c)) throw ParameterError("ideal_cycle: omega_h must exceed omega_c");

    const OttoEnergetics en = otto_energetics(hot, cold, t_h, t_c, pairing);
    IdealCycleRecord rec;
    rec.q_hot = en.q_hot;
    rec.q_cold = en.q_cold;
    rec.work = en.work;
    rec.regime = classify_regime(rec.q_hot, rec.q_cold, rec.work);
    if (rec.regime == Regime::engine) rec.efficiency = rec.work / rec.q_hot;
    if (rec.regime == Regime::refrigerator) rec.cop = rec.q_cold / std::abs(rec.work);
    const double w_ref = reference_work(ReferenceMedium::qubit, omega_h, omega_c, t_h, t_c) +
                         reference_work(ReferenceMedium::qho, omega_h, omega_c, t_h, t_c);
    rec.normalized_work = rec.work / w_ref;
    rec.pairing_ambiguous =
        detail::has_degeneracy(hot.energies) || detail::has_degeneracy(cold.energies);
    return rec;
}

inline void check_stroke_pair(const SystemParams& hot, const SystemParams& cold) {
    hot.validate();
    cold.validate();
    if (hot.n_max != cold.n_max || hot.u != cold.u || hot.lambda1 != cold.lambda1 ||
        hot.lambda2 != cold.lambda2) {
        throw ParameterError("Otto cycle: hot and cold media must share n_max, u, lambda1, lambda2");
    }
    if (!(hot.omega > cold.omega)) throw ParameterError("Otto cycle: omega_h must exceed omega_c");
}

inline IdealCycleRecord ideal_cycle(const SystemParams& hot, const SystemParams& cold, double t_h,
                                    double t_c, const IdealCycleOptions& opts = {}) {
    check_stroke_pair(hot, cold);
    const EigenSystem eh = solve(hot, opts.solve);
    const EigenSystem ec = solve(cold, opts.solve);
    return ideal_cycle_from_spectra(eh, ec, hot.omega, cold.omega, t_h, t_c, opts.pairing);
}

// Medium at frequency omega with the qubit detuned by a constant offset: Δ = ω + detuning.
inline SystemParams medium_at(double omega, double detuning, double u, double lambda1,
                              double lambda2, int n_max) {
    return SystemParams{omega, omega + detuning, u, lambda1, lambda2, n_max};
}

}  // namespace qotto
