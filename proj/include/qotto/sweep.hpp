// sweep.hpp: parameter grids over the spectrum, ideal-cycle and finite-cycle evaluators

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "qotto/errors.hpp"
#include "qotto/otto_finite.hpp"
#include "qotto/otto_ideal.hpp"
#include "qotto/parallel.hpp"
#include "qotto/spectrum.hpp"

namespace qotto {

enum class SweepAxis {
    lambda1,
    lambda2,
    lambda_locked,  // λ1 = λ2
    u,
    t_hot,
    t_cold,
    detuning,       // δ in Δ = ω + δ
    tau_adiabatic,
    tau_thermal,
};

inline const char* to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::lambda1: return "lambda1";
        case SweepAxis::lambda2: return "lambda2";
        case SweepAxis::lambda_locked: return "lambda_locked";
        case SweepAxis::u: return "u";
        case SweepAxis::t_hot: return "T_h";
        case SweepAxis::t_cold: return "T_c";
        case SweepAxis::detuning: return "detuning";
        case SweepAxis::tau_adiabatic: return "tau_ad";
        case SweepAxis::tau_thermal: return "tau_th";
    }
    return "unknown";
}

inline std::optional<SweepAxis> parse_sweep_axis(const std::string& s) {
    for (auto a : {SweepAxis::lambda1, SweepAxis::lambda2, SweepAxis::lambda_locked, SweepAxis::u,
                   SweepAxis::t_hot, SweepAxis::t_cold, SweepAxis::detuning,
                   SweepAxis::tau_adiabatic, SweepAxis::tau_thermal}) {
        if (s == to_string(a)) return a;
    }
    if (s == "T_hot" || s == "t_hot") return SweepAxis::t_hot;
    if (s == "T_cold" || s == "t_cold") return SweepAxis::t_cold;
    if (s == "tau_adiabatic") return SweepAxis::tau_adiabatic;
    if (s == "tau_thermal") return SweepAxis::tau_thermal;
    return std::nullopt;
}

enum class SweepMode { spectrum, ideal_cycle, finite_cycle };

inline const char* to_string(SweepMode m) {
    switch (m) {
        case SweepMode::spectrum: return "spectrum";
        case SweepMode::ideal_cycle: return "ideal_cycle";
        case SweepMode::finite_cycle: return "finite_cycle";
    }
    return "unknown";
}

// start, start + h, ..., stop with count points, endpoints exact.
inline std::vector<double> linspace(double start, double stop, int count) {
    if (count < 1) throw ParameterError("linspace: count must be >= 1");
    std::vector<double> v(static_cast<std::size_t>(count));
    if (count == 1) {
        v[0] = start;
        return v;
    }
    const double h = (stop - start) / (count - 1);
    for (int i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = start + h * i;
    v.back() = stop;
    return v;
}

struct AxisRange {
    SweepAxis axis{SweepAxis::lambda1};
    double start{0.0};
    double stop{1.0};
    int count{2};

    std::vector<double> values() const { return linspace(start, stop, count); }
};

enum class RatioTarget {
    lambda2,  // λ2 = r·λ1
    lambda1,  // λ1 = r·λ2
};

struct SweepSpec {
    SweepMode mode{SweepMode::ideal_cycle};
    std::vector<AxisRange> axes;  // zero axes evaluates the fixed point once

    double omega_h{2.0};
    double omega_c{1.0};
    double detuning{0.0};
    double u{0.0};
    double lambda1{0.0};
    double lambda2{0.0};
    int n_max{40};
    double t_hot{0.5};
    double t_cold{0.1};
    std::optional<double> ratio;
    RatioTarget ratio_target{RatioTarget::lambda2};

    LevelPairing pairing{LevelPairing::energy_index};
    int n_levels{6};  // spectrum mode, cold medium

    double tau_adiabatic{10.0};
    double tau_thermal{1000.0};
    double dt_unitary{0.0};
    double dt_dissipative{0.01};
    double limit_cycle_tolerance{1e-6};
    int max_cycles{100};
    BathSpec bath;

    SolveOptions solve;
    int workers{1};

    void validate() const {
        if (axes.size() > 2) throw ParameterError("sweep: at most two axes");
        for (const auto& a : axes) {
            if (a.count < 2) {
                throw ParameterError(std::string("sweep: axis ") + to_string(a.axis) + " needs at least 2 points");
            }
            if (!std::isfinite(a.start) || !std::isfinite(a.stop)) {
                throw ParameterError(std::string("sweep: axis ") + to_string(a.axis) + " range is not finite");
            }
        }
        if (axes.size() == 2 && axes[0].axis == axes[1].axis) throw ParameterError("sweep: axes must differ");
        if (ratio) {
            if (!(*ratio >= 0.0) || !std::isfinite(*ratio)) throw ParameterError("sweep: ratio must be finite and >= 0");
            for (const auto& a : axes) {
                const bool clash = a.axis == SweepAxis::lambda_locked ||
                                   (ratio_target == RatioTarget::lambda2 && a.axis == SweepAxis::lambda2) ||
                                   (ratio_target == RatioTarget::lambda1 && a.axis == SweepAxis::lambda1);
                if (clash) {
                    throw ParameterError(std::string("sweep: ratio lock conflicts with swept axis ") + to_string(a.axis));
                }
            }
        }
        if (mode != SweepMode::finite_cycle) {
            for (const auto& a : axes) {
                if (a.axis == SweepAxis::tau_adiabatic || a.axis == SweepAxis::tau_thermal) {
                    throw ParameterError("sweep: stroke-time axes need mode finite_cycle");
                }
            }
        }
        if (n_levels < 1 || n_levels > 2 * (n_max + 1)) throw ParameterError("sweep: n_levels out of range");
        if (workers < 1) throw ParameterError("sweep: workers must be >= 1");
    }

    std::size_t point_count() const {
        std::size_t n = 1;
        for (const auto& a : axes) n *= static_cast<std::size_t>(a.count);
        return n;
    }
};

struct PointInputs {
    std::vector<double> axis_values;
    SystemParams hot;
    SystemParams cold;
    double t_hot{};
    double t_cold{};
    double tau_adiabatic{};
    double tau_thermal{};
};

// Inputs of grid point `index`, row-major with the last axis fastest.
inline PointInputs point_inputs(const SweepSpec& spec, std::size_t index) {
    PointInputs in;
    double l1 = spec.lambda1, l2 = spec.lambda2, u = spec.u, det = spec.detuning;
    in.t_hot = spec.t_hot;
    in.t_cold = spec.t_cold;
    in.tau_adiabatic = spec.tau_adiabatic;
    in.tau_thermal = spec.tau_thermal;
    in.axis_values.resize(spec.axes.size());
    std::size_t rest = index;
    for (std::size_t k = spec.axes.size(); k-- > 0;) {
        const auto& a = spec.axes[k];
        const auto count = static_cast<std::size_t>(a.count);
        const auto i = rest % count;
        rest /= count;
        const double v = a.values()[i];
        in.axis_values[k] = v;
        switch (a.axis) {
            case SweepAxis::lambda1: l1 = v; break;
            case SweepAxis::lambda2: l2 = v; break;
            case SweepAxis::lambda_locked: l1 = l2 = v; break;
            case SweepAxis::u: u = v; break;
            case SweepAxis::t_hot: in.t_hot = v; break;
            case SweepAxis::t_cold: in.t_cold = v; break;
            case SweepAxis::detuning: det = v; break;
            case SweepAxis::tau_adiabatic: in.tau_adiabatic = v; break;
            case SweepAxis::tau_thermal: in.tau_thermal = v; break;
        }
    }
    if (spec.ratio) {
        if (spec.ratio_target == RatioTarget::lambda2) l2 = *spec.ratio * l1;
        else l1 = *spec.ratio * l2;
    }
    in.hot = medium_at(spec.omega_h, det, u, l1, l2, spec.n_max);
    in.cold = medium_at(spec.omega_c, det, u, l1, l2, spec.n_max);
    return in;
}

enum class PointStatus { ok, truncation, not_converged, parameter, propagation, thermodynamics, error };

inline const char* to_string(PointStatus s) {
    switch (s) {
        case PointStatus::ok: return "ok";
        case PointStatus::truncation: return "truncation";
        case PointStatus::not_converged: return "not_converged";
        case PointStatus::parameter: return "parameter";
        case PointStatus::propagation: return "propagation";
        case PointStatus::thermodynamics: return "thermodynamics";
        case PointStatus::error: return "error";
    }
    return "unknown";
}

struct SpectrumPoint {
    double ground_energy{};
    Eigen::VectorXd relative_energies;
    std::vector<int> parities;
};

struct SweepRow {
    PointInputs inputs;
    PointStatus status{PointStatus::ok};
    std::string message;
    std::optional<SpectrumPoint> spectrum;
    std::optional<IdealCycleRecord> ideal;
    std::optional<CycleRecord> finite;
};

namespace detail {

inline PointStatus classify_exception(std::exception_ptr e, std::string& message) {
    try {
        std::rethrow_exception(e);
    } catch (const TruncationError& x) {
        message = x.what();
        return PointStatus::truncation;
    } catch (const ParameterError& x) {
        message = x.what();
        return PointStatus::parameter;
    } catch (const PropagationError& x) {
        message = x.what();
        return PointStatus::propagation;
    } catch (const ThermodynamicsViolation& x) {
        message = x.what();
        return PointStatus::thermodynamics;
    } catch (const std::exception& x) {
        message = x.what();
        return PointStatus::error;
    }
}

struct ParamsLess {
    bool operator()(const SystemParams& a, const SystemParams& b) const {
        return std::tie(a.omega, a.delta, a.u, a.lambda1, a.lambda2, a.n_max) <
               std::tie(b.omega, b.delta, b.u, b.lambda1, b.lambda2, b.n_max);
    }
};

// Solved spectra per unique SystemParams; failures are kept as exceptions.
class SpectrumCache {
public:
    struct Entry {
        std::shared_ptr<const EigenSystem> eig;
        std::exception_ptr error;
    };

    SpectrumCache(const std::vector<SystemParams>& wanted, const SolveOptions& opts, int workers) {
        for (const auto& p : wanted) map_.emplace(p, Entry{});
        std::vector<std::map<SystemParams, Entry, ParamsLess>::iterator> slots;
        for (auto it = map_.begin(); it != map_.end(); ++it) slots.push_back(it);
        parallel_for(slots.size(), workers, [&](std::size_t i) {
            try {
                slots[i]->second.eig = std::make_shared<const EigenSystem>(solve(slots[i]->first, opts));
            } catch (...) {
                slots[i]->second.error = std::current_exception();
            }
        });
    }

    std::shared_ptr<const EigenSystem> get(const SystemParams& p) const {
        const auto& e = map_.at(p);
        if (e.error) std::rethrow_exception(e.error);
        return e.eig;
    }

    std::size_t size() const { return map_.size(); }

private:
    std::map<SystemParams, Entry, ParamsLess> map_;
};

}  // namespace detail

inline CycleConfig cycle_config_for(const SweepSpec& spec, const PointInputs& in) {
    CycleConfig cfg;
    cfg.hot = in.hot;
    cfg.cold = in.cold;
    cfg.t_hot = in.t_hot;
    cfg.t_cold = in.t_cold;
    cfg.tau_adiabatic = in.tau_adiabatic;
    cfg.tau_thermal = in.tau_thermal;
    cfg.dt_unitary = spec.dt_unitary;
    cfg.dt_dissipative = spec.dt_dissipative;
    cfg.limit_cycle_tolerance = spec.limit_cycle_tolerance;
    cfg.max_cycles = spec.max_cycles;
    cfg.bath = spec.bath;
    cfg.solve = spec.solve;
    return cfg;
}

// Evaluates every grid point. Rows come back in grid order; a failing point carries its
// status and message and the sweep continues. Identical for any worker count.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
    spec.validate();
    const std::size_t n = spec.point_count();
    std::vector<SweepRow> rows(n);
    std::vector<SystemParams> wanted;
    for (std::size_t i = 0; i < n; ++i) {
        rows[i].inputs = point_inputs(spec, i);
        try {
            rows[i].inputs.hot.validate();
            rows[i].inputs.cold.validate();
        } catch (...) {
            continue;  // reported again per point below
        }
        if (spec.mode != SweepMode::spectrum) wanted.push_back(rows[i].inputs.hot);
        wanted.push_back(rows[i].inputs.cold);
    }
    const detail::SpectrumCache cache(wanted, spec.solve, spec.workers);

    parallel_for(n, spec.workers, [&](std::size_t i) {
        SweepRow& row = rows[i];
        const PointInputs& in = row.inputs;
        try {
            in.hot.validate();
            in.cold.validate();
            switch (spec.mode) {
                case SweepMode::spectrum: {
                    const auto eig = cache.get(in.cold);
                    SpectrumPoint sp;
                    sp.ground_energy = eig->energies(0);
                    sp.relative_energies = eig->energies.head(spec.n_levels).array() - eig->energies(0);
                    sp.parities.assign(eig->parities.begin(), eig->parities.begin() + spec.n_levels);
                    row.spectrum = std::move(sp);
                    break;
                }
                case SweepMode::ideal_cycle: {
                    check_stroke_pair(in.hot, in.cold);
                    row.ideal = ideal_cycle_from_spectra(*cache.get(in.hot), *cache.get(in.cold), in.hot.omega,
                                                         in.cold.omega, in.t_hot, in.t_cold, spec.pairing);
                    break;
                }
                case SweepMode::finite_cycle: {
                    const OttoEngine engine(cycle_config_for(spec, in), cache.get(in.hot), cache.get(in.cold));
                    const auto lc = engine.find_limit_cycle();
                    row.finite = lc.last.record;
                    if (!lc.converged) {
                        row.status = PointStatus::not_converged;
                        row.message = "limit cycle not reached after " + std::to_string(spec.max_cycles) +
                                      " cycles (1 - F = " + std::to_string(1.0 - lc.fidelity_trace.back()) + ")";
                    }
                    break;
                }
            }
        } catch (...) {
            row.status = detail::classify_exception(std::current_exception(), row.message);
        }
    });
    return rows;
}

inline std::size_t failed_points(const std::vector<SweepRow>& rows) {
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return r.status != PointStatus::ok; }));
}

inline std::optional<Regime> row_regime(const SweepRow& r) {
    if (r.ideal) return r.ideal->regime;
    if (r.finite) return r.finite->regime;
    return std::nullopt;
}

// Share of grid points per regime among rows that carry a regime. Sums to 1.
inline std::map<Regime, double> regime_fraction(const std::vector<SweepRow>& rows) {
    std::map<Regime, double> out;
    std::size_t total = 0;
    for (const auto& r : rows) {
        if (const auto reg = row_regime(r)) {
            out[*reg] += 1.0;
            ++total;
        }
    }
    for (auto& [reg, v] : out) v /= static_cast<double>(total);
    return out;
}

}  // namespace qotto
