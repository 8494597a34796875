// otto_finite.hpp: finite-time Otto cycle: unitary frequency ramps, dissipative isochores,
// limit cycles, entropy production, friction work, and the uncertainty-relation bound

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qotto/density_matrix.hpp"
#include "qotto/errors.hpp"
#include "qotto/lindblad.hpp"
#include "qotto/operators.hpp"
#include "qotto/otto_ideal.hpp"
#include "qotto/spectrum.hpp"

namespace qotto {

enum class Stage { expansion, cold_isochore, compression, hot_isochore };

inline const char* to_string(Stage s) {
    switch (s) {
        case Stage::expansion: return "expansion";
        case Stage::cold_isochore: return "cold_isochore";
        case Stage::compression: return "compression";
        case Stage::hot_isochore: return "hot_isochore";
    }
    return "unknown";
}

// One row of a cycle trajectory dump.
struct CycleSample {
    double t{};
    Stage stage{};
    double energy{};       // Tr ρH(t)
    double purity{};
    double trace_error{};
    double power{};        // Tr(ρ dH/dt); zero on isochores
};

using CycleSink = std::function<void(const CycleSample&)>;

// ------------------------------- unitary strokes -------------------------------

struct AdiabaticOptions {
    double dt{0.0};          // 0: 1000 midpoint steps span the stroke
    int min_steps{1000};
    int max_refinements{3};  // step doublings allowed while the ρ spectrum drifts
    int sample_stride{0};
    double time_offset{0.0};
    Stage stage{Stage::expansion};
    CycleSink sink;
};

namespace detail {

inline void check_ramp(const SystemParams& start, const SystemParams& end) {
    start.validate();
    end.validate();
    if (start.n_max != end.n_max || start.u != end.u || start.lambda1 != end.lambda1 ||
        start.lambda2 != end.lambda2) {
        throw ParameterError("adiabatic_stroke: start and end may differ only in omega and delta");
    }
    const double detuning = start.delta - start.omega;
    if (std::abs((end.delta - end.omega) - detuning) > 1e-12) {
        throw ParameterError("adiabatic_stroke: delta - omega must be equal at both ends");
    }
}

// H(ω) = ω·A + B with Δ = ω + δ, split into the even and odd parity blocks.
struct RampBlocks {
    std::vector<Eigen::Index> index[2];
    Eigen::MatrixXd slope[2];
    Eigen::MatrixXd offset[2];

    explicit RampBlocks(const SystemParams& start) {
        SystemParams p0 = start;
        p0.u = 0.0;
        SystemParams p1 = p0;
        p1.omega += 1.0;
        p1.delta += 1.0;
        const OperatorMatrix h0 = build_hamiltonian(p0);
        OperatorMatrix a = build_hamiltonian(p1) - h0;
        const OperatorMatrix b = h0 - start.omega * a;
        // Stark term u ω a†a σz scales with ω.
        for (int n = 0; n <= start.n_max; ++n) {
            a(basis_index(Qubit::ground, n, start.n_max), basis_index(Qubit::ground, n, start.n_max)) -= start.u * n;
            a(basis_index(Qubit::excited, n, start.n_max), basis_index(Qubit::excited, n, start.n_max)) += start.u * n;
        }
        const OperatorMatrix pi = parity_operator(start.n_max);
        for (Eigen::Index i = 0; i < pi.rows(); ++i) index[pi(i, i) > 0 ? 0 : 1].push_back(i);
        for (int s = 0; s < 2; ++s) {
            const auto n = static_cast<Eigen::Index>(index[s].size());
            slope[s].resize(n, n);
            offset[s].resize(n, n);
            for (Eigen::Index x = 0; x < n; ++x)
                for (Eigen::Index y = 0; y < n; ++y) {
                    slope[s](x, y) = a(index[s][x], index[s][y]);
                    offset[s](x, y) = b(index[s][x], index[s][y]);
                }
        }
    }

    Eigen::MatrixXd full(const Eigen::MatrixXd (&m)[2], Eigen::Index dim) const {
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim, dim);
        for (int s = 0; s < 2; ++s)
            for (std::size_t x = 0; x < index[s].size(); ++x)
                for (std::size_t y = 0; y < index[s].size(); ++y)
                    out(index[s][x], index[s][y]) = m[s](static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
        return out;
    }
};

inline ComplexMatrix embed_blocks(const RampBlocks& rb, const ComplexMatrix (&u)[2], Eigen::Index dim) {
    ComplexMatrix out = ComplexMatrix::Zero(dim, dim);
    for (int s = 0; s < 2; ++s)
        for (std::size_t x = 0; x < rb.index[s].size(); ++x)
            for (std::size_t y = 0; y < rb.index[s].size(); ++y)
                out(rb.index[s][x], rb.index[s][y]) = u[s](static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
    return out;
}

// Time-ordered product of midpoint exponentials for a linear ω ramp, blockwise by parity.
inline ComplexMatrix ramp_propagator(const RampBlocks& rb, double omega_start, double omega_end,
                                     double duration, long long steps, Eigen::Index dim,
                                     const DensityMatrix* rho, const AdiabaticOptions* sampling) {
    const double h = duration / static_cast<double>(steps);
    ComplexMatrix acc[2];
    for (int s = 0; s < 2; ++s) {
        const auto n = static_cast<Eigen::Index>(rb.index[s].size());
        acc[s] = ComplexMatrix::Identity(n, n);
    }
    const double rate = (omega_end - omega_start) / duration;
    for (long long k = 0; k < steps; ++k) {
        const double omega = omega_start + rate * (static_cast<double>(k) + 0.5) * h;
        for (int s = 0; s < 2; ++s) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(omega * rb.slope[s] + rb.offset[s]);
            Eigen::VectorXcd phase(es.eigenvalues().size());
            for (Eigen::Index i = 0; i < phase.size(); ++i) phase(i) = std::polar(1.0, -es.eigenvalues()(i) * h);
            const ComplexMatrix v = es.eigenvectors().cast<std::complex<double>>();
            acc[s] = (v * phase.asDiagonal() * v.adjoint() * acc[s]).eval();
        }
        if (sampling && sampling->sink && sampling->sample_stride > 0 &&
            (k + 1) % sampling->sample_stride == 0) {
            const ComplexMatrix u = embed_blocks(rb, acc, dim);
            const ComplexMatrix r = u * rho->matrix() * u.adjoint();
            const double t = static_cast<double>(k + 1) * h;
            const double om = omega_start + rate * t;
            const Eigen::MatrixXd ht = om * rb.full(rb.slope, dim) + rb.full(rb.offset, dim);
            const Eigen::MatrixXd hdot = rate * rb.full(rb.slope, dim);
            sampling->sink({sampling->time_offset + t, sampling->stage,
                            r.real().cwiseProduct(ht).sum(), r.cwiseAbs2().sum(),
                            std::abs(r.trace().real() - 1.0), r.real().cwiseProduct(hdot).sum()});
        }
    }
    return embed_blocks(rb, acc, dim);
}

}  // namespace detail

// Unitary evolution under H(t) with ω ramped linearly from start.omega to end.omega over
// `duration`, Δ(t) = ω(t) + (start.delta − start.omega), couplings fixed. Steps double
// while the eigenvalues of ρ drift by more than 1e-8; a drift above 1e-6 is an error.
inline DensityMatrix adiabatic_stroke(const DensityMatrix& rho, const SystemParams& start,
                                      const SystemParams& end, double duration,
                                      const AdiabaticOptions& opts = {}) {
    detail::check_ramp(start, end);
    if (!(duration > 0.0)) throw ParameterError("adiabatic_stroke: duration must be > 0");
    if (rho.dim() != start.dim()) throw ParameterError("adiabatic_stroke: dimension mismatch");

    const detail::RampBlocks rb(start);
    long long steps = opts.min_steps;
    if (opts.dt > 0.0) steps = std::max<long long>(steps, static_cast<long long>(std::ceil(duration / opts.dt)));
    const Eigen::VectorXd before = rho.eigenvalues();
    double drift = 0.0;
    for (int attempt = 0;; ++attempt) {
        const bool last = attempt >= opts.max_refinements;
        const ComplexMatrix u = detail::ramp_propagator(rb, start.omega, end.omega, duration, steps,
                                                        rho.dim(), &rho, &opts);
        ComplexMatrix out = u * rho.matrix() * u.adjoint();
        out = (0.5 * (out + out.adjoint())).eval();
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(out, Eigen::EigenvaluesOnly);
        drift = (es.eigenvalues() - before).cwiseAbs().maxCoeff();
        if (drift < 1e-8 || (last && drift < 1e-6)) {
            out /= out.trace().real();
            return DensityMatrix(out);
        }
        if (last) break;
        steps *= 2;
    }
    std::ostringstream os;
    os << "adiabatic_stroke: spectrum of rho drifted by " << drift << " with dt = " << duration / static_cast<double>(steps);
    throw PropagationError(os.str());
}

// Populations carried by ascending-energy index, coherences dropped:
//   ρ_qe = Σ_n <φ_n^from|ρ|φ_n^from> |φ_n^to><φ_n^to|.
inline DensityMatrix quasistatic_map(const DensityMatrix& rho, const EigenSystem& from,
                                     const EigenSystem& to) {
    if (rho.dim() != from.dim() || from.dim() != to.dim()) {
        throw ParameterError("quasistatic_map: dimension mismatch");
    }
    const ComplexMatrix vf = from.vectors.cast<std::complex<double>>();
    const Eigen::VectorXd pops = (vf.adjoint() * rho.matrix() * vf).diagonal().real().cwiseMax(0.0);
    return DensityMatrix::from_spectral(to.vectors, pops / pops.sum());
}

// ------------------------------ irreversibility -------------------------------

struct StageStates {
    DensityMatrix start;       // τ0, hot Hamiltonian
    DensityMatrix expanded;    // τ1, after the hot → cold ramp
    DensityMatrix cooled;      // τ2, after the cold isochore
    DensityMatrix compressed;  // τ3, after the cold → hot ramp
    DensityMatrix heated;      // τ4, after the hot isochore
};

// ⟨Σ⟩ = −β_h[Tr(ρ_τ4 H_h) − Tr(ρ_τ3 H_h)] − β_c[Tr(ρ_τ2 H_c) − Tr(ρ_τ1 H_c)]
inline double entropy_production(const StageStates& s, const OperatorMatrix& h_hot,
                                 const OperatorMatrix& h_cold, double beta_h, double beta_c) {
    const double q_hot = s.heated.expectation(h_hot) - s.compressed.expectation(h_hot);
    const double q_cold = s.cooled.expectation(h_cold) - s.expanded.expectation(h_cold);
    return -beta_h * q_hot - beta_c * q_cold;
}

struct FrictionWork {
    double value{};
    bool overflow{false};
};

// (1/β) D(ρ‖ρ_qe)
inline FrictionWork friction_work(const DensityMatrix& after_stroke, const DensityMatrix& quasistatic,
                                  double beta) {
    if (!(beta > 0.0)) throw ParameterError("friction_work: beta must be > 0");
    const RelativeEntropy d = relative_entropy(after_stroke, quasistatic);
    if (d.overflow) return {std::numeric_limits<double>::max(), true};
    return {d.value / beta, false};
}

// g(y): the x ≥ 0 with x tanh x = y, by bisection.
inline double inverse_x_tanh_x(double y) {
    if (!(y >= 0.0)) throw ParameterError("inverse_x_tanh_x: argument must be >= 0");
    double lo = 0.0, hi = std::max(10.0, y);
    while (hi - lo > 1e-12 * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (mid * std::tanh(mid) < y ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// f(Σ) = csch²(g(Σ/2)), lower bound on var(Q)/⟨Q⟩² for integrated currents.
inline double tur_bound(double sigma) {
    if (!(sigma > 0.0)) throw ParameterError("tur_bound: entropy production must be > 0");
    const double s = std::sinh(inverse_x_tanh_x(0.5 * sigma));
    return 1.0 / (s * s);
}

// ---------------------------------- cycles ------------------------------------

struct CycleConfig {
    SystemParams hot;
    SystemParams cold;
    double t_hot{0.5};
    double t_cold{0.1};
    double tau_adiabatic{10.0};  // τ1 = τ3
    double tau_thermal{1000.0};  // τ2 = τ4
    double dt_unitary{0.0};      // 0: 1000 steps per ramp
    double dt_dissipative{0.01};
    double limit_cycle_tolerance{1e-6};  // on 1 − F
    int max_cycles{100};
    BathSpec bath;  // temperature is replaced by t_hot / t_cold per isochore
    SolveOptions solve;

    void validate() const {
        check_stroke_pair(hot, cold);
        if (std::abs((hot.delta - hot.omega) - (cold.delta - cold.omega)) > 1e-12) {
            throw ParameterError("CycleConfig: detuning delta - omega must match on both isochores");
        }
        if (!(t_hot > 0.0 && t_cold > 0.0)) throw ParameterError("CycleConfig: temperatures must be > 0");
        if (t_hot < t_cold) throw ParameterError("CycleConfig: T_h must not be below T_c");
        if (!(tau_adiabatic >= 0.0) || !(tau_thermal >= 0.0)) {
            throw ParameterError("CycleConfig: stroke durations must be >= 0");
        }
        if (!(dt_dissipative > 0.0)) throw ParameterError("CycleConfig: dt_dissipative must be > 0");
        if (!(limit_cycle_tolerance > 0.0)) throw ParameterError("CycleConfig: tolerance must be > 0");
        if (max_cycles < 1) throw ParameterError("CycleConfig: max_cycles must be >= 1");
        BathSpec b = bath;
        b.temperature = t_hot;
        b.validate();
    }
};

struct CycleRecord {
    double q_hot{};
    double q_cold{};
    double work{};
    std::optional<double> efficiency;  // when Q_h > 0
    double power{};                    // W / (2τ_ad + 2τ_th)
    double entropy_production{};
    double friction_work_compression{};
    double friction_work_expansion{};
    bool friction_overflow{false};
    std::optional<double> tur_bound;   // f(Σ) when Σ > 0
    double fidelity_to_previous{};     // F(ρ at cycle start, ρ at cycle end)
    int cycles_to_limit{1};
    Regime regime{Regime::boundary};
};

struct CycleResult {
    StageStates states;
    CycleRecord record;
};

struct LimitCycleResult {
    DensityMatrix state;           // ρ(τ0) of the last cycle's successor
    CycleResult last;
    std::vector<double> fidelity_trace;  // F(ρ^(N−1)(τ0), ρ^(N)(τ0)) for N = 2, 3, ...
    bool converged{false};
};

// Prepared hot/cold spectra and bath channels for repeated cycles. Immutable after
// construction; run_cycle and find_limit_cycle may be called from several threads.
class OttoEngine {
public:
    explicit OttoEngine(CycleConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate();
        init(std::make_shared<const EigenSystem>(solve(cfg_.hot, cfg_.solve)),
             std::make_shared<const EigenSystem>(solve(cfg_.cold, cfg_.solve)));
    }

    OttoEngine(CycleConfig cfg, std::shared_ptr<const EigenSystem> hot,
               std::shared_ptr<const EigenSystem> cold)
        : cfg_(std::move(cfg)) {
        cfg_.validate();
        init(std::move(hot), std::move(cold));
    }

    const CycleConfig& config() const { return cfg_; }
    const EigenSystem& hot_spectrum() const { return *eig_hot_; }
    const EigenSystem& cold_spectrum() const { return *eig_cold_; }
    const OperatorMatrix& hot_hamiltonian() const { return h_hot_; }
    const OperatorMatrix& cold_hamiltonian() const { return h_cold_; }
    const ChannelSet& hot_channels() const { return *ch_hot_; }
    const ChannelSet& cold_channels() const { return *ch_cold_; }

    DensityMatrix hot_gibbs() const { return thermal_state(*eig_hot_, cfg_.t_hot); }

    CycleResult run_cycle(const DensityMatrix& start, const CycleSink& sink = {},
                          int sample_stride = 0, double time_offset = 0.0) const {
        if (start.dim() != h_hot_.rows()) throw ParameterError("run_cycle: dimension mismatch");
        const double tau_ad = cfg_.tau_adiabatic, tau_th = cfg_.tau_thermal;
        double t = time_offset;

        auto ramp = [&](const DensityMatrix& rho, const SystemParams& from, const SystemParams& to,
                        Stage stage) {
            if (tau_ad == 0.0) return rho;  // sudden quench
            AdiabaticOptions ao;
            ao.dt = cfg_.dt_unitary;
            ao.sink = sink;
            ao.sample_stride = sample_stride;
            ao.time_offset = t;
            ao.stage = stage;
            try {
                return adiabatic_stroke(rho, from, to, tau_ad, ao);
            } catch (const std::exception& e) {
                throw PropagationError(std::string(to_string(stage)) + " stroke: " + e.what());
            }
        };
        auto isochore = [&](const DensityMatrix& rho, const ChannelSet& ch, Stage stage) {
            PropagateOptions po;
            po.dt = cfg_.dt_dissipative;
            po.sample_stride = sample_stride;
            po.time_offset = t;
            if (sink) {
                po.sink = [&](const TrajectorySample& s) {
                    sink({s.t, stage, s.energy, s.purity, s.trace_error, 0.0});
                };
            }
            try {
                return propagate(rho, ch, tau_th, po);
            } catch (const std::exception& e) {
                throw PropagationError(std::string(to_string(stage)) + " stroke: " + e.what());
            }
        };

        CycleResult out{StageStates{start, start, start, start, start}, {}};
        auto& s = out.states;
        s.expanded = ramp(start, cfg_.hot, cfg_.cold, Stage::expansion);
        t += tau_ad;
        s.cooled = isochore(s.expanded, *ch_cold_, Stage::cold_isochore);
        t += tau_th;
        s.compressed = ramp(s.cooled, cfg_.cold, cfg_.hot, Stage::compression);
        t += tau_ad;
        s.heated = isochore(s.compressed, *ch_hot_, Stage::hot_isochore);

        auto& r = out.record;
        r.q_hot = s.heated.expectation(h_hot_) - s.compressed.expectation(h_hot_);
        r.q_cold = s.cooled.expectation(h_cold_) - s.expanded.expectation(h_cold_);
        r.work = r.q_hot + r.q_cold;
        if (r.q_hot > 0.0) r.efficiency = r.work / r.q_hot;
        const double total = 2.0 * (tau_ad + tau_th);
        r.power = total > 0.0 ? r.work / total : 0.0;
        const double beta_h = 1.0 / cfg_.t_hot, beta_c = 1.0 / cfg_.t_cold;
        r.entropy_production = entropy_production(s, h_hot_, h_cold_, beta_h, beta_c);
        if (r.entropy_production > 0.0) r.tur_bound = tur_bound(r.entropy_production);

        const FrictionWork fexp =
            friction_work(s.expanded, quasistatic_map(s.start, *eig_hot_, *eig_cold_), beta_c);
        const FrictionWork fcomp =
            friction_work(s.compressed, quasistatic_map(s.cooled, *eig_cold_, *eig_hot_), beta_h);
        r.friction_work_expansion = fexp.value;
        r.friction_work_compression = fcomp.value;
        r.friction_overflow = fexp.overflow || fcomp.overflow;
        r.fidelity_to_previous = fidelity(s.start, s.heated);
        r.regime = classify_regime(r.q_hot, r.q_cold, r.work);
        return out;
    }

    // Iterates cycles from `initial` (default: hot Gibbs state) until
    // 1 − F(ρ^(N−1)(τ0), ρ^(N)(τ0)) < tolerance or max_cycles have run.
    // on_cycle(n, result) sees every completed cycle.
    LimitCycleResult find_limit_cycle(
        std::optional<DensityMatrix> initial = std::nullopt,
        const std::function<void(int, const CycleResult&)>& on_cycle = {}) const {
        DensityMatrix rho = initial ? *initial : hot_gibbs();
        LimitCycleResult out{rho, {}, {}, false};
        for (int n = 1; n <= cfg_.max_cycles; ++n) {
            CycleResult res = run_cycle(rho);
            out.fidelity_trace.push_back(res.record.fidelity_to_previous);
            rho = res.states.heated;
            res.record.cycles_to_limit = n;
            if (on_cycle) on_cycle(n, res);
            out.last = std::move(res);
            if (1.0 - out.fidelity_trace.back() < cfg_.limit_cycle_tolerance) {
                out.converged = true;
                break;
            }
        }
        out.state = rho;
        return out;
    }

private:
    void init(std::shared_ptr<const EigenSystem> hot, std::shared_ptr<const EigenSystem> cold) {
        eig_hot_ = std::move(hot);
        eig_cold_ = std::move(cold);
        if (eig_hot_->dim() != cfg_.hot.dim() || eig_cold_->dim() != cfg_.cold.dim()) {
            throw ParameterError("OttoEngine: spectrum dimension does not match n_max");
        }
        h_hot_ = build_hamiltonian(cfg_.hot);
        h_cold_ = build_hamiltonian(cfg_.cold);
        BathSpec bh = cfg_.bath, bc = cfg_.bath;
        bh.temperature = cfg_.t_hot;
        bc.temperature = cfg_.t_cold;
        ch_hot_ = std::make_shared<const ChannelSet>(build_channels(*eig_hot_, bh));
        ch_cold_ = std::make_shared<const ChannelSet>(build_channels(*eig_cold_, bc));
    }

    CycleConfig cfg_;
    std::shared_ptr<const EigenSystem> eig_hot_, eig_cold_;
    OperatorMatrix h_hot_, h_cold_;
    std::shared_ptr<const ChannelSet> ch_hot_, ch_cold_;
};

inline CycleResult run_cycle(const DensityMatrix& start, const CycleConfig& cfg) {
    return OttoEngine(cfg).run_cycle(start);
}

inline LimitCycleResult find_limit_cycle(const CycleConfig& cfg) {
    return OttoEngine(cfg).find_limit_cycle();
}

}  // namespace qotto
