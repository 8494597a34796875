// lindblad.hpp: dressed-state Markovian master equation with Ohmic baths
//
// Jump operators connect exact eigenstates |φ_k><φ_j| (k < j) of the system Hamiltonian.
// Rates follow Γ_u^{jk} = γ(Δ_jk) |<φ_j|X_u|φ_k>|², γ(Δ) = π α Δ exp(−|Δ|/ω_c), with the
// Bose factor n(Δ, T) for absorption and 1 + n for emission.
//
// In the eigenbasis every channel only moves population j → k (or back) and damps
// coherences, so the dissipator commutes with the free rotation exp(−iHt)·exp(iHt).
// Propagation therefore integrates the dissipator alone in the interaction picture and
// applies the Bohr phases exactly at the end.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "qotto/density_matrix.hpp"
#include "qotto/errors.hpp"
#include "qotto/operators.hpp"
#include "qotto/otto_ideal.hpp"
#include "qotto/spectrum.hpp"

namespace qotto {

struct BathSpec {
    double temperature{0.0};
    double coupling{1e-3};  // α
    double cutoff{10.0};    // ω_c
    bool boson{true};       // couple through X_a = a† + a
    bool qubit{true};       // couple through X_σ = σ+ + σ-

    void validate() const {
        if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
            throw ParameterError("BathSpec: temperature must be >= 0");
        }
        if (!(coupling > 0.0)) throw ParameterError("BathSpec: coupling must be > 0");
        if (!(cutoff > 0.0)) throw ParameterError("BathSpec: cutoff must be > 0");
    }
};

// Ohmic spectral function γ(Δ) = π α Δ exp(−|Δ|/ω_c).
inline double ohmic_rate(double gap, double coupling, double cutoff) {
    return std::numbers::pi * coupling * gap * std::exp(-std::abs(gap) / cutoff);
}

// n(Δ, T) = 1/(exp(Δ/T) − 1); exactly 0 at T = 0.
inline double bose_occupation(double gap, double temperature) {
    if (temperature == 0.0) return 0.0;
    return 1.0 / std::expm1(gap / temperature);
}

// Pairs closer than this (units of ω) get no dissipative channel.
inline constexpr double kChannelDegeneracy = 1e-8;
// Channels with |S|² below this are dropped.
inline constexpr double kMinOverlap = 1e-14;

struct Channel {
    Eigen::Index upper{};  // j
    Eigen::Index lower{};  // k < j
    CouplingKind kind{CouplingKind::boson};
    double gap{};          // E_j − E_k
    double overlap_sq{};   // |S_u^{jk}|²
    double rate_down{};    // Γ (1 + n)
    double rate_up{};      // Γ n
};

class ChannelSet {
public:
    ChannelSet(std::shared_ptr<const EigenSystem> basis, BathSpec bath, std::vector<Channel> channels,
               int skipped)
        : basis_(std::move(basis)), bath_(bath), channels_(std::move(channels)), skipped_(skipped) {
        const Eigen::Index dim = basis_->dim();
        transfer_ = Eigen::MatrixXd::Zero(dim, dim);
        for (const auto& c : channels_) {
            transfer_(c.lower, c.upper) += c.rate_down;
            transfer_(c.upper, c.lower) += c.rate_up;
        }
        outflow_ = transfer_.colwise().sum().transpose();
        vectors_c_ = basis_->vectors.cast<std::complex<double>>();
    }

    const std::vector<Channel>& channels() const { return channels_; }
    const EigenSystem& basis() const { return *basis_; }
    const BathSpec& bath() const { return bath_; }
    int degenerate_pairs_skipped() const { return skipped_; }
    Eigen::Index dim() const { return basis_->dim(); }

    // transfer(m, n): total rate n → m summed over channels; outflow(n) = Σ_m transfer(m, n).
    const Eigen::MatrixXd& transfer() const { return transfer_; }
    const Eigen::VectorXd& outflow() const { return outflow_; }
    const ComplexMatrix& vectors() const { return vectors_c_; }

    // Lab-basis jump operators, built on demand (storing one dense matrix per channel
    // would cost dim² per channel).
    ComplexMatrix jump_down(const Channel& c) const { return outer(c.lower, c.upper); }
    ComplexMatrix jump_up(const Channel& c) const { return outer(c.upper, c.lower); }

    ComplexMatrix to_eigenbasis(const ComplexMatrix& lab) const {
        return vectors_c_.adjoint() * lab * vectors_c_;
    }
    ComplexMatrix to_lab(const ComplexMatrix& eig) const {
        return vectors_c_ * eig * vectors_c_.adjoint();
    }

private:
    ComplexMatrix outer(Eigen::Index a, Eigen::Index b) const {
        return vectors_c_.col(a) * vectors_c_.col(b).adjoint();
    }

    std::shared_ptr<const EigenSystem> basis_;
    BathSpec bath_;
    std::vector<Channel> channels_;
    int skipped_{0};
    Eigen::MatrixXd transfer_;
    Eigen::VectorXd outflow_;
    ComplexMatrix vectors_c_;
};

inline ChannelSet build_channels(const EigenSystem& eig, const BathSpec& bath,
                                 const OperatorMatrix& x_boson, const OperatorMatrix& x_qubit) {
    bath.validate();
    const Eigen::Index dim = eig.dim();
    if (x_boson.rows() != dim || x_qubit.rows() != dim) {
        throw ParameterError("build_channels: coupling operator dimension mismatch");
    }
    const Eigen::MatrixXd s_boson = eig.vectors.transpose() * x_boson * eig.vectors;
    const Eigen::MatrixXd s_qubit = eig.vectors.transpose() * x_qubit * eig.vectors;

    std::vector<Channel> channels;
    int skipped = 0;
    for (Eigen::Index j = 0; j < dim; ++j) {
        for (Eigen::Index k = 0; k < j; ++k) {
            const double gap = eig.energies(j) - eig.energies(k);
            if (gap <= kChannelDegeneracy) {
                ++skipped;
                continue;
            }
            const double gamma = ohmic_rate(gap, bath.coupling, bath.cutoff);
            const double nb = bose_occupation(gap, bath.temperature);
            auto add = [&](CouplingKind kind, double s) {
                const double s2 = s * s;
                if (s2 < kMinOverlap) return;
                const double g = gamma * s2;
                channels.push_back({j, k, kind, gap, s2, g * (1.0 + nb),
                                    bath.temperature == 0.0 ? 0.0 : g * nb});
            };
            if (bath.boson) add(CouplingKind::boson, s_boson(j, k));
            if (bath.qubit) add(CouplingKind::qubit, s_qubit(j, k));
        }
    }
    return ChannelSet(std::make_shared<const EigenSystem>(eig), bath, std::move(channels), skipped);
}

inline ChannelSet build_channels(const EigenSystem& eig, const BathSpec& bath) {
    const int n_max = static_cast<int>(eig.dim() / 2) - 1;
    return build_channels(eig, bath, coupling_operator(CouplingKind::boson, n_max),
                          coupling_operator(CouplingKind::qubit, n_max));
}

namespace detail {

// Dissipator in the eigenbasis: populations flow through transfer(), every element
// ρ_mn is damped by (outflow_m + outflow_n)/2.
inline void apply_dissipator(const ComplexMatrix& rho, const ComplexMatrix& damping,
                             const Eigen::MatrixXd& transfer, ComplexMatrix& out) {
    out = rho.cwiseProduct(damping);
    const Eigen::VectorXd pops = rho.diagonal().real();
    out.diagonal() += (transfer * pops).cast<std::complex<double>>();
}

inline ComplexMatrix damping_matrix(const Eigen::VectorXd& outflow) {
    const Eigen::Index n = outflow.size();
    ComplexMatrix d(n, n);
    for (Eigen::Index m = 0; m < n; ++m)
        for (Eigen::Index k = 0; k < n; ++k) d(m, k) = -0.5 * (outflow(m) + outflow(k));
    return d;
}

}  // namespace detail

// dρ/dt = −i[H, ρ] + Σ_channels rate_up D[jump_up] ρ + rate_down D[jump_down] ρ, lab basis,
// with D[O]ρ = OρO† − ½{O†O, ρ}. H must be the Hamiltonian the channels were built from.
inline ComplexMatrix liouvillian_apply(const DensityMatrix& rho, const OperatorMatrix& h,
                                       const ChannelSet& ch) {
    if (rho.dim() != h.rows() || h.rows() != ch.dim()) {
        throw ParameterError("liouvillian_apply: dimension mismatch");
    }
    const ComplexMatrix hc = h.cast<std::complex<double>>();
    const std::complex<double> i1(0.0, 1.0);
    ComplexMatrix out = -i1 * (hc * rho.matrix() - rho.matrix() * hc);
    ComplexMatrix dis;
    detail::apply_dissipator(ch.to_eigenbasis(rho.matrix()), detail::damping_matrix(ch.outflow()),
                             ch.transfer(), dis);
    out += ch.to_lab(dis);
    return out;
}

struct TrajectorySample {
    double t{};
    double energy{};       // Tr ρH
    double purity{};       // Tr ρ²
    double trace_error{};  // |Tr ρ − 1| before renormalization
};

struct PropagateOptions {
    double dt{0.01};
    int max_halvings{8};
    int sample_stride{0};  // emit a sample every this many steps; 0 = none
    double time_offset{0.0};
    std::function<void(const TrajectorySample&)> sink;
};

// Fixed-step RK4 integrator for one fixed Hamiltonian and bath, working in the eigenbasis.
class EigenbasisPropagator {
public:
    EigenbasisPropagator(const ChannelSet& ch, const DensityMatrix& rho0)
        : ch_(&ch),
          damping_(detail::damping_matrix(ch.outflow())),
          state_(ch.to_eigenbasis(rho0.matrix())) {
        if (rho0.dim() != ch.dim()) throw ParameterError("propagate: dimension mismatch");
    }

    double time() const { return time_; }
    double smallest_dt() const { return smallest_dt_; }
    double max_trace_error() const { return max_trace_error_; }

    void advance(double duration, const PropagateOptions& opts) {
        if (!(duration >= 0.0)) throw ParameterError("propagate: duration must be >= 0");
        if (!(opts.dt > 0.0)) throw ParameterError("propagate: dt must be > 0");
        if (duration == 0.0) return;
        const auto steps = static_cast<long long>(std::ceil(duration / opts.dt - 1e-12));
        const double h = duration / static_cast<double>(steps);
        const double t_start = time_;
        for (long long s = 1; s <= steps; ++s) {
            step(h, opts.max_halvings);
            time_ = t_start + h * static_cast<double>(s);
            if (opts.sink && opts.sample_stride > 0 && s % opts.sample_stride == 0) {
                opts.sink(sample(opts.time_offset));
            }
        }
    }

    // Eigenbasis state (Schrödinger picture) at the current time.
    ComplexMatrix eigenbasis_state() const {
        const auto& e = ch_->basis().energies;
        ComplexMatrix out = state_;
        for (Eigen::Index m = 0; m < out.rows(); ++m)
            for (Eigen::Index n = 0; n < out.cols(); ++n)
                if (m != n) out(m, n) *= std::polar(1.0, -(e(m) - e(n)) * time_);
        return out;
    }

    DensityMatrix state() const {
        ComplexMatrix lab = ch_->to_lab(eigenbasis_state());
        lab = (0.5 * (lab + lab.adjoint())).eval();
        lab /= lab.trace().real();
        try {
            return DensityMatrix(lab);
        } catch (const PropagationError& e) {
            std::ostringstream os;
            os << "propagate: state left the physical set (" << e.what()
               << "); smallest dt used " << smallest_dt_;
            throw PropagationError(os.str());
        }
    }

    // ‖dρ/dt‖_F including the coherent part.
    double residual() const {
        const ComplexMatrix rho = eigenbasis_state();
        ComplexMatrix d;
        detail::apply_dissipator(rho, damping_, ch_->transfer(), d);
        const auto& e = ch_->basis().energies;
        for (Eigen::Index m = 0; m < rho.rows(); ++m)
            for (Eigen::Index n = 0; n < rho.cols(); ++n)
                d(m, n) += std::complex<double>(0.0, -(e(m) - e(n))) * rho(m, n);
        return d.norm();
    }

private:
    void rk4(const ComplexMatrix& y, double h, ComplexMatrix& out) {
        const auto& tr = ch_->transfer();
        detail::apply_dissipator(y, damping_, tr, k1_);
        tmp_ = y + 0.5 * h * k1_;
        detail::apply_dissipator(tmp_, damping_, tr, k2_);
        tmp_ = y + 0.5 * h * k2_;
        detail::apply_dissipator(tmp_, damping_, tr, k3_);
        tmp_ = y + h * k3_;
        detail::apply_dissipator(tmp_, damping_, tr, k4_);
        out = y + (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
    }

    void step(double h, int halvings_left) {
        rk4(state_, h, next_);
        if (next_.diagonal().real().minCoeff() < -1e-10 && halvings_left > 0) {
            step(0.5 * h, halvings_left - 1);
            step(0.5 * h, halvings_left - 1);
            return;
        }
        smallest_dt_ = std::min(smallest_dt_, h);
        const double tr = next_.trace().real();
        last_trace_error_ = std::abs(tr - 1.0);
        max_trace_error_ = std::max(max_trace_error_, last_trace_error_);
        state_ = 0.5 * (next_ + next_.adjoint());
        state_ /= tr;
    }

    TrajectorySample sample(double offset) const {
        const auto& e = ch_->basis().energies;
        return {offset + time_, state_.diagonal().real().dot(e), state_.cwiseAbs2().sum(),
                last_trace_error_};
    }

    const ChannelSet* ch_;
    ComplexMatrix damping_;
    ComplexMatrix state_;  // interaction picture
    ComplexMatrix next_, tmp_, k1_, k2_, k3_, k4_;
    double time_{0.0};
    double smallest_dt_{std::numeric_limits<double>::infinity()};
    double last_trace_error_{0.0};
    double max_trace_error_{0.0};
};

// Evolves ρ0 for `duration` under the Hamiltonian and bath encoded in ch.
inline DensityMatrix propagate(const DensityMatrix& rho0, const ChannelSet& ch, double duration,
                               const PropagateOptions& opts = {}) {
    EigenbasisPropagator prop(ch, rho0);
    prop.advance(duration, opts);
    if (duration == 0.0) return rho0;
    return prop.state();
}

struct SteadyStateResult {
    DensityMatrix state;
    double time{};
    double residual{};
    bool converged{false};
};

// Propagates in chunks until ‖dρ/dt‖ < tolerance or max_time elapses.
inline SteadyStateResult relax_to_steady_state(const DensityMatrix& rho0, const ChannelSet& ch,
                                               double tolerance, double max_time, double chunk,
                                               const PropagateOptions& opts = {}) {
    EigenbasisPropagator prop(ch, rho0);
    double res = prop.residual();
    while (res >= tolerance && prop.time() < max_time) {
        prop.advance(std::min(chunk, max_time - prop.time()), opts);
        res = prop.residual();
    }
    return {prop.state(), prop.time(), res, res < tolerance};
}

// Σ_n P_n |φ_n><φ_n| with Gibbs populations at temperature T.
inline DensityMatrix thermal_state(const EigenSystem& eig, double temperature) {
    return DensityMatrix::from_spectral(eig.vectors, gibbs_populations(eig, temperature).populations);
}

}  // namespace qotto
