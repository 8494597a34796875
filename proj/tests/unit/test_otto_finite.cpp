#include <catch_amalgamated.hpp>

#include <unsupported/Eigen/MatrixFunctions>

#include "qotto/otto_finite.hpp"

using namespace qotto;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SolveOptions no_check() {
    SolveOptions o;
    o.check_truncation = false;
    return o;
}

Eigen::VectorXd populations(const DensityMatrix& rho, const EigenSystem& eig) {
    const ComplexMatrix v = eig.vectors.cast<std::complex<double>>();
    return (v.adjoint() * rho.matrix() * v).diagonal().real();
}

CycleConfig small_config(double l1, double l2, int n_max) {
    CycleConfig cfg;
    cfg.hot = medium_at(2.0, 0.0, 0.0, l1, l2, n_max);
    cfg.cold = medium_at(1.0, 0.0, 0.0, l1, l2, n_max);
    cfg.solve = no_check();
    return cfg;
}

}  // namespace

TEST_CASE("inverse of x tanh x") {
    for (double x : {0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 30.0}) {
        CHECK_THAT(inverse_x_tanh_x(x * std::tanh(x)), WithinAbs(x, 1e-10 * std::max(1.0, x)));
    }
    CHECK_THROWS_AS(inverse_x_tanh_x(-1.0), ParameterError);
}

TEST_CASE("uncertainty-relation bound") {
    CHECK_THAT(tur_bound(2.0 * std::tanh(1.0)), WithinRel(0.72402, 1e-4));
    CHECK_THAT(tur_bound(2.0 * std::tanh(1.0)), WithinRel(1.0 / std::pow(std::sinh(1.0), 2), 1e-10));
    CHECK_THAT(tur_bound(std::tanh(0.5)), WithinRel(1.0 / std::pow(std::sinh(0.5), 2), 1e-10));
    CHECK_THAT(tur_bound(std::tanh(0.5)), WithinRel(3.6827, 1e-4));
    CHECK(tur_bound(100.0) < tur_bound(10.0));
    CHECK(tur_bound(100.0) < 1e-20);
    CHECK_THROWS_AS(tur_bound(0.0), ParameterError);
    CHECK_THROWS_AS(tur_bound(-1.0), ParameterError);
}

TEST_CASE("commuting ramp keeps populations") {
    const auto start = medium_at(2.0, 0.1, 0.0, 0.0, 0.0, 10);
    const auto end = medium_at(1.0, 0.1, 0.0, 0.0, 0.0, 10);
    const auto eh = solve(start, no_check());
    const auto rho = thermal_state(eh, 0.7);
    for (double tau : {0.01, 1.0, 37.0}) {
        const auto out = adiabatic_stroke(rho, start, end, tau);
        CHECK((out.matrix() - rho.matrix()).norm() < 1e-12);
    }
}

TEST_CASE("sudden quench") {
    const auto start = medium_at(2.0, 0.0, 0.3, 0.5, 0.5, 12);
    const auto end = medium_at(1.0, 0.0, 0.3, 0.5, 0.5, 12);
    const auto rho = thermal_state(solve(start, no_check()), 0.5);
    CHECK((adiabatic_stroke(rho, start, end, 1e-6).matrix() - rho.matrix()).cwiseAbs().maxCoeff() < 1e-6);
    // Magnus oracle for a linear ramp: U = exp(−iτ(H_h + H_c)/2 + (τ²/12)[H_h, H_c]) + O(τ³)
    const double tau = 1e-3;
    const Eigen::MatrixXd hh = build_hamiltonian(start), hc = build_hamiltonian(end);
    const std::complex<double> i1(0.0, 1.0);
    const ComplexMatrix omega = -i1 * tau * 0.5 * (hh + hc).cast<std::complex<double>>() +
                                (tau * tau / 12.0) * (hh * hc - hc * hh).cast<std::complex<double>>();
    const ComplexMatrix u = omega.exp();
    const ComplexMatrix ref = u * rho.matrix() * u.adjoint();
    CHECK((adiabatic_stroke(rho, start, end, tau).matrix() - ref).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("slow ramp follows the adiabatic theorem") {
    // detuned medium: level order and parities are the same at both ends
    const auto start = medium_at(2.0, 0.3, 0.0, 0.3, 0.1, 15);
    const auto end = medium_at(1.0, 0.3, 0.0, 0.3, 0.1, 15);
    const auto eh = solve(start, no_check());
    const auto ec = solve(end, no_check());
    for (std::size_t k = 0; k < 6; ++k) REQUIRE(eh.parities[k] == ec.parities[k]);
    const auto rho = thermal_state(eh, 0.5);
    const auto out = adiabatic_stroke(rho, start, end, 500.0);
    CHECK((populations(out, ec) - populations(rho, eh)).cwiseAbs().maxCoeff() < 1e-4);
    // unitary: spectrum of ρ preserved
    CHECK((out.eigenvalues() - rho.eigenvalues()).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(friction_work(out, quasistatic_map(rho, eh, ec), 10.0).value < 1e-6);
}

TEST_CASE("slow ramp through an opposite-parity crossing follows the parity branch") {
    const auto start = medium_at(2.0, 0.0, 0.0, 0.5, 0.5, 15);
    const auto end = medium_at(1.0, 0.0, 0.0, 0.5, 0.5, 15);
    const auto eh = solve(start, no_check());
    const auto ec = solve(end, no_check());
    REQUIRE(eh.parities[2] != ec.parities[2]);  // levels 2 and 3 swap
    const auto rho = thermal_state(eh, 0.5);
    const auto out = adiabatic_stroke(rho, start, end, 500.0);
    const auto match = detail::level_pairing(eh, ec, LevelPairing::parity_resolved);
    const Eigen::VectorXd before = populations(rho, eh), after = populations(out, ec);
    for (Eigen::Index n = 0; n < 8; ++n) CHECK_THAT(after(match[std::size_t(n)]), WithinAbs(before(n), 1e-4));
}

TEST_CASE("ramp endpoints must share couplings and detuning") {
    const auto start = medium_at(2.0, 0.0, 0.0, 0.5, 0.5, 5);
    auto end = medium_at(1.0, 0.0, 0.0, 0.5, 0.4, 5);
    const auto rho = DensityMatrix::maximally_mixed(start.dim());
    CHECK_THROWS_AS(adiabatic_stroke(rho, start, end, 1.0), ParameterError);
    end = medium_at(1.0, 0.2, 0.0, 0.5, 0.5, 5);
    CHECK_THROWS_AS(adiabatic_stroke(rho, start, end, 1.0), ParameterError);
    end = medium_at(1.0, 0.0, 0.0, 0.5, 0.5, 5);
    CHECK_THROWS_AS(adiabatic_stroke(rho, start, end, 0.0), ParameterError);
}

TEST_CASE("quasistatic map") {
    const auto hot = medium_at(2.0, 0.0, 0.0, 0.0, 0.0, 30);
    const auto cold = medium_at(1.0, 0.0, 0.0, 0.0, 0.0, 30);
    const auto eh = solve(hot, no_check());
    const auto ec = solve(cold, no_check());
    // harmonic rescaling: Gibbs(H_h, T) → Gibbs(H_c, T/2)
    const auto mapped = quasistatic_map(thermal_state(eh, 0.8), eh, ec);
    CHECK(trace_distance(mapped, thermal_state(ec, 0.4)) < 1e-12);

    // same basis: dephasing
    const auto mid = medium_at(1.0, 0.0, 0.1, 0.3, 0.2, 4);
    const auto em = solve(mid, no_check());
    ComplexMatrix r = ComplexMatrix::Constant(mid.dim(), mid.dim(), {0.01, 0.0});
    r.diagonal().setConstant(1.0 / double(mid.dim()));
    const DensityMatrix rho(r);
    const auto deph = quasistatic_map(rho, em, em);
    const ComplexMatrix d = em.vectors.transpose().cast<std::complex<double>>() * deph.matrix() * em.vectors.cast<std::complex<double>>();
    CHECK((d - ComplexMatrix(d.diagonal().asDiagonal())).norm() < 1e-14);
    CHECK((d.diagonal().real() - populations(rho, em)).norm() < 1e-14);

    // round trip of a diagonal state
    Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(hot.dim(), 1.0, 2.0);
    w /= w.sum();
    const auto diag = DensityMatrix::from_spectral(eh.vectors, w);
    const auto back = quasistatic_map(quasistatic_map(diag, eh, ec), ec, eh);
    CHECK(trace_distance(back, diag) < 1e-13);
    CHECK(friction_work(diag, diag, 2.0).value < 1e-12);
}

TEST_CASE("cycle without thermal contact exchanges no heat") {
    auto cfg = small_config(0.3, 0.1, 8);
    cfg.tau_adiabatic = 5.0;
    cfg.tau_thermal = 0.0;
    const OttoEngine engine(cfg);
    const auto res = engine.run_cycle(engine.hot_gibbs());
    CHECK(res.record.q_hot == 0.0);
    CHECK(res.record.q_cold == 0.0);
    CHECK(res.record.work == 0.0);
    CHECK(res.record.regime == Regime::boundary);
    CHECK((res.states.heated.matrix() - res.states.compressed.matrix()).norm() == 0.0);
}

TEST_CASE("finite cycle bookkeeping") {
    auto cfg = small_config(0.4, 0.2, 10);
    cfg.tau_adiabatic = 5.0;
    cfg.tau_thermal = 300.0;
    cfg.dt_dissipative = 0.1;
    const OttoEngine engine(cfg);
    std::vector<CycleSample> samples;
    const auto res = engine.run_cycle(engine.hot_gibbs(), [&](const CycleSample& s) { samples.push_back(s); }, 100);
    const auto& r = res.record;
    CHECK_THAT(r.work, WithinAbs(r.q_hot + r.q_cold, 1e-15));
    CHECK_THAT(r.power, WithinAbs(r.work / (2 * 5.0 + 2 * 300.0), 1e-15));
    CHECK(r.entropy_production >= -1e-9);
    CHECK(r.friction_work_expansion >= 0.0);
    CHECK(r.friction_work_compression >= 0.0);
    if (r.efficiency) {
        const double carnot = 1.0 - cfg.t_cold / cfg.t_hot;
        CHECK_THAT(*r.efficiency, WithinAbs(carnot - r.entropy_production / ((1 / cfg.t_cold) * r.q_hot), 1e-9));
    }
    REQUIRE_FALSE(samples.empty());
    CHECK(samples.front().stage == Stage::expansion);
    CHECK(samples.back().stage == Stage::hot_isochore);
    CHECK_THAT(samples.back().t, WithinAbs(2 * 5.0 + 2 * 300.0, 1e-9));
    bool saw_power = false;
    for (const auto& s : samples) {
        if (s.stage == Stage::cold_isochore || s.stage == Stage::hot_isochore) CHECK(s.power == 0.0);
        else saw_power = saw_power || s.power != 0.0;
    }
    CHECK(saw_power);
}

TEST_CASE("equal bath temperatures give Sigma = -beta W") {
    auto cfg = small_config(0.4, 0.2, 8);
    cfg.t_hot = cfg.t_cold = 0.3;
    cfg.tau_adiabatic = 2.0;
    cfg.tau_thermal = 200.0;
    cfg.dt_dissipative = 0.1;
    cfg.max_cycles = 20;
    const auto lc = OttoEngine(cfg).find_limit_cycle();
    CHECK_THAT(lc.last.record.entropy_production, WithinAbs(-lc.last.record.work / 0.3, 1e-12));
    CHECK(lc.last.record.entropy_production >= -1e-9);
}

TEST_CASE("limit cycle is independent of the initial state") {
    auto cfg = small_config(0.5, 0.5, 10);
    cfg.tau_adiabatic = 5.0;
    cfg.tau_thermal = 2000.0;
    cfg.dt_dissipative = 0.5;
    cfg.limit_cycle_tolerance = 1e-10;
    const OttoEngine engine(cfg);
    const auto a = engine.find_limit_cycle();
    const auto b = engine.find_limit_cycle(DensityMatrix::maximally_mixed(cfg.hot.dim()));
    REQUIRE(a.converged);
    REQUIRE(b.converged);
    CHECK_THAT(a.last.record.work, WithinAbs(b.last.record.work, 1e-5));
    CHECK_THAT(a.last.record.q_hot, WithinAbs(b.last.record.q_hot, 1e-5));
    CHECK(a.fidelity_trace.size() == std::size_t(a.last.record.cycles_to_limit));
}

TEST_CASE("slow cycle approaches the ideal cycle") {
    auto cfg = small_config(0.3, 0.1, 12);
    cfg.hot.delta += 0.3;
    cfg.cold.delta += 0.3;
    cfg.tau_adiabatic = 200.0;
    cfg.tau_thermal = 6000.0;
    cfg.dt_dissipative = 0.5;
    const OttoEngine engine(cfg);
    const auto lc = engine.find_limit_cycle();
    const auto ideal = ideal_cycle_from_spectra(engine.hot_spectrum(), engine.cold_spectrum(), 2.0, 1.0, 0.5, 0.1);
    CHECK_THAT(lc.last.record.work, WithinRel(ideal.work, 0.01));
    CHECK_THAT(lc.last.record.entropy_production, WithinRel(-ideal.q_hot / 0.5 - ideal.q_cold / 0.1, 0.01));
    CHECK(lc.last.record.friction_work_expansion < 1e-5);
}

TEST_CASE("slow cycle through a parity crossing approaches the parity-resolved ideal cycle") {
    auto cfg = small_config(0.5, 0.2, 12);
    cfg.tau_adiabatic = 200.0;
    cfg.tau_thermal = 6000.0;
    cfg.dt_dissipative = 0.5;
    const OttoEngine engine(cfg);
    const auto lc = engine.find_limit_cycle();
    const auto ideal = ideal_cycle_from_spectra(engine.hot_spectrum(), engine.cold_spectrum(), 2.0, 1.0, 0.5, 0.1,
                                                LevelPairing::parity_resolved);
    CHECK_THAT(lc.last.record.work, WithinRel(ideal.work, 0.01));
}

TEST_CASE("cycle configuration validation") {
    auto cfg = small_config(0.1, 0.1, 4);
    cfg.t_hot = 0.05;
    CHECK_THROWS_AS(OttoEngine(cfg), ParameterError);
    cfg = small_config(0.1, 0.1, 4);
    cfg.cold.lambda1 = 0.2;
    CHECK_THROWS_AS(OttoEngine(cfg), ParameterError);
    cfg = small_config(0.1, 0.1, 4);
    cfg.cold.delta = 1.5;
    CHECK_THROWS_AS(OttoEngine(cfg), ParameterError);
    cfg = small_config(0.1, 0.1, 4);
    cfg.tau_thermal = -1;
    CHECK_THROWS_AS(OttoEngine(cfg), ParameterError);
}
