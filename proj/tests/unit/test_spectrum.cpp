#include <catch_amalgamated.hpp>

#include <vector>

#include "qotto/spectrum.hpp"

using namespace qotto;
using Catch::Matchers::WithinAbs;

TEST_CASE("eigenpairs satisfy the eigen equation and carry correct parity labels") {
    const SystemParams p{1.0, 1.0, 0.3, 1.1, 0.4, 40};
    const auto h = build_hamiltonian(p);
    const auto pi = parity_operator(p.n_max);
    const EigenSystem eig = solve(p);
    REQUIRE(eig.dim() == p.dim());
    CHECK(eig.unresolved_parities == 0);
    const double hn = h.norm();
    for (Eigen::Index k = 0; k < eig.dim(); ++k) {
        const Eigen::VectorXd v = eig.vectors.col(k);
        CHECK((h * v - eig.energies(k) * v).norm() < 1e-9 * hn);
        CHECK_THAT(v.dot(pi * v), WithinAbs(eig.parities[std::size_t(k)], 1e-12));
        if (k > 0) CHECK(eig.energies(k) >= eig.energies(k - 1));
    }
    CHECK((eig.vectors.transpose() * eig.vectors - Eigen::MatrixXd::Identity(p.dim(), p.dim())).norm() < 1e-10);
}

TEST_CASE("full and sector diagonalization agree") {
    const SystemParams p{1.0, 1.0, -0.4, 0.6, 0.9, 20};
    const auto h = build_hamiltonian(p);
    const auto pi = parity_operator(p.n_max);
    const auto a = diagonalize(h, pi);
    const auto b = diagonalize(h, pi, DiagonalizeMethod::full);
    CHECK((a.energies - b.energies).cwiseAbs().maxCoeff() < 1e-10);
    for (std::size_t k = 0; k < 10; ++k) CHECK(a.parities[k] == b.parities[k]);
}

TEST_CASE("full diagonalization resolves parity inside degenerate clusters") {
    // λ = U = 0 with Δ = ω: |g, n+1> and |e, n> are degenerate with opposite parity.
    const SystemParams p{1.0, 1.0, 0.0, 0.0, 0.0, 8};
    const auto eig = diagonalize(build_hamiltonian(p), parity_operator(p.n_max), DiagonalizeMethod::full);
    CHECK(eig.unresolved_parities == 0);
}

TEST_CASE("decoupled spectrum is n*omega +- delta/2") {
    const SystemParams p{1.0, 0.37, 0.0, 0.0, 0.0, 10};
    const auto eig = solve(p, {.check_truncation = false});
    std::vector<double> expected;
    for (int n = 0; n <= p.n_max; ++n) {
        expected.push_back(n - 0.185);
        expected.push_back(n + 0.185);
    }
    std::sort(expected.begin(), expected.end());
    for (std::size_t k = 0; k < expected.size(); ++k) CHECK_THAT(eig.energies(Eigen::Index(k)), WithinAbs(expected[k], 1e-13));
}

TEST_CASE("spectrum is even in the sign of the couplings") {
    // σz conjugation maps (λ1, λ2) → (−λ1, −λ2).
    const SystemParams p{1.0, 1.0, 0.2, 0.9, 0.5, 30};
    SystemParams q = p;
    q.lambda1 = -p.lambda1;
    q.lambda2 = -p.lambda2;
    CHECK((solve(p).energies - solve(q).energies).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("n_max = 40 agrees with an n_max = 80 oracle") {
    for (const SystemParams p : {SystemParams{1.0, 1.0, 0.0, 1.0, 0.5, 40},
                                 SystemParams{1.0, 1.0, 0.6, 0.7, 0.7, 40},
                                 SystemParams{2.0, 2.0, -0.5, 1.4, 0.2, 40}}) {
        SystemParams big = p;
        big.n_max = 80;
        const auto small = solve(p);
        const auto ref = solve(big, {.check_truncation = false});
        CHECK((small.energies.head(12) - ref.energies.head(12)).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("unconverged truncation is reported") {
    const SystemParams p{1.0, 1.0, 0.0, 3.0, 3.0, 15};
    CHECK_THROWS_AS(solve(p), TruncationError);
    try {
        solve(p);
    } catch (const TruncationError& e) {
        CHECK(e.shift() > 1e-8);
        CHECK(std::string(e.what()).find("n_max=15") != std::string::npos);
    }
}

TEST_CASE("first-order critical coupling") {
    CHECK_THAT(*first_order_critical_coupling(1.0, 0.0, 0.0), WithinAbs(1.0, 1e-15));
    CHECK_THAT(*first_order_critical_coupling(1.0, 0.6, 0.0), WithinAbs(std::sqrt(0.64 / 1.6), 1e-15));
    CHECK_THAT(*first_order_critical_coupling(1.0, 0.0, 0.5), WithinAbs(std::sqrt(1.0 / 0.75), 1e-15));
    CHECK_FALSE(first_order_critical_coupling(1.0, 0.0, 1.0).has_value());
    CHECK_FALSE(first_order_critical_coupling(1.0, -0.9, 0.5).has_value());
    CHECK_THROWS_AS(first_order_critical_coupling(0.0, 0.0, 0.0), ParameterError);
}

TEST_CASE("continuous critical coupling") {
    auto m = continuous_critical_coupling(1.0, 1.0, -1);
    REQUIRE(m);
    CHECK_THAT(m->coupling_value, WithinAbs(1.0, 1e-15));
    CHECK_THAT(*m->collapse_energy, WithinAbs(0.5 - 2.0, 1e-15));
    auto p = continuous_critical_coupling(1.0, 1.0, 1);
    REQUIRE(p);
    CHECK(p->coupling_value == 0.0);
    CHECK_THAT(continuous_critical_coupling(0.5, 0.0, -1)->coupling_value, WithinAbs(0.5, 1e-15));
    CHECK_FALSE(continuous_critical_coupling(3.0, 1.0, 1).has_value());
    CHECK_THROWS_AS(continuous_critical_coupling(1.0, 0.0, 0), ParameterError);
}

TEST_CASE("spectrum scan flags the first-order crossing") {
    std::vector<double> grid;
    for (int i = 0; i <= 100; ++i) grid.push_back(0.5 + 0.01 * i);
    SystemParams base;
    base.n_max = 30;
    SpectrumScanOptions opts;
    opts.ratio = 0.0;
    const auto rows = spectrum_scan(base, ScanAxis::lambda1, grid, 6, opts);
    const auto flips = ground_parity_flips(rows);
    REQUIRE_FALSE(flips.empty());
    CHECK_THAT(flips.front(), WithinAbs(1.0, 0.01 + 1e-12));
    CHECK(rows.front().parities.front() == 1);
    bool flagged = false;
    for (const auto& r : rows)
        if (std::abs(r.axis_value - flips.front()) < 1e-12) flagged = r.crossing[0];
    CHECK(flagged);
    CHECK(rows.front().relative_energies(0) == 0.0);
}

TEST_CASE("spectrum scan with Stark coupling crosses at the analytic point") {
    std::vector<double> grid;
    for (int i = 0; i <= 80; ++i) grid.push_back(0.3 + 0.005 * i);
    SystemParams base;
    base.u = 0.6;
    SpectrumScanOptions opts;
    opts.ratio = 0.0;
    const auto flips = ground_parity_flips(spectrum_scan(base, ScanAxis::lambda1, grid, 2, opts));
    REQUIRE_FALSE(flips.empty());
    CHECK_THAT(flips.front(), WithinAbs(*first_order_critical_coupling(1.0, 0.6, 0.0), 0.005 + 1e-12));
}

TEST_CASE("parallel and serial scans are identical") {
    std::vector<double> grid{0.0, 0.2, 0.4, 0.6, 0.8};
    SystemParams base;
    base.n_max = 20;
    base.lambda2 = 0.3;
    SpectrumScanOptions serial, par;
    par.workers = 3;
    const auto a = spectrum_scan(base, ScanAxis::u, grid, 4, serial);
    const auto b = spectrum_scan(base, ScanAxis::u, grid, 4, par);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].relative_energies == b[i].relative_energies);
        CHECK(a[i].parities == b[i].parities);
    }
}

TEST_CASE("scan input validation") {
    std::vector<double> grid{0.2, 0.1};
    CHECK_THROWS_AS(spectrum_scan(SystemParams{}, ScanAxis::lambda1, grid, 2), ParameterError);
    std::vector<double> ok{0.1};
    CHECK_THROWS_AS(spectrum_scan(SystemParams{}, ScanAxis::lambda1, ok, 0), ParameterError);
}
