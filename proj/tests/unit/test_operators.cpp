#include <catch_amalgamated.hpp>

#include <unsupported/Eigen/KroneckerProduct>

#include "qotto/operators.hpp"

using namespace qotto;
using Catch::Matchers::WithinAbs;

namespace {

// Independent construction from 2x2 qubit and (n_max+1)-dim boson factors, qubit ⊗ boson.
Eigen::MatrixXd kron_hamiltonian(const SystemParams& p) {
    const int nf = p.n_max + 1;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(nf, nf);
    for (int n = 1; n < nf; ++n) a(n - 1, n) = std::sqrt(double(n));
    const Eigen::MatrixXd ad = a.transpose();
    const Eigen::MatrixXd num = ad * a;
    const Eigen::MatrixXd id_b = Eigen::MatrixXd::Identity(nf, nf);
    Eigen::Matrix2d sz, sp, sm, id_q;
    sz << -1, 0, 0, 1;  // order (g, e)
    sp << 0, 0, 1, 0;   // |e><g|
    sm = sp.transpose();
    id_q.setIdentity();
    using Eigen::kroneckerProduct;
    return p.omega * Eigen::MatrixXd(kroneckerProduct(id_q, num)) +
           0.5 * p.delta * Eigen::MatrixXd(kroneckerProduct(sz, id_b)) +
           p.u * p.omega * Eigen::MatrixXd(kroneckerProduct(sz, num)) +
           p.lambda1 * Eigen::MatrixXd(kroneckerProduct(sp, a) + kroneckerProduct(sm, ad)) +
           p.lambda2 * Eigen::MatrixXd(kroneckerProduct(sp, ad) + kroneckerProduct(sm, a));
}

}  // namespace

TEST_CASE("hamiltonian matches Kronecker-product construction element-wise") {
    for (const SystemParams p : {SystemParams{1.0, 1.0, 0.0, 0.7, 0.2, 12},
                                 SystemParams{2.0, 2.3, -0.6, 1.4, 0.9, 9},
                                 SystemParams{0.5, 0.1, 0.95, 0.0, 2.0, 6}}) {
        const auto h = build_hamiltonian(p);
        const auto ref = kron_hamiltonian(p);
        REQUIRE(h.rows() == p.dim());
        CHECK((h - ref).cwiseAbs().maxCoeff() < 1e-14);
        CHECK(hermiticity_error(h) == 0.0);
    }
}

TEST_CASE("parity operator commutes with the hamiltonian") {
    const SystemParams p{1.0, 1.0, 0.4, 0.8, 0.3, 15};
    const auto h = build_hamiltonian(p);
    const auto pi = parity_operator(p.n_max);
    CHECK((h * pi - pi * h).norm() < 1e-13);
    CHECK(pi(basis_index(Qubit::ground, 0, 15), basis_index(Qubit::ground, 0, 15)) == 1.0);
    CHECK(pi(basis_index(Qubit::excited, 0, 15), basis_index(Qubit::excited, 0, 15)) == -1.0);
    CHECK(pi(basis_index(Qubit::ground, 3, 15), basis_index(Qubit::ground, 3, 15)) == -1.0);
    CHECK(pi(basis_index(Qubit::excited, 3, 15), basis_index(Qubit::excited, 3, 15)) == 1.0);
}

TEST_CASE("Jaynes-Cummings vacuum |g,0> is an eigenstate at -delta/2") {
    const SystemParams p{1.0, 1.0, 0.0, 0.3, 0.0, 10};
    const auto h = build_hamiltonian(p);
    Eigen::VectorXd g0 = Eigen::VectorXd::Zero(p.dim());
    g0(basis_index(Qubit::ground, 0, p.n_max)) = 1.0;
    CHECK((h * g0 + 0.5 * p.delta * g0).norm() < 1e-15);
}

TEST_CASE("parameter validation") {
    SystemParams p;
    p.n_max = 0;
    CHECK_THROWS_AS(build_hamiltonian(p), ParameterError);
    p = {};
    p.u = 0.995;
    CHECK_THROWS_AS(build_hamiltonian(p), SpectralCollapseError);
    p = {};
    p.omega = -1.0;
    CHECK_THROWS_AS(build_hamiltonian(p), ParameterError);
    CHECK_THROWS_AS(parity_operator(0), ParameterError);
}

TEST_CASE("coupling operators") {
    const int n_max = 5;
    const auto xa = coupling_operator(CouplingKind::boson, n_max);
    const auto xs = coupling_operator(CouplingKind::qubit, n_max);
    CHECK(hermiticity_error(xa) == 0.0);
    CHECK(hermiticity_error(xs) == 0.0);
    const auto g2 = basis_index(Qubit::ground, 2, n_max);
    const auto g3 = basis_index(Qubit::ground, 3, n_max);
    const auto e2 = basis_index(Qubit::excited, 2, n_max);
    CHECK_THAT(xa(g2, g3), WithinAbs(std::sqrt(3.0), 1e-15));
    CHECK(xa(g2, e2) == 0.0);
    CHECK(xs(g2, e2) == 1.0);
    CHECK(xs(g2, g3) == 0.0);
    // both flip parity
    const auto pi = parity_operator(n_max);
    CHECK((pi * xa + xa * pi).norm() == 0.0);
    CHECK((pi * xs + xs * pi).norm() == 0.0);
}
