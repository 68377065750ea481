#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "rotorkick/basis.hpp"
#include "oracle.hpp"

using namespace rotorkick;
using Catch::Matchers::WithinAbs;

TEST_CASE("cos^2 matrix elements, pinned values") {
    REQUIRE_THAT(cos2_element(0, 0, 0), WithinAbs(1.0 / 3.0, 1e-15));
    REQUIRE_THAT(cos2_element(2, 2, 0), WithinAbs(11.0 / 21.0, 1e-15));
    REQUIRE_THAT(cos2_element(0, 2, 0), WithinAbs(2.0 / (3.0 * std::sqrt(5.0)), 1e-15));
    REQUIRE(cos2_element(0, 4, 0) == 0.0);
    REQUIRE(cos2_element(4, 2, 2) == cos2_element(2, 4, 2));
    REQUIRE_THROWS_AS(cos2_element(1, 1, 2), DomainError);
}

TEST_CASE("cos^2 matrix elements match quadrature") {
    std::mt19937 rng(12345);
    std::uniform_int_distribution<int> jdist(0, 60);
    std::uniform_int_distribution<int> ddist(0, 2); // covers the off-band zero case too
    for (int trial = 0; trial < 200; ++trial) {
        const int J = jdist(rng);
        const int Jp = J + 2 * ddist(rng);
        std::uniform_int_distribution<int> mdist(-std::min(J, Jp), std::min(J, Jp));
        const int M = mdist(rng);
        INFO("J=" << J << " J'=" << Jp << " M=" << M);
        REQUIRE_THAT(cos2_element(J, Jp, M), WithinAbs(oracle::quad_cos2(J, Jp, M), 1e-12));
    }
}

TEST_CASE("normalised Legendre functions are orthonormal") {
    const auto q = gauss_legendre(80);
    for (int M : {0, 1, 3}) {
        for (int J = std::abs(M); J <= std::abs(M) + 6; ++J) {
            for (int Jp = J; Jp <= std::abs(M) + 6; ++Jp) {
                double acc = 0.0;
                for (std::size_t i = 0; i < q.x.size(); ++i) {
                    const auto th = normalised_legendre(Jp, M, q.x[i]);
                    acc += q.w[i] * th[static_cast<std::size_t>(J - std::abs(M))] *
                           th[static_cast<std::size_t>(Jp - std::abs(M))];
                }
                REQUIRE_THAT(acc, WithinAbs(J == Jp ? 1.0 : 0.0, 1e-13));
            }
        }
    }
}

TEST_CASE("basis windows") {
    SECTION("even M=0") {
        const auto w = make_window(0, Parity::even, 10);
        REQUIRE(w.j_min == 0);
        REQUIRE(w.j_max == 10);
        REQUIRE(w.size() == 6);
        REQUIRE(w.j_of(3) == 6);
        REQUIRE(w.index_of(6) == 3);
        REQUIRE(w.index_of(5) == -1);
        REQUIRE(w.index_of(12) == -1);
    }

    SECTION("odd parity starts above |M|") {
        const auto w = make_window(2, Parity::odd, 11);
        REQUIRE(w.j_min == 3);
        REQUIRE(w.j_max == 11);
        REQUIRE(w.size() == 5);
    }

    SECTION("off-grid j_max snaps down") {
        const auto w = make_window(0, Parity::even, 11);
        REQUIRE(w.j_max == 10);
    }

    SECTION("too small is rejected") {
        REQUIRE_THROWS_AS(make_window(0, Parity::even, 2), DomainError);
    }
}

TEST_CASE("angular matrix against element function") {
    const auto w = make_window(1, Parity::odd, 21);
    const auto A = build_cos2_matrix(w);
    REQUIRE(A.diag.size() == w.size());
    REQUIRE(A.off.size() == w.size() - 1);
    for (int k = 0; k < w.size(); ++k) {
        const int J = w.j_of(k);
        REQUIRE_THAT(A.diag(k), WithinAbs(oracle::quad_cos2(J, J, 1), 1e-12));
        if (k + 1 < w.size())
            REQUIRE_THAT(A.off(k), WithinAbs(oracle::quad_cos2(J, J + 2, 1), 1e-12));
    }
    const auto D = A.dense();
    REQUIRE(D.rows() == w.size());
    REQUIRE(D.isApprox(D.transpose()));
}

TEST_CASE("wavefunction bookkeeping") {
    const auto w = make_window(0, Parity::even, 20);
    auto psi = basis_state(w, 4);
    REQUIRE_THAT(psi.norm(), WithinAbs(1.0, 1e-15));
    REQUIRE(psi.c(w.index_of(4)) == dcmplx(1.0, 0.0));
    REQUIRE(psi.tail_fraction() == 0.0);
    REQUIRE_THROWS_AS(basis_state(w, 3), DomainError);
    REQUIRE_THROWS_AS(basis_state(w, 22), DomainError);

    SECTION("tail fraction sees the top decile") {
        psi.c.setZero();
        psi.c(w.size() - 1) = 0.5;
        psi.c(0) = std::sqrt(0.75);
        REQUIRE_THAT(psi.tail_fraction(), WithinAbs(0.25, 1e-15));
    }

    SECTION("growth pads with zeros and keeps amplitudes") {
        const auto big = grow_window(psi, 40);
        REQUIRE(big.window.j_max == 40);
        REQUIRE(big.window.j_min == 0);
        REQUIRE(big.c.size() == 21);
        REQUIRE(big.c(2) == psi.c(2));
        REQUIRE_THAT(big.norm(), WithinAbs(psi.norm(), 1e-15));
        REQUIRE(grow_window(psi, 10).window == psi.window);
    }
}
