#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "hbac/core.hpp"
#include "hbac/states.hpp"

using namespace hbac;

TEST_CASE("thermal polarization of a proton at 7 T and room temperature") {
    const ThermalSpec spec{constants::gamma_1h, 7.0, 300.0};
    const double eps = thermal_polarization(spec);
    // Frozen from an extended-precision evaluation of tanh(hbar g B / 2 kB T).
    CHECK(eps == Catch::Approx(2.3839628014322576e-05).epsilon(1e-12));
    CHECK(eps < 1e-4);
    CHECK(eps > 1e-5);
}

TEST_CASE("thermal polarization vanishes at high temperature") {
    const ThermalSpec spec{constants::gamma_1h, 7.0, 1e12};
    CHECK(thermal_polarization(spec) == Catch::Approx(0.0).margin(1e-13));
}

TEST_CASE("temperature reaching 0.41 polarization for 1H at 7 T") {
    const double t41 = temperature_for_polarization(constants::gamma_1h, 7.0, 0.41);
    CHECK(t41 == Catch::Approx(16.4e-3).margin(0.5e-3));
    const double t_thr = temperature_for_polarization(constants::gamma_1h, 7.0,
                                                      std::sqrt(2.0) - 1.0);
    CHECK(t_thr < 17e-3);
    // Round trip.
    CHECK(thermal_polarization({constants::gamma_1h, 7.0, t41}) ==
          Catch::Approx(0.41).epsilon(1e-12));
}

TEST_CASE("thermal polarization is monotone in field and temperature") {
    double prev = 0.0;
    for (double b0 : {0.5, 1.0, 3.0, 7.0, 14.0}) {
        const double eps = thermal_polarization({constants::gamma_1h, b0, 1.0});
        CHECK(eps > prev);
        CHECK(eps > 0.0);
        CHECK(eps < 1.0);
        prev = eps;
    }
    prev = 1.0;
    for (double t : {0.001, 0.01, 0.1, 1.0, 10.0}) {
        const double eps = thermal_polarization({constants::gamma_1h, 7.0, t});
        CHECK(eps < prev);
        prev = eps;
    }
}

TEST_CASE("thermal polarization rejects non-positive temperature") {
    CHECK_THROWS_AS(thermal_polarization({constants::gamma_1h, 7.0, 0.0}),
                    std::domain_error);
    CHECK_THROWS_AS(thermal_polarization({constants::gamma_1h, 7.0, -1.0}),
                    std::domain_error);
}

TEST_CASE("pseudo-pure purity basics") {
    CHECK(pseudo_pure_purity(Polarization(0.0), 5) == 0.0);
    CHECK(pseudo_pure_purity(Polarization(0.3), 1) == Catch::Approx(0.3).epsilon(1e-15));
    for (int n : {1, 2, 7, 20})
        CHECK(pseudo_pure_purity(Polarization(1.0), n) == Catch::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(pseudo_pure_purity(Polarization(0.1), 0), std::domain_error);
}

TEST_CASE("pseudo-pure purity survives catastrophic cancellation") {
    // Oracle: direct evaluation in extended precision.
    const long double eps = 1e-5L;
    const long double direct =
        (std::pow(1.0L + eps, 12.0L) - 1.0L) / (std::pow(2.0L, 12.0L) - 1.0L);
    const double alpha = pseudo_pure_purity(Polarization(1e-5), 12);
    CHECK(alpha == Catch::Approx(static_cast<double>(direct)).epsilon(1e-13));
    CHECK(alpha == Catch::Approx(2.9305641079366288e-08).epsilon(1e-12));
}

TEST_CASE("pseudo-pure purity is monotone in polarization") {
    double prev = -1.0;
    for (double e : {0.0, 1e-6, 1e-3, 0.1, 0.5, 0.9, 1.0}) {
        const double a = pseudo_pure_purity(Polarization(e), 5);
        CHECK(a > prev);
        prev = a;
    }
}

TEST_CASE("qec ancilla threshold") {
    CHECK(qec_ancilla_threshold(Polarization(0.42), Polarization(0.42)));
    CHECK(qec_ancilla_threshold(Polarization(1.0), Polarization(1.0)));
    CHECK_FALSE(qec_ancilla_threshold(Polarization(1.0), Polarization(0.0)));
    CHECK_FALSE(qec_ancilla_threshold(Polarization(0.41), Polarization(0.41)));
    const double thr = std::sqrt(2.0) - 1.0;
    CHECK(qec_ancilla_threshold(Polarization(thr + 1e-12), Polarization(thr + 1e-12)));
    CHECK_FALSE(qec_ancilla_threshold(Polarization(thr - 1e-12), Polarization(thr - 1e-12)));
}

TEST_CASE("polarization range is enforced") {
    CHECK_THROWS_AS(Polarization(1.5), std::domain_error);
    CHECK_THROWS_AS(Polarization(-1.01), std::domain_error);
    CHECK_THROWS_AS(Polarization(std::nan("")), std::domain_error);
}

TEST_CASE("qubit polarization of the maximally mixed state is zero") {
    const auto state = DiagonalState::maximally_mixed(16);
    for (int q = 0; q < 4; ++q)
        CHECK(state.qubit_polarization(q) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("qubit polarization reads the refreshed reset qubit") {
    const double eb = 0.17;
    std::vector<double> probs(8);
    for (int i = 0; i < 8; ++i) probs[i] = (i % 2 == 0 ? 1.0 + eb : 1.0 - eb) / 8.0;
    const DiagonalState state(probs);
    CHECK(state.qubit_polarization(2) == Catch::Approx(eb).epsilon(1e-13));
    CHECK(state.qubit_polarization(0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(state.qubit_polarization(1) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("qubit polarization of the sorted third-iteration state") {
    const double eb = 0.12;
    const double p = 1.0 + eb, q = 1.0 - eb;
    const DiagonalState state({p * p * p / 8, p * p * q / 8, p * p * q / 8,
                               p * p * q / 8, p * q * q / 8, p * q * q / 8,
                               p * q * q / 8, q * q * q / 8});
    CHECK(state.qubit_polarization(0) ==
          Catch::Approx(1.5 * eb - 0.5 * eb * eb * eb).epsilon(1e-13));
}

TEST_CASE("qubit polarization of product states equals each factor's own") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> uni(-0.9, 0.9);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> pols(4);
        for (auto& p : pols) p = uni(rng);
        const auto state = DiagonalState::product(pols);
        for (int q = 0; q < 4; ++q)
            CHECK(state.qubit_polarization(q) == Catch::Approx(pols[q]).margin(1e-12));
        const auto rho = DensityMatrix::from_diagonal(state);
        for (int q = 0; q < 4; ++q)
            CHECK(rho.qubit_polarization(q) == Catch::Approx(pols[q]).margin(1e-12));
    }
}

TEST_CASE("density matrix round-trips a diagonal state exactly") {
    const DiagonalState diag({0.4, 0.1, 0.25, 0.25});
    const auto rho = DensityMatrix::from_diagonal(diag);
    const auto back = rho.diagonal();
    for (int i = 0; i < 4; ++i) CHECK(back.probs()[i] == diag.probs()[i]);
}

TEST_CASE("state invariants are enforced") {
    CHECK_THROWS_AS(DiagonalState({0.5, 0.6}), std::invalid_argument);
    CHECK_THROWS_AS(DiagonalState({1.1, -0.1}), std::invalid_argument);
    Eigen::MatrixXcd bad(2, 2);
    bad << 0.5, std::complex<double>(0, 0.3), 0.0, 0.5;
    CHECK_THROWS_AS(DensityMatrix(bad), std::invalid_argument);
    Eigen::MatrixXcd bad_trace = Eigen::MatrixXcd::Identity(2, 2);
    CHECK_THROWS_AS(DensityMatrix(bad_trace), std::invalid_argument);
    CHECK_THROWS_AS(DiagonalState::maximally_mixed(8).qubit_polarization(3),
                    std::out_of_range);
}

TEST_CASE("system shape constraints") {
    const auto s = SystemShape::qubits(2, 1);
    CHECK(s.d == 4);
    CHECK(s.comp_dim() == 8);
    CHECK(s.total_dim() == 16);
    CHECK(s.total_qubits() == 4);
    CHECK(s.qubit_realized());
    const auto qd = SystemShape::qudit(3, 2);
    CHECK_FALSE(qd.qubit_realized());
    CHECK(qd.comp_dim() == 6);
    CHECK(qd.total_dim() == 24);
    CHECK_THROWS_AS(SystemShape::qubits(-1, 1), std::invalid_argument);
    CHECK_THROWS_AS(SystemShape::qubits(1, 0), std::invalid_argument);
}
