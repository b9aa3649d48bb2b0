#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "hbac/cooling_limits.hpp"
#include "hbac/ppa.hpp"

using namespace hbac;
using hbac::ppa::PpaConfig;

namespace {

PpaConfig config3(double eb) {
    PpaConfig c;
    c.shape = SystemShape::qubits(1, 1);
    c.bath_polarization = Polarization(eb);
    return c;
}

// First-round vectors of the 3-qubit PPA, written out symbolically in
// p = 1 + eps_b, q = 1 - eps_b. Frozen against the worked example.
std::vector<double> refreshed_mixed(double eb) {
    std::vector<double> v(8);
    for (int i = 0; i < 8; ++i) v[i] = (i % 2 == 0 ? 1.0 + eb : 1.0 - eb) / 8.0;
    return v;
}

std::vector<double> iter2_refreshed(double eb) {
    const double p = 1.0 + eb, q = 1.0 - eb, pq = 1.0 - eb * eb;
    return {p * p / 8, pq / 8, p * p / 8, pq / 8, pq / 8, q * q / 8, pq / 8, q * q / 8};
}

std::vector<double> iter3_refreshed(double eb) {
    const double p = 1.0 + eb, q = 1.0 - eb;
    return {p * p * p / 8, p * p * q / 8, p * p * q / 8, p * q * q / 8,
            p * p * q / 8, p * q * q / 8, p * q * q / 8, q * q * q / 8};
}

DiagonalState random_state(std::mt19937_64& rng, std::int64_t dim) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<double> v(dim);
    double sum = 0.0;
    for (auto& x : v) {
        x = uni(rng);
        sum += x;
    }
    for (auto& x : v) x /= sum;
    return DiagonalState(v);
}

}  // namespace

TEST_CASE("refresh of the maximally mixed 3-qubit register") {
    const double eb = 0.23;
    const auto out = ppa::refresh(DiagonalState::maximally_mixed(8), config3(eb));
    const auto expected = refreshed_mixed(eb);
    for (int i = 0; i < 8; ++i)
        CHECK(out.probs()[i] == Catch::Approx(expected[i]).margin(1e-15));
}

TEST_CASE("refresh with zero bath polarization leaves the mixed state alone") {
    const auto out = ppa::refresh(DiagonalState::maximally_mixed(8), config3(0.0));
    for (int i = 0; i < 8; ++i)
        CHECK(out.probs()[i] == Catch::Approx(0.125).margin(1e-15));
}

TEST_CASE("refresh maps the sorted second-iteration state to the third") {
    const double eb = 0.2;
    const double p = 1.0 + eb, q = 1.0 - eb, pq = 1.0 - eb * eb;
    const DiagonalState sorted2(
        {p * p / 8, p * p / 8, pq / 8, pq / 8, pq / 8, pq / 8, q * q / 8, q * q / 8});
    const auto out = ppa::refresh(sorted2, config3(eb));
    const auto expected = iter3_refreshed(eb);
    for (int i = 0; i < 8; ++i)
        CHECK(out.probs()[i] == Catch::Approx(expected[i]).margin(1e-15));
}

TEST_CASE("refresh rejects mismatched dimensions") {
    CHECK_THROWS_AS(ppa::refresh(DiagonalState::maximally_mixed(4), config3(0.1)),
                    std::invalid_argument);
}

TEST_CASE("refresh is idempotent") {
    std::mt19937_64 rng(7);
    const auto cfg = config3(0.31);
    for (int trial = 0; trial < 10; ++trial) {
        const auto state = random_state(rng, 8);
        const auto once = ppa::refresh(state, cfg);
        const auto twice = ppa::refresh(once, cfg);
        for (int i = 0; i < 8; ++i)
            CHECK(twice.probs()[i] == Catch::Approx(once.probs()[i]).margin(1e-15));
    }
}

TEST_CASE("refresh scales the bath polarization by the reset efficiency") {
    auto cfg = config3(0.4);
    cfg.reset_efficiency = 0.83;
    const auto out = ppa::refresh(DiagonalState::maximally_mixed(8), cfg);
    CHECK(out.qubit_polarization(2) == Catch::Approx(0.83 * 0.4).epsilon(1e-13));
}

TEST_CASE("multi-reset refresh replaces all reset qubits at once") {
    PpaConfig cfg;
    cfg.shape = SystemShape::qubits(1, 2);
    cfg.bath_polarization = Polarization(0.25);
    const auto out = ppa::refresh(DiagonalState::maximally_mixed(16), cfg);
    CHECK(out.qubit_polarization(2) == Catch::Approx(0.25).epsilon(1e-13));
    CHECK(out.qubit_polarization(3) == Catch::Approx(0.25).epsilon(1e-13));
    CHECK(out.qubit_polarization(0) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("compression sorts the first-round refreshed vector") {
    const double eb = 0.23;
    const auto out = ppa::compress(DiagonalState(refreshed_mixed(eb)));
    for (int i = 0; i < 4; ++i)
        CHECK(out.probs()[i] == Catch::Approx((1.0 + eb) / 8).margin(1e-15));
    for (int i = 4; i < 8; ++i)
        CHECK(out.probs()[i] == Catch::Approx((1.0 - eb) / 8).margin(1e-15));
    CHECK(out.target_polarization() == Catch::Approx(eb).epsilon(1e-13));
}

TEST_CASE("compression of an already sorted vector is the identity") {
    const DiagonalState sorted({0.4, 0.2, 0.15, 0.1, 0.06, 0.05, 0.03, 0.01});
    const auto out = ppa::compress(sorted);
    for (int i = 0; i < 8; ++i) CHECK(out.probs()[i] == sorted.probs()[i]);
}

TEST_CASE("compression of the third-iteration vector hits the known boost") {
    // Oracle: build the multiset of p^a q^b products independently and sort
    // it descending by insertion.
    const double eb = 0.3;
    std::vector<double> expected = iter3_refreshed(eb);
    std::vector<double> sorted_oracle;
    for (double v : expected) {
        auto it = sorted_oracle.begin();
        while (it != sorted_oracle.end() && *it >= v) ++it;
        sorted_oracle.insert(it, v);
    }
    const auto out = ppa::compress(DiagonalState(iter3_refreshed(eb)));
    for (int i = 0; i < 8; ++i)
        CHECK(out.probs()[i] == Catch::Approx(sorted_oracle[i]).margin(1e-15));
    CHECK(out.target_polarization() ==
          Catch::Approx(1.5 * eb - 0.5 * eb * eb * eb).epsilon(1e-12));
}

TEST_CASE("refresh and compress preserve trace and nonnegativity") {
    std::mt19937_64 rng(11);
    const auto cfg = config3(0.15);
    for (int trial = 0; trial < 25; ++trial) {
        const auto state = random_state(rng, 8);
        for (const auto& s : {ppa::refresh(state, cfg), ppa::compress(state)}) {
            double sum = 0.0;
            for (double p : s.probs()) {
                CHECK(p >= 0.0);
                sum += p;
            }
            CHECK(sum == Catch::Approx(1.0).margin(1e-12));
        }
    }
}

TEST_CASE("compression preserves the multiset of diagonal entries") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        const auto state = random_state(rng, 16);
        const auto out = ppa::compress(state);
        auto a = state.probs(), b = out.probs();
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    }
}

TEST_CASE("compression never heats the target") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 25; ++trial) {
        const auto state = random_state(rng, 16);
        CHECK(ppa::compress(state).target_polarization() >=
              state.target_polarization() - 1e-15);
    }
}

TEST_CASE("diagonal and density-matrix paths agree") {
    std::mt19937_64 rng(19);
    for (int n : {3, 4, 6}) {
        PpaConfig cfg;
        cfg.shape = SystemShape::qubits(n - 2, 1);
        cfg.bath_polarization = Polarization(0.12);
        const auto state = random_state(rng, std::int64_t{1} << n);
        const auto rho = DensityMatrix::from_diagonal(state);

        const auto diag_refreshed = ppa::refresh(state, cfg);
        const auto dm_refreshed = ppa::refresh(rho, cfg).diagonal();
        const auto diag_compressed = ppa::compress(state);
        const auto dm_compressed = ppa::compress(rho).diagonal();
        for (std::int64_t i = 0; i < state.dim(); ++i) {
            CHECK(dm_refreshed.probs()[i] ==
                  Catch::Approx(diag_refreshed.probs()[i]).margin(1e-10));
            CHECK(dm_compressed.probs()[i] ==
                  Catch::Approx(diag_compressed.probs()[i]).margin(1e-10));
        }
    }
}

TEST_CASE("density-matrix refresh reproduces the block form") {
    // Coherences between computational states survive; coherences involving
    // the reset qubit do not.
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(4, 4);
    rho(0, 0) = rho(1, 1) = rho(2, 2) = rho(3, 3) = 0.25;
    rho(0, 2) = rho(2, 0) = 0.1;   // computational coherence (same reset state)
    rho(0, 1) = rho(1, 0) = 0.05;  // reset-qubit coherence
    PpaConfig cfg;
    cfg.shape = SystemShape::qubits(0, 1);
    cfg.bath_polarization = Polarization(0.2);
    const auto out = ppa::refresh(DensityMatrix(rho), cfg);
    CHECK(out.matrix()(0, 1) == std::complex<double>(0.0, 0.0));
    // Each block trace runs over both reset states: Tr(M_00) = 0.5 and the
    // computational coherence block has Tr(M_01) = 0.1.
    CHECK(out.matrix()(0, 2).real() == Catch::Approx(0.1 * 0.6).epsilon(1e-12));
    CHECK(out.matrix()(0, 0).real() == Catch::Approx(0.5 * 0.6).epsilon(1e-12));
    CHECK(out.matrix()(1, 1).real() == Catch::Approx(0.5 * 0.4).epsilon(1e-12));
}

TEST_CASE("three-qubit PPA trajectory") {
    for (double eb : {0.01, 0.1, 0.3}) {
        auto cfg = config3(eb);
        cfg.max_iterations = 3;
        const auto trace = ppa::run_ppa(cfg);
        REQUIRE(trace.iterations.size() == 3);
        CHECK(trace.iterations[0].target_after_compress == Catch::Approx(eb).margin(1e-14));
        CHECK(trace.iterations[1].target_after_compress == Catch::Approx(eb).margin(1e-14));
        CHECK(trace.iterations[2].target_after_compress ==
              Catch::Approx(1.5 * eb - 0.5 * eb * eb * eb).margin(1e-14));
    }
}

TEST_CASE("three-qubit PPA converges to the closed-form limit") {
    for (double eb : {0.001, 0.01, 0.1, 0.3}) {
        auto cfg = config3(eb);
        cfg.max_iterations = 4000;
        cfg.convergence_epsilon = 1e-15;
        const auto trace = ppa::run_ppa(cfg);
        CHECK(trace.converged);
        CHECK(trace.final_target_polarization() ==
              Catch::Approx(2.0 * eb / (1.0 + eb * eb)).margin(1e-10));
    }
}

TEST_CASE("PPA with zero bath polarization goes nowhere") {
    auto cfg = config3(0.0);
    cfg.max_iterations = 50;
    const auto trace = ppa::run_ppa(cfg);
    CHECK(trace.converged);
    CHECK(trace.final_target_polarization() == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("target polarization is non-decreasing across iterations") {
    auto cfg = config3(0.05);
    cfg.max_iterations = 200;
    const auto trace = ppa::run_ppa(cfg);
    double prev = -1.0;
    for (const auto& rec : trace.iterations) {
        CHECK(rec.target_after_compress >= prev - 1e-15);
        prev = rec.target_after_compress;
    }
}

TEST_CASE("non-convergence is flagged, not thrown") {
    auto cfg = config3(0.1);
    cfg.max_iterations = 2;
    const auto trace = ppa::run_ppa(cfg);
    CHECK_FALSE(trace.converged);
    CHECK(trace.iterations.size() == 2);
}

TEST_CASE("converged diagonal matches the steady state") {
    for (int n : {3, 4, 5}) {
        for (double eb : {0.001, 0.05, 0.2}) {
            PpaConfig cfg;
            cfg.shape = SystemShape::qubits(n - 2, 1);
            cfg.bath_polarization = Polarization(eb);
            cfg.max_iterations = 2000000;
            cfg.convergence_epsilon = 1e-15;
            const auto trace = ppa::run_ppa(cfg);
            REQUIRE(trace.converged);
            const auto steady = limits::steady_state(cfg.shape, cfg.bath_polarization);
            // Computational marginal of the full register.
            const auto& probs = trace.final_state->probs();
            for (std::int64_t c = 0; c < cfg.shape.comp_dim(); ++c) {
                const double marginal = probs[2 * c] + probs[2 * c + 1];
                CHECK(marginal == Catch::Approx(steady.diag[c]).margin(1e-9));
            }
            CHECK(trace.final_target_polarization() ==
                  Catch::Approx(limits::epsilon_max(cfg.shape, cfg.bath_polarization))
                      .margin(1e-9));
        }
    }
}

TEST_CASE("qudit registers cool to the same closed form") {
    PpaConfig cfg;
    cfg.shape = SystemShape::qudit(3, 1);  // non-power-of-two compression qudit
    cfg.bath_polarization = Polarization(0.1);
    cfg.max_iterations = 100000;
    cfg.convergence_epsilon = 1e-15;
    const auto trace = ppa::run_ppa(cfg);
    REQUIRE(trace.converged);
    CHECK(trace.final_target_polarization() ==
          Catch::Approx(limits::epsilon_max(cfg.shape, cfg.bath_polarization))
              .margin(1e-9));
}

TEST_CASE("12-qubit scan produces monotone curves with the right asymptotes") {
    const auto scan =
        ppa::run_ppa_12qubit_scan({300.0, 77.0, 4.2}, 9.7e9, 200);
    REQUIRE(scan.asymptotes.size() == 3);
    CHECK(scan.asymptotes[0] == Catch::Approx(0.6609499912586808).epsilon(1e-10));
    CHECK(scan.asymptotes[1] > 0.99);
    CHECK(scan.asymptotes[2] == Catch::Approx(1.0).margin(1e-12));
    double prev = -1.0;
    double current_t = scan.points.front().temperature;
    for (const auto& p : scan.points) {
        if (p.temperature != current_t) {
            current_t = p.temperature;
            prev = -1.0;
        }
        // Non-decreasing up to the rounding noise of the 4096-entry sums.
        CHECK(p.target_polarization >= prev - 1e-12);
        prev = p.target_polarization;
    }
}
