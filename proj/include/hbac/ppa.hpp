#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "hbac/cooling_limits.hpp"
#include "hbac/core.hpp"
#include "hbac/states.hpp"

namespace hbac::ppa {

struct PpaConfig {
    SystemShape shape;
    Polarization bath_polarization;   // eps_b
    double reset_efficiency{1.0};     // scales eps_b at each refresh
    std::int64_t max_iterations{1000};
    double convergence_epsilon{1e-12};
    bool record_snapshots{false};

    void validate() const {
        shape.validate();
        if (!(bath_polarization.value >= 0.0 && bath_polarization.value <= 1.0))
            throw std::domain_error("bath polarization must lie in [0, 1]");
        if (!(reset_efficiency > 0.0 && reset_efficiency <= 1.0))
            throw std::domain_error("reset efficiency must lie in (0, 1]");
        if (max_iterations < 0) throw std::domain_error("negative iteration count");
        if (!(convergence_epsilon >= 0.0))
            throw std::domain_error("negative convergence epsilon");
    }

    double reset_polarization() const {
        return reset_efficiency * bath_polarization.value;
    }
};

namespace detail {

// Per-basis-state weight of the m fresh bath qubits.
inline std::vector<double> bath_weights(int m, double eps_r) {
    const std::int64_t rdim = std::int64_t{1} << m;
    std::vector<double> w(rdim, 1.0);
    for (std::int64_t r = 0; r < rdim; ++r)
        for (int b = 0; b < m; ++b)
            w[r] *= ((r >> b) & 1) ? (1.0 - eps_r) / 2.0 : (1.0 + eps_r) / 2.0;
    return w;
}

}  // namespace detail

/// Refresh step: trace out the m reset qubits and replace them with fresh
/// bath qubits at polarization reset_efficiency * eps_b.
inline DiagonalState refresh(const DiagonalState& state, const PpaConfig& config) {
    config.validate();
    const std::int64_t rdim = config.shape.reset_dim();
    const std::int64_t cdim = config.shape.comp_dim();
    if (state.dim() != cdim * rdim)
        throw std::invalid_argument("state dimension does not match shape");
    const auto w = detail::bath_weights(config.shape.m, config.reset_polarization());
    const auto& p = state.probs();
    std::vector<double> out(state.dim());
    for (std::int64_t c = 0; c < cdim; ++c) {
        double marginal = 0.0;
        for (std::int64_t r = 0; r < rdim; ++r) marginal += p[c * rdim + r];
        for (std::int64_t r = 0; r < rdim; ++r) out[c * rdim + r] = marginal * w[r];
    }
    return DiagonalState(std::move(out));
}

/// Refresh on a density matrix: every reset-qubit block M_ij is replaced by
/// Tr(M_ij) times the fresh bath state, which keeps computational coherences
/// and destroys coherences between distinct reset-qubit basis states.
inline DensityMatrix refresh(const DensityMatrix& state, const PpaConfig& config) {
    config.validate();
    const std::int64_t rdim = config.shape.reset_dim();
    const std::int64_t cdim = config.shape.comp_dim();
    if (state.dim() != cdim * rdim)
        throw std::invalid_argument("state dimension does not match shape");
    const auto w = detail::bath_weights(config.shape.m, config.reset_polarization());
    const auto& rho = state.matrix();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(state.dim(), state.dim());
    for (std::int64_t ci = 0; ci < cdim; ++ci) {
        for (std::int64_t cj = 0; cj < cdim; ++cj) {
            std::complex<double> block_trace = 0.0;
            for (std::int64_t r = 0; r < rdim; ++r)
                block_trace += rho(ci * rdim + r, cj * rdim + r);
            for (std::int64_t r = 0; r < rdim; ++r)
                out(ci * rdim + r, cj * rdim + r) = block_trace * w[r];
        }
    }
    return DensityMatrix(std::move(out));
}

/// Sorting permutation: sigma[i] is the input index whose value lands at
/// output slot i. Stable, so traces are deterministic under ties.
inline std::vector<std::int64_t> compression_permutation(const std::vector<double>& diag) {
    std::vector<std::int64_t> sigma(diag.size());
    std::iota(sigma.begin(), sigma.end(), std::int64_t{0});
    std::stable_sort(sigma.begin(), sigma.end(),
                     [&diag](std::int64_t a, std::int64_t b) { return diag[a] > diag[b]; });
    return sigma;
}

/// Compression step: permute the diagonal into non-increasing order.
inline DiagonalState compress(const DiagonalState& state) {
    const auto sigma = compression_permutation(state.probs());
    std::vector<double> out(state.dim());
    for (std::int64_t i = 0; i < state.dim(); ++i) out[i] = state.probs()[sigma[i]];
    return DiagonalState(std::move(out));
}

/// Compression on a density matrix: the sorting permutation applied as a
/// unitary conjugation, carrying off-diagonals along.
inline DensityMatrix compress(const DensityMatrix& state) {
    std::vector<double> diag(state.dim());
    for (std::int64_t i = 0; i < state.dim(); ++i)
        diag[i] = state.matrix()(i, i).real();
    const auto sigma = compression_permutation(diag);
    Eigen::MatrixXcd out(state.dim(), state.dim());
    for (std::int64_t i = 0; i < state.dim(); ++i)
        for (std::int64_t j = 0; j < state.dim(); ++j)
            out(i, j) = state.matrix()(sigma[i], sigma[j]);
    return DensityMatrix(std::move(out));
}

struct IterationRecord {
    std::int64_t iteration;            // 1-based
    double target_after_refresh;
    double target_after_compress;
    std::vector<double> qubit_polarizations;  // after compress; empty for qudits
    std::optional<DiagonalState> snapshot;
};

struct PpaTrace {
    std::vector<IterationRecord> iterations;
    bool converged{false};
    std::optional<DiagonalState> final_state;

    double final_target_polarization() const {
        return iterations.empty() ? 0.0 : iterations.back().target_after_compress;
    }
};

/// Run the PPA loop: refresh then compress, until the state stops changing
/// (max-norm below convergence_epsilon) or max_iterations is reached.
///
/// Convergence is detected on the full diagonal rather than on the target
/// polarization alone: early rounds hold the target at a plateau while
/// polarization still flows through the lower qubits, and a target-only test
/// would stop there.
inline PpaTrace run_ppa(const PpaConfig& config, const DiagonalState& initial) {
    config.validate();
    if (initial.dim() != config.shape.total_dim())
        throw std::invalid_argument("initial state does not match shape");
    const bool per_qubit = config.shape.qubit_realized();

    PpaTrace trace;
    DiagonalState state = initial;
    for (std::int64_t it = 1; it <= config.max_iterations; ++it) {
        const DiagonalState refreshed = refresh(state, config);
        DiagonalState compressed = compress(refreshed);

        IterationRecord rec;
        rec.iteration = it;
        rec.target_after_refresh = refreshed.target_polarization();
        rec.target_after_compress = compressed.target_polarization();
        if (per_qubit) {
            const int n = compressed.n_qubits();
            rec.qubit_polarizations.resize(n);
            for (int q = 0; q < n; ++q)
                rec.qubit_polarizations[q] = compressed.qubit_polarization(q);
        }
        if (config.record_snapshots) rec.snapshot = compressed;

        double delta = 0.0;
        for (std::int64_t i = 0; i < state.dim(); ++i)
            delta = std::max(delta, std::abs(compressed.probs()[i] - state.probs()[i]));

        state = std::move(compressed);
        trace.iterations.push_back(std::move(rec));
        if (delta < config.convergence_epsilon) {
            trace.converged = true;
            break;
        }
    }
    trace.final_state = std::move(state);
    return trace;
}

/// Run from the maximally mixed register.
inline PpaTrace run_ppa(const PpaConfig& config) {
    config.validate();
    return run_ppa(config, DiagonalState::maximally_mixed(config.shape.total_dim()));
}

struct ScanPoint {
    double temperature;  // kelvin
    std::int64_t iteration;
    double target_polarization;
};

struct ScanResult {
    std::vector<ScanPoint> points;
    // Per temperature: the bath polarization implied by the electron
    // frequency, and the closed-form asymptote of the curve.
    std::vector<double> bath_polarizations;
    std::vector<double> asymptotes;
};

/// 12-qubit register scan (1 electron reset qubit + 11 computational): one
/// polarization-vs-iteration curve per temperature, with the bath
/// polarization derived from the electron transition frequency.
inline ScanResult run_ppa_12qubit_scan(const std::vector<double>& temperatures,
                                       double electron_frequency_hz,
                                       std::int64_t iterations) {
    const auto shape = SystemShape::qubits(10, 1);  // n = 12 total
    ScanResult result;
    for (double t : temperatures) {
        const Polarization eps_b =
            thermal_polarization_from_frequency(electron_frequency_hz, t);
        PpaConfig config;
        config.shape = shape;
        config.bath_polarization = eps_b;
        config.max_iterations = iterations;
        config.convergence_epsilon = 0.0;  // fixed-length curves
        const PpaTrace trace = run_ppa(config);
        for (const auto& rec : trace.iterations)
            result.points.push_back({t, rec.iteration, rec.target_after_compress});
        result.bath_polarizations.push_back(eps_b.value);
        result.asymptotes.push_back(limits::epsilon_max(shape, eps_b));
    }
    return result;
}

}  // namespace hbac::ppa
