#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "hbac/circuits.hpp"
#include "hbac/core.hpp"
#include "hbac/espin.hpp"
#include "hbac/states.hpp"

namespace hbac::opensys {

/// Relaxation parameters of one spin. `splitting` is the signed energy
/// difference E(bit 1) - E(bit 0) in rad/s; it fixes which basis state the
/// amplitude-damping pair favors at the bath temperature (negative for the
/// electron under omega_S Sz, positive for a nucleus under -omega_I Iz).
struct SpinRelaxation {
    double t1{std::numeric_limits<double>::infinity()};
    double t2{std::numeric_limits<double>::infinity()};
    double splitting{0.0};
};

struct RelaxationSpec {
    std::vector<SpinRelaxation> spins;  // index 0 = electron
    double t2_star{std::numeric_limits<double>::infinity()};  // electron
    double bath_temperature{0.0};  // kelvin

    void validate() const {
        if (spins.empty()) throw std::invalid_argument("no spins");
        for (const auto& s : spins) {
            if (!(s.t1 > 0.0) || !(s.t2 > 0.0))
                throw std::invalid_argument("relaxation times must be positive");
            // 1/T2 >= 1/(2 T1): the dephasing channel rate must be >= 0.
            if (1.0 / s.t2 < 0.5 / s.t1 - 1e-30)
                throw std::invalid_argument("unphysical channel pair: T2 > 2*T1");
        }
        if (t2_star > spins[0].t2)
            throw std::invalid_argument("T2* must not exceed the electron T2");
        if (!(bath_temperature > 0.0))
            throw std::invalid_argument("bath temperature must be positive");
    }

    /// Signed equilibrium polarization (bit-0 minus bit-1 population) of
    /// spin i at the bath temperature.
    double equilibrium_polarization(int i) const {
        const double x = constants::hbar * spins[i].splitting /
                         (2.0 * constants::k_boltzmann * bath_temperature);
        return std::tanh(x);
    }
};

/// Relaxation spec wired to a secular electron-nuclear system: electron
/// splitting -omega_S, nuclear splittings +omega_I.
inline RelaxationSpec make_relaxation(const espin::SecularParams& params,
                                      SpinRelaxation electron,
                                      std::vector<SpinRelaxation> nuclei,
                                      double t2_star, double bath_temperature) {
    if (static_cast<int>(nuclei.size()) != params.n_nuclei())
        throw std::invalid_argument("one relaxation entry per nucleus required");
    RelaxationSpec spec;
    electron.splitting = -params.omega_s;
    spec.spins.push_back(electron);
    for (int n = 0; n < params.n_nuclei(); ++n) {
        nuclei[n].splitting = params.nuclei[n].omega_i;
        spec.spins.push_back(nuclei[n]);
    }
    spec.t2_star = t2_star;
    spec.bath_temperature = bath_temperature;
    spec.validate();
    return spec;
}

namespace detail {

inline Eigen::MatrixXcd basis_op(int r, int c) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2, 2);
    m(r, c) = 1.0;
    return m;
}

}  // namespace detail

/// Generalized-amplitude-damping pairs of every spin, in the product basis.
/// These are basis-agnostic physical flips; with anisotropic coupling their
/// eigenbasis matrix elements automatically pick up the forbidden-branch
/// amplitudes that drain nuclear polarization during electron T1 events.
inline std::vector<Eigen::MatrixXcd> gad_operators(const RelaxationSpec& relax,
                                                   int n_spins) {
    relax.validate();
    if (static_cast<int>(relax.spins.size()) != n_spins)
        throw std::invalid_argument("relaxation spec does not match register");
    std::vector<Eigen::MatrixXcd> ops;
    for (int i = 0; i < n_spins; ++i) {
        const auto& s = relax.spins[i];
        if (!std::isfinite(s.t1)) continue;
        const double eps = relax.equilibrium_polarization(i);
        const double g_to0 = (1.0 + eps) / (2.0 * s.t1);
        const double g_to1 = (1.0 - eps) / (2.0 * s.t1);
        if (g_to0 > 0.0)
            ops.push_back(std::sqrt(g_to0) *
                          espin::detail::embed(detail::basis_op(0, 1), i, n_spins));
        if (g_to1 > 0.0)
            ops.push_back(std::sqrt(g_to1) *
                          espin::detail::embed(detail::basis_op(1, 0), i, n_spins));
    }
    return ops;
}

/// Pure-dephasing operators, aligned with each spin's local quantization
/// axis: diagonal in the eigenbasis of the free Hamiltonian, carrying the
/// product-basis label signs. A bare product sigma_z would flip a nucleus
/// whose quantization axis is tilted at rate sin^2(theta)/T2, which is not
/// what a measured transition linewidth describes. Falls back to the product
/// sigma_z when eigenvectors cannot be labeled (degenerate level structure).
inline std::vector<Eigen::MatrixXcd> dephasing_operators(
    const RelaxationSpec& relax, const Eigen::MatrixXcd& h, int n_spins) {
    relax.validate();
    if (static_cast<int>(relax.spins.size()) != n_spins)
        throw std::invalid_argument("relaxation spec does not match register");
    const std::int64_t dim = std::int64_t{1} << n_spins;
    std::vector<double> rates(n_spins, 0.0);
    bool any = false;
    for (int i = 0; i < n_spins; ++i) {
        const auto& s = relax.spins[i];
        rates[i] = (std::isfinite(s.t2) ? 1.0 / s.t2 : 0.0) -
                   (std::isfinite(s.t1) ? 0.5 / s.t1 : 0.0);
        any = any || rates[i] > 1e-300;
    }
    std::vector<Eigen::MatrixXcd> ops;
    if (!any) return ops;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    std::vector<std::int64_t> labels(dim);
    std::vector<bool> taken(dim, false);
    bool labeled = true;
    for (std::int64_t k = 0; k < dim && labeled; ++k) {
        Eigen::Index argmax = 0;
        es.eigenvectors().col(k).cwiseAbs().maxCoeff(&argmax);
        labels[k] = argmax;
        if (taken[argmax]) labeled = false;
        taken[argmax] = true;
    }
    for (int i = 0; i < n_spins; ++i) {
        if (rates[i] <= 1e-300) continue;
        const double c = std::sqrt(rates[i] / 2.0);
        if (!labeled) {
            ops.push_back(c * espin::detail::embed(circuits::pauli::sz(), i, n_spins));
            continue;
        }
        Eigen::VectorXcd signs(dim);
        const int shift = n_spins - 1 - i;
        for (std::int64_t k = 0; k < dim; ++k)
            signs(k) = ((labels[k] >> shift) & 1) ? -1.0 : 1.0;
        ops.push_back(c * (es.eigenvectors() * signs.asDiagonal() *
                           es.eigenvectors().adjoint()));
    }
    return ops;
}

/// Full channel set for evolution under the free Hamiltonian h.
inline std::vector<Eigen::MatrixXcd> jump_operators(const RelaxationSpec& relax,
                                                    int n_spins,
                                                    const Eigen::MatrixXcd& h) {
    auto ops = gad_operators(relax, n_spins);
    auto deph = dephasing_operators(relax, h, n_spins);
    ops.insert(ops.end(), deph.begin(), deph.end());
    return ops;
}

/// Column-stacking Liouvillian of dH/dt = -i[H, rho] + sum_k D[L_k](rho).
inline Eigen::MatrixXcd liouvillian(const Eigen::MatrixXcd& h,
                                    const std::vector<Eigen::MatrixXcd>& jumps) {
    const std::int64_t d = h.rows();
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(d, d);
    const std::complex<double> mi(0.0, -1.0);
    Eigen::MatrixXcd l = mi * (kron(id, h) - kron(h.transpose(), id));
    for (const auto& j : jumps) {
        const Eigen::MatrixXcd jd_j = j.adjoint() * j;
        l += kron(j.conjugate(), j);
        l -= 0.5 * kron(id, jd_j);
        l -= 0.5 * kron(jd_j.transpose(), id);
    }
    return l;
}

namespace detail {

inline Eigen::MatrixXcd apply_propagator(const Eigen::MatrixXcd& u,
                                         const Eigen::MatrixXcd& rho) {
    const std::int64_t d = rho.rows();
    const Eigen::VectorXcd v =
        u * Eigen::Map<const Eigen::VectorXcd>(rho.data(), d * d);
    return Eigen::Map<const Eigen::MatrixXcd>(v.data(), d, d);
}

/// Hermitize, check the propagator kept the trace, renormalize.
inline DensityMatrix finalize_state(Eigen::MatrixXcd rho) {
    rho = 0.5 * (rho + rho.adjoint()).eval();
    const double tr = rho.trace().real();
    if (std::abs(tr - 1.0) > 1e-9)
        throw NumericalError("propagation lost trace beyond tolerance");
    rho /= tr;
    return DensityMatrix(std::move(rho));
}

/// Dissipative part of the Liouvillian (no Hamiltonian commutator).
inline Eigen::MatrixXcd dissipator_superop(
    const std::vector<Eigen::MatrixXcd>& jumps, std::int64_t d) {
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(d, d);
    Eigen::MatrixXcd l = Eigen::MatrixXcd::Zero(d * d, d * d);
    for (const auto& j : jumps) {
        const Eigen::MatrixXcd jd_j = j.adjoint() * j;
        l += kron(j.conjugate(), j);
        l -= 0.5 * kron(id, jd_j);
        l -= 0.5 * kron(jd_j.transpose(), id);
    }
    return l;
}

/// Evolve rho for time t under a static Hamiltonian plus jump operators.
///
/// The Hamiltonian is handled exactly through its eigenphases; the
/// dissipator is exponentiated in the Hamiltonian eigenbasis after a secular
/// filter that decouples coherence sectors whose Bohr frequencies differ by
/// more than `secular_cutoff` (rad/s). Exponentiating the bare Liouvillian
/// instead would hand the Pade scaling-squaring an operator of norm
/// omega_S * t and lose the trace. The cutoff sits far above the
/// floating-point noise of degenerate transitions and far below any resolved
/// splitting, so exactly degenerate sectors stay coupled.
inline Eigen::MatrixXcd propagate_static(const Eigen::MatrixXcd& rho,
                                         const Eigen::MatrixXcd& h,
                                         const std::vector<Eigen::MatrixXcd>& jumps,
                                         double t, double secular_cutoff = 1.0) {
    const std::int64_t d = rho.rows();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    const Eigen::MatrixXcd& w = es.eigenvectors();
    const Eigen::VectorXd& e = es.eigenvalues();

    Eigen::MatrixXcd state = w.adjoint() * rho * w;
    if (jumps.empty()) {
        for (std::int64_t k = 0; k < d; ++k)
            for (std::int64_t l = 0; l < d; ++l)
                state(k, l) *= std::exp(std::complex<double>(0.0, -(e(k) - e(l)) * t));
        return w * state * w.adjoint();
    }

    std::vector<Eigen::MatrixXcd> jumps_e;
    jumps_e.reserve(jumps.size());
    for (const auto& j : jumps) jumps_e.push_back(w.adjoint() * j * w);
    Eigen::MatrixXcd l_d = dissipator_superop(jumps_e, d);
    // Secular filter: vec index i = k + l*d carries Bohr frequency E_k - E_l.
    for (std::int64_t i = 0; i < d * d; ++i) {
        const double w_i = e(i % d) - e(i / d);
        for (std::int64_t j = 0; j < d * d; ++j) {
            const double w_j = e(j % d) - e(j / d);
            if (std::abs(w_i - w_j) > secular_cutoff) l_d(i, j) = 0.0;
        }
    }
    const Eigen::MatrixXcd u = (l_d * t).exp();
    state = apply_propagator(u, state);
    for (std::int64_t k = 0; k < d; ++k)
        for (std::int64_t l = 0; l < d; ++l)
            state(k, l) *= std::exp(std::complex<double>(0.0, -(e(k) - e(l)) * t));
    return w * state * w.adjoint();
}

}  // namespace detail

/// Propagate rho under H (rad/s) with the relaxation channels for time t.
/// Hamiltonian phases are exact; the dissipator acts in the secular
/// approximation around the Hamiltonian eigenbasis.
inline DensityMatrix lindblad_propagate(const DensityMatrix& rho,
                                        const Eigen::MatrixXcd& h,
                                        const RelaxationSpec& relax, double t) {
    if (h.rows() != rho.dim() || h.cols() != rho.dim())
        throw std::invalid_argument("Hamiltonian/state dimension mismatch");
    if (!(t >= 0.0)) throw std::domain_error("negative evolution time");
    if (t == 0.0) return rho;
    const int n_spins = rho.n_qubits();
    const auto jumps = jump_operators(relax, n_spins, h);
    return detail::finalize_state(
        detail::propagate_static(rho.matrix(), h, jumps, t));
}

/// Reset by waiting: free evolution for wait_multiple times the electron T1.
/// Nuclear decay induced by electron T1 through anisotropic coupling comes
/// out of the same propagation; no separate channel is added.
inline DensityMatrix reset_by_wait(const DensityMatrix& rho,
                                   const Eigen::MatrixXcd& h,
                                   const RelaxationSpec& relax,
                                   double wait_multiple = 5.0) {
    if (!(wait_multiple > 0.0)) throw std::domain_error("wait multiple must be > 0");
    relax.validate();
    if (!std::isfinite(relax.spins[0].t1))
        throw std::domain_error("reset by waiting requires a finite electron T1");
    return lindblad_propagate(rho, h, relax, wait_multiple * relax.spins[0].t1);
}

enum class PulseChannel { mw, rf };
enum class PulseEnvelope { square, gaussian };

/// One transition-selective pulse. `amplitude` is the on-resonance effective
/// Rabi frequency at the addressed transition (peak value for a Gaussian
/// envelope), so a square pi pulse satisfies amplitude * duration = pi.
struct PulseSegment {
    PulseChannel channel{PulseChannel::mw};
    int level_i{0};  // eigenlevel indices, energy-ascending
    int level_j{1};
    PulseEnvelope envelope{PulseEnvelope::square};
    double amplitude{0.0};        // rad/s
    double duration{0.0};         // seconds
    double carrier_detuning{0.0}; // rad/s added to the transition frequency
    int gaussian_steps{200};      // piecewise-constant steps for the envelope

    void validate() const {
        if (!(duration > 0.0)) throw std::domain_error("pulse duration must be > 0");
        if (level_i == level_j)
            throw std::invalid_argument("transition endpoints coincide");
        if (!(amplitude > 0.0)) throw std::domain_error("pulse amplitude must be > 0");
        if (gaussian_steps < 1) throw std::domain_error("step count must be >= 1");
    }
};

/// Gaussian pulses are truncated at +-3 sigma with sigma = duration/6; the
/// area then integrates to amplitude * duration * c with this constant.
inline double gaussian_area_factor() {
    return std::sqrt(2.0 * constants::pi) / 6.0 * std::erf(3.0 / std::sqrt(2.0));
}

/// Peak amplitude giving a pi flip for a Gaussian pulse of the duration.
inline double gaussian_pi_amplitude(double duration) {
    return constants::pi / (duration * gaussian_area_factor());
}

/// Eigenstructure of a secular Hamiltonian, with each level tagged by the
/// product-basis state its eigenvector is closest to.
struct LevelStructure {
    Eigen::MatrixXcd h;
    Eigen::VectorXd energies;   // ascending
    Eigen::MatrixXcd vectors;   // columns
    std::vector<std::int64_t> labels;       // level -> product-basis index
    std::vector<int> level_of_label;        // product-basis index -> level
};

inline LevelStructure level_structure(const espin::SecularParams& params) {
    LevelStructure ls;
    ls.h = espin::secular_hamiltonian_matrix(params);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(ls.h);
    ls.energies = es.eigenvalues();
    ls.vectors = es.eigenvectors();
    const std::int64_t dim = ls.h.rows();
    ls.labels.resize(dim);
    ls.level_of_label.assign(dim, -1);
    for (std::int64_t k = 0; k < dim; ++k) {
        Eigen::Index argmax = 0;
        ls.vectors.col(k).cwiseAbs().maxCoeff(&argmax);
        ls.labels[k] = argmax;
        if (ls.level_of_label[argmax] != -1)
            throw std::invalid_argument(
                "eigenvectors are not adiabatically labelable");
        ls.level_of_label[argmax] = static_cast<int>(k);
    }
    return ls;
}

namespace detail {

struct PulseSetup {
    Eigen::VectorXd g;          // rotating-frame generator, diagonal
    Eigen::MatrixXcd drive;     // selected (delta G = +-1) drive, eigenbasis
    double carrier;             // rad/s
    double element;             // |drive| at the addressed transition
};

inline PulseSetup pulse_setup(const LevelStructure& ls, const PulseSegment& pulse,
                              int n_spins) {
    const std::int64_t dim = ls.h.rows();
    if (pulse.level_i < 0 || pulse.level_j < 0 || pulse.level_i >= dim ||
        pulse.level_j >= dim)
        throw std::out_of_range("eigenlevel index out of range");
    const std::int64_t li = ls.labels[pulse.level_i];
    const std::int64_t lj = ls.labels[pulse.level_j];
    const std::int64_t flips = li ^ lj;
    const int electron_bit = n_spins - 1;  // electron is the most significant

    int frame_qubit;  // whose basis bit generates the rotating frame
    Eigen::MatrixXcd x_lab;
    if (pulse.channel == PulseChannel::mw) {
        if (!((flips >> electron_bit) & 1))
            throw std::invalid_argument("MW pulse must flip the electron");
        frame_qubit = 0;
        x_lab = espin::detail::embed(circuits::pauli::sx(), 0, n_spins);
    } else {
        if ((flips >> electron_bit) & 1)
            throw std::invalid_argument("RF pulse must not flip the electron");
        if (flips == 0 || (flips & (flips - 1)) != 0)
            throw std::invalid_argument("RF pulse must flip exactly one nucleus");
        int bit = 0;
        while (!((flips >> bit) & 1)) ++bit;
        frame_qubit = n_spins - 1 - bit;
        x_lab = espin::detail::embed(circuits::pauli::sx(), frame_qubit, n_spins);
    }

    PulseSetup setup;
    setup.g.resize(dim);
    const int frame_shift = n_spins - 1 - frame_qubit;
    for (std::int64_t k = 0; k < dim; ++k)
        setup.g(k) = ((ls.labels[k] >> frame_shift) & 1) ? -0.5 : 0.5;
    // The frame only cancels the addressed gap if G grows with energy across
    // that pair (the label bit alone does not know the level ordering).
    if ((setup.g(pulse.level_i) - setup.g(pulse.level_j)) *
            (ls.energies(pulse.level_i) - ls.energies(pulse.level_j)) <
        0.0)
        setup.g = -setup.g;

    const Eigen::MatrixXcd x_eig = ls.vectors.adjoint() * x_lab * ls.vectors;
    setup.drive = Eigen::MatrixXcd::Zero(dim, dim);
    for (std::int64_t a = 0; a < dim; ++a)
        for (std::int64_t b = 0; b < dim; ++b)
            if (std::abs(std::abs(setup.g(a) - setup.g(b)) - 1.0) < 1e-12)
                setup.drive(a, b) = x_eig(a, b);

    setup.element = std::abs(setup.drive(pulse.level_i, pulse.level_j));
    if (setup.element < 1e-9)
        throw std::domain_error("addressed transition has no drive amplitude");
    setup.carrier = std::abs(ls.energies(pulse.level_j) - ls.energies(pulse.level_i)) +
                    pulse.carrier_detuning;
    return setup;
}

}  // namespace detail

/// Propagate one transition-selective pulse: the drive is taken post-RWA in
/// the rotating frame of the addressed transition, relaxation runs alongside,
/// and Gaussian envelopes are stepped piecewise-constant (entrywise envelope
/// discretization error ~1e-6 at the default 200 steps; square segments are
/// exponentiated exactly).
inline DensityMatrix selective_pulse(const DensityMatrix& rho,
                                     const espin::SecularParams& params,
                                     const PulseSegment& pulse,
                                     const RelaxationSpec& relax) {
    pulse.validate();
    const int n_spins = params.n_nuclei() + 1;
    if (rho.dim() != params.dim())
        throw std::invalid_argument("state/system dimension mismatch");
    const LevelStructure ls = level_structure(params);
    const auto setup = detail::pulse_setup(ls, pulse, n_spins);
    const std::int64_t dim = rho.dim();

    // Everything below runs in the eigenbasis; the channels are built
    // against the free Hamiltonian.
    std::vector<Eigen::MatrixXcd> jumps = jump_operators(relax, n_spins, ls.h);
    for (auto& j : jumps) j = (ls.vectors.adjoint() * j * ls.vectors).eval();

    const Eigen::MatrixXcd h_static =
        ls.energies.cast<std::complex<double>>().asDiagonal().toDenseMatrix() -
        setup.carrier * setup.g.cast<std::complex<double>>().asDiagonal().toDenseMatrix();

    Eigen::MatrixXcd state =
        ls.vectors.adjoint() * rho.matrix() * ls.vectors;

    const double scale = 1.0 / setup.element;  // amplitude = effective Rabi
    if (pulse.envelope == PulseEnvelope::square) {
        const Eigen::MatrixXcd h_rot =
            h_static + (pulse.amplitude * scale / 2.0) * setup.drive;
        state = detail::propagate_static(state, h_rot, jumps, pulse.duration);
    } else {
        // Piecewise-constant envelope with the exact per-step average
        // amplitude, so the discretization conserves the pulse area.
        const int steps = pulse.gaussian_steps;
        const double dt = pulse.duration / steps;
        const double sigma = pulse.duration / 6.0;
        const double norm = sigma * std::sqrt(constants::pi / 2.0);
        auto edge = [&](int s) {
            return std::erf((s * dt - pulse.duration / 2.0) /
                            (sigma * std::sqrt(2.0)));
        };
        for (int s = 0; s < steps; ++s) {
            const double amp =
                pulse.amplitude * norm * (edge(s + 1) - edge(s)) / dt;
            const Eigen::MatrixXcd h_rot =
                h_static + (amp * scale / 2.0) * setup.drive;
            state = detail::propagate_static(state, h_rot, jumps, dt);
        }
    }

    // Undo the frame rotation accumulated over the pulse, then leave the
    // eigenbasis.
    Eigen::VectorXcd phases(dim);
    for (std::int64_t k = 0; k < dim; ++k)
        phases(k) = std::exp(std::complex<double>(
            0.0, -setup.carrier * setup.g(k) * pulse.duration));
    state = phases.asDiagonal() * state * phases.conjugate().asDiagonal();
    state = ls.vectors * state * ls.vectors.adjoint();
    return detail::finalize_state(std::move(state));
}

struct EndorStep {
    std::string label;
    // Per-spin polarizations measured along the bath's cold direction (the
    // electron's thermal majority), so the thermal electron reads +eps_b and
    // a nucleus freshly loaded from the bath reads +eps_b too.
    std::vector<double> spin_polarizations;
    double electron_gain;  // electron polarization over eps_b
};

struct EndorOptions {
    bool ideal{false};           // exact gates and resets instead of pulses
    double mw_duration{50e-9};
    PulseEnvelope mw_envelope{PulseEnvelope::gaussian};
    double rf_duration_n1{15e-6};
    double rf_duration_n2{60e-6};
    double wait_multiple{5.0};
    double zeeman_offset{0.0};   // electron Larmor offset of this ensemble member
};

struct EndorReport {
    std::vector<EndorStep> steps;
    double bath_polarization{0.0};  // electron thermal magnitude
    double final_gain{0.0};
    bool universality_pass{false};
    std::vector<double> final_populations;  // by product-basis label
};

namespace detail {

/// Populations by product-basis label, from eigenlevel populations.
inline std::vector<double> label_populations(const LevelStructure& ls,
                                             const Eigen::MatrixXcd& rho_lab) {
    const std::int64_t dim = ls.h.rows();
    const Eigen::MatrixXcd rho_eig = ls.vectors.adjoint() * rho_lab * ls.vectors;
    std::vector<double> pops(dim, 0.0);
    for (std::int64_t k = 0; k < dim; ++k)
        pops[ls.labels[k]] = rho_eig(k, k).real();
    return pops;
}

inline double bit_polarization(const std::vector<double>& pops, int qubit,
                               int n_spins) {
    const int shift = n_spins - 1 - qubit;
    double pol = 0.0;
    for (std::size_t idx = 0; idx < pops.size(); ++idx)
        pol += ((static_cast<std::int64_t>(idx) >> shift) & 1) ? -pops[idx] : pops[idx];
    return pol;
}

}  // namespace detail

/// One round of the 3-qubit PPA on (electron, nucleus 1, nucleus 2) driven by
/// transition-selective pulses: SWAP(e,n1) as three CNOTs, reset by waiting,
/// SWAP(e,n2), reset, and the compression pulse exchanging the two mid-ranked
/// populations. The electron is both the reset qubit and the cooling target.
inline EndorReport run_endor_ppa_round(const espin::SecularParams& nominal,
                                       const RelaxationSpec& relax,
                                       const EndorOptions& opts = {}) {
    if (nominal.n_nuclei() != 2)
        throw std::invalid_argument("ENDOR PPA round requires exactly two nuclei");
    relax.validate();
    const int n_spins = 3;
    const std::int64_t dim = 8;

    espin::SecularParams actual = nominal;
    actual.omega_s += opts.zeeman_offset;

    const LevelStructure ls_nominal = level_structure(nominal);
    const LevelStructure ls = level_structure(actual);

    EndorReport report;
    report.universality_pass = espin::universality_check(actual).pass;

    // Signed equilibrium polarizations; majority signs for reporting.
    std::vector<double> eq(n_spins);
    for (int i = 0; i < n_spins; ++i) eq[i] = relax.equilibrium_polarization(i);
    report.bath_polarization = std::abs(eq[0]);

    // Thermal (Gibbs) initial state of the actual Hamiltonian.
    const double beta = constants::hbar /
                        (constants::k_boltzmann * relax.bath_temperature);
    Eigen::VectorXd boltz = (-beta * ls.energies.array()).exp();
    boltz /= boltz.sum();
    Eigen::MatrixXcd rho_lab = ls.vectors *
                               boltz.cast<std::complex<double>>().asDiagonal() *
                               ls.vectors.adjoint();

    const double bath_sign = eq[0] < 0.0 ? -1.0 : 1.0;
    auto record = [&](const std::string& label) {
        const auto pops = detail::label_populations(ls, rho_lab);
        EndorStep step;
        step.label = label;
        for (int q = 0; q < n_spins; ++q)
            step.spin_polarizations.push_back(
                bath_sign * detail::bit_polarization(pops, q, n_spins));
        step.electron_gain = step.spin_polarizations[0] / report.bath_polarization;
        report.steps.push_back(std::move(step));
    };

    // Exact-permutation path: classical operations on label populations.
    auto apply_permutation_ideal = [&](const std::vector<std::int64_t>& mapping) {
        auto pops = detail::label_populations(ls, rho_lab);
        std::vector<double> moved(pops.size());
        for (std::size_t i = 0; i < pops.size(); ++i) moved[i] = pops[mapping[i]];
        Eigen::MatrixXcd rho_eig = Eigen::MatrixXcd::Zero(dim, dim);
        for (std::int64_t k = 0; k < dim; ++k)
            rho_eig(k, k) = moved[ls.labels[k]];
        rho_lab = ls.vectors * rho_eig * ls.vectors.adjoint();
    };

    auto reset_electron_ideal = [&]() {
        auto pops = detail::label_populations(ls, rho_lab);
        std::vector<double> out(pops.size());
        const double p0 = (1.0 + eq[0]) / 2.0, p1 = (1.0 - eq[0]) / 2.0;
        for (std::int64_t rest = 0; rest < 4; ++rest) {
            const double marginal = pops[rest] + pops[4 + rest];
            out[rest] = marginal * p0;
            out[4 + rest] = marginal * p1;
        }
        Eigen::MatrixXcd rho_eig = Eigen::MatrixXcd::Zero(dim, dim);
        for (std::int64_t k = 0; k < dim; ++k) rho_eig(k, k) = out[ls.labels[k]];
        rho_lab = ls.vectors * rho_eig * ls.vectors.adjoint();
    };

    // Pulse path. Carriers are calibrated on the nominal system; a Zeeman
    // offset of this ensemble member appears as detuning.
    auto run_pulse = [&](PulseChannel channel, std::int64_t label_a,
                         std::int64_t label_b, double duration,
                         PulseEnvelope envelope) {
        PulseSegment pulse;
        pulse.channel = channel;
        pulse.level_i = ls.level_of_label[label_a];
        pulse.level_j = ls.level_of_label[label_b];
        pulse.envelope = envelope;
        pulse.duration = duration;
        pulse.amplitude = envelope == PulseEnvelope::square
                              ? constants::pi / duration
                              : gaussian_pi_amplitude(duration);
        const double f_actual =
            std::abs(ls.energies(pulse.level_j) - ls.energies(pulse.level_i));
        const int ni = ls_nominal.level_of_label[label_a];
        const int nj = ls_nominal.level_of_label[label_b];
        const double f_nominal =
            std::abs(ls_nominal.energies(nj) - ls_nominal.energies(ni));
        pulse.carrier_detuning = f_nominal - f_actual;
        rho_lab =
            selective_pulse(DensityMatrix(rho_lab), actual, pulse, relax).matrix();
    };

    // CNOT with nucleus `nq` (1 or 2) as target, electron control on bit 1:
    // one RF pulse (the spectator nucleus does not shift the frequency).
    auto cnot_e_to_n = [&](int nq, double rf_duration) {
        const int shift = n_spins - 1 - nq;
        const std::int64_t base = std::int64_t{1} << (n_spins - 1);  // electron bit 1
        run_pulse(PulseChannel::rf, base, base | (std::int64_t{1} << shift),
                  rf_duration, PulseEnvelope::square);
    };
    // CNOT with the electron as target, nucleus `nq` control on bit 1: two MW
    // pulses, one per spectator-nucleus state.
    auto cnot_n_to_e = [&](int nq) {
        const int shift = n_spins - 1 - nq;
        const int spectator = nq == 1 ? 2 : 1;
        const int sshift = n_spins - 1 - spectator;
        for (int s = 0; s < 2; ++s) {
            const std::int64_t nuclear = (std::int64_t{1} << shift) |
                                         (static_cast<std::int64_t>(s) << sshift);
            run_pulse(PulseChannel::mw, nuclear,
                      nuclear | (std::int64_t{1} << (n_spins - 1)),
                      opts.mw_duration, opts.mw_envelope);
        }
    };

    auto swap_ideal = [&](int nq) {
        apply_permutation_ideal(circuits::swap_gate(n_spins, 0, nq).mapping);
    };

    record("thermal");
    for (int pass = 1; pass <= 2; ++pass) {
        const int nq = pass;
        if (opts.ideal) {
            swap_ideal(nq);
        } else {
            const double rf = nq == 1 ? opts.rf_duration_n1 : opts.rf_duration_n2;
            cnot_e_to_n(nq, rf);
            cnot_n_to_e(nq);
            cnot_e_to_n(nq, rf);
        }
        record("swap_e_n" + std::to_string(nq));
        if (opts.ideal) {
            reset_electron_ideal();
        } else {
            rho_lab = reset_by_wait(DensityMatrix(rho_lab), ls.h, relax,
                                    opts.wait_multiple)
                          .matrix();
        }
        record("reset" + std::to_string(pass));
    }

    // Compression: exchange the populations of |011> and |100>, the
    // mid-ranked pair of the ideal product state. Pulsed realization:
    // conjugating the two electron-manifold nuclear CNOTs by the selective
    // MW pi pulse on |011><->|111> gives the permutation (011 100)(101 110),
    // which acts on the reachable product-state family exactly like the
    // compression (the extra transposition exchanges equal populations).
    // Every pulse sits on an allowed transition.
    if (opts.ideal) {
        apply_permutation_ideal(circuits::compress3_gate().mapping);
    } else {
        run_pulse(PulseChannel::mw, 0b011, 0b111, opts.mw_duration,
                  opts.mw_envelope);
        cnot_e_to_n(1, opts.rf_duration_n1);
        cnot_e_to_n(2, opts.rf_duration_n2);
        run_pulse(PulseChannel::mw, 0b011, 0b111, opts.mw_duration,
                  opts.mw_envelope);
    }
    record("compression");

    report.final_gain = report.steps.back().electron_gain;
    report.final_populations = detail::label_populations(ls, rho_lab);
    return report;
}

/// Lorentzian electron-Zeeman offsets for inhomogeneous (T2*) averaging:
/// FWHM = 2/T2*, truncated at +-10 FWHM, one deterministic stream per sample.
inline std::vector<double> lorentzian_offsets(double t2_star, int samples,
                                              std::uint64_t seed) {
    if (samples < 1) throw std::domain_error("sample count must be >= 1");
    std::vector<double> offsets(samples, 0.0);
    if (!std::isfinite(t2_star)) return offsets;
    const double fwhm = 2.0 / t2_star;
    for (int i = 0; i < samples; ++i) {
        std::seed_seq seq{seed, static_cast<std::uint64_t>(i)};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        double delta;
        do {
            delta = 0.5 * fwhm * std::tan(constants::pi * (uni(rng) - 0.5));
        } while (std::abs(delta) > 10.0 * fwhm);
        offsets[i] = delta;
    }
    return offsets;
}

/// Average a run over the T2* offset ensemble. The runner maps an electron
/// Zeeman offset (rad/s) to a density matrix.
template <class Runner>
DensityMatrix t2star_average_state(Runner&& run, double t2_star, int samples,
                                   std::uint64_t seed) {
    const auto offsets = lorentzian_offsets(t2_star, samples, seed);
    Eigen::MatrixXcd acc;
    for (int i = 0; i < samples; ++i) {
        const DensityMatrix rho = run(offsets[i]);
        if (acc.size() == 0)
            acc = rho.matrix();
        else
            acc += rho.matrix();
    }
    return DensityMatrix(acc / static_cast<double>(samples));
}

/// Elementwise-averaged scalar results over the T2* ensemble.
template <class Runner>
std::vector<double> t2star_average_values(Runner&& run, double t2_star,
                                          int samples, std::uint64_t seed) {
    const auto offsets = lorentzian_offsets(t2_star, samples, seed);
    std::vector<double> acc;
    for (int i = 0; i < samples; ++i) {
        const std::vector<double> vals = run(offsets[i]);
        if (acc.empty()) acc.assign(vals.size(), 0.0);
        if (vals.size() != acc.size())
            throw std::invalid_argument("runner returned inconsistent sizes");
        for (std::size_t k = 0; k < vals.size(); ++k) acc[k] += vals[k];
    }
    for (double& v : acc) v /= static_cast<double>(samples);
    return acc;
}

}  // namespace hbac::opensys
