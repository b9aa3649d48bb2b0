#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hbac/constants.hpp"
#include "hbac/states.hpp"

namespace hbac::circuits {

/// A unitary that permutes basis states. mapping[i] is the input basis index
/// sent to output slot i, so diag'[i] = diag[mapping[i]].
struct PermutationGate {
    std::int64_t dim;
    std::vector<std::int64_t> mapping;
    std::string label;

    void validate() const {
        if (static_cast<std::int64_t>(mapping.size()) != dim)
            throw std::invalid_argument("gate mapping size mismatch");
        std::vector<bool> seen(mapping.size(), false);
        for (std::int64_t v : mapping) {
            if (v < 0 || v >= dim || seen[v])
                throw std::invalid_argument("gate mapping is not a bijection");
            seen[v] = true;
        }
    }
};

/// SWAP of two qubits in an n-qubit register (qubit 0 = most significant bit).
inline PermutationGate swap_gate(int n_qubits, int qa, int qb) {
    if (qa < 0 || qb < 0 || qa >= n_qubits || qb >= n_qubits)
        throw std::out_of_range("qubit index out of range");
    const std::int64_t dim = std::int64_t{1} << n_qubits;
    const int sa = n_qubits - 1 - qa;
    const int sb = n_qubits - 1 - qb;
    PermutationGate g{dim, std::vector<std::int64_t>(dim),
                      "SWAP(" + std::to_string(qa) + "," + std::to_string(qb) + ")"};
    for (std::int64_t i = 0; i < dim; ++i) {
        const std::int64_t ba = (i >> sa) & 1;
        const std::int64_t bb = (i >> sb) & 1;
        std::int64_t j = i & ~((std::int64_t{1} << sa) | (std::int64_t{1} << sb));
        j |= (bb << sa) | (ba << sb);
        g.mapping[i] = j;
    }
    return g;
}

inline PermutationGate identity_gate(std::int64_t dim) {
    PermutationGate g{dim, std::vector<std::int64_t>(dim), "I"};
    for (std::int64_t i = 0; i < dim; ++i) g.mapping[i] = i;
    return g;
}

/// The 3-qubit compression permutation: exchanges basis states |011> and
/// |100>, which sorts every state of the refreshed-product family reachable
/// in the 3-qubit PPA into non-increasing order.
inline PermutationGate compress3_gate() {
    PermutationGate g{8, {0, 1, 2, 4, 3, 5, 6, 7}, "COMPRESS3"};
    return g;
}

/// Compression gates of one 3-qubit PPA round (register order: target,
/// second computational qubit, reset qubit). The first round swaps the
/// target with the reset qubit, then the second qubit with the reset qubit,
/// then applies the three-qubit compression; every later round repeats the
/// last two gates.
inline std::vector<PermutationGate> ppa3_gate_sequence(int round) {
    if (round < 1) throw std::domain_error("round index starts at 1");
    if (round == 1)
        return {swap_gate(3, 0, 2), swap_gate(3, 1, 2), compress3_gate()};
    return {swap_gate(3, 1, 2), compress3_gate()};
}

inline DiagonalState apply_gate(const DiagonalState& state, const PermutationGate& gate) {
    gate.validate();
    if (state.dim() != gate.dim) throw std::invalid_argument("gate/state dim mismatch");
    std::vector<double> out(state.dim());
    for (std::int64_t i = 0; i < state.dim(); ++i) out[i] = state.probs()[gate.mapping[i]];
    return DiagonalState(std::move(out));
}

inline DensityMatrix apply_gate(const DensityMatrix& state, const PermutationGate& gate) {
    gate.validate();
    if (state.dim() != gate.dim) throw std::invalid_argument("gate/state dim mismatch");
    Eigen::MatrixXcd out(state.dim(), state.dim());
    for (std::int64_t i = 0; i < state.dim(); ++i)
        for (std::int64_t j = 0; j < state.dim(); ++j)
            out(i, j) = state.matrix()(gate.mapping[i], gate.mapping[j]);
    return DensityMatrix(std::move(out));
}

/// Secular dipole-dipole coupling between two spins.
struct DipolarPair {
    double gamma_i;  // rad s^-1 T^-1
    double gamma_j;
    double r;        // meters
    double theta;    // radians, angle between the internuclear vector and B0
    bool homonuclear{true};

    void validate() const {
        if (!(r > 0.0)) throw std::domain_error("spin separation must be positive");
    }
};

/// d_ij = -hbar * mu0 * gi * gj / (4 pi r^3) * (3 cos^2(theta) - 1) / 2,
/// in rad/s.
inline double dipolar_coupling(const DipolarPair& pair) {
    pair.validate();
    const double c = std::cos(pair.theta);
    const double angular = (3.0 * c * c - 1.0) / 2.0;
    return -constants::hbar * constants::mu0 * pair.gamma_i * pair.gamma_j /
           (4.0 * constants::pi * pair.r * pair.r * pair.r) * angular;
}

namespace pauli {

inline Eigen::MatrixXcd sx() {
    Eigen::MatrixXcd m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}
inline Eigen::MatrixXcd sy() {
    Eigen::MatrixXcd m(2, 2);
    m << 0, std::complex<double>(0, -1), std::complex<double>(0, 1), 0;
    return m;
}
inline Eigen::MatrixXcd sz() {
    Eigen::MatrixXcd m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}
inline Eigen::MatrixXcd id(std::int64_t dim = 2) {
    return Eigen::MatrixXcd::Identity(dim, dim);
}

}  // namespace pauli

/// I^i . I^j on two spin-1/2 (spin operators = Pauli/2).
inline Eigen::MatrixXcd spin_dot_spin() {
    return 0.25 * (kron(pauli::sx(), pauli::sx()) + kron(pauli::sy(), pauli::sy()) +
                   kron(pauli::sz(), pauli::sz()));
}

/// Homonuclear secular dipolar Hamiltonian d_ij (3 Iz Iz - I.I), rad/s.
inline Eigen::MatrixXcd homonuclear_dipolar_hamiltonian(double d_ij) {
    return d_ij * (3.0 * 0.25 * kron(pauli::sz(), pauli::sz()) - spin_dot_spin());
}

/// Heteronuclear secular dipolar Hamiltonian d_ij 2 Iz Iz, rad/s.
inline Eigen::MatrixXcd heteronuclear_dipolar_hamiltonian(double d_ij) {
    return d_ij * 2.0 * 0.25 * kron(pauli::sz(), pauli::sz());
}

/// Effective exchange Hamiltonian (d_ij / 3) I.I produced by the
/// time-suspension sequence, rad/s.
inline Eigen::MatrixXcd exchange_hamiltonian(double d_ij) {
    return (d_ij / 3.0) * spin_dot_spin();
}

/// Evolution time under the exchange Hamiltonian that realizes a SWAP up to
/// global phase: tau = 3/(2 f) with f = |d_ij|/2pi, i.e. 3 pi / |d_ij|.
inline double swap_duration(double d_ij_rad_per_s) {
    if (d_ij_rad_per_s == 0.0)
        throw std::domain_error("no SWAP possible for vanishing coupling");
    return 3.0 * constants::pi / std::abs(d_ij_rad_per_s);
}

}  // namespace hbac::circuits
