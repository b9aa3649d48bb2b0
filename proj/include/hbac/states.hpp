#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hbac/core.hpp"

namespace hbac {

inline constexpr double state_sum_tol = 1e-12;

// Bit convention used throughout: qubit 0 is the target and occupies the most
// significant bit of a basis index; the m reset qubits occupy the least
// significant bits.

/// Probability vector over basis states. The fast path of the PPA: a register
/// started in a diagonal state stays diagonal under refresh and compression.
class DiagonalState {
public:
    explicit DiagonalState(std::vector<double> probs) : probs_(std::move(probs)) {
        validate();
    }

    static DiagonalState maximally_mixed(std::int64_t dim) {
        return DiagonalState(std::vector<double>(dim, 1.0 / static_cast<double>(dim)));
    }

    /// Product state of independent qubits with the given polarizations
    /// (qubit 0 first, i.e. most significant).
    static DiagonalState product(const std::vector<double>& polarizations) {
        const int n = static_cast<int>(polarizations.size());
        const std::int64_t dim = std::int64_t{1} << n;
        std::vector<double> p(dim, 1.0);
        for (std::int64_t idx = 0; idx < dim; ++idx) {
            for (int q = 0; q < n; ++q) {
                const int bit = static_cast<int>((idx >> (n - 1 - q)) & 1);
                p[idx] *= (bit == 0 ? 1.0 + polarizations[q] : 1.0 - polarizations[q]) / 2.0;
            }
        }
        return DiagonalState(std::move(p));
    }

    std::int64_t dim() const { return static_cast<std::int64_t>(probs_.size()); }
    const std::vector<double>& probs() const { return probs_; }
    std::vector<double>& mutable_probs() { return probs_; }

    int n_qubits() const { return detail::log2_exact(dim()); }

    /// <sigma_z> of the target: mass of the lower half of the index range
    /// minus mass of the upper half. Works for qudit registers too.
    double target_polarization() const {
        const std::int64_t half = dim() / 2;
        double lo = 0.0, hi = 0.0;
        for (std::int64_t i = 0; i < half; ++i) lo += probs_[i];
        for (std::int64_t i = half; i < dim(); ++i) hi += probs_[i];
        return lo - hi;
    }

    /// <sigma_z> of qubit `q` (qubit-realized registers only).
    double qubit_polarization(int q) const {
        const int n = n_qubits();
        if (q < 0 || q >= n) throw std::out_of_range("qubit index out of range");
        const int shift = n - 1 - q;
        double pol = 0.0;
        for (std::int64_t i = 0; i < dim(); ++i)
            pol += ((i >> shift) & 1) ? -probs_[i] : probs_[i];
        return pol;
    }

    void validate() const {
        if (probs_.empty()) throw std::invalid_argument("empty state");
        double sum = 0.0;
        for (double p : probs_) {
            if (!(p >= 0.0)) throw std::invalid_argument("negative probability");
            sum += p;
        }
        if (std::abs(sum - 1.0) > state_sum_tol)
            throw std::invalid_argument("probabilities must sum to 1");
    }

private:
    std::vector<double> probs_;
};

/// Dense Hermitian density matrix for small registers and open-system runs.
class DensityMatrix {
public:
    explicit DensityMatrix(Eigen::MatrixXcd mat, double tol = 1e-12)
        : mat_(std::move(mat)) {
        validate(tol);
    }

    static DensityMatrix maximally_mixed(std::int64_t dim) {
        return DensityMatrix(Eigen::MatrixXcd::Identity(dim, dim) /
                             static_cast<double>(dim));
    }

    /// Single-qubit thermal state diag((1+eps)/2, (1-eps)/2).
    static Eigen::MatrixXcd thermal_qubit(double eps) {
        Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(2, 2);
        rho(0, 0) = (1.0 + eps) / 2.0;
        rho(1, 1) = (1.0 - eps) / 2.0;
        return rho;
    }

    static DensityMatrix from_diagonal(const DiagonalState& diag) {
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(diag.dim(), diag.dim());
        for (std::int64_t i = 0; i < diag.dim(); ++i) m(i, i) = diag.probs()[i];
        return DensityMatrix(std::move(m));
    }

    std::int64_t dim() const { return mat_.rows(); }
    const Eigen::MatrixXcd& matrix() const { return mat_; }

    int n_qubits() const { return detail::log2_exact(dim()); }

    /// Diagonal extraction; exact for matrices built from a DiagonalState.
    DiagonalState diagonal() const {
        std::vector<double> p(dim());
        for (std::int64_t i = 0; i < dim(); ++i) p[i] = mat_(i, i).real();
        return DiagonalState(std::move(p));
    }

    double target_polarization() const {
        const std::int64_t half = dim() / 2;
        double pol = 0.0;
        for (std::int64_t i = 0; i < dim(); ++i)
            pol += (i < half ? 1.0 : -1.0) * mat_(i, i).real();
        return pol;
    }

    double qubit_polarization(int q) const {
        const int n = n_qubits();
        if (q < 0 || q >= n) throw std::out_of_range("qubit index out of range");
        const int shift = n - 1 - q;
        double pol = 0.0;
        for (std::int64_t i = 0; i < dim(); ++i)
            pol += (((i >> shift) & 1) ? -1.0 : 1.0) * mat_(i, i).real();
        return pol;
    }

    void validate(double tol = 1e-12) const {
        if (mat_.rows() != mat_.cols() || mat_.rows() < 1)
            throw std::invalid_argument("density matrix must be square");
        if ((mat_ - mat_.adjoint()).cwiseAbs().maxCoeff() > tol)
            throw std::invalid_argument("density matrix must be Hermitian");
        if (std::abs(mat_.trace().real() - 1.0) > tol ||
            std::abs(mat_.trace().imag()) > tol)
            throw std::invalid_argument("density matrix must have unit trace");
    }

    /// Smallest eigenvalue; separate from validate() since it costs O(dim^3).
    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(mat_,
                                                           Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }

private:
    Eigen::MatrixXcd mat_;
};

/// Kronecker product, row-major qubit ordering (first factor most significant).
inline Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

}  // namespace hbac
