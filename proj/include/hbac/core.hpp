#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "hbac/constants.hpp"

namespace hbac {

/// Propagation failed to meet its accuracy guarantees (maps to a dedicated
/// CLI exit code, distinct from configuration errors).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Spin polarization: population difference between the two levels of a
/// spin-1/2, normalized to [-1, 1].
struct Polarization {
    double value{0.0};

    Polarization() = default;
    explicit Polarization(double v) : value(v) {
        if (!(std::abs(v) <= 1.0))
            throw std::domain_error("polarization must lie in [-1, 1]");
    }
    operator double() const noexcept { return value; }
};

/// Parameters of a spin-1/2 at thermal equilibrium in a static field.
struct ThermalSpec {
    double gamma;        // gyromagnetic ratio, rad s^-1 T^-1
    double b0;           // static field, tesla
    double temperature;  // kelvin

    void validate() const {
        if (!(temperature > 0.0))
            throw std::domain_error("temperature must be positive");
        if (!(b0 >= 0.0)) throw std::domain_error("B0 must be non-negative");
        if (!std::isfinite(gamma)) throw std::domain_error("gamma must be finite");
    }
};

/// Equilibrium polarization of a spin-1/2: tanh(hbar*gamma*B0 / (2 kB T)).
inline Polarization thermal_polarization(const ThermalSpec& spec) {
    spec.validate();
    const double x = constants::hbar * std::abs(spec.gamma) * spec.b0 /
                     (2.0 * constants::k_boltzmann * spec.temperature);
    return Polarization(std::tanh(x));
}

/// Equilibrium polarization for a transition of frequency nu (Hz).
inline Polarization thermal_polarization_from_frequency(double nu_hz,
                                                        double temperature) {
    if (!(temperature > 0.0))
        throw std::domain_error("temperature must be positive");
    const double x = constants::planck_h * std::abs(nu_hz) /
                     (2.0 * constants::k_boltzmann * temperature);
    return Polarization(std::tanh(x));
}

/// Temperature at which a spin reaches the requested polarization (inverse
/// of thermal_polarization in T).
inline double temperature_for_polarization(double gamma, double b0,
                                           double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw std::domain_error("target polarization must lie in (0, 1)");
    return constants::hbar * std::abs(gamma) * b0 /
           (2.0 * constants::k_boltzmann * std::atanh(epsilon));
}

/// Purity fraction alpha of an n-qubit pseudo-pure state,
/// ((1+eps)^n - 1) / (2^n - 1), evaluated cancellation-free for tiny eps.
inline double pseudo_pure_purity(Polarization epsilon, int n) {
    if (n < 1) throw std::domain_error("pseudo_pure_purity requires n >= 1");
    const double num = std::expm1(static_cast<double>(n) * std::log1p(epsilon.value));
    const double den = std::expm1(static_cast<double>(n) * std::log(2.0));
    return num / den;
}

/// True iff two ancilla polarizations clear the error-suppression threshold
/// (1+eps1)(1+eps2)/4 > 1/2. Equal polarizations pass iff eps > sqrt(2)-1.
inline bool qec_ancilla_threshold(Polarization eps1, Polarization eps2) {
    return (1.0 + eps1.value) * (1.0 + eps2.value) / 4.0 > 0.5;
}

namespace detail {

inline bool is_power_of_two(std::int64_t v) { return v > 0 && (v & (v - 1)) == 0; }

inline int log2_exact(std::int64_t v) {
    if (!is_power_of_two(v))
        throw std::invalid_argument("dimension is not a power of two");
    int n = 0;
    while ((std::int64_t{1} << n) < v) ++n;
    return n;
}

}  // namespace detail

/// Register geometry: one target qubit, a compression qudit of dimension d
/// (d = 2^n_prime when realized with qubits), and m reset qubits.
struct SystemShape {
    int n_prime{0};      // computational qubits beside the target
    int m{1};            // reset qubits
    std::int64_t d{1};   // compression-qudit dimension

    static SystemShape qubits(int n_prime, int m) {
        SystemShape s{n_prime, m, std::int64_t{1} << n_prime};
        s.validate();
        return s;
    }
    static SystemShape qudit(std::int64_t d, int m) {
        SystemShape s;
        s.d = d;
        s.m = m;
        s.n_prime = 0;
        while ((std::int64_t{1} << s.n_prime) < d) ++s.n_prime;  // ceil(log2 d)
        s.validate();
        return s;
    }

    void validate() const {
        if (n_prime < 0 || m < 1 || d < 1)
            throw std::invalid_argument("invalid system shape");
    }

    bool qubit_realized() const { return d == (std::int64_t{1} << n_prime); }
    std::int64_t comp_dim() const { return 2 * d; }          // target x qudit
    std::int64_t reset_dim() const { return std::int64_t{1} << m; }
    std::int64_t total_dim() const { return comp_dim() * reset_dim(); }
    int total_qubits() const {
        if (!qubit_realized())
            throw std::invalid_argument("register is not qubit-realized");
        return 1 + n_prime + m;
    }
};

}  // namespace hbac
