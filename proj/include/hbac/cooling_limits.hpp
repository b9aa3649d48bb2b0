#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "hbac/core.hpp"

namespace hbac::limits {

/// Fixed point of the PPA on the computational qubits: a geometric diagonal
/// with ratio Q = ((1-eps_b)/(1+eps_b))^m.
struct SteadyState {
    double q{1.0};             // consecutive-element ratio
    double a1{0.0};            // leading diagonal element
    std::vector<double> diag;  // a1 * (1, Q, Q^2, ..., Q^(2d-1))
};

/// Exact steady state of the computational register.
///
/// The normalization constant is A1 = (1-Q)/(1-Q^(2d)). The extra 1/Q that
/// appears in the published closed form does not normalize the vector (its
/// entries would sum to 1/Q); the corrected constant both sums to one and
/// reproduces the closed-form maximum polarization. See the steady-state
/// tests, which assert the discrepancy.
inline SteadyState steady_state(const SystemShape& shape, Polarization eps_b) {
    shape.validate();
    if (!(eps_b.value >= 0.0 && eps_b.value <= 1.0))
        throw std::domain_error("bath polarization must lie in [0, 1]");
    const std::int64_t len = shape.comp_dim();
    SteadyState out;
    if (eps_b.value == 1.0) {  // delta distribution, the valid Q -> 0 limit
        out.q = 0.0;
        out.a1 = 1.0;
        out.diag.assign(len, 0.0);
        out.diag[0] = 1.0;
        return out;
    }
    const double q = std::pow((1.0 - eps_b.value) / (1.0 + eps_b.value),
                              static_cast<double>(shape.m));
    out.q = q;
    if (eps_b.value == 0.0) {  // uniform, the Q -> 1 limit
        out.a1 = 1.0 / static_cast<double>(len);
        out.diag.assign(len, out.a1);
        return out;
    }
    out.a1 = (1.0 - q) / (1.0 - std::pow(q, static_cast<double>(len)));
    out.diag.resize(len);
    double v = out.a1;
    for (std::int64_t i = 0; i < len; ++i, v *= q) out.diag[i] = v;
    return out;
}

/// Maximum steady-state polarization of the target qubit,
/// ((1+e)^md - (1-e)^md) / ((1+e)^md + (1-e)^md), evaluated in log space so
/// that md in the thousands cannot overflow.
inline Polarization epsilon_max(const SystemShape& shape, Polarization eps_b) {
    shape.validate();
    if (!(eps_b.value >= 0.0 && eps_b.value <= 1.0))
        throw std::domain_error("bath polarization must lie in [0, 1]");
    if (eps_b.value == 1.0) return Polarization(1.0);
    const double md = static_cast<double>(shape.m) * static_cast<double>(shape.d);
    const double log_ratio = std::log1p(eps_b.value) - std::log1p(-eps_b.value);
    return Polarization(std::tanh(0.5 * md * log_ratio));
}

/// Distance of the cooling limit from unit polarization,
/// 2 / (exp(md*ln((1+e)/(1-e))) + 1). Complements epsilon_max exactly;
/// stable where 1 - epsilon_max underflows.
inline double delta_max(const SystemShape& shape, Polarization eps_b) {
    shape.validate();
    if (!(eps_b.value >= 0.0 && eps_b.value < 1.0))
        throw std::domain_error("bath polarization must lie in [0, 1)");
    if (eps_b.value == 0.0) return 1.0;  // no cooling
    const double md = static_cast<double>(shape.m) * static_cast<double>(shape.d);
    const double x = md * (std::log1p(eps_b.value) - std::log1p(-eps_b.value));
    if (x > 36.0) {  // exp(x) would swamp the +1; use the exp(-x) form
        const double e = std::exp(-x);
        return 2.0 * e / (1.0 + e);
    }
    return 2.0 / (std::exp(x) + 1.0);
}

/// ln(delta_max); usable far past the double-precision underflow of delta_max.
inline double delta_max_log(const SystemShape& shape, Polarization eps_b) {
    shape.validate();
    if (!(eps_b.value > 0.0 && eps_b.value < 1.0))
        throw std::domain_error("bath polarization must lie in (0, 1)");
    const double md = static_cast<double>(shape.m) * static_cast<double>(shape.d);
    const double x = md * (std::log1p(eps_b.value) - std::log1p(-eps_b.value));
    // ln 2 - ln(e^x + 1) = ln 2 - x - ln(1 + e^-x)
    return std::log(2.0) - x - std::log1p(std::exp(-x));
}

struct CurveRow {
    int n;
    int m;
    std::int64_t d;
    double eps_b;
    double eps_max;
    double delta;
};

/// eps_max over an (n, eps_b) grid with m = 1, d = 2^(n-2); one row per pair.
inline std::vector<CurveRow> epsilon_max_curve(const std::vector<int>& n_list,
                                               const std::vector<double>& eps_b_grid) {
    std::vector<CurveRow> rows;
    rows.reserve(n_list.size() * eps_b_grid.size());
    for (int n : n_list) {
        if (n < 3) throw std::domain_error("curve requires n >= 3");
        const auto shape = SystemShape::qubits(n - 2, 1);
        for (double eb : eps_b_grid) {
            const Polarization eps(eb);
            const double emax = epsilon_max(shape, eps);
            const double delta = eb > 0.0 && eb < 1.0 ? delta_max(shape, eps)
                                 : eb == 0.0          ? 1.0
                                                      : 0.0;
            rows.push_back({n, 1, shape.d, eb, emax, delta});
        }
    }
    return rows;
}

}  // namespace hbac::limits
