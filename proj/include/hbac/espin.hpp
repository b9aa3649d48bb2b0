#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hbac/circuits.hpp"
#include "hbac/constants.hpp"
#include "hbac/states.hpp"

namespace hbac::espin {

struct Nucleus {
    std::string name;         // label only
    double gamma;             // rad s^-1 T^-1
    Eigen::Matrix3d a_tensor; // hyperfine tensor, rad/s
};

/// One electron coupled to k spin-1/2 nuclei in a static field.
struct ESpinSystem {
    Eigen::Matrix3d g_tensor;
    std::vector<Nucleus> nuclei;
    double b0{0.0};                       // tesla
    Eigen::Vector3d field_direction{0, 0, 1};

    void validate() const {
        if (std::abs(field_direction.norm() - 1.0) > 1e-12)
            throw std::invalid_argument("field direction must be a unit vector");
        if (!g_tensor.allFinite()) throw std::invalid_argument("non-finite g tensor");
        for (const auto& n : nuclei)
            if (!n.a_tensor.allFinite())
                throw std::invalid_argument("non-finite hyperfine tensor");
        if (!(b0 >= 0.0)) throw std::invalid_argument("negative field");
    }
};

struct NucleusSecular {
    double omega_i;  // nuclear Larmor gamma_n * B0, rad/s
    double a;        // A_zz in the field frame, rad/s
    double b;        // sqrt(A_zx^2 + A_zy^2) >= 0, rad/s
    double gamma;    // carried along for effective-field conversions
};

/// Secular parameters of Eq.-21 form: electron Larmor plus per-nucleus
/// (omega_I, a, b) in the frame whose z axis is the field direction.
struct SecularParams {
    double omega_s{0.0};  // beta_e g_zz B0 / hbar, rad/s
    double b0{0.0};
    std::vector<NucleusSecular> nuclei;
    bool secular_ok{true};  // false when hyperfine/nuclear terms are not small

    int n_nuclei() const { return static_cast<int>(nuclei.size()); }
    std::int64_t dim() const { return std::int64_t{1} << (n_nuclei() + 1); }
};

inline SecularParams secular_params(const ESpinSystem& system) {
    system.validate();
    const Eigen::Vector3d& z = system.field_direction;
    SecularParams p;
    p.b0 = system.b0;
    p.omega_s = constants::bohr_magneton * (z.transpose() * system.g_tensor * z).value() *
                system.b0 / constants::hbar;
    for (const auto& nuc : system.nuclei) {
        NucleusSecular s;
        s.gamma = nuc.gamma;
        s.omega_i = nuc.gamma * system.b0;
        s.a = (z.transpose() * nuc.a_tensor * z).value();
        // Transverse secular component: |A^T z| projected off the z axis.
        const Eigen::Vector3d v = nuc.a_tensor.transpose() * z;
        s.b = (v - v.dot(z) * z).norm();
        if (std::max({std::abs(s.a), s.b, std::abs(s.omega_i)}) >
            0.1 * std::abs(p.omega_s))
            p.secular_ok = false;
        p.nuclei.push_back(s);
    }
    return p;
}

namespace detail {

/// Operator on spin `pos` of `n_spins` qubits (qubit 0 most significant).
inline Eigen::MatrixXcd embed(const Eigen::MatrixXcd& op, int pos, int n_spins) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
    for (int s = 0; s < n_spins; ++s)
        out = kron(out, s == pos ? op : circuits::pauli::id());
    return out;
}

}  // namespace detail

/// Secular spin Hamiltonian
///   omega_S Sz + sum_n [-omega_I^n Iz_n + Sz (a_n Iz_n + b_n Ix_n)],
/// rad/s, dimension 2^(k+1); electron is qubit 0 (most significant).
inline Eigen::MatrixXcd secular_hamiltonian_matrix(const SecularParams& p) {
    const int n_spins = p.n_nuclei() + 1;
    const Eigen::MatrixXcd sz = 0.5 * circuits::pauli::sz();
    const Eigen::MatrixXcd sx = 0.5 * circuits::pauli::sx();
    Eigen::MatrixXcd h = p.omega_s * detail::embed(sz, 0, n_spins);
    const Eigen::MatrixXcd s_z_full = detail::embed(sz, 0, n_spins);
    for (int n = 0; n < p.n_nuclei(); ++n) {
        const auto& nuc = p.nuclei[n];
        const Eigen::MatrixXcd iz = detail::embed(sz, n + 1, n_spins);
        const Eigen::MatrixXcd ix = detail::embed(sx, n + 1, n_spins);
        h += -nuc.omega_i * iz + s_z_full * (nuc.a * iz + nuc.b * ix);
    }
    return h;
}

inline std::pair<SecularParams, Eigen::MatrixXcd> secular_hamiltonian(
    const ESpinSystem& system) {
    SecularParams p = secular_params(system);
    return {p, secular_hamiltonian_matrix(p)};
}

/// Effective field (tesla, components (x, y, z)) quantizing nucleus `n` when
/// the electron is up (+) or down (-): (B0 +- a/2g) z +- b/2g x.
inline Eigen::Vector3d effective_nuclear_field(const SecularParams& p, int n,
                                               bool electron_up) {
    if (n < 0 || n >= p.n_nuclei()) throw std::out_of_range("nucleus index");
    const auto& nuc = p.nuclei[n];
    if (nuc.gamma == 0.0) throw std::domain_error("gamma must be nonzero");
    const double sign = electron_up ? 1.0 : -1.0;
    return {sign * nuc.b / (2.0 * nuc.gamma), 0.0,
            p.b0 + sign * nuc.a / (2.0 * nuc.gamma)};
}

struct MixingAngles {
    double theta_up;    // nuclear quantization angle, electron-up manifold
    double theta_down;  // electron-down manifold
    double theta;       // (theta_up - theta_down) / 2
};

namespace detail {

/// Collapse an axis angle to the line angle in (-pi/2, pi/2]; a shift by pi
/// flips the eigenvector sign only.
inline double wrap_line_angle(double t) {
    while (t > constants::pi / 2.0) t -= constants::pi;
    while (t <= -constants::pi / 2.0) t += constants::pi;
    return t;
}

}  // namespace detail

/// Nuclear quantization-axis mixing angles of nucleus `n`.
///
/// theta_up = atan2(-b, a - 2 omega_I) and theta_down = atan2(-b, a + 2
/// omega_I), reduced mod pi. With omega_I defined positive (gamma_n B0, as in
/// the secular Hamiltonian's -omega_I Iz term), these assignments make the
/// four constructed eigenstates exact eigenvectors of the Hamiltonian; the
/// textbook arctan(-b/(a + 2 omega_I)) form for the *up* manifold presumes
/// the signed nuclear-Larmor convention omega_I < 0 for positive gamma. The
/// two-argument arctangent keeps vanishing denominators well defined (the
/// angle becomes pi/2).
inline MixingAngles mixing_angles(const SecularParams& p, int n) {
    if (n < 0 || n >= p.n_nuclei()) throw std::out_of_range("nucleus index");
    const auto& nuc = p.nuclei[n];
    MixingAngles m;
    m.theta_up = detail::wrap_line_angle(std::atan2(-nuc.b, nuc.a - 2.0 * nuc.omega_i));
    m.theta_down = detail::wrap_line_angle(std::atan2(-nuc.b, nuc.a + 2.0 * nuc.omega_i));
    m.theta = (m.theta_up - m.theta_down) / 2.0;
    return m;
}

struct EigenStructure {
    Eigen::VectorXd values;    // rad/s
    Eigen::MatrixXcd vectors;  // columns
    bool labeled{false};       // true when columns follow the |1>..|4> form
    bool degenerate{false};
    double min_level_gap{0.0};
};

/// Eigenstates of the coupled system. For a single nucleus the four labeled
/// states are built from the mixing angles,
///   |1> = |up>(cos(t_up/2)|up> - sin(t_up/2)|down>),
///   |2> = |up>(sin(t_up/2)|up> + cos(t_up/2)|down>),
/// and likewise |3>, |4> with theta_down in the electron-down manifold.
/// Larger systems fall back to numerical diagonalization.
inline EigenStructure eigenstates(const SecularParams& p,
                                  double degeneracy_tol = 1e-6) {
    const Eigen::MatrixXcd h = secular_hamiltonian_matrix(p);
    EigenStructure out;
    if (p.n_nuclei() == 1) {
        const MixingAngles ang = mixing_angles(p, 0);
        auto nuclear_pair = [](double theta) {
            Eigen::Vector2cd c, s;
            c << std::cos(theta / 2.0), -std::sin(theta / 2.0);
            s << std::sin(theta / 2.0), std::cos(theta / 2.0);
            return std::pair{c, s};
        };
        const auto [u1, u2] = nuclear_pair(ang.theta_up);
        const auto [d1, d2] = nuclear_pair(ang.theta_down);
        out.vectors = Eigen::MatrixXcd::Zero(4, 4);
        out.vectors.block<2, 1>(0, 0) = u1;
        out.vectors.block<2, 1>(0, 1) = u2;
        out.vectors.block<2, 1>(2, 2) = d1;
        out.vectors.block<2, 1>(2, 3) = d2;
        out.values.resize(4);
        for (int i = 0; i < 4; ++i)
            out.values(i) =
                (out.vectors.col(i).adjoint() * h * out.vectors.col(i))(0).real();
        out.labeled = true;
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
        out.values = es.eigenvalues();
        out.vectors = es.eigenvectors();
    }
    out.min_level_gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i < out.values.size(); ++i)
        for (int j = i + 1; j < out.values.size(); ++j)
            out.min_level_gap =
                std::min(out.min_level_gap, std::abs(out.values(i) - out.values(j)));
    out.degenerate = out.min_level_gap < degeneracy_tol * std::abs(p.omega_s);
    return out;
}

/// Rotating-frame electron control Hamiltonian omega_1 Sx expressed in the
/// labeled eigenbasis:
///   (omega_1/2) [[0, 0, cos T, -sin T], [0, 0, sin T, cos T],
///                [cos T, sin T, 0, 0], [-sin T, cos T, 0, 0]].
inline Eigen::MatrixXcd control_hamiltonian_eigenbasis(const SecularParams& p,
                                                       double omega_1) {
    if (p.n_nuclei() != 1)
        throw std::invalid_argument("labeled control matrix requires one nucleus");
    const double t = mixing_angles(p, 0).theta;
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(4, 4);
    const double c = std::cos(t), s = std::sin(t);
    h(0, 2) = c;  h(0, 3) = -s;
    h(1, 2) = s;  h(1, 3) = c;
    h(2, 0) = c;  h(2, 1) = s;
    h(3, 0) = -s; h(3, 1) = c;
    return (omega_1 / 2.0) * h;
}

struct UniversalityReport {
    bool pass{false};
    bool theta_ok{false};
    double theta_margin{0.0};  // distance of Theta from the nearest n*pi/2
    bool transitions_ok{false};
    double min_transition_separation{0.0};  // rad/s, over electron-flip lines
    bool degenerate_levels{false};
    std::vector<std::string> reasons;
};

/// Indirect-controllability check for a single-nucleus system: Theta away
/// from multiples of pi/2, spectrally distinct electron-flip transitions,
/// non-degenerate levels.
inline UniversalityReport universality_check(const SecularParams& p,
                                             double theta_margin = 0.01,
                                             double linewidth = 0.0) {
    if (p.n_nuclei() < 1)
        throw std::invalid_argument("universality check requires a nucleus");
    UniversalityReport rep;
    if (linewidth <= 0.0) linewidth = 1e-9 * std::abs(p.omega_s);

    double worst_margin = constants::pi;
    for (int n = 0; n < p.n_nuclei(); ++n) {
        const double theta = mixing_angles(p, n).theta;
        const double frac =
            std::abs(std::remainder(theta, constants::pi / 2.0));
        worst_margin = std::min(worst_margin, frac);
    }
    rep.theta_margin = worst_margin;
    rep.theta_ok = worst_margin > theta_margin;
    if (!rep.theta_ok)
        rep.reasons.push_back("Theta within margin of a multiple of pi/2");

    const EigenStructure es = eigenstates(p);
    rep.degenerate_levels = es.degenerate;
    if (es.degenerate) rep.reasons.push_back("degenerate energy levels");

    // Electron-flip transition frequencies: |E_i - E_j| over cross-manifold
    // pairs, classified by the electron content of each eigenvector.
    const int dim = static_cast<int>(es.values.size());
    const Eigen::MatrixXcd sz2 =
        detail::embed(0.5 * circuits::pauli::sz(), 0, p.n_nuclei() + 1);
    std::vector<int> manifold(dim);
    for (int i = 0; i < dim; ++i)
        manifold[i] =
            (es.vectors.col(i).adjoint() * sz2 * es.vectors.col(i))(0).real() > 0 ? 1 : -1;
    std::vector<double> freqs;
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            if (manifold[i] == 1 && manifold[j] == -1)
                freqs.push_back(std::abs(es.values(i) - es.values(j)));
    double min_sep = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < freqs.size(); ++i)
        for (std::size_t j = i + 1; j < freqs.size(); ++j)
            min_sep = std::min(min_sep, std::abs(freqs[i] - freqs[j]));
    rep.min_transition_separation = min_sep;
    rep.transitions_ok = min_sep > linewidth;
    if (!rep.transitions_ok)
        rep.reasons.push_back("transition-frequency degeneracy");

    rep.pass = rep.theta_ok && rep.transitions_ok && !rep.degenerate_levels;
    return rep;
}

enum class ControlScheme { endor, ahc };

struct Linewidths {
    double esr;  // rad/s
    double nmr;  // rad/s
};

/// Tunable thresholds behind the orientation criteria; the published
/// criteria are qualitative, so the cutoffs live here.
struct OrientationConfig {
    double omega_1 = 2.0 * constants::pi * 10e6;       // MW Rabi amplitude
    double electron_t2 = 1e-6;                         // seconds
    double mw_bandwidth = 2.0 * constants::pi * 20e6;  // rad/s
    double gate_time_factor = 5.0;     // nuclear gate must fit in T2/factor
    double sin_theta_sq_max = 0.05;    // forbidden-rate nuclear-decay cap
};

struct CriterionScore {
    std::string name;
    double value;         // raw quantity the criterion looks at
    double satisfaction;  // in [0, 1]
};

struct OrientationReport {
    ControlScheme scheme;
    std::vector<CriterionScore> criteria;
    double score{0.0};  // product of satisfactions
    SecularParams params;
};

namespace detail {

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

/// Nuclear transition frequency of nucleus n within each electron manifold.
inline std::pair<double, double> nuclear_frequencies(const NucleusSecular& n) {
    return {0.5 * std::hypot(n.a - 2.0 * n.omega_i, n.b),
            0.5 * std::hypot(n.a + 2.0 * n.omega_i, n.b)};
}

inline double min_pairwise_separation(const std::vector<double>& v) {
    double sep = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = i + 1; j < v.size(); ++j)
            sep = std::min(sep, std::abs(v[i] - v[j]));
    return sep;
}

}  // namespace detail

/// Score a field orientation for one control scheme. Each criterion reports
/// its raw value and a normalized satisfaction; the total is the product.
inline OrientationReport orientation_score(const ESpinSystem& system,
                                           ControlScheme scheme,
                                           const Linewidths& lw,
                                           const OrientationConfig& cfg = {}) {
    OrientationReport rep;
    rep.scheme = scheme;
    rep.params = secular_params(system);
    const auto& p = rep.params;
    const int k = p.n_nuclei();

    std::vector<double> sin_thetas(k);
    for (int n = 0; n < k; ++n)
        sin_thetas[n] = std::abs(std::sin(mixing_angles(p, n).theta));

    // Allowed ESR lines: electron flips with every nuclear branch preserved.
    std::vector<double> esr_lines;
    for (std::int64_t mask = 0; mask < (std::int64_t{1} << k); ++mask) {
        double f = std::abs(p.omega_s);
        for (int n = 0; n < k; ++n) {
            const auto [fu, fd] = detail::nuclear_frequencies(p.nuclei[n]);
            f += (((mask >> n) & 1) ? 0.5 : -0.5) * (fu - fd);
        }
        esr_lines.push_back(f);
    }
    std::vector<double> nmr_lines;
    for (int n = 0; n < k; ++n) {
        const auto [fu, fd] = detail::nuclear_frequencies(p.nuclei[n]);
        nmr_lines.push_back(fu);
        nmr_lines.push_back(fd);
    }

    if (scheme == ControlScheme::endor) {
        // 1. Forbidden rate as small as possible.
        double sat1 = 1.0, worst = 0.0;
        for (double s : sin_thetas) {
            sat1 *= 1.0 - s;
            worst = std::max(worst, s);
        }
        rep.criteria.push_back({"forbidden_rate", worst, detail::clamp01(sat1)});

        // 2. Allowed transitions resolved within their linewidths.
        const double esr_sep = detail::min_pairwise_separation(esr_lines);
        const double nmr_sep = detail::min_pairwise_separation(nmr_lines);
        double sat2 = 1.0;
        if (k > 0 && esr_lines.size() > 1)
            sat2 *= detail::clamp01(esr_sep / lw.esr);
        if (nmr_lines.size() > 1) sat2 *= detail::clamp01(nmr_sep / lw.nmr);
        rep.criteria.push_back(
            {"allowed_separation", std::min(esr_sep, nmr_sep), sat2});

        // 3. All relevant ESR lines inside the MW excitation window.
        double spread = 0.0;
        for (double f : esr_lines)
            for (double g : esr_lines) spread = std::max(spread, std::abs(f - g));
        const double sat3 =
            spread == 0.0 ? 1.0 : detail::clamp01(cfg.mw_bandwidth / spread);
        rep.criteria.push_back({"mw_window", spread, sat3});
    } else {
        // 1. Forbidden rate strong enough for fast nuclear gates.
        double sat1 = 1.0, slowest = 0.0;
        for (double s : sin_thetas) {
            if (s == 0.0) {
                sat1 = 0.0;
                slowest = std::numeric_limits<double>::infinity();
                break;
            }
            const double gate_time = 2.0 * constants::pi / (cfg.omega_1 * s);
            slowest = std::max(slowest, gate_time);
            sat1 *= detail::clamp01((cfg.electron_t2 / cfg.gate_time_factor) /
                                    gate_time);
        }
        rep.criteria.push_back({"gate_speed", slowest, sat1});

        // 2. ...but weak enough not to shorten nuclear T1.
        double sat2 = 1.0, worst = 0.0;
        for (double s : sin_thetas) {
            worst = std::max(worst, s * s);
            if (s > 0.0) sat2 *= detail::clamp01(cfg.sin_theta_sq_max / (s * s));
        }
        rep.criteria.push_back({"nuclear_t1_protection", worst, sat2});

        // 3. Every transition (allowed and forbidden) spectrally distinct.
        const EigenStructure es = eigenstates(p);
        const int dim = static_cast<int>(es.values.size());
        const Eigen::MatrixXcd sz2 =
            detail::embed(0.5 * circuits::pauli::sz(), 0, k + 1);
        std::vector<int> manifold(dim);
        for (int i = 0; i < dim; ++i)
            manifold[i] = (es.vectors.col(i).adjoint() * sz2 * es.vectors.col(i))(0)
                                  .real() > 0
                              ? 1
                              : -1;
        std::vector<double> all_lines;
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j)
                if (manifold[i] == 1 && manifold[j] == -1)
                    all_lines.push_back(std::abs(es.values(i) - es.values(j)));
        const double sep = detail::min_pairwise_separation(all_lines);
        const double sat3 =
            all_lines.size() > 1 ? detail::clamp01(sep / lw.esr) : 1.0;
        rep.criteria.push_back({"transition_separation", sep, sat3});
    }

    rep.score = 1.0;
    for (const auto& c : rep.criteria) rep.score *= c.satisfaction;
    return rep;
}

struct SweepPoint {
    Eigen::Vector3d direction;
    double score;
};

/// Fibonacci-lattice directions on the unit sphere.
inline std::vector<Eigen::Vector3d> sphere_grid(int count) {
    std::vector<Eigen::Vector3d> dirs;
    dirs.reserve(count);
    const double golden = constants::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
        const double z = 1.0 - 2.0 * (i + 0.5) / count;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * i;
        dirs.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
    }
    return dirs;
}

/// Score every direction of a sphere grid and return the points (best last).
inline std::vector<SweepPoint> orientation_sweep(ESpinSystem system,
                                                 ControlScheme scheme,
                                                 const Linewidths& lw, int grid,
                                                 const OrientationConfig& cfg = {}) {
    std::vector<SweepPoint> pts;
    pts.reserve(grid);
    for (const auto& dir : sphere_grid(grid)) {
        system.field_direction = dir;
        pts.push_back({dir, orientation_score(system, scheme, lw, cfg).score});
    }
    std::stable_sort(pts.begin(), pts.end(),
                     [](const SweepPoint& a, const SweepPoint& b) {
                         return a.score < b.score;
                     });
    return pts;
}

/// Rescore a spherical cap of angular radius `radius` around `center` on a
/// finer lattice; returns the best direction found (includes the center).
inline SweepPoint refine_orientation(ESpinSystem system, ControlScheme scheme,
                                     const Linewidths& lw,
                                     const Eigen::Vector3d& center, double radius,
                                     int count,
                                     const OrientationConfig& cfg = {}) {
    const Eigen::Quaterniond to_center =
        Eigen::Quaterniond::FromTwoVectors(Eigen::Vector3d(0, 0, 1), center);
    system.field_direction = center.normalized();
    SweepPoint best{system.field_direction,
                    orientation_score(system, scheme, lw, cfg).score};
    const double golden = constants::pi * (3.0 - std::sqrt(5.0));
    const double z_min = std::cos(radius);
    for (int i = 0; i < count; ++i) {
        const double z = 1.0 - (1.0 - z_min) * (i + 0.5) / count;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * i;
        const Eigen::Vector3d dir =
            to_center * Eigen::Vector3d(r * std::cos(phi), r * std::sin(phi), z);
        system.field_direction = dir.normalized();
        const double score = orientation_score(system, scheme, lw, cfg).score;
        if (score > best.score) best = {system.field_direction, score};
    }
    return best;
}

}  // namespace hbac::espin
