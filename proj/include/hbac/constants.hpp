#pragma once

#include <optional>
#include <string_view>

namespace hbac::constants {

// CODATA 2018 values, SI units.
inline constexpr double hbar = 1.054571817e-34;      // J s
inline constexpr double planck_h = 6.62607015e-34;   // J s
inline constexpr double k_boltzmann = 1.380649e-23;  // J / K
inline constexpr double mu0 = 1.25663706212e-6;      // N / A^2
inline constexpr double bohr_magneton = 9.2740100783e-24;  // J / T
inline constexpr double g_electron = 2.00231930436256;     // free-electron g factor
inline constexpr double pi = 3.14159265358979323846;

// Gyromagnetic ratios in rad s^-1 T^-1 (sign retained).
inline constexpr double gamma_1h = 2.6752218744e8;
inline constexpr double gamma_13c = 6.728284e7;
inline constexpr double gamma_15n = -2.71261804e7;
inline constexpr double gamma_electron = 1.76085963023e11;  // |gamma_e|

inline std::optional<double> gamma_for_species(std::string_view species) {
    if (species == "1H" || species == "proton") return gamma_1h;
    if (species == "13C") return gamma_13c;
    if (species == "15N") return gamma_15n;
    if (species == "e" || species == "electron") return gamma_electron;
    return std::nullopt;
}

}  // namespace hbac::constants
