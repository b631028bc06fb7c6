#pragma once

#include <numbers>

namespace ionfridge {

// CODATA 2014 recommended values, 12 significant digits.
struct PhysicalConstants {
    double hbar = 1.05457180014e-34;    // J s
    double k_B = 1.38064852000e-23;     // J/K
    double eps0 = 8.85418781762e-12;    // F/m
    double e_charge = 1.60217662080e-19; // C
    double amu = 1.66053904020e-27;     // kg
};

inline constexpr PhysicalConstants codata2014{};

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Ordinary frequency in kHz to angular frequency in rad/s.
constexpr double khz_to_rad_per_s(double khz) { return two_pi * khz * 1e3; }
constexpr double rad_per_s_to_khz(double omega) { return omega / (two_pi * 1e3); }

constexpr double us_to_s(double us) { return us * 1e-6; }
constexpr double s_to_us(double s) { return s * 1e6; }

} // namespace ionfridge
