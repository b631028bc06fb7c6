#pragma once

#include "ionfridge/constants.hpp"

#include <optional>
#include <string>

namespace ionfridge::trap {

// Single-ion trap frequencies of a three-ion linear chain. All angular, rad/s.
struct TrapConfig {
    double omega_x = 0.0;
    double omega_y = 0.0; // carried for reporting; no implemented formula uses it
    double omega_z = 0.0;
    double ion_mass = 171.0 * codata2014.amu;
    int n_ions = 3;

    static TrapConfig from_khz(double fx_khz, double fy_khz, double fz_khz,
                               double ion_mass = 171.0 * codata2014.amu);

    // Throws DomainError unless omega_x > omega_y > 0, omega_z > 0 and the
    // cold (radial zigzag) mode has a real frequency.
    void validate() const;
};

struct ModeFrequencies {
    double omega_h = 0.0; // axial zigzag
    double omega_w = 0.0; // radial rocking
    double omega_c = 0.0; // radial zigzag

    double resonance_residual() const { return omega_h - omega_w - omega_c; }
};

struct CouplingRate {
    double xi = 0.0; // rad/s
    double x0 = 0.0; // m
};

ModeFrequencies mode_frequencies(const TrapConfig& trap);

double equilibrium_spacing(const TrapConfig& trap,
                           const PhysicalConstants& k = codata2014);

// Trilinear coupling rate evaluated literally:
//   xi = (9/5) * omega_z^2 * sqrt(hbar / (m omega_h omega_w omega_c)) / x0
CouplingRate coupling_rate(const TrapConfig& trap,
                           const PhysicalConstants& k = codata2014);

// Bose-Einstein temperature of a mode with mean occupation nbar. Throws
// DomainError for nbar <= 0 or omega <= 0.
double mode_temperature(double nbar, double omega,
                        const PhysicalConstants& k = codata2014);

// T_c < T_h < T_w, the ordering under which the cold mode is refrigerated.
bool refrigeration_ordering(double nbar_h, double nbar_w, double nbar_c,
                            const ModeFrequencies& freqs);

// hbar omega_c delta_n_c / (3 m tau), W/kg. Positive means the cold mode lost energy.
double cooling_power_per_mass(double delta_n_c, double tau, double omega_c,
                              double ion_mass,
                              const PhysicalConstants& k = codata2014);

// Trap settings and measured couplings of the two reported configurations.
TrapConfig reference_config_a();
TrapConfig reference_config_b();
inline constexpr double measured_xi_a = khz_to_rad_per_s(2.64);
inline constexpr double measured_xi_b = khz_to_rad_per_s(1.89);

struct CouplingComparison {
    double formula_xi = 0.0;
    double measured_xi = 0.0;
    double ratio = 0.0; // measured / formula
    std::optional<std::string> warning;
};

// Flags any measured/formula ratio outside [1/tolerance_factor, tolerance_factor]
// with tolerance_factor = 1.2; the literal formula is never rescaled.
CouplingComparison compare_coupling(double formula_xi, double measured_xi);

} // namespace ionfridge::trap
