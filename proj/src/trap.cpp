#include "ionfridge/trap.hpp"

#include "ionfridge/errors.hpp"

#include <cmath>
#include <fmt/format.h>
#include <numbers>

namespace ionfridge::trap {

TrapConfig TrapConfig::from_khz(double fx_khz, double fy_khz, double fz_khz, double ion_mass)
{
    TrapConfig t;
    t.omega_x = khz_to_rad_per_s(fx_khz);
    t.omega_y = khz_to_rad_per_s(fy_khz);
    t.omega_z = khz_to_rad_per_s(fz_khz);
    t.ion_mass = ion_mass;
    return t;
}

void TrapConfig::validate() const
{
    if (!(omega_z > 0.0))
        throw DomainError("trap: omega_z must be positive");
    if (!(omega_y > 0.0) || !(omega_x > omega_y))
        throw DomainError("trap: require omega_x > omega_y > 0");
    if (!(ion_mass > 0.0))
        throw DomainError("trap: ion mass must be positive");
    if (n_ions != 3)
        throw DomainError("trap: only three-ion chains are modeled");
    const double wx2 = omega_x * omega_x;
    const double wz2 = omega_z * omega_z;
    // The boundary itself counts as invalid, with slack for a rounded omega_x.
    if (!(wx2 > wz2) || !(wx2 > 12.0 / 5.0 * wz2 * (1.0 + 1e-12)))
        throw DomainError(fmt::format(
            "trap: radial zigzag frequency is imaginary (omega_x^2 = {:.6g}, 12/5 omega_z^2 = {:.6g})",
            wx2, 12.0 / 5.0 * wz2));
}

ModeFrequencies mode_frequencies(const TrapConfig& trap)
{
    trap.validate();
    const double wx2 = trap.omega_x * trap.omega_x;
    const double wz2 = trap.omega_z * trap.omega_z;
    ModeFrequencies f;
    f.omega_h = std::sqrt(29.0 / 5.0) * trap.omega_z;
    f.omega_w = std::sqrt(wx2 - wz2);
    f.omega_c = std::sqrt(wx2 - 12.0 * wz2 / 5.0);
    return f;
}

double equilibrium_spacing(const TrapConfig& trap, const PhysicalConstants& k)
{
    trap.validate();
    const double num = 5.0 * k.e_charge * k.e_charge;
    const double den = 16.0 * std::numbers::pi * k.eps0 * trap.ion_mass * trap.omega_z * trap.omega_z;
    return std::cbrt(num / den);
}

CouplingRate coupling_rate(const TrapConfig& trap, const PhysicalConstants& k)
{
    const ModeFrequencies f = mode_frequencies(trap);
    CouplingRate c;
    c.x0 = equilibrium_spacing(trap, k);
    const double root = std::sqrt(k.hbar / (trap.ion_mass * f.omega_h * f.omega_w * f.omega_c));
    c.xi = 9.0 / 5.0 * trap.omega_z * trap.omega_z * root / c.x0;
    return c;
}

double mode_temperature(double nbar, double omega, const PhysicalConstants& k)
{
    if (!(nbar > 0.0))
        throw DomainError(fmt::format("mode_temperature: nbar = {} has no finite-temperature "
                                      "representation (nbar = 0 is T = 0)", nbar));
    if (!(omega > 0.0))
        throw DomainError("mode_temperature: omega must be positive");
    return k.hbar * omega / (k.k_B * std::log1p(1.0 / nbar));
}

bool refrigeration_ordering(double nbar_h, double nbar_w, double nbar_c, const ModeFrequencies& freqs)
{
    const double th = mode_temperature(nbar_h, freqs.omega_h);
    const double tw = mode_temperature(nbar_w, freqs.omega_w);
    const double tc = mode_temperature(nbar_c, freqs.omega_c);
    return tc < th && th < tw;
}

double cooling_power_per_mass(double delta_n_c, double tau, double omega_c, double ion_mass,
                              const PhysicalConstants& k)
{
    if (!(tau > 0.0))
        throw DomainError("cooling_power_per_mass: tau must be positive");
    return k.hbar * omega_c * delta_n_c / (3.0 * ion_mass * tau);
}

TrapConfig reference_config_a() { return TrapConfig::from_khz(1025.1, 937.7, 570.0); }
TrapConfig reference_config_b() { return TrapConfig::from_khz(764.9, 701.8, 425.3); }

CouplingComparison compare_coupling(double formula_xi, double measured_xi)
{
    if (!(formula_xi > 0.0) || !(measured_xi > 0.0))
        throw DomainError("compare_coupling: coupling rates must be positive");
    CouplingComparison c{formula_xi, measured_xi, measured_xi / formula_xi, std::nullopt};
    constexpr double tolerance_factor = 1.2;
    if (c.ratio > tolerance_factor || c.ratio < 1.0 / tolerance_factor) {
        c.warning = fmt::format(
            "coupling-rate formula gives 2pi x {:.4g} kHz but measured is 2pi x {:.4g} kHz "
            "(measured/formula = {:.3f}); the formula value is reported unmodified",
            rad_per_s_to_khz(formula_xi), rad_per_s_to_khz(measured_xi), c.ratio);
    }
    return c;
}

} // namespace ionfridge::trap
