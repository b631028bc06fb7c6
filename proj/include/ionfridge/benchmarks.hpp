#pragma once

#include "ionfridge/trap.hpp"

#include <span>
#include <utility>

namespace ionfridge::benchmarks {

struct OccupationTriple {
    double nbar_h = 0.0;
    double nbar_w = 0.0;
    double nbar_c = 0.0;
};

// (1 + 1/n_h) - (1 + 1/n_w)(1 + 1/n_c); zero on the thermal-equilibrium manifold.
double equilibrium_residual(const OccupationTriple& n);

// Unique n_c with (1 + 1/n_h) = (1 + 1/n_w)(1 + 1/n_c). Throws DomainError
// when n_w <= n_h (no positive solution) or an input is not positive.
double equilibrium_cold_occupation(double nbar_h, double nbar_w);

struct CoolingPrediction {
    bool cooled = false;
    double threshold_w = 0.0; // +inf when n_c <= n_h
};

// Strict n_w > n_h (1 + n_c) / (n_c - n_h).
CoolingPrediction cooling_condition(const OccupationTriple& in);

struct OccupationRates {
    double dn_h = 0.0;
    double dn_w = 0.0;
    double dn_c = 0.0;
};

// sum_i hbar omega_i dn_i / T_i, W/K.
double entropy_flow(const OccupationTriple& n, const OccupationRates& rates, const trap::ModeFrequencies& freqs);

// Shift eps such that (n_h - eps, n_w + eps, n_c + eps) satisfies the
// equilibrium condition: the classical end point reachable under the
// interaction's constraint. eps < 0 means the cold mode is cooled.
double classical_equilibrium_shift(const OccupationTriple& in);

struct CoolingReport {
    double eps_h = 0.0; // n_h^in - n_h^final
    double eps_w = 0.0; // n_w^final - n_w^in
    double eps_c = 0.0; // n_c^final - n_c^in
    bool cooled = false;
    double threshold_w = 0.0;
};

CoolingReport cooling_report(const OccupationTriple& in, const OccupationTriple& final_state);

struct EquilibriumEstimate {
    double nbar_c_eq = 0.0;
    bool extrapolated = false; // every eps_h had the same sign
};

// Linear interpolation between the two points with the smallest |eps_h| to
// the eps_h = 0 crossing. Points are (nbar_c_in, eps_h).
EquilibriumEstimate extract_equilibrium_nc(std::span<const std::pair<double, double>> points);

} // namespace ionfridge::benchmarks
