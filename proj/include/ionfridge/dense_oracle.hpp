#pragma once

#include "ionfridge/dynamics.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace ionfridge::dynamics {

// Full tensor-product reference: no sector decomposition, no population-only
// shortcut. Only meant for small occupation caps.
inline constexpr int max_dense_cap = 8;

struct DenseCaps {
    int h = 6;
    int w = 6;
    int c = 6;
};

// S(z) = exp((z* a^2 - z a^dag^2) / 2), z = r e^{i theta}, on a dim-level ladder.
Eigen::MatrixXcd squeeze_operator(double r, double theta, int dim);

// Single-mode density matrix restricted to n <= cap and renormalized. Coherent
// and squeezed states keep their number-basis coherences.
Eigen::MatrixXcd single_mode_density(const states::ModePrep& prep, int cap);

// Mean phonons of the capped three-mode state evolved under
// xi (a_h^dag a_w a_c + h.c.) + detuning a_h^dag a_h at each time.
std::vector<ModeMeans> dense_oracle_evolve(const ModePreps& preps, double xi, std::span<const double> times,
                                           DenseCaps caps, double detuning = 0.0);

// Truncation policy that makes the sector method use the same capped,
// renormalized model space as dense_oracle_evolve.
fock::TruncationPolicy oracle_matching_policy(DenseCaps caps);

} // namespace ionfridge::dynamics
