#pragma once

#include "ionfridge/fockspace.hpp"
#include "ionfridge/states.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace ionfridge::dynamics {

// Sector block of H/hbar (rad/s): real symmetric tridiagonal.
//   offdiag[k] = xi * sqrt((n+1)(N-n)(M-n)),  n = nh_min + k
//   diag[k]    = detuning * n
struct SectorHamiltonian {
    fock::SectorBasis basis;
    Eigen::VectorXd diag;
    Eigen::VectorXd offdiag;
};

SectorHamiltonian build_sector_hamiltonian(const fock::SectorBasis& basis, double xi, double detuning = 0.0);
SectorHamiltonian build_sector_hamiltonian(fock::SectorLabel label, double xi, double detuning = 0.0);

struct SectorSpectrum {
    Eigen::VectorXd energies; // ascending, rad/s
    Eigen::MatrixXd vectors;  // columns are eigenvectors
    double min_gap = 0.0;     // smallest spacing between consecutive energies (inf for dim 1)
};

// Throws NumericalError if the tridiagonal eigensolver fails.
SectorSpectrum diagonalize(const SectorHamiltonian& h);

struct SectorState {
    fock::SectorBasis basis;
    double weight = 0.0;
    Eigen::MatrixXcd rho; // unit trace within the sector
};

struct ThreeModeEnsemble {
    std::vector<SectorState> sectors;
    double discarded_weight = 0.0;
    double xi = 0.0;       // rad/s
    double detuning = 0.0; // rad/s

    double retained_weight() const;
    // Trace, Hermiticity, positivity and weight bookkeeping; throws NumericalError.
    void validate(double trace_tol = 1e-9) const;
};

struct ModePreps {
    states::ModePrep h;
    states::ModePrep w;
    states::ModePrep c;
};

struct ModeMeans {
    double h = 0.0;
    double w = 0.0;
    double c = 0.0;
};

// Per-mode phonon marginals p(n), indexed by n.
struct Marginals {
    std::vector<double> h;
    std::vector<double> w;
    std::vector<double> c;

    const std::vector<double>& mode(char which) const;
};

inline constexpr int max_auto_cutoff = 2400;

// Sector-diagonal initial ensemble: each retained sector holds the product
// populations p_h p_w p_c of its basis states, renormalized in the sector.
// Without caps the per-mode cutoff is doubled from `cutoff` (up to
// max_auto_cutoff) until the tail is below 1e-6 epsilon.
ThreeModeEnsemble assemble_initial(const ModePreps& preps, const fock::TruncationPolicy& policy, double xi,
                                   double detuning = 0.0, int cutoff = states::default_cutoff);

ThreeModeEnsemble assemble_from_distributions(const states::PhononDistribution& p_h,
                                              const states::PhononDistribution& p_w,
                                              const states::PhononDistribution& p_c,
                                              const fock::TruncationPolicy& policy, double xi,
                                              double detuning = 0.0);

// Means and marginals conditioned on the retained weight.
ModeMeans mean_phonons(const ThreeModeEnsemble& ensemble);
Marginals marginals(const ThreeModeEnsemble& ensemble);

ThreeModeEnsemble evolve(const ThreeModeEnsemble& ensemble, double t);

// Infinite-time average: projection onto each eigenspace of the sector
// Hamiltonian (eigenvalues closer than 1e-12 of the sector scale are merged).
ThreeModeEnsemble long_time_average(const ThreeModeEnsemble& ensemble);

// d rho/dt = -xi_in [H/hbar, [H/hbar, rho]]: in the eigenbasis element (i, j)
// is multiplied by exp(-xi_in (w_i - w_j)^2 t). xi_in has units of time.
struct IncoherentConfig {
    double xi_in = 0.0;
    double t = 0.0;
};

ThreeModeEnsemble incoherent_evolve(const ThreeModeEnsemble& ensemble, const IncoherentConfig& cfg);

// xi_in giving the slowest retained sector coherence a decay time of 5/xi.
double default_incoherent_strength(const ThreeModeEnsemble& ensemble);

// Caches each sector's eigendecomposition and rotated initial state so that
// observables at many times cost O(sum dim^2) each. Results do not depend on
// evaluation order: sector contributions are summed in ensemble order.
class SpectralPropagator {
public:
    explicit SpectralPropagator(const ThreeModeEnsemble& ensemble);

    ModeMeans means_at(double t) const;
    Marginals marginals_at(double t) const;
    ModeMeans long_time_means() const;
    Marginals long_time_marginals() const;
    ModeMeans incoherent_means_at(double xi_in, double t) const;

    std::vector<ModeMeans> trajectory(std::span<const double> times) const;

    const ThreeModeEnsemble& ensemble() const { return ensemble_; }
    double smallest_gap() const { return smallest_gap_; }
    std::size_t sector_count() const { return blocks_.size(); }

private:
    struct Block {
        double weight = 0.0;
        int N = 0;
        int M = 0;
        int nh_min = 0;
        Eigen::VectorXd energies;
        Eigen::MatrixXd vectors;
        Eigen::MatrixXcd rho_eig;  // U^T rho U
        double diag_nh = 0.0;      // sum_i A_ii rho_ii
        double dephased_nh = 0.0;  // degenerate-aware long-time <n_h>
        std::vector<int> groups;   // degenerate-eigenvalue group of each eigenvector
        std::vector<int> pair_i;   // off-diagonal pairs i < j
        std::vector<int> pair_j;
        std::vector<double> pair_omega;
        std::vector<std::complex<double>> pair_coeff; // A_ij rho_ij
    };

    ModeMeans combine(const std::vector<double>& nh_per_block) const;
    template <typename PhaseFn>
    Marginals marginals_with(PhaseFn phase) const;

    ThreeModeEnsemble ensemble_;
    std::vector<Block> blocks_;
    double smallest_gap_ = 0.0;
    int max_n_h_ = 0;
    int max_n_w_ = 0;
    int max_n_c_ = 0;
};

} // namespace ionfridge::dynamics
