#pragma once

#include <string_view>
#include <vector>

namespace ionfridge::states {

enum class PrepKind { thermal, coherent, squeezed_thermal, fock };

std::string_view to_string(PrepKind kind);
PrepKind prep_kind_from_string(std::string_view name);

// Declarative initial state of one mode. Only the fields relevant to `kind`
// are read: thermal{nbar}, coherent{alpha_sq}, squeezed_thermal{nbar, r, theta},
// fock{n_fock}.
struct ModePrep {
    PrepKind kind = PrepKind::thermal;
    double nbar = 0.0;
    double alpha_sq = 0.0;
    double r = 0.0;
    double theta = 0.0;
    int n_fock = 0;

    static ModePrep thermal(double nbar);
    static ModePrep coherent(double mbar);
    static ModePrep squeezed_thermal(double nbar, double r, double theta = 0.0);
    static ModePrep squeezed_vacuum(double r, double theta = 0.0) { return squeezed_thermal(0.0, r, theta); }
    static ModePrep fock(int n);

    void validate() const;
    // Exact mean occupation of the untruncated state.
    double mean() const;
};

inline constexpr int default_cutoff = 300;

// Populations p(n), n = 0..cutoff, renormalized over the cutoff. tail_mass is
// the probability the untruncated distribution puts above the cutoff.
struct PhononDistribution {
    std::vector<double> p;
    double mean = 0.0;
    double tail_mass = 0.0;

    int cutoff() const { return static_cast<int>(p.size()) - 1; }
    double operator[](int n) const { return n >= 0 && n < static_cast<int>(p.size()) ? p[n] : 0.0; }
};

PhononDistribution thermal_distribution(double nbar, int cutoff = default_cutoff);
PhononDistribution coherent_distribution(double mbar, int cutoff = default_cutoff);
PhononDistribution squeezed_vacuum_distribution(double r, int cutoff = default_cutoff);

// |<n| S(r) |m>|^2 from the closed form with a terminating Gauss 2F1.
double squeezed_number_probability(int m, int n, double r);
PhononDistribution squeezed_number_distribution(int m, double r, int cutoff = default_cutoff);

// p(n) = sum_m thermal(m) |<n|S(r)|m>|^2.
PhononDistribution squeezed_thermal_distribution(double nbar, double r, int cutoff = default_cutoff);

PhononDistribution fock_distribution(int n, int cutoff = default_cutoff);

PhononDistribution prep_to_distribution(const ModePrep& prep, int cutoff = default_cutoff);

// Throws TruncationError when the tail above the cutoff exceeds 1e-6 of epsilon.
void check_cutoff(const PhononDistribution& dist, double epsilon);

// Random-walk preparation: nbar = nbar0 + steps * mbar, with the per-step
// coherent displacement mbar = beta * (100 us)^2 and squeezing r = rho_rate * t.
struct PreparationModel {
    double nbar0 = 0.0;
    double mbar = 0.0;
    int steps = 0;
    double beta = 0.0;     // phonons per us^2
    double rho_rate = 0.0; // squeezing parameter per us

    void validate() const;
};

inline constexpr double preparation_step_us = 100.0;

double random_walk_nbar(const PreparationModel& model);
double mbar_from_beta(double beta_per_us2);
double squeezing_parameter(const PreparationModel& model, double squeeze_time_us);

} // namespace ionfridge::states
