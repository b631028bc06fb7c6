#pragma once

#include "ionfridge/least_squares.hpp"
#include "ionfridge/states.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ionfridge::measurement {

// Red-sideband readout model:
//   p_up = a_bg + eta * sum_n p(n) (1 - cos(sqrt(n) omega_rabi t_rsb)) / 2
struct SidebandConfig {
    double omega_rabi = 0.0; // rad/s
    double t_rsb = 0.0;      // s
    double a_bg = 0.0;
    double eta = 1.0;
    double gamma0 = 0.0; // 1/s, used by the blue-sideband model only

    void validate() const;
};

double red_sideband_brightness(std::span<const double> p, const SidebandConfig& cfg);

// Blue-sideband flopping:
//   p_up(t) = (contrast/2) (1 - sum_n p(n) cos(sqrt(n+1) omega01 t) exp(-sqrt(n+1) gamma0 t)) + background
struct FloppingParams {
    double contrast = 1.0;
    double background = 0.0;
    double omega01 = 0.0; // rad/s
    double gamma0 = 0.0;  // 1/s
};

double blue_sideband_flopping_at(std::span<const double> p, const FloppingParams& params, double t);
std::vector<double> blue_sideband_flopping(std::span<const double> p, const FloppingParams& params,
                                           std::span<const double> times);

struct BrightnessSample {
    double t = 0.0; // s
    double p_up = 0.0;
    double sigma = 0.0;
};

// CSV with header `t_us,p_up,sigma`; throws ValidationError on malformed rows.
std::vector<BrightnessSample> read_brightness_csv(std::istream& in);
std::vector<BrightnessSample> read_brightness_csv(const std::filesystem::path& path);
void write_brightness_csv(std::ostream& out, std::span<const BrightnessSample> samples);

// Gaussian-noise samples of the blue-sideband model (sigma = 0 gives exact values).
std::vector<BrightnessSample> synthetic_flopping_data(std::span<const double> p, const FloppingParams& params,
                                                      std::span<const double> times, double sigma,
                                                      std::uint64_t seed);

// Linearized conversion of a measured brightness to a mean occupation using
// simulations at the nominal initial state and at +/- delta.
struct EstimatorConfig {
    double delta = 0.05;
    char mode_of_interest = 'c';

    void validate() const;
};

struct EstimatorInputs {
    double p_up_th = 0.0;
    double nbar_th = 0.0;
    double p_up_plus = 0.0;
    double nbar_plus = 0.0;
    double p_up_minus = 0.0;
    double nbar_minus = 0.0;
};

// nbar_th + (dn/dp) (p_up_exp - p_up_th); throws NumericalError when the
// +/- delta brightnesses differ by less than 1e-6.
double estimate_nbar(double p_up_exp, const EstimatorInputs& sim);

enum class DistributionModel { thermal, coherent, squeezed_vacuum, squeezed_thermal, free };

std::string_view to_string(DistributionModel model);
DistributionModel distribution_model_from_string(std::string_view name);

inline constexpr int free_model_bins = 14; // p(0..13)

struct FitOptions {
    FloppingParams initial;
    bool fit_contrast = true;
    bool fit_background = true;
    bool fit_rabi = false;
    bool fit_gamma = false;
    // Starting values for the distribution parameters (model order); empty = defaults.
    std::vector<double> initial_distribution;
    std::uint64_t seed = 0;
    int restarts = 3; // jittered starts in addition to the nominal one
    fit::LeastSquaresOptions solver;
};

struct FitResult {
    DistributionModel model = DistributionModel::thermal;
    std::vector<std::string> names;
    Eigen::VectorXd values;
    Eigen::VectorXd errors;
    Eigen::MatrixXd covariance;
    double chi2 = 0.0;
    double reduced_chi2 = 0.0;
    int dof = 0;
    int iterations = 0;
    bool rank_deficient = false;
    FloppingParams flopping;
    std::vector<double> populations;       // fitted p(n)
    std::vector<double> population_errors; // free model only
    std::vector<double> chi2_history;      // best start

    double value(std::string_view name) const;
    double error(std::string_view name) const;
};

// Weighted least-squares fit of the blue-sideband model. The free model fits
// p(0..13) through a softmax so the simplex constraints hold exactly.
FitResult fit_distribution(std::span<const BrightnessSample> data, DistributionModel model,
                           const FitOptions& options = {});

// Populations of a parametric model (thermal: {nbar}, coherent: {mbar},
// squeezed_vacuum: {r}, squeezed_thermal: {nbar, r}, free: 13 logits).
std::vector<double> model_populations(DistributionModel model, std::span<const double> params);

struct CurvePoint {
    double x = 0.0;
    double y = 0.0;
    double sigma = 1.0;
};

struct PreparationData {
    std::vector<CurvePoint> coherent_mean_vs_time_us; // m_t = n0 + beta t^2
    std::optional<double> coherent_offset;            // independently measured n0
    std::vector<CurvePoint> thermal_mean_vs_steps;    // nbar = nbar0 + steps * mbar
    std::vector<CurvePoint> squeezing_vs_time_us;     // r = rho t
};

struct PreparationFit {
    states::PreparationModel model;
    double beta = 0.0, beta_err = 0.0;
    double coherent_offset = 0.0, coherent_offset_err = 0.0;
    double mbar_from_beta = 0.0, mbar_from_beta_err = 0.0;
    double step_slope = 0.0, step_slope_err = 0.0;
    double step_offset = 0.0, step_offset_err = 0.0;
    double rho_rate = 0.0, rho_rate_err = 0.0;
};

// Weighted linear fits of the preparation calibration curves. Each curve is
// optional, but a supplied curve needs at least three points.
PreparationFit fit_preparation_curves(const PreparationData& data);

} // namespace ionfridge::measurement
