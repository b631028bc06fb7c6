#include "ionfridge/errors.hpp"
#include "ionfridge/measurement.hpp"
#include "ionfridge/states.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace ionfridge;
using namespace ionfridge::measurement;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

std::vector<double> flop_times(int n = 80, double t_max = 250e-6)
{
    std::vector<double> t(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        t[static_cast<std::size_t>(i)] = t_max * (i + 1) / n;
    return t;
}

FloppingParams nominal() { return {.contrast = 0.95, .background = 0.02, .omega01 = two_pi * 12e3, .gamma0 = 0.0}; }

FitOptions options_for(const FloppingParams& p)
{
    FitOptions o;
    o.initial = p;
    o.initial.contrast = 1.0;
    o.initial.background = 0.0;
    return o;
}

} // namespace

TEST_SUITE("measurement")
{
    TEST_CASE("red sideband brightness")
    {
        const auto th = states::thermal_distribution(1.0, 200);
        const double omega = two_pi * 10e3;
        SidebandConfig cfg{.omega_rabi = omega, .t_rsb = std::numbers::pi / omega};
        CHECK(red_sideband_brightness(th.p, cfg) == doctest::Approx(0.3512638061149248).epsilon(1e-12));
        const std::vector<double> ground{1.0};
        cfg.a_bg = 0.03;
        cfg.eta = 0.9;
        CHECK(red_sideband_brightness(ground, cfg) == doctest::Approx(0.03));
        cfg.eta = -0.1;
        CHECK_THROWS_AS(cfg.validate(), ValidationError);
    }

    TEST_CASE("blue sideband flopping")
    {
        const std::vector<double> ground{1.0};
        FloppingParams p{.contrast = 1.0, .background = 0.0, .omega01 = two_pi * 10e3, .gamma0 = 0.0};
        CHECK(blue_sideband_flopping_at(ground, p, 0.0) == doctest::Approx(0.0));
        CHECK(blue_sideband_flopping_at(ground, p, std::numbers::pi / p.omega01) == doctest::Approx(1.0));
        p.gamma0 = 1e4;
        const double t = 3e-3;
        CHECK(blue_sideband_flopping_at(ground, p, t) == doctest::Approx(0.5).epsilon(1e-6));
        const std::vector<double> one{0.0, 1.0};
        p.gamma0 = 0.0;
        CHECK(blue_sideband_flopping_at(one, p, 0.25e-4) ==
              doctest::Approx(0.5 * (1.0 - std::cos(std::sqrt(2.0) * p.omega01 * 0.25e-4))));
    }

    TEST_CASE("estimator")
    {
        const EstimatorInputs in{.p_up_th = 0.30, .nbar_th = 2.0, .p_up_plus = 0.31, .nbar_plus = 2.05,
                                 .p_up_minus = 0.29, .nbar_minus = 1.95};
        CHECK(estimate_nbar(0.30, in) == doctest::Approx(2.0));
        CHECK(estimate_nbar(0.32, in) == doctest::Approx(2.1));
        EstimatorInputs flat = in;
        flat.p_up_plus = flat.p_up_minus = 0.3;
        CHECK_THROWS_AS(estimate_nbar(0.3, flat), NumericalError);
        CHECK_THROWS_AS((EstimatorConfig{.delta = 0.0}.validate()), ValidationError);
        CHECK_THROWS_AS((EstimatorConfig{.mode_of_interest = 'x'}.validate()), ValidationError);
    }

    TEST_CASE("model names")
    {
        CHECK(to_string(DistributionModel::squeezed_vacuum) == "squeezed-vacuum");
        CHECK(distribution_model_from_string("squeezed_thermal") == DistributionModel::squeezed_thermal);
        CHECK(distribution_model_from_string("free") == DistributionModel::free);
        CHECK_THROWS_AS(distribution_model_from_string("poisson"), ValidationError);
    }

    TEST_CASE("noiseless thermal fit is exact")
    {
        const auto p = states::thermal_distribution(1.82);
        const auto params = nominal();
        const auto data = synthetic_flopping_data(p.p, params, flop_times(), 0.0, 1);
        const auto fit = fit_distribution(data, DistributionModel::thermal, options_for(params));
        CHECK(fit.value("nbar") == doctest::Approx(1.82).epsilon(1e-6));
        CHECK(fit.flopping.contrast == doctest::Approx(0.95).epsilon(1e-6));
        CHECK(fit.chi2 < 1e-8);
        for (std::size_t i = 1; i < fit.chi2_history.size(); ++i)
            CHECK(fit.chi2_history[i] <= fit.chi2_history[i - 1]);
    }

    TEST_CASE("noisy fits recover the generating parameters")
    {
        const auto params = nominal();
        SUBCASE("thermal")
        {
            const auto p = states::thermal_distribution(1.82);
            const auto data = synthetic_flopping_data(p.p, params, flop_times(), 0.02, 7);
            const auto fit = fit_distribution(data, DistributionModel::thermal, options_for(params));
            CHECK(std::abs(fit.value("nbar") - 1.82) < 0.1);
            CHECK(fit.error("nbar") > 0.0);
            CHECK(fit.reduced_chi2 == doctest::Approx(1.0).epsilon(0.5));
        }
        SUBCASE("squeezed vacuum")
        {
            const auto p = states::squeezed_vacuum_distribution(1.09);
            const auto data = synthetic_flopping_data(p.p, params, flop_times(120, 400e-6), 0.02, 11);
            const auto fit = fit_distribution(data, DistributionModel::squeezed_vacuum, options_for(params));
            CHECK(std::abs(fit.value("r") - 1.09) < 0.15);
        }
        SUBCASE("coherent")
        {
            const auto p = states::coherent_distribution(2.5);
            const auto data = synthetic_flopping_data(p.p, params, flop_times(), 0.02, 3);
            const auto fit = fit_distribution(data, DistributionModel::coherent, options_for(params));
            CHECK(std::abs(fit.value("mbar") - 2.5) < 0.2);
        }
    }

    TEST_CASE("free fit stays on the simplex")
    {
        const auto p = states::squeezed_thermal_distribution(0.77, 1.2);
        const auto params = nominal();
        const auto data = synthetic_flopping_data(p.p, params, flop_times(200, 500e-6), 0.01, 5);
        auto opt = options_for(params);
        opt.fit_contrast = false;
        opt.fit_background = false;
        opt.initial = params;
        const auto fit = fit_distribution(data, DistributionModel::free, opt);
        REQUIRE(fit.populations.size() == static_cast<std::size_t>(free_model_bins));
        double sum = 0.0;
        for (double x : fit.populations) {
            CHECK(x >= 0.0);
            sum += x;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(fit.population_errors.size() == fit.populations.size());
        for (int n = 0; n <= 6; ++n)
            CHECK(std::abs(fit.populations[static_cast<std::size_t>(n)] - p[n]) < 0.05);
    }

    TEST_CASE("fit argument checks")
    {
        const auto p = states::thermal_distribution(1.0);
        const std::vector<double> few_t{1e-5, 2e-5};
        const auto few = synthetic_flopping_data(p.p, nominal(), few_t, 0.0, 1);
        CHECK_THROWS_AS(fit_distribution(few, DistributionModel::thermal, options_for(nominal())), ValidationError);
        auto opt = options_for(nominal());
        opt.initial.omega01 = 0.0;
        const auto data = synthetic_flopping_data(p.p, nominal(), flop_times(), 0.0, 1);
        CHECK_THROWS_AS(fit_distribution(data, DistributionModel::thermal, opt), ValidationError);
    }

    TEST_CASE("model populations")
    {
        const std::vector<double> nb{1.82};
        const auto th = model_populations(DistributionModel::thermal, nb);
        CHECK(th[3] == doctest::Approx(states::thermal_distribution(1.82)[3]));
        const std::vector<double> zero_logits(free_model_bins - 1, 0.0);
        const auto flat = model_populations(DistributionModel::free, zero_logits);
        REQUIRE(flat.size() == static_cast<std::size_t>(free_model_bins));
        for (double x : flat)
            CHECK(x == doctest::Approx(1.0 / free_model_bins));
    }

    TEST_CASE("brightness csv round trip")
    {
        const auto p = states::thermal_distribution(0.5);
        const auto data = synthetic_flopping_data(p.p, nominal(), flop_times(10), 0.02, 99);
        std::stringstream ss;
        write_brightness_csv(ss, data);
        const auto back = read_brightness_csv(ss);
        REQUIRE(back.size() == data.size());
        for (std::size_t i = 0; i < data.size(); ++i) {
            CHECK(back[i].t == doctest::Approx(data[i].t).epsilon(1e-11));
            CHECK(back[i].p_up == doctest::Approx(data[i].p_up).epsilon(1e-11));
        }
        // Same seed, same samples.
        const auto again = synthetic_flopping_data(p.p, nominal(), flop_times(10), 0.02, 99);
        CHECK(again[4].p_up == data[4].p_up);
    }

    TEST_CASE("brightness csv rejects malformed input")
    {
        std::istringstream no_header("1,0.5,0.02\n");
        CHECK_THROWS_AS(read_brightness_csv(no_header), ValidationError);
        std::istringstream bad_p("t_us,p_up,sigma\n1,1.5,0.02\n");
        CHECK_THROWS_AS(read_brightness_csv(bad_p), ValidationError);
        std::istringstream bad_sigma("t_us,p_up,sigma\n1,0.5,0\n");
        CHECK_THROWS_AS(read_brightness_csv(bad_sigma), ValidationError);
        std::istringstream junk("t_us,p_up,sigma\n1,abc,0.1\n");
        CHECK_THROWS_AS(read_brightness_csv(junk), ValidationError);
        std::istringstream ok("\xEF\xBB\xBFt_us,p_up,sigma\r\n# note\r\n\r\n10,0.25,0.01\r\n");
        const auto rows = read_brightness_csv(ok);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].t == doctest::Approx(10e-6));
        CHECK_THROWS_AS(read_brightness_csv(std::filesystem::path("/nonexistent/x.csv")), ValidationError);
    }

    TEST_CASE("preparation curves")
    {
        PreparationData d;
        for (double t : {20.0, 40.0, 60.0, 80.0, 100.0})
            d.coherent_mean_vs_time_us.push_back({t, 0.02 + 7.5e-6 * t * t, 0.01});
        for (int s = 0; s <= 9; s += 3)
            d.thermal_mean_vs_steps.push_back({double(s), 0.025 + 0.075 * s, 0.02});
        for (double t : {25.0, 50.0, 75.0, 100.0})
            d.squeezing_vs_time_us.push_back({t, 0.0134 * t, 0.03});
        const auto f = fit_preparation_curves(d);
        CHECK(f.beta == doctest::Approx(7.5e-6).epsilon(1e-9));
        CHECK(f.coherent_offset == doctest::Approx(0.02).epsilon(1e-9));
        CHECK(f.mbar_from_beta == doctest::Approx(0.075).epsilon(1e-9));
        CHECK(f.step_slope == doctest::Approx(0.075).epsilon(1e-9));
        CHECK(f.step_offset == doctest::Approx(0.025).epsilon(1e-9));
        CHECK(f.rho_rate == doctest::Approx(0.0134).epsilon(1e-9));
        CHECK(f.beta_err > 0.0);
        auto nine = f.model;
        nine.steps = 9;
        CHECK(states::random_walk_nbar(nine) == doctest::Approx(0.70).epsilon(1e-6));

        PreparationData short_curve;
        short_curve.squeezing_vs_time_us = {{1.0, 0.1, 0.1}, {2.0, 0.2, 0.1}};
        CHECK_THROWS_AS(fit_preparation_curves(short_curve), ValidationError);
    }
}
