#include "ionfridge/errors.hpp"
#include "ionfridge/trap.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <tuple>

using namespace ionfridge;
using namespace ionfridge::trap;

TEST_SUITE("trap")
{
    TEST_CASE("constants are the pinned CODATA 2014 values")
    {
        CHECK(codata2014.hbar == 1.05457180014e-34);
        CHECK(codata2014.k_B == 1.38064852000e-23);
        CHECK(codata2014.eps0 == 8.85418781762e-12);
        CHECK(codata2014.e_charge == 1.60217662080e-19);
        CHECK(codata2014.amu == 1.66053904020e-27);
    }

    TEST_CASE("mode frequencies, first configuration")
    {
        const auto f = mode_frequencies(reference_config_a());
        // Reference values from an independent evaluation of the three formulas.
        CHECK(rad_per_s_to_khz(f.omega_h) == doctest::Approx(1372.7417819823218).epsilon(1e-12));
        CHECK(rad_per_s_to_khz(f.omega_w) == doctest::Approx(852.0152639477767).epsilon(1e-12));
        CHECK(rad_per_s_to_khz(f.omega_c) == doctest::Approx(520.6438417959054).epsilon(1e-12));
        CHECK(std::abs(rad_per_s_to_khz(f.omega_h) - 1372.8) < 0.1);
        CHECK(std::abs(rad_per_s_to_khz(f.omega_w) - 852.0) < 0.1);
        CHECK(std::abs(rad_per_s_to_khz(f.omega_c) - 520.6) < 0.1);
        CHECK(std::abs(rad_per_s_to_khz(f.resonance_residual()) - 0.1) < 0.05);
    }

    TEST_CASE("mode frequencies, second configuration")
    {
        const auto f = mode_frequencies(reference_config_b());
        CHECK(rad_per_s_to_khz(f.omega_h) == doctest::Approx(1024.2580348720728).epsilon(1e-12));
        CHECK(rad_per_s_to_khz(f.omega_w) == doctest::Approx(635.7608984516111).epsilon(1e-12));
        CHECK(rad_per_s_to_khz(f.omega_c) == doctest::Approx(388.5354475462949).epsilon(1e-12));
        CHECK(std::abs(rad_per_s_to_khz(f.resonance_residual())) < 0.1);
    }

    TEST_CASE("resonance residual is small for both reported traps")
    {
        for (const auto& t : {reference_config_a(), reference_config_b()}) {
            const auto f = mode_frequencies(t);
            CHECK(std::abs(f.resonance_residual()) / f.omega_h < 1e-3);
        }
    }

    TEST_CASE("cold mode must exist")
    {
        TrapConfig t = TrapConfig::from_khz(1000.0, 900.0, 500.0);
        t.omega_x = std::sqrt(12.0 / 5.0) * t.omega_z;
        t.omega_y = 0.5 * t.omega_x;
        CHECK_THROWS_AS(mode_frequencies(t), DomainError);
        t.omega_x *= 0.9;
        CHECK_THROWS_AS(mode_frequencies(t), DomainError);
        CHECK_THROWS_AS(TrapConfig::from_khz(900.0, 1000.0, 300.0).validate(), DomainError);
    }

    TEST_CASE("equilibrium spacing")
    {
        const auto a = reference_config_a();
        CHECK(equilibrium_spacing(a) * 1e6 == doctest::Approx(4.294103586750066).epsilon(1e-11));
        CHECK(std::abs(equilibrium_spacing(a) * 1e6 - 4.30) < 0.01);
        auto scaled = a;
        scaled.omega_z *= 8.0;
        scaled.omega_x *= 8.0;
        scaled.omega_y *= 8.0;
        CHECK(equilibrium_spacing(scaled) == doctest::Approx(equilibrium_spacing(a) / 4.0).epsilon(1e-13));
        const auto b = reference_config_b();
        CHECK(equilibrium_spacing(b) * 1e6 == doctest::Approx(5.219859722666201).epsilon(1e-11));
        CHECK(std::abs(equilibrium_spacing(b) * 1e6 - 5.24) < 0.03);
    }

    TEST_CASE("coupling rate is the literal formula")
    {
        const auto a = coupling_rate(reference_config_a());
        const auto b = coupling_rate(reference_config_b());
        CHECK(a.xi == doctest::Approx(8430.758101739177).epsilon(1e-11));
        CHECK(b.xi == doctest::Approx(5990.222152745454).epsilon(1e-11));
        CHECK(std::abs(rad_per_s_to_khz(a.xi) - 1.3) < 0.06);
        CHECK(a.xi / b.xi == doctest::Approx(1.4074199398222935).epsilon(1e-11));
        CHECK(a.xi / b.xi > 1.35);
        CHECK(a.xi / b.xi < 1.45);
        CHECK(a.x0 == doctest::Approx(equilibrium_spacing(reference_config_a())));
    }

    TEST_CASE("coupling rate scales as s^(7/6) when all frequencies scale by s")
    {
        const auto a = reference_config_a();
        for (double s : {0.5, 1.7, 3.0}) {
            auto t = a;
            t.omega_x *= s;
            t.omega_y *= s;
            t.omega_z *= s;
            CHECK(coupling_rate(t).xi / coupling_rate(a).xi == doctest::Approx(std::pow(s, 7.0 / 6.0)).epsilon(1e-12));
        }
    }

    TEST_CASE("measured coupling comparison warns, never rescales")
    {
        const double formula = coupling_rate(reference_config_a()).xi;
        const auto cmp = compare_coupling(formula, measured_xi_a);
        CHECK(cmp.formula_xi == formula);
        CHECK(cmp.ratio == doctest::Approx(measured_xi_a / formula));
        REQUIRE(cmp.warning.has_value());
        CHECK(cmp.ratio < 2.5);
        CHECK_FALSE(compare_coupling(formula, 1.1 * formula).warning.has_value());
    }

    TEST_CASE("mode temperature")
    {
        const double w = khz_to_rad_per_s(1372.8);
        const double unit = codata2014.hbar * w / codata2014.k_B;
        CHECK(mode_temperature(1.0 / (std::numbers::e - 1.0), w) == doctest::Approx(unit).epsilon(1e-12));
        CHECK(mode_temperature(1e6, w) / (unit * 1e6) == doctest::Approx(1.0).epsilon(1e-6));
        // Direct evaluation of the Bose-Einstein inversion.
        CHECK(mode_temperature(0.66, w) == doctest::Approx(7.143193121512846e-05).epsilon(1e-11));
        CHECK(mode_temperature(0.5, w) < mode_temperature(0.66, w));
        CHECK_THROWS_AS(mode_temperature(0.0, w), DomainError);
        CHECK_THROWS_AS(mode_temperature(-1.0, w), DomainError);
    }

    TEST_CASE("refrigeration ordering predicate")
    {
        const auto f = mode_frequencies(reference_config_a());
        auto expected = [&](double h, double wv, double c) {
            const double th = mode_temperature(h, f.omega_h), tw = mode_temperature(wv, f.omega_w),
                         tc = mode_temperature(c, f.omega_c);
            return tc < th && th < tw;
        };
        for (auto [h, wv, c] : {std::tuple{0.66, 4.44, 2.63}, std::tuple{0.66, 0.19, 2.63}, std::tuple{1.0, 4.0, 0.2},
                                std::tuple{0.66, 4.44, 0.3}})
            CHECK(refrigeration_ordering(h, wv, c, f) == expected(h, wv, c));
        CHECK(refrigeration_ordering(1.0, 4.0, 0.2, f));
    }

    TEST_CASE("cooling power per mass")
    {
        const double m = 171.0 * codata2014.amu;
        const double wc = khz_to_rad_per_s(388.5);
        CHECK(cooling_power_per_mass(0.0, 1e-4, wc, m) == 0.0);
        CHECK(cooling_power_per_mass(7.94e3 * 1e-4, 1e-4, wc, m) == doctest::Approx(2.399391368021553).epsilon(1e-11));
        CHECK(cooling_power_per_mass(-0.1, 1e-4, wc, m) < 0.0);
        CHECK_THROWS_AS(cooling_power_per_mass(0.1, 0.0, wc, m), DomainError);
    }
}
