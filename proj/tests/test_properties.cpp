// Seeded randomized checks of invariants that must hold for any valid input.
#include "ionfridge/benchmarks.hpp"
#include "ionfridge/dynamics.hpp"
#include "ionfridge/fockspace.hpp"
#include "ionfridge/measurement.hpp"
#include "ionfridge/states.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace ionfridge;
using states::ModePrep;

namespace {

ModePrep random_prep(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    switch (rng() % 3) {
    case 0: return ModePrep::thermal(0.05 + 1.5 * u(rng));
    case 1: return ModePrep::coherent(0.05 + 2.0 * u(rng));
    default: return ModePrep::squeezed_thermal(0.6 * u(rng), 0.8 * u(rng), 6.0 * u(rng));
    }
}

} // namespace

TEST_SUITE("properties")
{
    TEST_CASE("distributions are normalized, non-negative and have the stated mean")
    {
        std::mt19937_64 rng(20261018);
        for (int i = 0; i < 40; ++i) {
            const auto prep = random_prep(rng);
            const auto d = states::prep_to_distribution(prep);
            double sum = 0.0;
            for (double x : d.p) {
                CHECK(x >= 0.0);
                sum += x;
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(d.mean == doctest::Approx(prep.mean()).epsilon(1e-8));
        }
    }

    TEST_CASE("retained plus discarded weight is one and the target is met")
    {
        std::mt19937_64 rng(7);
        for (int i = 0; i < 15; ++i) {
            const auto h = states::prep_to_distribution(random_prep(rng));
            const auto w = states::prep_to_distribution(random_prep(rng));
            const auto c = states::prep_to_distribution(random_prep(rng));
            const double eps = std::pow(10.0, -2.0 - static_cast<double>(rng() % 5));
            const auto sel = fock::select_sectors(h.p, w.p, c.p, {.epsilon = eps});
            CHECK(sel.retained_weight >= 1.0 - eps - 1e-12);
            CHECK(sel.retained_weight + sel.discarded_weight == doctest::Approx(1.0).epsilon(1e-12));
            // Dropping the lightest sector would miss the target (minimality).
            if (sel.sectors.size() > 1)
                CHECK(sel.retained_weight - sel.sectors.back().weight < 1.0 - eps);
        }
    }

    TEST_CASE("evolution conserves N and M, and long-time values lie within the trajectory hull")
    {
        std::mt19937_64 rng(99);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < 8; ++i) {
            const dynamics::ModePreps preps{random_prep(rng), random_prep(rng), random_prep(rng)};
            const double xi = 2.0 * M_PI * (0.5e3 + 2e3 * u(rng));
            const double delta = (u(rng) < 0.5) ? 0.0 : 2.0 * M_PI * 500.0 * u(rng);
            const auto ens = dynamics::assemble_initial(preps, {.epsilon = 1e-5}, xi, delta);
            const dynamics::SpectralPropagator prop(ens);
            const auto m0 = prop.means_at(0.0);
            double lo = 1e300, hi = -1e300;
            for (int k = 0; k <= 400; ++k) {
                const auto m = prop.means_at(k * 25e-6);
                CHECK(m.h + m.w == doctest::Approx(m0.h + m0.w).epsilon(1e-10));
                CHECK(m.h + m.c == doctest::Approx(m0.h + m0.c).epsilon(1e-10));
                CHECK(m.c >= -1e-12);
                lo = std::min(lo, m.c);
                hi = std::max(hi, m.c);
            }
            const double lt = prop.long_time_means().c;
            CHECK(lt >= lo - 1e-9);
            CHECK(lt <= hi + 1e-9);
            // Full dephasing of the incoherent model gives the long-time value.
            const double xi_in = dynamics::default_incoherent_strength(ens);
            CHECK(prop.incoherent_means_at(xi_in, 500.0 / xi).c == doctest::Approx(lt).epsilon(1e-6));
        }
    }

    TEST_CASE("marginals sum to one and reproduce the means")
    {
        std::mt19937_64 rng(3);
        for (int i = 0; i < 5; ++i) {
            const dynamics::ModePreps preps{random_prep(rng), random_prep(rng), random_prep(rng)};
            const dynamics::SpectralPropagator prop(dynamics::assemble_initial(preps, {.epsilon = 1e-5}, 5000.0));
            const double t = 1e-4 * (i + 1);
            const auto mg = prop.marginals_at(t);
            const auto mm = prop.means_at(t);
            for (auto [which, mean] : {std::pair{'h', mm.h}, std::pair{'w', mm.w}, std::pair{'c', mm.c}}) {
                const auto& p = mg.mode(which);
                CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-10));
                double m = 0.0;
                for (std::size_t n = 0; n < p.size(); ++n)
                    m += static_cast<double>(n) * p[n];
                CHECK(m == doctest::Approx(mean).epsilon(1e-10));
            }
        }
    }

    TEST_CASE("equilibrium is a fixed point of the classical shift")
    {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(0.05, 5.0);
        for (int i = 0; i < 50; ++i) {
            const double nh = u(rng);
            const double nw = nh + u(rng);
            const double nc = benchmarks::equilibrium_cold_occupation(nh, nw);
            CHECK(std::abs(benchmarks::classical_equilibrium_shift({nh, nw, nc})) < 1e-9);
        }
    }

    TEST_CASE("brightness lies in [a_bg, a_bg + eta]")
    {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < 30; ++i) {
            const auto d = states::prep_to_distribution(random_prep(rng));
            measurement::SidebandConfig cfg{.omega_rabi = 2e5 * u(rng), .t_rsb = 1e-4 * u(rng),
                                            .a_bg = 0.05 * u(rng), .eta = 0.8 + 0.2 * u(rng)};
            const double p = measurement::red_sideband_brightness(d.p, cfg);
            CHECK(p >= cfg.a_bg - 1e-15);
            CHECK(p <= cfg.a_bg + cfg.eta + 1e-15);
        }
    }
}
