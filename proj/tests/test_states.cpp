#include "ionfridge/errors.hpp"
#include "ionfridge/states.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace ionfridge;
using namespace ionfridge::states;

namespace {

double total(const PhononDistribution& d) { return std::accumulate(d.p.begin(), d.p.end(), 0.0); }

double mean_of(const PhononDistribution& d)
{
    double m = 0.0;
    for (std::size_t n = 0; n < d.p.size(); ++n)
        m += static_cast<double>(n) * d.p[n];
    return m;
}

} // namespace

TEST_SUITE("states")
{
    TEST_CASE("thermal closed form")
    {
        const double nbar = 0.66;
        const auto d = thermal_distribution(nbar);
        for (int n = 0; n < 20; ++n)
            CHECK(d[n] == doctest::Approx(std::pow(nbar, n) / std::pow(nbar + 1.0, n + 1)).epsilon(1e-12));
        CHECK(total(d) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(d.mean == doctest::Approx(nbar).epsilon(1e-10));
        CHECK(thermal_distribution(0.0)[0] == 1.0);
    }

    TEST_CASE("coherent closed form")
    {
        const auto d = coherent_distribution(0.153);
        CHECK(d[2] == doctest::Approx(0.010043979328941459).epsilon(1e-12));
        CHECK(mean_of(d) == doctest::Approx(0.153).epsilon(1e-12));
        const auto big = coherent_distribution(40.0);
        CHECK(total(big) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(big.mean == doctest::Approx(40.0).epsilon(1e-10));
    }

    TEST_CASE("squeezed vacuum closed form")
    {
        const auto d = squeezed_vacuum_distribution(1.09);
        CHECK(d[0] == doctest::Approx(0.6041400692627752).epsilon(1e-12));
        CHECK(d[2] == doctest::Approx(0.19181893559258575).epsilon(1e-12));
        for (int n = 1; n < 40; n += 2)
            CHECK(d[n] == 0.0);
        CHECK(d.mean == doctest::Approx(std::pow(std::sinh(1.09), 2)).epsilon(1e-10));
        const auto ref = testsupport::squeezed_number_column(0, 1.09, 30);
        CHECK(testsupport::max_abs_diff(d.p, ref, 30) < 1e-12);
    }

    TEST_CASE("squeezed number states against frozen values")
    {
        const int ns[] = {1, 3, 5, 7};
        const double m1[] = {0.6974367008496387, 0.22340878286880725, 0.059636815071195746, 0.014858173233336542};
        const double m3[] = {0.22340878286880725, 0.1515301415242678, 0.29209288153155083, 0.19284604110082637};
        for (int i = 0; i < 4; ++i) {
            CHECK(squeezed_number_probability(1, ns[i], 0.5) == doctest::Approx(m1[i]).epsilon(1e-12));
            CHECK(squeezed_number_probability(3, ns[i], 0.5) == doctest::Approx(m3[i]).epsilon(1e-12));
        }
        CHECK(squeezed_number_probability(1, 2, 0.5) == 0.0);
        CHECK(squeezed_number_probability(4, 4, 0.0) == 1.0);
    }

    TEST_CASE("squeezed number states against the matrix exponential")
    {
        for (double r : {0.3, 0.77, 1.34}) {
            const Eigen::MatrixXd s = testsupport::squeeze_matrix(r, 600);
            for (int m : {0, 1, 2, 5, 10}) {
                std::vector<double> ref(40);
                for (int n = 0; n < 40; ++n)
                    ref[static_cast<std::size_t>(n)] = s(n, m) * s(n, m);
                std::vector<double> direct(40);
                for (int n = 0; n < 40; ++n)
                    direct[static_cast<std::size_t>(n)] = squeezed_number_probability(m, n, r);
                CAPTURE(m);
                CAPTURE(r);
                CHECK(testsupport::max_abs_diff(direct, ref, 40) < 1e-10);
                // The distribution is renormalized over its cutoff; the tail says by how much.
                const auto d = squeezed_number_distribution(m, r);
                CHECK(total(d) == doctest::Approx(1.0).epsilon(1e-12));
                CHECK(d.p[2] * (1.0 - d.tail_mass) == doctest::Approx(direct[2]).epsilon(1e-9));
            }
        }
    }

    TEST_CASE("large m stays normalized")
    {
        const auto d = squeezed_number_distribution(120, 0.8, 1200);
        CHECK(total(d) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(d.tail_mass < 1e-9);
        for (double x : d.p)
            CHECK((x >= 0.0 && std::isfinite(x)));
        // <n> of S|m> is m cosh 2r + sinh^2 r
        CHECK(d.mean == doctest::Approx(120 * std::cosh(1.6) + std::pow(std::sinh(0.8), 2)).epsilon(1e-8));
    }

    TEST_CASE("squeezed thermal against the matrix exponential")
    {
        for (auto [nbar, r] : {std::pair{0.46, 0.0}, std::pair{0.47, 1.34}, std::pair{0.52, 0.77}, std::pair{2.0, 0.4}}) {
            const auto d = squeezed_thermal_distribution(nbar, r);
            const auto ref = testsupport::squeezed_thermal_diag(nbar, r, 30);
            CAPTURE(nbar);
            CAPTURE(r);
            CHECK(testsupport::max_abs_diff(d.p, ref, 30) < 1e-9);
            const double expect = (2.0 * nbar + 1.0) * std::cosh(2.0 * r) / 2.0 - 0.5;
            CHECK(d.mean == doctest::Approx(expect).epsilon(1e-8));
        }
        CHECK(ModePrep::squeezed_thermal(0.5, 1.34).mean() == doctest::Approx(6.826828225017535).epsilon(1e-12));
    }

    TEST_CASE("populations do not depend on the squeezing angle")
    {
        const auto a = prep_to_distribution(ModePrep::squeezed_thermal(0.5, 0.9, 0.0));
        const auto b = prep_to_distribution(ModePrep::squeezed_thermal(0.5, 0.9, 1.7));
        CHECK(a.p == b.p);
    }

    TEST_CASE("fock and dispatch")
    {
        const auto f = prep_to_distribution(ModePrep::fock(3), 10);
        CHECK(f[3] == 1.0);
        CHECK(total(f) == 1.0);
        CHECK_THROWS_AS(fock_distribution(20, 10), TruncationError);
        CHECK(prep_kind_from_string("squeezed_thermal") == PrepKind::squeezed_thermal);
        CHECK(to_string(PrepKind::coherent) == "coherent");
        CHECK_THROWS_AS(prep_kind_from_string("cat"), ValidationError);
    }

    TEST_CASE("invalid parameters")
    {
        CHECK_THROWS_AS(thermal_distribution(-0.1), ValidationError);
        CHECK_THROWS_AS(coherent_distribution(std::nan("")), ValidationError);
        CHECK_THROWS_AS(squeezed_vacuum_distribution(-1.0), ValidationError);
        CHECK_THROWS_AS(thermal_distribution(1.0, -1), ValidationError);
        CHECK_THROWS_AS(ModePrep::fock(-2).validate(), ValidationError);
    }

    TEST_CASE("cutoff check")
    {
        const auto d = thermal_distribution(4.44, 30);
        CHECK(d.tail_mass > 1e-3);
        CHECK_THROWS_AS(check_cutoff(d, 1e-4), TruncationError);
        CHECK_NOTHROW(check_cutoff(thermal_distribution(4.44), 1e-4));
    }

    TEST_CASE("preparation model")
    {
        PreparationModel m{.nbar0 = 0.025, .mbar = 0.075, .steps = 9};
        CHECK(random_walk_nbar(m) == doctest::Approx(0.70).epsilon(1e-12));
        CHECK(mbar_from_beta(7.5e-6) == doctest::Approx(0.075).epsilon(1e-12));
        m.rho_rate = 0.0134;
        CHECK(squeezing_parameter(m, 100.0) == doctest::Approx(1.34));
        m.steps = -1;
        CHECK_THROWS_AS(m.validate(), ValidationError);
    }
}
