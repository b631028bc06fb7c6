#include "ionfridge/errors.hpp"
#include "ionfridge/fockspace.hpp"
#include "ionfridge/states.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>
#include <tuple>

using namespace ionfridge;
using namespace ionfridge::fock;

namespace {

std::vector<double> delta(int n, int size)
{
    std::vector<double> p(static_cast<std::size_t>(size), 0.0);
    p[static_cast<std::size_t>(n)] = 1.0;
    return p;
}

} // namespace

TEST_SUITE("fockspace")
{
    TEST_CASE("enumerate small sectors")
    {
        const auto s11 = enumerate_sector({1, 1});
        CHECK(s11.dim == 2);
        CHECK(s11.states() == std::vector<FockState>{{0, 1, 1}, {1, 0, 0}});

        const auto s05 = enumerate_sector({0, 5});
        CHECK(s05.dim == 1);
        CHECK(s05.states() == std::vector<FockState>{{0, 0, 5}});

        const auto s32 = enumerate_sector({3, 2});
        CHECK(s32.dim == 3);
        CHECK(s32.states() == std::vector<FockState>{{0, 3, 2}, {1, 2, 1}, {2, 1, 0}});
    }

    TEST_CASE("sector basis invariants")
    {
        for (int N = 0; N < 12; ++N)
            for (int M = 0; M < 12; ++M) {
                const auto b = enumerate_sector({N, M});
                CHECK(b.dim == std::min(N, M) + 1);
                int prev = -1;
                for (const auto& s : b.states()) {
                    CHECK(s.n_h + s.n_w == N);
                    CHECK(s.n_h + s.n_c == M);
                    CHECK(s.n_h > prev);
                    prev = s.n_h;
                }
            }
    }

    TEST_CASE("caps cut a contiguous sub-chain")
    {
        ModeCaps caps{2, 4, std::nullopt};
        const auto b = enumerate_sector({5, 3}, caps);
        // n_h <= 2 and n_w = 5 - n_h <= 4  ->  n_h in [1, 2]
        CHECK(b.nh_min == 1);
        CHECK(b.dim == 2);
        CHECK(enumerate_sector({9, 0}, caps).dim == 0);
    }

    TEST_CASE("a pure Fock preparation gives one sector")
    {
        const auto p_h = delta(1, 4), p_w = delta(0, 4), p_c = delta(0, 4);
        const auto sel = select_sectors(p_h, p_w, p_c, {});
        REQUIRE(sel.sectors.size() == 1);
        CHECK(sel.sectors[0].label == SectorLabel{1, 1});
        CHECK(sel.sectors[0].weight == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(sel.retained_weight == doctest::Approx(1.0));
    }

    TEST_CASE("thermal workload of the main cooling scenario")
    {
        const auto h = states::thermal_distribution(0.66);
        const auto w = states::thermal_distribution(4.44);
        const auto c = states::thermal_distribution(2.63);
        const auto sel = select_sectors(h.p, w.p, c.p, {});
        // Counts from an independent greedy selection over the same weights.
        CHECK(sel.sectors.size() == 1157);
        int max_n = 0, max_m = 0;
        for (const auto& s : sel.sectors) {
            max_n = std::max(max_n, s.label.N);
            max_m = std::max(max_m, s.label.M);
        }
        CHECK(max_n == 55);
        CHECK(max_m == 35);
        CHECK(sel.retained_weight == doctest::Approx(0.9999001843941796).epsilon(1e-11));
        CHECK(sel.retained_weight >= 1.0 - 1e-4);
        CHECK(sel.retained_weight + sel.discarded_weight == doctest::Approx(1.0).epsilon(1e-12));
    }

    TEST_CASE("greedy order and tie-break")
    {
        const auto h = states::thermal_distribution(0.5);
        const auto sel = select_sectors(h.p, h.p, h.p, {.epsilon = 1e-6});
        for (std::size_t i = 1; i < sel.sectors.size(); ++i) {
            const auto& a = sel.sectors[i - 1];
            const auto& b = sel.sectors[i];
            CHECK((a.weight > b.weight || (a.weight == b.weight && a.label < b.label)));
        }
        // Symmetric in w and c: each (N, M) with N != M has a twin of equal weight.
        const auto again = select_sectors(h.p, h.p, h.p, {.epsilon = 1e-6});
        REQUIRE(again.sectors.size() == sel.sectors.size());
        for (std::size_t i = 0; i < sel.sectors.size(); ++i)
            CHECK(again.sectors[i].label == sel.sectors[i].label);
    }

    TEST_CASE("large epsilon still keeps the heaviest sector")
    {
        const auto h = states::thermal_distribution(0.1);
        const auto sel = select_sectors(h.p, h.p, h.p, {.epsilon = 0.5});
        REQUIRE(!sel.sectors.empty());
        CHECK(sel.sectors[0].label == SectorLabel{0, 0});
        CHECK(sel.retained_weight >= 0.5);
    }

    TEST_CASE("input validation")
    {
        std::vector<double> bad{0.5, 0.4};
        const auto ok = delta(0, 2);
        CHECK_THROWS_AS(select_sectors(bad, ok, ok, {}), ValidationError);
        CHECK_THROWS_AS(TruncationPolicy{.epsilon = 0.0}.validate(), ValidationError);
        CHECK_THROWS_AS(TruncationPolicy{.epsilon = 1.0}.validate(), ValidationError);
    }

    TEST_CASE("caps that lose more than epsilon are an error unless renormalized")
    {
        const auto w = states::thermal_distribution(4.44);
        const auto h = states::thermal_distribution(0.3);
        TruncationPolicy capped{.epsilon = 1e-4, .n_max_w = 6};
        CHECK_THROWS_AS(select_sectors(h.p, w.p, h.p, capped), TruncationError);
        capped.renormalize_within_caps = true;
        const auto sel = select_sectors(h.p, w.p, h.p, capped);
        CHECK(sel.retained_weight >= 1.0 - 1e-4);
    }

    TEST_CASE("every retained product state lives in exactly one sector")
    {
        const auto h = states::thermal_distribution(0.4);
        const auto sel = select_sectors(h.p, h.p, h.p, {.epsilon = 1e-8});
        std::set<std::tuple<int, int, int>> seen;
        std::size_t total_dim = 0;
        for (const auto& s : sel.sectors) {
            const auto b = enumerate_sector(s.label);
            total_dim += static_cast<std::size_t>(b.dim);
            for (const auto& st : b.states())
                CHECK(seen.insert({st.n_h, st.n_w, st.n_c}).second);
        }
        CHECK(seen.size() == total_dim);
        // All states under the retained box edges are covered.
        int n_max = 0, m_max = 0;
        for (const auto& s : sel.sectors) {
            n_max = std::max(n_max, s.label.N);
            m_max = std::max(m_max, s.label.M);
        }
        std::set<std::pair<int, int>> labels;
        for (const auto& s : sel.sectors)
            labels.insert({s.label.N, s.label.M});
        CHECK(labels.count({0, 0}) == 1);
    }
}
