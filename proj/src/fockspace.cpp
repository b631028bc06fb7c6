#include "ionfridge/fockspace.hpp"

#include "ionfridge/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>

namespace ionfridge::fock {

std::vector<FockState> SectorBasis::states() const
{
    std::vector<FockState> out;
    out.reserve(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i)
        out.push_back(state(i));
    return out;
}

SectorBasis enumerate_sector(SectorLabel label)
{
    return enumerate_sector(label, ModeCaps{});
}

SectorBasis enumerate_sector(SectorLabel label, const ModeCaps& caps)
{
    if (label.N < 0 || label.M < 0)
        throw ValidationError(fmt::format("sector label ({}, {}) must be non-negative", label.N, label.M));
    int lo = 0;
    int hi = std::min(label.N, label.M);
    if (caps.h)
        hi = std::min(hi, *caps.h);
    if (caps.w)
        lo = std::max(lo, label.N - *caps.w);
    if (caps.c)
        lo = std::max(lo, label.M - *caps.c);
    SectorBasis b;
    b.label = label;
    b.nh_min = lo;
    b.dim = std::max(0, hi - lo + 1);
    return b;
}

void TruncationPolicy::validate() const
{
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw ValidationError(fmt::format("truncation epsilon {} must lie in (0, 1)", epsilon));
    for (const auto& cap : {n_max_h, n_max_w, n_max_c})
        if (cap && *cap < 0)
            throw ValidationError("truncation caps must be non-negative");
}

namespace {

// Index one past the last entry that can matter at the sector-weight floor.
std::size_t effective_length(std::span<const double> p, std::optional<int> cap)
{
    std::size_t n = p.size();
    if (cap)
        n = std::min(n, static_cast<std::size_t>(*cap) + 1);
    while (n > 0 && p[n - 1] < 1e-22)
        --n;
    return n;
}

void check_normalized(std::span<const double> p, const char* mode)
{
    if (p.empty())
        throw ValidationError(fmt::format("select_sectors: empty {} distribution", mode));
    double sum = 0.0;
    for (double x : p) {
        if (!(x >= 0.0))
            throw ValidationError(fmt::format("select_sectors: negative probability in {} distribution", mode));
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ValidationError(fmt::format("select_sectors: {} distribution sums to {:.12g}", mode, sum));
}

double head_mass(std::span<const double> p, std::size_t n)
{
    return std::accumulate(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(n), 0.0);
}

} // namespace

SectorSelection select_sectors(std::span<const double> p_h, std::span<const double> p_w,
                               std::span<const double> p_c, const TruncationPolicy& policy)
{
    policy.validate();
    check_normalized(p_h, "hot");
    check_normalized(p_w, "work");
    check_normalized(p_c, "cold");

    const std::size_t kh = effective_length(p_h, policy.n_max_h);
    const std::size_t kw = effective_length(p_w, policy.n_max_w);
    const std::size_t kc = effective_length(p_c, policy.n_max_c);
    if (kh == 0 || kw == 0 || kc == 0)
        throw TruncationError("select_sectors: caps exclude all populated states");

    // Mass inside the caps (the 1e-22 tail trim is below any reporting resolution).
    double inside = 1.0;
    if (policy.caps().any()) {
        auto capped = [](std::span<const double> p, std::optional<int> cap) {
            const std::size_t n = cap ? std::min(p.size(), static_cast<std::size_t>(*cap) + 1) : p.size();
            return head_mass(p, n);
        };
        inside = capped(p_h, policy.n_max_h) * capped(p_w, policy.n_max_w) * capped(p_c, policy.n_max_c);
        if (!policy.renormalize_within_caps && inside < 1.0 - policy.epsilon)
            throw TruncationError(fmt::format(
                "select_sectors: caps retain only {:.6g} of the initial population (need {:.6g})",
                inside, 1.0 - policy.epsilon));
    }
    const double scale = policy.renormalize_within_caps ? 1.0 / inside : 1.0;

    const std::size_t rows = kh + kw - 1;
    const std::size_t cols = kh + kc - 1;
    std::vector<double> grid(rows * cols, 0.0);
    for (std::size_t k = 0; k < kh; ++k) {
        const double ph = p_h[k] * scale;
        if (ph == 0.0)
            continue;
        for (std::size_t j = 0; j < kw; ++j) {
            const double phw = ph * p_w[j];
            if (phw < 1e-30)
                continue;
            double* row = grid.data() + (k + j) * cols + k;
            for (std::size_t l = 0; l < kc; ++l)
                row[l] += phw * p_c[l];
        }
    }

    std::vector<WeightedSector> all;
    for (std::size_t n = 0; n < rows; ++n)
        for (std::size_t m = 0; m < cols; ++m) {
            const double w = grid[n * cols + m];
            if (w >= sector_weight_floor)
                all.push_back({{static_cast<int>(n), static_cast<int>(m)}, w});
        }
    std::sort(all.begin(), all.end(), [](const WeightedSector& a, const WeightedSector& b) {
        if (a.weight != b.weight)
            return a.weight > b.weight;
        return a.label < b.label;
    });

    // Inputs are normalized, so the full weight is 1 (cut mass counts as discarded).
    const double total = 1.0;
    const double target = total - policy.epsilon;
    SectorSelection sel;
    double acc = 0.0;
    for (const auto& s : all) {
        if (acc >= target)
            break;
        sel.sectors.push_back(s);
        acc += s.weight;
    }
    if (acc < target)
        throw TruncationError(fmt::format(
            "select_sectors: all sectors above the {:.0e} floor hold {:.12g} < 1 - epsilon = {:.12g}",
            sector_weight_floor, acc, target));
    sel.retained_weight = acc;
    sel.discarded_weight = total - acc;
    return sel;
}

} // namespace ionfridge::fock
