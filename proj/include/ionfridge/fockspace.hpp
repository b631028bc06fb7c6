#pragma once

#include <compare>
#include <optional>
#include <span>
#include <vector>

namespace ionfridge::fock {

// Conserved pair of the trilinear interaction: N = n_h + n_w, M = n_h + n_c.
struct SectorLabel {
    int N = 0;
    int M = 0;

    auto operator<=>(const SectorLabel&) const = default;
};

struct FockState {
    int n_h = 0;
    int n_w = 0;
    int n_c = 0;

    bool operator==(const FockState&) const = default;
};

// Optional per-mode occupation caps. Unset means unbounded.
struct ModeCaps {
    std::optional<int> h;
    std::optional<int> w;
    std::optional<int> c;

    bool any() const { return h || w || c; }
};

// States |n_h, N - n_h, M - n_h> for n_h in [nh_min, nh_min + dim), ascending.
// Without caps nh_min = 0 and dim = min(N, M) + 1; caps cut the chain to a
// contiguous sub-range, possibly empty.
struct SectorBasis {
    SectorLabel label;
    int nh_min = 0;
    int dim = 0;

    FockState state(int i) const { return {nh_min + i, label.N - nh_min - i, label.M - nh_min - i}; }
    std::vector<FockState> states() const;
};

SectorBasis enumerate_sector(SectorLabel label);
SectorBasis enumerate_sector(SectorLabel label, const ModeCaps& caps);

struct TruncationPolicy {
    double epsilon = 1e-4;
    std::optional<int> n_max_h;
    std::optional<int> n_max_w;
    std::optional<int> n_max_c;
    // Treat the capped product space as the model space and renormalize the
    // initial state onto it, instead of counting the cut mass as discarded.
    bool renormalize_within_caps = false;

    ModeCaps caps() const { return {n_max_h, n_max_w, n_max_c}; }
    void validate() const;
};

// Sector weights below this are dropped regardless of epsilon.
inline constexpr double sector_weight_floor = 1e-15;

struct WeightedSector {
    SectorLabel label;
    double weight = 0.0;
};

struct SectorSelection {
    std::vector<WeightedSector> sectors; // greedy order: descending weight, ties by (N, M)
    double retained_weight = 0.0;
    double discarded_weight = 0.0;
};

// weight(N, M) = sum_k p_h(k) p_w(N - k) p_c(M - k). Returns the smallest
// greedy set whose weight reaches 1 - epsilon. Throws ValidationError when an
// input distribution is not normalized to 1e-9 and TruncationError when the
// caps make 1 - epsilon unreachable.
SectorSelection select_sectors(std::span<const double> p_h, std::span<const double> p_w,
                               std::span<const double> p_c, const TruncationPolicy& policy);

} // namespace ionfridge::fock
