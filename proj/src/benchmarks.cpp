#include "ionfridge/benchmarks.hpp"

#include "ionfridge/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <numeric>
#include <vector>

namespace ionfridge::benchmarks {

namespace {

void require_positive(const OccupationTriple& n, const char* what)
{
    if (!(n.nbar_h > 0.0) || !(n.nbar_w > 0.0) || !(n.nbar_c > 0.0))
        throw DomainError(fmt::format("{}: occupations must be positive, got ({}, {}, {})", what, n.nbar_h,
                                      n.nbar_w, n.nbar_c));
}

} // namespace

double equilibrium_residual(const OccupationTriple& n)
{
    require_positive(n, "equilibrium_residual");
    return (1.0 + 1.0 / n.nbar_h) - (1.0 + 1.0 / n.nbar_w) * (1.0 + 1.0 / n.nbar_c);
}

double equilibrium_cold_occupation(double nbar_h, double nbar_w)
{
    if (!(nbar_h > 0.0) || !(nbar_w > 0.0))
        throw DomainError("equilibrium_cold_occupation: occupations must be positive");
    const double ratio = (1.0 + 1.0 / nbar_h) / (1.0 + 1.0 / nbar_w);
    if (!(ratio > 1.0))
        throw DomainError(fmt::format("equilibrium_cold_occupation: no positive solution for n_h = {}, "
                                      "n_w = {} (work mode not hotter than hot mode)",
                                      nbar_h, nbar_w));
    return 1.0 / (ratio - 1.0);
}

CoolingPrediction cooling_condition(const OccupationTriple& in)
{
    require_positive(in, "cooling_condition");
    CoolingPrediction p;
    if (!(in.nbar_c > in.nbar_h)) {
        p.threshold_w = std::numeric_limits<double>::infinity();
        p.cooled = false;
        return p;
    }
    p.threshold_w = in.nbar_h * (1.0 + in.nbar_c) / (in.nbar_c - in.nbar_h);
    p.cooled = in.nbar_w > p.threshold_w;
    return p;
}

double entropy_flow(const OccupationTriple& n, const OccupationRates& rates, const trap::ModeFrequencies& freqs)
{
    const PhysicalConstants& k = codata2014;
    const double th = trap::mode_temperature(n.nbar_h, freqs.omega_h);
    const double tw = trap::mode_temperature(n.nbar_w, freqs.omega_w);
    const double tc = trap::mode_temperature(n.nbar_c, freqs.omega_c);
    return k.hbar * freqs.omega_h * rates.dn_h / th + k.hbar * freqs.omega_w * rates.dn_w / tw +
           k.hbar * freqs.omega_c * rates.dn_c / tc;
}

double classical_equilibrium_shift(const OccupationTriple& in)
{
    require_positive(in, "classical_equilibrium_shift");
    // f is strictly increasing on (-min(n_w, n_c), n_h), from -inf to +inf.
    auto f = [&](double eps) {
        return (1.0 + 1.0 / (in.nbar_h - eps)) -
               (1.0 + 1.0 / (in.nbar_w + eps)) * (1.0 + 1.0 / (in.nbar_c + eps));
    };
    double lo = -std::min(in.nbar_w, in.nbar_c);
    double hi = in.nbar_h;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = std::midpoint(lo, hi);
        if (mid <= lo || mid >= hi)
            break;
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    return std::midpoint(lo, hi);
}

CoolingReport cooling_report(const OccupationTriple& in, const OccupationTriple& final_state)
{
    CoolingReport r;
    r.eps_h = in.nbar_h - final_state.nbar_h;
    r.eps_w = final_state.nbar_w - in.nbar_w;
    r.eps_c = final_state.nbar_c - in.nbar_c;
    r.cooled = r.eps_c < 0.0;
    r.threshold_w = cooling_condition(in).threshold_w;
    return r;
}

EquilibriumEstimate extract_equilibrium_nc(std::span<const std::pair<double, double>> points)
{
    if (points.size() < 2)
        throw ValidationError("extract_equilibrium_nc: need at least two points");
    std::vector<std::size_t> idx(points.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(points[a].second) < std::abs(points[b].second);
    });
    const auto [x1, e1] = points[idx[0]];
    const auto [x2, e2] = points[idx[1]];
    if (e1 == e2)
        throw NumericalError("extract_equilibrium_nc: nearest points have equal eps_h; crossing undefined");

    EquilibriumEstimate est;
    est.nbar_c_eq = x1 - e1 * (x2 - x1) / (e2 - e1);
    const bool any_pos = std::any_of(points.begin(), points.end(), [](const auto& p) { return p.second > 0.0; });
    const bool any_neg = std::any_of(points.begin(), points.end(), [](const auto& p) { return p.second < 0.0; });
    const bool any_zero = std::any_of(points.begin(), points.end(), [](const auto& p) { return p.second == 0.0; });
    est.extrapolated = !any_zero && !(any_pos && any_neg);
    return est;
}

} // namespace ionfridge::benchmarks
