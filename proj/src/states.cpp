#include "ionfridge/states.hpp"

#include "ionfridge/errors.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>

namespace ionfridge::states {

std::string_view to_string(PrepKind kind)
{
    switch (kind) {
    case PrepKind::thermal: return "thermal";
    case PrepKind::coherent: return "coherent";
    case PrepKind::squeezed_thermal: return "squeezed_thermal";
    case PrepKind::fock: return "fock";
    }
    return "?";
}

PrepKind prep_kind_from_string(std::string_view name)
{
    if (name == "thermal") return PrepKind::thermal;
    if (name == "coherent") return PrepKind::coherent;
    if (name == "squeezed_thermal") return PrepKind::squeezed_thermal;
    if (name == "fock") return PrepKind::fock;
    throw ValidationError(fmt::format("unknown preparation kind '{}'", name));
}

ModePrep ModePrep::thermal(double nbar)
{
    ModePrep p;
    p.kind = PrepKind::thermal;
    p.nbar = nbar;
    return p;
}

ModePrep ModePrep::coherent(double mbar)
{
    ModePrep p;
    p.kind = PrepKind::coherent;
    p.alpha_sq = mbar;
    return p;
}

ModePrep ModePrep::squeezed_thermal(double nbar, double r, double theta)
{
    ModePrep p;
    p.kind = PrepKind::squeezed_thermal;
    p.nbar = nbar;
    p.r = r;
    p.theta = theta;
    return p;
}

ModePrep ModePrep::fock(int n)
{
    ModePrep p;
    p.kind = PrepKind::fock;
    p.n_fock = n;
    return p;
}

void ModePrep::validate() const
{
    switch (kind) {
    case PrepKind::thermal:
        if (!(nbar >= 0.0) || !std::isfinite(nbar))
            throw ValidationError(fmt::format("thermal prep: nbar = {} must be >= 0", nbar));
        break;
    case PrepKind::coherent:
        if (!(alpha_sq >= 0.0) || !std::isfinite(alpha_sq))
            throw ValidationError(fmt::format("coherent prep: mean phonons {} must be >= 0", alpha_sq));
        break;
    case PrepKind::squeezed_thermal:
        if (!(nbar >= 0.0) || !std::isfinite(nbar))
            throw ValidationError(fmt::format("squeezed thermal prep: nbar = {} must be >= 0", nbar));
        if (!(r >= 0.0) || !std::isfinite(r))
            throw ValidationError(fmt::format("squeezed thermal prep: r = {} must be >= 0", r));
        if (!std::isfinite(theta))
            throw ValidationError("squeezed thermal prep: theta must be finite");
        break;
    case PrepKind::fock:
        if (n_fock < 0)
            throw ValidationError(fmt::format("fock prep: n = {} must be >= 0", n_fock));
        break;
    }
}

double ModePrep::mean() const
{
    validate();
    switch (kind) {
    case PrepKind::thermal: return nbar;
    case PrepKind::coherent: return alpha_sq;
    case PrepKind::squeezed_thermal: {
        const double s = std::sinh(r);
        return nbar * std::cosh(2.0 * r) + s * s;
    }
    case PrepKind::fock: return n_fock;
    }
    return 0.0;
}

namespace {

void check_cutoff_arg(int cutoff)
{
    if (cutoff < 0)
        throw ValidationError(fmt::format("distribution cutoff {} must be >= 0", cutoff));
}

// Renormalizes raw populations whose untruncated total is 1.
PhononDistribution finalize(std::vector<double> raw)
{
    double sum = 0.0;
    for (double x : raw)
        sum += x;
    if (!(sum > 0.0))
        throw NumericalError("distribution has no mass below the cutoff");
    PhononDistribution d;
    d.tail_mass = std::max(0.0, 1.0 - sum);
    d.p = std::move(raw);
    double mean = 0.0;
    for (std::size_t n = 0; n < d.p.size(); ++n) {
        d.p[n] /= sum;
        mean += static_cast<double>(n) * d.p[n];
    }
    d.mean = mean;
    return d;
}

double log_thermal(double nbar, int n)
{
    // n log(nbar) - (n + 1) log(nbar + 1), with 0^0 = 1
    if (nbar == 0.0)
        return n == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    return n * std::log(nbar) - (n + 1) * std::log1p(nbar);
}

// Terminating 2F1(-ka, -kb; c; z) with z < 0, returned as log|F|. The series
// alternates; when its largest term exceeds |F| by more than 1e4 the sum is
// redone in extended precision.
struct LogHyp {
    double log_abs = 0.0;
    double log_max_term = 0.0;
    bool zero = false;
};

template <typename Real>
bool hyp_extended(int ka, int kb, double c, double r, double tolerated_ratio, LogHyp& out)
{
    using std::abs;
    using std::log;
    const Real s = sinh(Real(r));
    const Real z = -1 / (s * s);
    Real term = 1;
    Real sum = 1;
    Real max_abs = 1;
    const int kmax = std::min(ka, kb);
    for (int k = 0; k < kmax; ++k) {
        term *= Real((ka - k)) * Real((kb - k)) * z / ((Real(c) + k) * (k + 1));
        sum += term;
        const Real a = abs(term);
        if (a > max_abs)
            max_abs = a;
    }
    if (sum == 0) {
        out.zero = true;
        return true;
    }
    const Real ratio = max_abs / abs(sum);
    out.log_abs = static_cast<double>(log(abs(sum)));
    out.log_max_term = static_cast<double>(log(max_abs));
    return ratio < Real(tolerated_ratio);
}

// With log_scale given, returns zero when log_scale + 2 log|F| provably stays
// below skip_below, without the extended-precision pass.
LogHyp terminating_hyp(int ka, int kb, double c, double r, double log_scale = 0.0,
                       double skip_below = -std::numeric_limits<double>::infinity())
{
    const int kmax = std::min(ka, kb);
    const double log_z = -2.0 * std::log(std::sinh(r));
    // double pass on scaled terms
    std::vector<double> ell(static_cast<std::size_t>(kmax) + 1);
    ell[0] = 0.0;
    for (int k = 0; k < kmax; ++k)
        ell[k + 1] = ell[k] + std::log(double(ka - k)) + std::log(double(kb - k)) + log_z -
                     std::log(c + k) - std::log(double(k + 1));
    const double peak = *std::max_element(ell.begin(), ell.end());
    if (log_scale + 2.0 * (peak + std::log(kmax + 1.0)) < skip_below) {
        LogHyp skipped;
        skipped.zero = true;
        return skipped;
    }
    double scaled = 0.0;
    for (int k = 0; k <= kmax; ++k)
        scaled += ((k % 2) ? -1.0 : 1.0) * std::exp(ell[k] - peak);
    LogHyp out;
    out.log_max_term = peak;
    if (scaled != 0.0 && 1.0 / std::abs(scaled) < 1e4) {
        out.log_abs = peak + std::log(std::abs(scaled));
        return out;
    }
    using boost::multiprecision::cpp_bin_float_50;
    using boost::multiprecision::cpp_bin_float_100;
    using float_200 = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<200>>;
    if (hyp_extended<cpp_bin_float_50>(ka, kb, c, r, 1e30, out))
        return out;
    if (hyp_extended<cpp_bin_float_100>(ka, kb, c, r, 1e80, out))
        return out;
    if (hyp_extended<float_200>(ka, kb, c, r, 1e180, out))
        return out;
    throw NumericalError(fmt::format("2F1 cancellation beyond 200 digits at ka={}, kb={}, r={}", ka, kb, r));
}

struct SnPrefactor {
    double log_pref = 0.0;
    int ka = 0;
    int kb = 0;
    double c = 0.5;
};

// log of everything in front of the squared 2F1; requires equal parity.
SnPrefactor sn_prefactor(int m, int n, double r)
{
    SnPrefactor p;
    const double log_half_tanh = std::log(std::tanh(r) / 2.0);
    const double log_cosh = std::log(std::cosh(r));
    const double lf = std::lgamma(n + 1.0) + std::lgamma(m + 1.0);
    if (m % 2 == 0) {
        p.ka = n / 2;
        p.kb = m / 2;
        p.c = 0.5;
        p.log_pref = lf - 2.0 * (std::lgamma(p.kb + 1.0) + std::lgamma(p.ka + 1.0)) - log_cosh +
                     (m + n) * log_half_tanh;
    } else {
        p.ka = (n - 1) / 2;
        p.kb = (m - 1) / 2;
        p.c = 1.5;
        p.log_pref = lf - 2.0 * (std::lgamma(p.kb + 1.0) + std::lgamma(p.ka + 1.0)) - 3.0 * log_cosh +
                     (m + n - 2) * log_half_tanh;
    }
    return p;
}

} // namespace

PhononDistribution thermal_distribution(double nbar, int cutoff)
{
    ModePrep::thermal(nbar).validate();
    check_cutoff_arg(cutoff);
    std::vector<double> raw(static_cast<std::size_t>(cutoff) + 1);
    for (int n = 0; n <= cutoff; ++n)
        raw[n] = std::exp(log_thermal(nbar, n));
    return finalize(std::move(raw));
}

PhononDistribution coherent_distribution(double mbar, int cutoff)
{
    ModePrep::coherent(mbar).validate();
    check_cutoff_arg(cutoff);
    std::vector<double> raw(static_cast<std::size_t>(cutoff) + 1, 0.0);
    if (mbar == 0.0) {
        raw[0] = 1.0;
    } else {
        const double lm = std::log(mbar);
        for (int n = 0; n <= cutoff; ++n)
            raw[n] = std::exp(n * lm - mbar - std::lgamma(n + 1.0));
    }
    return finalize(std::move(raw));
}

PhononDistribution squeezed_vacuum_distribution(double r, int cutoff)
{
    ModePrep::squeezed_vacuum(r).validate();
    check_cutoff_arg(cutoff);
    std::vector<double> raw(static_cast<std::size_t>(cutoff) + 1, 0.0);
    if (r == 0.0) {
        raw[0] = 1.0;
        return finalize(std::move(raw));
    }
    const double log_sech = -std::log(std::cosh(r));
    const double log_tanh = std::log(std::tanh(r));
    for (int k = 0; 2 * k <= cutoff; ++k) {
        const double lp = std::lgamma(2.0 * k + 1.0) + log_sech + 2.0 * k * log_tanh -
                          2.0 * (k * std::log(2.0) + std::lgamma(k + 1.0));
        raw[2 * k] = std::exp(lp);
    }
    return finalize(std::move(raw));
}

double squeezed_number_probability(int m, int n, double r)
{
    if (m < 0 || n < 0)
        throw ValidationError("squeezed_number_probability: m, n must be >= 0");
    if (!(r >= 0.0) || !std::isfinite(r))
        throw ValidationError("squeezed_number_probability: r must be >= 0");
    if ((m + n) % 2 != 0)
        return 0.0;
    if (r == 0.0)
        return m == n ? 1.0 : 0.0;
    const SnPrefactor pre = sn_prefactor(m, n, r);
    const LogHyp f = terminating_hyp(pre.ka, pre.kb, pre.c, r);
    if (f.zero)
        return 0.0;
    return std::exp(pre.log_pref + 2.0 * f.log_abs);
}

PhononDistribution squeezed_number_distribution(int m, double r, int cutoff)
{
    if (m < 0)
        throw ValidationError("squeezed_number_distribution: m must be >= 0");
    check_cutoff_arg(cutoff);
    std::vector<double> raw(static_cast<std::size_t>(cutoff) + 1, 0.0);
    for (int n = m % 2; n <= cutoff; n += 2)
        raw[n] = squeezed_number_probability(m, n, r);
    return finalize(std::move(raw));
}

PhononDistribution squeezed_thermal_distribution(double nbar, double r, int cutoff)
{
    ModePrep::squeezed_thermal(nbar, r).validate();
    check_cutoff_arg(cutoff);
    if (r == 0.0)
        return thermal_distribution(nbar, cutoff);
    if (nbar == 0.0)
        return squeezed_vacuum_distribution(r, cutoff);

    // Thermal weights down to 1e-18 relative mass; beyond that the tail is
    // accounted for in tail_mass.
    const double x = nbar / (nbar + 1.0);
    int m_max = static_cast<int>(std::ceil(std::log(1e-18) / std::log(x)));
    m_max = std::clamp(m_max, 0, 4000);

    constexpr double log_skip = -52.0; // contributions below ~2.6e-23 are skipped
    std::vector<double> raw(static_cast<std::size_t>(cutoff) + 1, 0.0);
    for (int m = 0; m <= m_max; ++m) {
        const double lt = log_thermal(nbar, m);
        for (int n = m % 2; n <= cutoff; n += 2) {
            const SnPrefactor pre = sn_prefactor(m, n, r);
            const LogHyp f = terminating_hyp(pre.ka, pre.kb, pre.c, r, lt + pre.log_pref, log_skip);
            if (f.zero)
                continue;
            raw[n] += std::exp(lt + pre.log_pref + 2.0 * f.log_abs);
        }
    }
    return finalize(std::move(raw));
}

PhononDistribution fock_distribution(int n, int cutoff)
{
    ModePrep::fock(n).validate();
    check_cutoff_arg(cutoff);
    std::vector<double> raw(static_cast<std::size_t>(cutoff) + 1, 0.0);
    if (n <= cutoff)
        raw[n] = 1.0;
    else
        throw TruncationError(fmt::format("fock state {} lies above cutoff {}", n, cutoff));
    return finalize(std::move(raw));
}

PhononDistribution prep_to_distribution(const ModePrep& prep, int cutoff)
{
    prep.validate();
    switch (prep.kind) {
    case PrepKind::thermal: return thermal_distribution(prep.nbar, cutoff);
    case PrepKind::coherent: return coherent_distribution(prep.alpha_sq, cutoff);
    case PrepKind::squeezed_thermal: return squeezed_thermal_distribution(prep.nbar, prep.r, cutoff);
    case PrepKind::fock: return fock_distribution(prep.n_fock, cutoff);
    }
    throw ValidationError("unknown preparation kind");
}

void check_cutoff(const PhononDistribution& dist, double epsilon)
{
    if (dist.tail_mass > 1e-6 * epsilon)
        throw TruncationError(fmt::format(
            "distribution cutoff {} leaves tail mass {:.3g} (limit {:.3g})", dist.cutoff(),
            dist.tail_mass, 1e-6 * epsilon));
}

void PreparationModel::validate() const
{
    if (!(nbar0 >= 0.0))
        throw ValidationError("preparation model: nbar0 must be >= 0");
    if (!(mbar >= 0.0))
        throw ValidationError("preparation model: mbar must be >= 0");
    if (steps < 0)
        throw ValidationError("preparation model: steps must be >= 0");
}

double random_walk_nbar(const PreparationModel& model)
{
    model.validate();
    return model.nbar0 + model.steps * model.mbar;
}

double mbar_from_beta(double beta_per_us2)
{
    return beta_per_us2 * preparation_step_us * preparation_step_us;
}

double squeezing_parameter(const PreparationModel& model, double squeeze_time_us)
{
    return model.rho_rate * squeeze_time_us;
}

} // namespace ionfridge::states
