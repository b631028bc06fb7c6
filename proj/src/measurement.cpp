#include "ionfridge/measurement.hpp"

#include "ionfridge/constants.hpp"
#include "ionfridge/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <random>

namespace ionfridge::measurement {

void SidebandConfig::validate() const
{
    if (!std::isfinite(omega_rabi) || omega_rabi < 0.0)
        throw ValidationError(fmt::format("sideband: omega_rabi = {} must be >= 0", omega_rabi));
    if (!std::isfinite(t_rsb) || t_rsb < 0.0)
        throw ValidationError(fmt::format("sideband: t_rsb = {} must be >= 0", t_rsb));
    if (!(a_bg >= 0.0 && a_bg <= 1.0))
        throw ValidationError(fmt::format("sideband: a_bg = {} outside [0, 1]", a_bg));
    if (!(eta >= 0.0 && eta <= 1.0))
        throw ValidationError(fmt::format("sideband: eta = {} outside [0, 1]", eta));
    if (!(gamma0 >= 0.0) || !std::isfinite(gamma0))
        throw ValidationError(fmt::format("sideband: gamma0 = {} must be >= 0", gamma0));
}

double red_sideband_brightness(std::span<const double> p, const SidebandConfig& cfg)
{
    const double phase = cfg.omega_rabi * cfg.t_rsb;
    double s = 0.0;
    for (std::size_t n = 1; n < p.size(); ++n)
        s += p[n] * 0.5 * (1.0 - std::cos(std::sqrt(static_cast<double>(n)) * phase));
    return cfg.a_bg + cfg.eta * s;
}

double blue_sideband_flopping_at(std::span<const double> p, const FloppingParams& params, double t)
{
    double s = 0.0;
    for (std::size_t n = 0; n < p.size(); ++n) {
        if (p[n] == 0.0)
            continue;
        const double k = std::sqrt(static_cast<double>(n + 1));
        s += p[n] * std::cos(k * params.omega01 * t) * std::exp(-k * params.gamma0 * t);
    }
    return 0.5 * params.contrast * (1.0 - s) + params.background;
}

std::vector<double> blue_sideband_flopping(std::span<const double> p, const FloppingParams& params,
                                           std::span<const double> times)
{
    std::vector<double> out;
    out.reserve(times.size());
    for (double t : times)
        out.push_back(blue_sideband_flopping_at(p, params, t));
    return out;
}

// ---- CSV ------------------------------------------------------------------

namespace {

double parse_field(std::string_view field, std::size_t line_no, std::string_view what)
{
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t'))
        field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t'))
        field.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(v))
        throw ValidationError(fmt::format("brightness csv line {}: bad {} '{}'", line_no, what, field));
    return v;
}

} // namespace

std::vector<BrightnessSample> read_brightness_csv(std::istream& in)
{
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    std::vector<BrightnessSample> out;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line.front() == '#')
            continue;
        if (!have_header) {
            std::string_view h = line;
            if (h.size() >= 3 && h.substr(0, 3) == "\xEF\xBB\xBF")
                h.remove_prefix(3);
            if (h != "t_us,p_up,sigma")
                throw ValidationError(fmt::format("brightness csv: expected header 't_us,p_up,sigma', got '{}'", h));
            have_header = true;
            continue;
        }
        std::string_view rest = line;
        std::string_view fields[3];
        for (int k = 0; k < 3; ++k) {
            const auto comma = rest.find(',');
            if ((k < 2) == (comma == std::string_view::npos))
                throw ValidationError(fmt::format("brightness csv line {}: expected 3 fields", line_no));
            fields[k] = rest.substr(0, comma);
            rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        }
        BrightnessSample s;
        s.t = us_to_s(parse_field(fields[0], line_no, "t_us"));
        s.p_up = parse_field(fields[1], line_no, "p_up");
        s.sigma = parse_field(fields[2], line_no, "sigma");
        if (s.p_up < 0.0 || s.p_up > 1.0)
            throw ValidationError(fmt::format("brightness csv line {}: p_up = {} outside [0, 1]", line_no, s.p_up));
        if (!(s.sigma > 0.0))
            throw ValidationError(fmt::format("brightness csv line {}: sigma = {} must be > 0", line_no, s.sigma));
        out.push_back(s);
    }
    if (!have_header)
        throw ValidationError("brightness csv: missing header");
    return out;
}

std::vector<BrightnessSample> read_brightness_csv(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ValidationError(fmt::format("cannot open '{}'", path.string()));
    return read_brightness_csv(in);
}

void write_brightness_csv(std::ostream& out, std::span<const BrightnessSample> samples)
{
    out << "t_us,p_up,sigma\n";
    for (const auto& s : samples)
        out << fmt::format("{:.12g},{:.12g},{:.12g}\n", s_to_us(s.t), s.p_up, s.sigma);
}

std::vector<BrightnessSample> synthetic_flopping_data(std::span<const double> p, const FloppingParams& params,
                                                      std::span<const double> times, double sigma,
                                                      std::uint64_t seed)
{
    if (!(sigma >= 0.0))
        throw ValidationError(fmt::format("synthetic data: sigma = {} must be >= 0", sigma));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<BrightnessSample> out;
    out.reserve(times.size());
    for (double t : times) {
        BrightnessSample s;
        s.t = t;
        s.p_up = blue_sideband_flopping_at(p, params, t);
        if (sigma > 0.0)
            s.p_up += sigma * noise(rng);
        s.sigma = sigma > 0.0 ? sigma : 1e-3;
        out.push_back(s);
    }
    return out;
}

// ---- estimator ------------------------------------------------------------

void EstimatorConfig::validate() const
{
    if (!(delta > 0.0) || !std::isfinite(delta))
        throw ValidationError(fmt::format("estimator: delta = {} must be > 0", delta));
    if (mode_of_interest != 'h' && mode_of_interest != 'w' && mode_of_interest != 'c')
        throw ValidationError(fmt::format("estimator: mode '{}' is not one of h, w, c", mode_of_interest));
}

double estimate_nbar(double p_up_exp, const EstimatorInputs& sim)
{
    const double dp = sim.p_up_plus - sim.p_up_minus;
    if (!(std::abs(dp) >= 1e-6))
        throw NumericalError(fmt::format("estimator: brightness sensitivity {:.3g} below 1e-6", dp));
    const double slope = (sim.nbar_plus - sim.nbar_minus) / dp;
    return sim.nbar_th + slope * (p_up_exp - sim.p_up_th);
}

// ---- distribution fits ----------------------------------------------------

std::string_view to_string(DistributionModel model)
{
    switch (model) {
    case DistributionModel::thermal: return "thermal";
    case DistributionModel::coherent: return "coherent";
    case DistributionModel::squeezed_vacuum: return "squeezed-vacuum";
    case DistributionModel::squeezed_thermal: return "squeezed-thermal";
    case DistributionModel::free: return "free";
    }
    return "?";
}

DistributionModel distribution_model_from_string(std::string_view name)
{
    std::string s(name);
    std::replace(s.begin(), s.end(), '_', '-');
    for (auto m : {DistributionModel::thermal, DistributionModel::coherent, DistributionModel::squeezed_vacuum,
                   DistributionModel::squeezed_thermal, DistributionModel::free})
        if (s == to_string(m))
            return m;
    throw ValidationError(fmt::format("unknown distribution model '{}'", name));
}

namespace {

struct ParamSpec {
    std::string name;
    double init;
    double lo;
    double hi;
};

std::vector<ParamSpec> distribution_specs(DistributionModel model)
{
    switch (model) {
    case DistributionModel::thermal: return {{"nbar", 1.0, 0.0, 60.0}};
    case DistributionModel::coherent: return {{"mbar", 1.0, 0.0, 60.0}};
    case DistributionModel::squeezed_vacuum: return {{"r", 0.5, 0.0, 3.0}};
    case DistributionModel::squeezed_thermal: return {{"nbar", 0.5, 0.0, 20.0}, {"r", 0.5, 0.0, 2.5}};
    case DistributionModel::free: {
        std::vector<ParamSpec> v;
        for (int n = 1; n < free_model_bins; ++n)
            v.push_back({fmt::format("u{}", n), 0.0, -40.0, 40.0});
        return v;
    }
    }
    return {};
}

// Drop the far tail so the flopping sum stays cheap; what is cut is below 1e-16.
std::vector<double> trimmed(std::vector<double> p)
{
    while (p.size() > 1 && p.back() < 1e-16)
        p.pop_back();
    return p;
}

int cutoff_for_mean(double mean)
{
    return static_cast<int>(std::clamp(std::ceil(40.0 * (mean + 1.0)), 40.0, 300.0));
}

} // namespace

std::vector<double> model_populations(DistributionModel model, std::span<const double> x)
{
    switch (model) {
    case DistributionModel::thermal:
        return trimmed(states::thermal_distribution(x[0], 300).p);
    case DistributionModel::coherent:
        return trimmed(states::coherent_distribution(x[0], 300).p);
    case DistributionModel::squeezed_vacuum: {
        const double mean = std::sinh(x[0]) * std::sinh(x[0]);
        return trimmed(states::squeezed_vacuum_distribution(x[0], cutoff_for_mean(mean)).p);
    }
    case DistributionModel::squeezed_thermal: {
        const double mean = states::ModePrep::squeezed_thermal(x[0], x[1]).mean();
        return trimmed(states::squeezed_thermal_distribution(x[0], x[1], cutoff_for_mean(mean)).p);
    }
    case DistributionModel::free: {
        if (x.size() != free_model_bins - 1)
            throw ValidationError(fmt::format("free model expects {} logits", free_model_bins - 1));
        std::vector<double> p(free_model_bins);
        double umax = 0.0;
        for (double u : x)
            umax = std::max(umax, u);
        double z = 0.0;
        for (int n = 0; n < free_model_bins; ++n) {
            p[n] = std::exp((n == 0 ? 0.0 : x[n - 1]) - umax);
            z += p[n];
        }
        for (double& v : p)
            v /= z;
        return p;
    }
    }
    return {};
}

double FitResult::value(std::string_view name) const
{
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name)
            return values[static_cast<Eigen::Index>(i)];
    throw ValidationError(fmt::format("fit result has no parameter '{}'", name));
}

double FitResult::error(std::string_view name) const
{
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name)
            return errors[static_cast<Eigen::Index>(i)];
    throw ValidationError(fmt::format("fit result has no parameter '{}'", name));
}

FitResult fit_distribution(std::span<const BrightnessSample> data, DistributionModel model, const FitOptions& options)
{
    auto specs = distribution_specs(model);
    const std::size_t n_dist = specs.size();
    if (!options.initial_distribution.empty()) {
        if (options.initial_distribution.size() != n_dist)
            throw ValidationError(fmt::format("fit: {} initial distribution values given, model '{}' has {}",
                                              options.initial_distribution.size(), to_string(model), n_dist));
        for (std::size_t i = 0; i < n_dist; ++i)
            specs[i].init = std::clamp(options.initial_distribution[i], specs[i].lo, specs[i].hi);
    }

    const FloppingParams& f0 = options.initial;
    enum Slot { contrast, background, rabi, gamma };
    std::vector<Slot> flop_slots;
    if (options.fit_contrast) {
        flop_slots.push_back(contrast);
        specs.push_back({"contrast", f0.contrast, 0.0, 2.0});
    }
    if (options.fit_background) {
        flop_slots.push_back(background);
        specs.push_back({"background", f0.background, -1.0, 1.0});
    }
    if (options.fit_rabi) {
        if (!(f0.omega01 > 0.0))
            throw ValidationError("fit: a free Rabi rate needs a positive starting value");
        flop_slots.push_back(rabi);
        specs.push_back({"omega01", f0.omega01, 0.2 * f0.omega01, 5.0 * f0.omega01});
    }
    if (options.fit_gamma) {
        flop_slots.push_back(gamma);
        specs.push_back({"gamma0", f0.gamma0, 0.0, std::max(10.0 * f0.gamma0, 1e5)});
    }
    if (!options.fit_rabi && !(f0.omega01 > 0.0))
        throw ValidationError("fit: omega01 must be > 0 when it is held fixed");

    const auto n_par = static_cast<Eigen::Index>(specs.size());
    if (data.size() < 3 * specs.size())
        throw ValidationError(fmt::format("fit: {} samples for {} parameters; need at least {}", data.size(),
                                          specs.size(), 3 * specs.size()));
    for (const auto& s : data)
        if (!(s.sigma > 0.0) || !std::isfinite(s.p_up) || !std::isfinite(s.t))
            throw ValidationError("fit: samples need finite values and sigma > 0");

    auto unpack = [&](const Eigen::VectorXd& x) {
        FloppingParams fp = f0;
        for (std::size_t k = 0; k < flop_slots.size(); ++k) {
            const double v = x[static_cast<Eigen::Index>(n_dist + k)];
            switch (flop_slots[k]) {
            case contrast: fp.contrast = v; break;
            case background: fp.background = v; break;
            case rabi: fp.omega01 = v; break;
            case gamma: fp.gamma0 = v; break;
            }
        }
        return fp;
    };

    fit::LeastSquaresProblem problem;
    problem.lower.resize(n_par);
    problem.upper.resize(n_par);
    for (Eigen::Index i = 0; i < n_par; ++i) {
        problem.lower[i] = specs[i].lo;
        problem.upper[i] = specs[i].hi;
    }
    problem.residuals = [&](const Eigen::VectorXd& x) {
        const auto p = model_populations(model, std::span<const double>(x.data(), n_dist));
        const FloppingParams fp = unpack(x);
        Eigen::VectorXd r(static_cast<Eigen::Index>(data.size()));
        for (std::size_t k = 0; k < data.size(); ++k)
            r[static_cast<Eigen::Index>(k)] = (blue_sideband_flopping_at(p, fp, data[k].t) - data[k].p_up) / data[k].sigma;
        return r;
    };

    Eigen::VectorXd x0(n_par);
    for (Eigen::Index i = 0; i < n_par; ++i)
        x0[i] = specs[i].init;

    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);
    std::optional<fit::LeastSquaresResult> best;
    int converged_runs = 0;
    for (int start = 0; start <= std::max(options.restarts, 0); ++start) {
        Eigen::VectorXd xs = x0;
        if (start > 0) {
            for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n_dist); ++i) {
                const double span = model == DistributionModel::free ? 2.0 : 0.5 * (std::abs(xs[i]) + 0.5);
                xs[i] = std::clamp(xs[i] + span * jitter(rng), problem.lower[i], problem.upper[i]);
            }
        }
        auto res = fit::levenberg_marquardt(problem, xs, options.solver);
        if (!res.converged)
            continue;
        ++converged_runs;
        if (!best || res.chi2 < best->chi2)
            best = std::move(res);
    }
    if (!best)
        throw NumericalError(fmt::format("fit '{}': no start converged within {} iterations", to_string(model),
                                         options.solver.max_iterations));

    FitResult out;
    out.model = model;
    for (const auto& s : specs)
        out.names.push_back(s.name);
    out.values = best->x;
    out.covariance = best->covariance;
    out.errors = out.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    out.chi2 = best->chi2;
    out.dof = static_cast<int>(data.size()) - static_cast<int>(n_par);
    out.reduced_chi2 = out.dof > 0 ? out.chi2 / out.dof : std::numeric_limits<double>::quiet_NaN();
    out.iterations = best->iterations;
    out.rank_deficient = best->rank_deficient;
    out.flopping = unpack(best->x);
    out.chi2_history = best->chi2_history;
    out.populations = model_populations(model, std::span<const double>(best->x.data(), n_dist));

    if (model == DistributionModel::free) {
        // Delta method through the softmax: dp_n/du_k = p_n (delta_nk - p_k), u_0 fixed.
        const int nb = free_model_bins;
        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(nb, static_cast<Eigen::Index>(n_dist));
        for (int n = 0; n < nb; ++n)
            for (int k = 1; k < nb; ++k)
                jac(n, k - 1) = out.populations[n] * ((n == k ? 1.0 : 0.0) - out.populations[k]);
        const Eigen::MatrixXd cu = out.covariance.topLeftCorner(static_cast<Eigen::Index>(n_dist),
                                                                static_cast<Eigen::Index>(n_dist));
        const Eigen::MatrixXd cp = jac * cu * jac.transpose();
        for (int n = 0; n < nb; ++n)
            out.population_errors.push_back(std::sqrt(std::max(cp(n, n), 0.0)));
    }
    return out;
}

// ---- preparation curves ---------------------------------------------------

namespace {

struct LinearFit {
    Eigen::VectorXd coef;
    Eigen::MatrixXd cov;
};

// Weighted linear least squares y ~ A c with per-point sigma.
LinearFit weighted_linear(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, const Eigen::VectorXd& sigma)
{
    const Eigen::VectorXd w = sigma.cwiseInverse();
    const Eigen::MatrixXd aw = w.asDiagonal() * a;
    const Eigen::VectorXd yw = w.cwiseProduct(y);
    const Eigen::MatrixXd normal = aw.transpose() * aw;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
    if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14)
        throw NumericalError("preparation fit: singular design matrix");
    LinearFit out;
    out.coef = ldlt.solve(aw.transpose() * yw);
    out.cov = ldlt.solve(Eigen::MatrixXd::Identity(a.cols(), a.cols()));
    return out;
}

void check_curve(const std::vector<CurvePoint>& pts, std::string_view what)
{
    if (pts.size() < 3)
        throw ValidationError(fmt::format("preparation fit: {} needs at least 3 points, got {}", what, pts.size()));
    for (const auto& p : pts)
        if (!(p.sigma > 0.0) || !std::isfinite(p.x) || !std::isfinite(p.y))
            throw ValidationError(fmt::format("preparation fit: {} has a bad point", what));
}

} // namespace

PreparationFit fit_preparation_curves(const PreparationData& data)
{
    PreparationFit out;
    const auto& cm = data.coherent_mean_vs_time_us;
    if (!cm.empty()) {
        check_curve(cm, "coherent mean vs time");
        const auto n = static_cast<Eigen::Index>(cm.size());
        Eigen::VectorXd y(n), s(n);
        const bool fixed = data.coherent_offset.has_value();
        Eigen::MatrixXd a(n, fixed ? 1 : 2);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double t2 = cm[i].x * cm[i].x;
            y[i] = cm[i].y - (fixed ? *data.coherent_offset : 0.0);
            s[i] = cm[i].sigma;
            a(i, 0) = t2;
            if (!fixed)
                a(i, 1) = 1.0;
        }
        const auto lf = weighted_linear(a, y, s);
        out.beta = lf.coef[0];
        out.beta_err = std::sqrt(lf.cov(0, 0));
        out.coherent_offset = fixed ? *data.coherent_offset : lf.coef[1];
        out.coherent_offset_err = fixed ? 0.0 : std::sqrt(lf.cov(1, 1));
        out.mbar_from_beta = states::mbar_from_beta(out.beta);
        out.mbar_from_beta_err = states::mbar_from_beta(out.beta_err);
        out.model.beta = out.beta;
        out.model.mbar = out.mbar_from_beta;
    }
    const auto& th = data.thermal_mean_vs_steps;
    if (!th.empty()) {
        check_curve(th, "thermal mean vs steps");
        const auto n = static_cast<Eigen::Index>(th.size());
        Eigen::VectorXd y(n), s(n);
        Eigen::MatrixXd a(n, 2);
        for (Eigen::Index i = 0; i < n; ++i) {
            y[i] = th[i].y;
            s[i] = th[i].sigma;
            a(i, 0) = th[i].x;
            a(i, 1) = 1.0;
        }
        const auto lf = weighted_linear(a, y, s);
        out.step_slope = lf.coef[0];
        out.step_slope_err = std::sqrt(lf.cov(0, 0));
        out.step_offset = lf.coef[1];
        out.step_offset_err = std::sqrt(lf.cov(1, 1));
        out.model.nbar0 = out.step_offset;
        out.model.mbar = out.step_slope;
    }
    const auto& sq = data.squeezing_vs_time_us;
    if (!sq.empty()) {
        check_curve(sq, "squeezing vs time");
        const auto n = static_cast<Eigen::Index>(sq.size());
        Eigen::VectorXd y(n), s(n);
        Eigen::MatrixXd a(n, 1);
        for (Eigen::Index i = 0; i < n; ++i) {
            y[i] = sq[i].y;
            s[i] = sq[i].sigma;
            a(i, 0) = sq[i].x;
        }
        const auto lf = weighted_linear(a, y, s);
        out.rho_rate = lf.coef[0];
        out.rho_rate_err = std::sqrt(lf.cov(0, 0));
        out.model.rho_rate = out.rho_rate;
    }
    if (cm.empty() && th.empty() && sq.empty())
        throw ValidationError("preparation fit: no curves supplied");
    return out;
}

} // namespace ionfridge::measurement
