// Command-line front end: scenario runs, figure datasets, oracle check, fits.

#include "ionfridge/errors.hpp"
#include "ionfridge/experiments.hpp"
#include "ionfridge/measurement.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace ionfridge;
namespace ex = ionfridge::experiments;

namespace {

struct Globals {
    std::string out;
    std::optional<double> epsilon;
    std::optional<std::string> rule;
    std::optional<std::uint64_t> seed;
};

fs::path out_dir(const Globals& g)
{
    if (!g.out.empty())
        return g.out;
    if (const char* env = std::getenv("IONFRIDGE_OUT_DIR"); env && *env)
        return env;
    return "out";
}

ex::Scenario load(const std::string& path, ex::Scenario (*preset)(), const Globals& g)
{
    ex::Scenario s = path.empty() ? preset() : ex::load_scenario(path);
    if (g.epsilon)
        s.truncation.epsilon = *g.epsilon;
    if (g.rule)
        s.rule = ex::SteadyStateRule::parse(*g.rule);
    if (g.seed)
        s.seed = *g.seed;
    s.validate();
    return s;
}

void wrote(const fs::path& p) { fmt::print("wrote {}\n", p.string()); }

ex::Table steady_table(const ex::Scenario& s, const dynamics::ModeMeans& ss)
{
    ex::Table t;
    t.meta("scenario", s.name);
    t.meta("software", fmt::format("ionfridge {}", ex::software_version()));
    t.meta("steady_state_rule", s.rule.describe());
    t.meta("epsilon", s.truncation.epsilon);
    t.meta("xi_rad_per_s", s.coupling.xi());
    t.columns = {"nbar_h_in", "nbar_w_in", "nbar_c_in", "nbar_h_ss", "nbar_w_ss", "nbar_c_ss"};
    t.rows.push_back({s.preps.h.mean(), s.preps.w.mean(), s.preps.c.mean(), ss.h, ss.w, ss.c});
    return t;
}

int cmd_simulate(const std::string& path, const Globals& g)
{
    const auto s = load(path, ex::presets::fig3a, g);
    const auto dir = out_dir(g);
    const auto traj = ex::run_scenario(s);
    fmt::print("{}: {} sectors, retained weight {:.12g}, xi = {:.6g} rad/s\n", s.name, traj.sector_count,
               traj.retained_weight, traj.xi);
    for (const auto& o : s.outputs) {
        if (o == "trajectory") {
            const auto p = dir / (s.name + "_trajectory.csv");
            ex::write_csv(p, ex::trajectory_table(s, traj));
            wrote(p);
        } else if (o == "steady_state") {
            const auto ss = ex::steady_state(s, s.rule);
            fmt::print("steady state ({}): nbar_h = {:.6f}, nbar_w = {:.6f}, nbar_c = {:.6f}\n", s.rule.describe(),
                       ss.h, ss.w, ss.c);
            const auto p = dir / (s.name + "_steady_state.csv");
            ex::write_csv(p, steady_table(s, ss));
            wrote(p);
        }
    }
    return 0;
}

int cmd_steady(const std::string& path, const Globals& g)
{
    const auto s = load(path, ex::presets::fig3a, g);
    const auto ss = ex::steady_state(s, s.rule);
    fmt::print("steady state ({}): nbar_h = {:.6f}, nbar_w = {:.6f}, nbar_c = {:.6f}\n", s.rule.describe(), ss.h,
               ss.w, ss.c);
    const auto p = out_dir(g) / (s.name + "_steady_state.csv");
    ex::write_csv(p, steady_table(s, ss));
    wrote(p);
    return 0;
}

int cmd_fig2(const std::string& path, const Globals& g)
{
    const auto s = load(path, ex::presets::fig2, g);
    if (!s.fig2)
        throw ValidationError("fig2 needs a scenario with a fig2 sweep");
    const auto d = ex::fig2_dataset(s, *s.fig2);
    const auto [cells, eq] = ex::fig2_tables(s, d);
    const auto dir = out_dir(g);
    ex::write_csv(dir / "fig2_cells.csv", cells);
    ex::write_csv(dir / "fig2_equilibrium.csv", eq);
    for (const auto& r : d.equilibrium)
        fmt::print("nbar_w = {:.3f}: nbar_c_eq = {:.4f}{}  classical {}\n", r.nbar_w_in, r.nbar_c_eq,
                   r.extrapolated ? " (no crossing, extrapolated)" : "",
                   r.nbar_c_eq_classical ? fmt::format("{:.4f}", *r.nbar_c_eq_classical) : "none");
    wrote(dir / "fig2_cells.csv");
    wrote(dir / "fig2_equilibrium.csv");
    return 0;
}

int cmd_fig3(const std::string& path, const Globals& g)
{
    const auto s = load(path, ex::presets::fig3, g);
    if (!s.fig3)
        throw ValidationError("fig3 needs a scenario with a fig3 sweep");
    const auto rows = ex::fig3_dataset(s, *s.fig3);
    const auto [traces, summary] = ex::fig3_tables(s, rows);
    const auto dir = out_dir(g);
    ex::write_csv(dir / "fig3_traces.csv", traces);
    ex::write_csv(dir / "fig3_summary.csv", summary);
    for (const auto& r : rows)
        fmt::print("{} nbar_w = {:.2f} r = {:.2f}: nbar_c_ss = {:.4f}, delta_c(0) = {:+.4f}\n",
                   r.squeezed ? "squeezed" : "thermal ", r.nbar_w_in, r.r, r.nbar_c_ss, r.delta_c0);
    wrote(dir / "fig3_traces.csv");
    wrote(dir / "fig3_summary.csv");
    return 0;
}

int cmd_fig4(const std::string& path, const Globals& g)
{
    const auto s = load(path, ex::presets::fig4, g);
    if (!s.fig4)
        throw ValidationError("fig4 needs a scenario with a fig4 sweep");
    const auto d = ex::fig4_dataset(s, *s.fig4);
    const auto p = out_dir(g) / "fig4_summary.csv";
    ex::write_csv(p, ex::fig4_table(s, d));
    for (const auto& pt : d.points)
        fmt::print("nbar_w = {:.2f}: tau* = {:.1f} us, single-shot {:+.4f}, long-time {:+.4f}, classical {:+.4f}, "
                   "{:.3f} W/kg\n",
                   pt.nbar_w_in, s_to_us(pt.tau_star), pt.delta_single, pt.delta_long_time, pt.delta_classical,
                   pt.power);
    wrote(p);
    return 0;
}

int cmd_oracle(int cap, double tol)
{
    const auto s = ex::presets::oracle();
    const auto r = ex::oracle_check(s.preps, s.coupling.xi(), s.time_grid, {cap, cap, cap});
    fmt::print("sector vs dense oracle (caps {}): max |diff| = {:.3e} over {} times in {:.2f} s\n", cap,
               r.max_abs_diff, r.points, r.seconds);
    if (!(r.max_abs_diff < tol)) {
        fmt::print("FAIL: exceeds {:.1e}\n", tol);
        return 3;
    }
    fmt::print("ok\n");
    return 0;
}

struct FitArgs {
    std::string data;
    std::string model;
    double omega01_khz = 0.0;
    double gamma0 = 0.0;
    bool fit_rabi = false;
    bool fit_gamma = false;
    int restarts = 3;
};

int cmd_fit(const FitArgs& a, const Globals& g)
{
    const auto samples = measurement::read_brightness_csv(fs::path(a.data));
    const auto model = measurement::distribution_model_from_string(a.model);
    measurement::FitOptions opt;
    opt.initial.omega01 = khz_to_rad_per_s(a.omega01_khz);
    opt.initial.gamma0 = a.gamma0;
    opt.fit_rabi = a.fit_rabi;
    opt.fit_gamma = a.fit_gamma;
    opt.restarts = a.restarts;
    opt.seed = g.seed.value_or(0);
    const auto r = measurement::fit_distribution(samples, model, opt);

    ex::Table t;
    t.meta("software", fmt::format("ionfridge {}", ex::software_version()));
    t.meta("data", a.data);
    t.meta("model", std::string(measurement::to_string(model)));
    t.meta("chi2", r.chi2);
    t.meta("reduced_chi2", r.reduced_chi2);
    t.meta("dof", fmt::format("{}", r.dof));
    t.meta("rank_deficient", r.rank_deficient ? "true" : "false");
    t.meta("omega01_rad_per_s", r.flopping.omega01);
    t.meta("gamma0_per_s", r.flopping.gamma0);
    t.meta("contrast", r.flopping.contrast);
    t.meta("background", r.flopping.background);
    t.columns = {"n", "p", "p_err"};
    for (std::size_t n = 0; n < r.populations.size(); ++n)
        t.rows.push_back({static_cast<double>(n), r.populations[n],
                          n < r.population_errors.size() ? r.population_errors[n]
                                                         : std::numeric_limits<double>::quiet_NaN()});
    for (std::size_t i = 0; i < r.names.size(); ++i)
        fmt::print("{:>12} = {:.6g} +/- {:.2g}\n", r.names[i], r.values[static_cast<Eigen::Index>(i)],
                   r.errors[static_cast<Eigen::Index>(i)]);
    fmt::print("reduced chi2 = {:.4g} ({} dof){}\n", r.reduced_chi2, r.dof,
               r.rank_deficient ? ", rank-deficient Jacobian" : "");
    const auto p = out_dir(g) / fmt::format("fit_{}.csv", measurement::to_string(model));
    ex::write_csv(p, t);
    wrote(p);
    return 0;
}

int cmd_coupling(const std::string& which)
{
    trap::TrapConfig cfg;
    std::optional<double> measured;
    if (which == "A") {
        cfg = trap::reference_config_a();
        measured = trap::measured_xi_a;
    } else if (which == "B") {
        cfg = trap::reference_config_b();
        measured = trap::measured_xi_b;
    } else {
        cfg = ex::load_trap(which);
    }
    cfg.validate();
    const auto f = trap::mode_frequencies(cfg);
    const auto c = trap::coupling_rate(cfg);
    fmt::print("modes (kHz): hot {:.3f}, work {:.3f}, cold {:.3f}; resonance residual {:.3f}\n",
               rad_per_s_to_khz(f.omega_h), rad_per_s_to_khz(f.omega_w), rad_per_s_to_khz(f.omega_c),
               rad_per_s_to_khz(f.resonance_residual()));
    fmt::print("ion spacing x0 = {:.4f} um\n", c.x0 * 1e6);
    fmt::print("xi (formula) = {:.2f} rad/s = 2pi x {:.4f} kHz\n", c.xi, rad_per_s_to_khz(c.xi));
    if (measured) {
        const auto cmp = trap::compare_coupling(c.xi, *measured);
        fmt::print("xi (measured) = 2pi x {:.3f} kHz, measured/formula = {:.3f}\n", rad_per_s_to_khz(*measured),
                   cmp.ratio);
        if (cmp.warning)
            fmt::print("warning: {}\n", *cmp.warning);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Three-mode trapped-ion absorption refrigerator simulator"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    double eps = 0.0;
    std::string rule;
    std::uint64_t seed = 0;
    app.add_option("--out", g.out, "Output directory (default: $IONFRIDGE_OUT_DIR, else ./out)");
    auto* eps_opt = app.add_option("--epsilon", eps, "Sector truncation epsilon");
    auto* rule_opt = app.add_option("--rule", rule, "Steady-state rule: dephasing or window:<us>");
    auto* seed_opt = app.add_option("--seed", seed, "Seed for noise-dependent features");

    std::string scenario;
    auto* sim = app.add_subcommand("simulate", "Run a scenario and write its trajectory");
    sim->add_option("scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
    auto* f2 = app.add_subcommand("fig2", "Equilibrium sweep dataset");
    f2->add_option("scenario", scenario, "Scenario JSON (default: built-in preset)")->check(CLI::ExistingFile);
    auto* f3 = app.add_subcommand("fig3", "Cold-mode traces and steady-state summary");
    f3->add_option("scenario", scenario, "Scenario JSON (default: built-in preset)")->check(CLI::ExistingFile);
    auto* f4 = app.add_subcommand("fig4", "Single-shot cooling sweep");
    f4->add_option("scenario", scenario, "Scenario JSON (default: built-in preset)")->check(CLI::ExistingFile);
    auto* ss = app.add_subcommand("steady-state", "Steady-state occupations of a scenario");
    ss->add_option("scenario", scenario, "Scenario JSON (default: built-in preset)")->check(CLI::ExistingFile);

    int cap = 6;
    double tol = 1e-9;
    auto* oc = app.add_subcommand("oracle-check", "Compare the sector method with the dense oracle");
    oc->add_option("--cap", cap, "Per-mode cap")->check(CLI::Range(1, 8));
    oc->add_option("--tol", tol, "Pass threshold on max |diff|");

    FitArgs fa;
    auto* fit = app.add_subcommand("fit", "Fit blue-sideband flopping data");
    fit->add_option("data", fa.data, "CSV with header t_us,p_up,sigma")->required()->check(CLI::ExistingFile);
    fit->add_option("--model", fa.model, "thermal, coherent, squeezed-vacuum, squeezed-thermal or free")->required();
    fit->add_option("--omega01-khz", fa.omega01_khz, "Base Rabi rate (ordinary frequency, kHz)")->required();
    fit->add_option("--gamma0", fa.gamma0, "Base decoherence rate, 1/s");
    fit->add_flag("--fit-rabi", fa.fit_rabi, "Free the Rabi rate");
    fit->add_flag("--fit-gamma", fa.fit_gamma, "Free the decoherence rate");
    fit->add_option("--restarts", fa.restarts, "Extra jittered starts");

    std::string trap_arg;
    auto* cp = app.add_subcommand("coupling", "Mode frequencies and coupling rate of a trap");
    cp->add_option("--trap", trap_arg, "A, B, or a trap JSON file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (*eps_opt)
        g.epsilon = eps;
    if (*rule_opt)
        g.rule = rule;
    if (*seed_opt)
        g.seed = seed;

    try {
        if (*sim)
            return cmd_simulate(scenario, g);
        if (*f2)
            return cmd_fig2(scenario, g);
        if (*f3)
            return cmd_fig3(scenario, g);
        if (*f4)
            return cmd_fig4(scenario, g);
        if (*ss)
            return cmd_steady(scenario, g);
        if (*oc)
            return cmd_oracle(cap, tol);
        if (*fit)
            return cmd_fit(fa, g);
        if (*cp)
            return cmd_coupling(trap_arg);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
