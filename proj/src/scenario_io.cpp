#include "ionfridge/experiments.hpp"

#include "ionfridge/errors.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace ionfridge::experiments {

using json = nlohmann::ordered_json;

namespace {

// Unit conversions leave last-bit noise (2.6400000000000006); files carry 12 digits.
double r12(double v)
{
    return std::stod(fmt::format("{:.12g}", v));
}

void allow_keys(const json& j, std::initializer_list<std::string_view> keys, std::string_view where)
{
    if (!j.is_object())
        throw ValidationError(fmt::format("{}: expected an object", where));
    for (const auto& [k, v] : j.items()) {
        bool ok = false;
        for (auto a : keys)
            ok = ok || k == a;
        if (!ok)
            throw ValidationError(fmt::format("{}: unknown key '{}'", where, k));
    }
}

double number(const json& j, std::string_view key, std::string_view where)
{
    const auto it = j.find(std::string(key));
    if (it == j.end())
        throw ValidationError(fmt::format("{}: missing '{}'", where, key));
    if (!it->is_number())
        throw ValidationError(fmt::format("{}: '{}' must be a number", where, key));
    return it->get<double>();
}

double number_or(const json& j, std::string_view key, double fallback, std::string_view where)
{
    return j.contains(std::string(key)) ? number(j, key, where) : fallback;
}

int integer(const json& j, std::string_view key, std::string_view where)
{
    const auto& v = j.at(std::string(key));
    if (!v.is_number_integer())
        throw ValidationError(fmt::format("{}: '{}' must be an integer", where, key));
    return v.get<int>();
}

std::vector<double> number_list(const json& j, std::string_view where)
{
    if (!j.is_array())
        throw ValidationError(fmt::format("{}: expected a list of numbers", where));
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number())
            throw ValidationError(fmt::format("{}: expected a list of numbers", where));
        out.push_back(v.get<double>());
    }
    return out;
}

trap::TrapConfig parse_trap(const json& j)
{
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "A")
            return trap::reference_config_a();
        if (s == "B")
            return trap::reference_config_b();
        throw ValidationError(fmt::format("trap: unknown reference configuration '{}' (use A or B)", s));
    }
    allow_keys(j, {"omega_x_khz", "omega_y_khz", "omega_z_khz", "ion_mass_amu", "n_ions"}, "trap");
    auto t = trap::TrapConfig::from_khz(number(j, "omega_x_khz", "trap"), number(j, "omega_y_khz", "trap"),
                                        number(j, "omega_z_khz", "trap"),
                                        number_or(j, "ion_mass_amu", 171.0, "trap") * codata2014.amu);
    if (j.contains("n_ions"))
        t.n_ions = integer(j, "n_ions", "trap");
    t.validate();
    return t;
}

json trap_to_json(const trap::TrapConfig& t)
{
    json j;
    j["omega_x_khz"] = r12(rad_per_s_to_khz(t.omega_x));
    j["omega_y_khz"] = r12(rad_per_s_to_khz(t.omega_y));
    j["omega_z_khz"] = r12(rad_per_s_to_khz(t.omega_z));
    j["ion_mass_amu"] = r12(t.ion_mass / codata2014.amu);
    j["n_ions"] = t.n_ions;
    return j;
}

Coupling parse_coupling(const json& j)
{
    allow_keys(j, {"measured_xi_khz", "xi_khz", "trap"}, "coupling");
    if (j.size() != 1)
        throw ValidationError("coupling: give exactly one of measured_xi_khz, xi_khz, trap");
    if (j.contains("measured_xi_khz"))
        return Coupling::measured(khz_to_rad_per_s(number(j, "measured_xi_khz", "coupling")));
    if (j.contains("xi_khz"))
        return Coupling::hamiltonian(khz_to_rad_per_s(number(j, "xi_khz", "coupling")));
    return Coupling::from_trap(parse_trap(j.at("trap")));
}

json coupling_to_json(const Coupling& c)
{
    json j;
    switch (c.source) {
    case Coupling::Source::measured: j["measured_xi_khz"] = r12(rad_per_s_to_khz(c.value)); break;
    case Coupling::Source::hamiltonian: j["xi_khz"] = r12(rad_per_s_to_khz(c.value)); break;
    case Coupling::Source::trap: j["trap"] = trap_to_json(*c.trap); break;
    }
    return j;
}

states::ModePrep parse_prep(const json& j, std::string_view where)
{
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
        throw ValidationError(fmt::format("{}: needs a string 'kind'", where));
    const auto kind = states::prep_kind_from_string(j.at("kind").get<std::string>());
    states::ModePrep p;
    switch (kind) {
    case states::PrepKind::thermal:
        allow_keys(j, {"kind", "nbar"}, where);
        p = states::ModePrep::thermal(number(j, "nbar", where));
        break;
    case states::PrepKind::coherent:
        allow_keys(j, {"kind", "mbar"}, where);
        p = states::ModePrep::coherent(number(j, "mbar", where));
        break;
    case states::PrepKind::squeezed_thermal:
        allow_keys(j, {"kind", "nbar", "r", "theta"}, where);
        p = states::ModePrep::squeezed_thermal(number_or(j, "nbar", 0.0, where), number(j, "r", where),
                                               number_or(j, "theta", 0.0, where));
        break;
    case states::PrepKind::fock:
        allow_keys(j, {"kind", "n"}, where);
        p = states::ModePrep::fock(integer(j, "n", where));
        break;
    }
    p.validate();
    return p;
}

json prep_to_json(const states::ModePrep& p)
{
    json j;
    j["kind"] = std::string(states::to_string(p.kind));
    switch (p.kind) {
    case states::PrepKind::thermal: j["nbar"] = p.nbar; break;
    case states::PrepKind::coherent: j["mbar"] = p.alpha_sq; break;
    case states::PrepKind::squeezed_thermal:
        j["nbar"] = p.nbar;
        j["r"] = p.r;
        if (p.theta != 0.0)
            j["theta"] = p.theta;
        break;
    case states::PrepKind::fock: j["n"] = p.n_fock; break;
    }
    return j;
}

std::vector<double> parse_grid(const json& j, std::string_view where)
{
    if (j.is_array()) {
        auto us = number_list(j, where);
        for (double& t : us)
            t = us_to_s(t);
        return us;
    }
    allow_keys(j, {"start", "stop", "points"}, where);
    return linear_grid(us_to_s(number(j, "start", where)), us_to_s(number(j, "stop", where)),
                       integer(j, "points", where));
}

json grid_to_json(const std::vector<double>& grid)
{
    const auto n = grid.size();
    if (n >= 3) {
        const double step = (grid.back() - grid.front()) / static_cast<double>(n - 1);
        bool linear = step > 0.0;
        for (std::size_t i = 0; linear && i < n; ++i)
            linear = std::abs(grid[i] - (grid.front() + step * static_cast<double>(i))) <= 1e-9 * step;
        if (linear) {
            json j;
            j["start"] = r12(s_to_us(grid.front()));
            j["stop"] = r12(s_to_us(grid.back()));
            j["points"] = n;
            return j;
        }
    }
    json a = json::array();
    for (double t : grid)
        a.push_back(r12(s_to_us(t)));
    return a;
}

SteadyStateRule parse_rule(const json& j)
{
    allow_keys(j, {"rule", "window_start_us"}, "steady_state");
    const auto& r = j.at("rule");
    if (!r.is_string())
        throw ValidationError("steady_state: 'rule' must be a string");
    const auto name = r.get<std::string>();
    if (name == "dephasing") {
        if (j.contains("window_start_us"))
            throw ValidationError("steady_state: window_start_us only applies to window_average");
        return SteadyStateRule::dephasing();
    }
    if (name == "window_average")
        return SteadyStateRule::window(us_to_s(number(j, "window_start_us", "steady_state")));
    throw ValidationError(fmt::format("steady_state: unknown rule '{}'", name));
}

void parse_sweep(const json& j, Scenario& s)
{
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
        throw ValidationError("sweep: needs a string 'kind'");
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "fig2") {
        allow_keys(j, {"kind", "nbar_w_in", "nbar_c_in"}, "sweep");
        s.fig2 = Fig2Sweep{number_list(j.at("nbar_w_in"), "sweep.nbar_w_in"),
                           number_list(j.at("nbar_c_in"), "sweep.nbar_c_in")};
    } else if (kind == "fig3") {
        allow_keys(j, {"kind", "thermal_rows", "squeezed_rows", "squeezed_coupling", "squeezed_time_grid_us"},
                   "sweep");
        Fig3Sweep f;
        if (j.contains("thermal_rows"))
            for (const auto& r : j.at("thermal_rows")) {
                allow_keys(r, {"h", "w", "c"}, "sweep.thermal_rows");
                f.thermal_rows.push_back({number(r, "h", "thermal row"), number(r, "w", "thermal row"),
                                          number(r, "c", "thermal row")});
            }
        if (j.contains("squeezed_rows"))
            for (const auto& r : j.at("squeezed_rows")) {
                allow_keys(r, {"h", "w", "r", "c"}, "sweep.squeezed_rows");
                f.squeezed_rows.push_back({number(r, "h", "squeezed row"), number(r, "w", "squeezed row"),
                                           number(r, "r", "squeezed row"), number(r, "c", "squeezed row")});
            }
        if (j.contains("squeezed_coupling"))
            f.squeezed_coupling = parse_coupling(j.at("squeezed_coupling"));
        if (j.contains("squeezed_time_grid_us"))
            f.squeezed_time_grid = parse_grid(j.at("squeezed_time_grid_us"), "sweep.squeezed_time_grid_us");
        s.fig3 = std::move(f);
    } else if (kind == "fig4") {
        allow_keys(j, {"kind", "nbar_w_in", "omega_c_khz", "trap", "ion_mass_amu", "refine_tol_us"}, "sweep");
        Fig4Sweep f;
        f.nbar_w_in = number_list(j.at("nbar_w_in"), "sweep.nbar_w_in");
        if (j.contains("omega_c_khz") == j.contains("trap"))
            throw ValidationError("sweep (fig4): give exactly one of omega_c_khz, trap");
        if (j.contains("trap")) {
            const auto t = parse_trap(j.at("trap"));
            f.omega_c = trap::mode_frequencies(t).omega_c;
            f.ion_mass = t.ion_mass;
        } else {
            f.omega_c = khz_to_rad_per_s(number(j, "omega_c_khz", "sweep"));
        }
        if (j.contains("ion_mass_amu"))
            f.ion_mass = number(j, "ion_mass_amu", "sweep") * codata2014.amu;
        f.refine_tol = us_to_s(number_or(j, "refine_tol_us", 0.1, "sweep"));
        s.fig4 = std::move(f);
    } else {
        throw ValidationError(fmt::format("sweep: unknown kind '{}'", kind));
    }
}

} // namespace

std::vector<double> linear_grid(double start, double stop, int points)
{
    if (points < 1)
        throw ValidationError(fmt::format("time grid: {} points", points));
    if (points == 1)
        return {start};
    if (!(stop > start))
        throw ValidationError("time grid: stop must exceed start");
    std::vector<double> g(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i)
        g[static_cast<std::size_t>(i)] = start + (stop - start) * i / (points - 1);
    return g;
}

Scenario parse_scenario(std::string_view text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(fmt::format("scenario: invalid JSON: {}", e.what()));
    }
    try {
        allow_keys(j,
                   {"schema_version", "name", "coupling", "detuning_khz", "preps", "time_grid_us", "truncation",
                    "sideband", "seed", "outputs", "steady_state", "sweep"},
                   "scenario");
        if (!j.contains("schema_version") || !j.at("schema_version").is_number_integer() ||
            j.at("schema_version").get<int>() != scenario_schema_version)
            throw ValidationError(fmt::format("scenario: schema_version must be {}", scenario_schema_version));
        Scenario s;
        if (j.contains("name"))
            s.name = j.at("name").get<std::string>();
        s.coupling = parse_coupling(j.at("coupling"));
        s.detuning = khz_to_rad_per_s(number_or(j, "detuning_khz", 0.0, "scenario"));
        const auto& p = j.at("preps");
        allow_keys(p, {"h", "w", "c"}, "preps");
        s.preps = {parse_prep(p.at("h"), "preps.h"), parse_prep(p.at("w"), "preps.w"), parse_prep(p.at("c"), "preps.c")};
        s.time_grid = parse_grid(j.at("time_grid_us"), "time_grid_us");
        if (j.contains("truncation")) {
            const auto& t = j.at("truncation");
            allow_keys(t, {"epsilon", "n_max_h", "n_max_w", "n_max_c", "renormalize_within_caps"}, "truncation");
            s.truncation.epsilon = number_or(t, "epsilon", s.truncation.epsilon, "truncation");
            if (t.contains("n_max_h"))
                s.truncation.n_max_h = integer(t, "n_max_h", "truncation");
            if (t.contains("n_max_w"))
                s.truncation.n_max_w = integer(t, "n_max_w", "truncation");
            if (t.contains("n_max_c"))
                s.truncation.n_max_c = integer(t, "n_max_c", "truncation");
            if (t.contains("renormalize_within_caps"))
                s.truncation.renormalize_within_caps = t.at("renormalize_within_caps").get<bool>();
        }
        if (j.contains("sideband")) {
            const auto& b = j.at("sideband");
            allow_keys(b, {"omega_rabi_khz", "t_rsb_us", "a_bg", "eta", "gamma0_per_s"}, "sideband");
            measurement::SidebandConfig c;
            c.omega_rabi = khz_to_rad_per_s(number(b, "omega_rabi_khz", "sideband"));
            c.t_rsb = us_to_s(number(b, "t_rsb_us", "sideband"));
            c.a_bg = number_or(b, "a_bg", 0.0, "sideband");
            c.eta = number_or(b, "eta", 1.0, "sideband");
            c.gamma0 = number_or(b, "gamma0_per_s", 0.0, "sideband");
            s.sideband = c;
        }
        if (j.contains("seed")) {
            if (!j.at("seed").is_number_unsigned())
                throw ValidationError("scenario: seed must be a non-negative integer");
            s.seed = j.at("seed").get<std::uint64_t>();
        }
        if (j.contains("outputs")) {
            s.outputs.clear();
            for (const auto& o : j.at("outputs"))
                s.outputs.push_back(o.get<std::string>());
        }
        if (j.contains("steady_state"))
            s.rule = parse_rule(j.at("steady_state"));
        if (j.contains("sweep"))
            parse_sweep(j.at("sweep"), s);
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw ValidationError(fmt::format("scenario: {}", e.what()));
    }
}

Scenario load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ValidationError(fmt::format("cannot open scenario '{}'", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

trap::TrapConfig parse_trap_json(std::string_view text)
{
    try {
        return parse_trap(json::parse(text));
    } catch (const json::exception& e) {
        throw ValidationError(fmt::format("trap: {}", e.what()));
    }
}

trap::TrapConfig load_trap(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ValidationError(fmt::format("cannot open trap file '{}'", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_trap_json(ss.str());
}

std::string scenario_to_json(const Scenario& s)
{
    json j;
    j["schema_version"] = scenario_schema_version;
    j["name"] = s.name;
    j["coupling"] = coupling_to_json(s.coupling);
    if (s.detuning != 0.0)
        j["detuning_khz"] = r12(rad_per_s_to_khz(s.detuning));
    j["preps"] = {{"h", prep_to_json(s.preps.h)}, {"w", prep_to_json(s.preps.w)}, {"c", prep_to_json(s.preps.c)}};
    j["time_grid_us"] = grid_to_json(s.time_grid);
    json t;
    t["epsilon"] = s.truncation.epsilon;
    if (s.truncation.n_max_h)
        t["n_max_h"] = *s.truncation.n_max_h;
    if (s.truncation.n_max_w)
        t["n_max_w"] = *s.truncation.n_max_w;
    if (s.truncation.n_max_c)
        t["n_max_c"] = *s.truncation.n_max_c;
    if (s.truncation.renormalize_within_caps)
        t["renormalize_within_caps"] = true;
    j["truncation"] = t;
    if (s.sideband) {
        const auto& c = *s.sideband;
        j["sideband"] = {{"omega_rabi_khz", r12(rad_per_s_to_khz(c.omega_rabi))},
                         {"t_rsb_us", r12(s_to_us(c.t_rsb))},
                         {"a_bg", c.a_bg},
                         {"eta", c.eta},
                         {"gamma0_per_s", c.gamma0}};
    }
    j["seed"] = s.seed;
    j["outputs"] = s.outputs;
    if (s.rule.method == SteadyStateRule::Method::dephasing)
        j["steady_state"] = {{"rule", "dephasing"}};
    else
        j["steady_state"] = {{"rule", "window_average"}, {"window_start_us", r12(s_to_us(s.rule.window_start))}};
    if (s.fig2) {
        j["sweep"] = {{"kind", "fig2"}, {"nbar_w_in", s.fig2->nbar_w_in}, {"nbar_c_in", s.fig2->nbar_c_in}};
    } else if (s.fig3) {
        json f;
        f["kind"] = "fig3";
        f["thermal_rows"] = json::array();
        for (const auto& r : s.fig3->thermal_rows)
            f["thermal_rows"].push_back({{"h", r.h}, {"w", r.w}, {"c", r.c}});
        f["squeezed_rows"] = json::array();
        for (const auto& r : s.fig3->squeezed_rows)
            f["squeezed_rows"].push_back({{"h", r.h}, {"w", r.w}, {"r", r.r}, {"c", r.c}});
        if (s.fig3->squeezed_coupling)
            f["squeezed_coupling"] = coupling_to_json(*s.fig3->squeezed_coupling);
        if (s.fig3->squeezed_time_grid)
            f["squeezed_time_grid_us"] = grid_to_json(*s.fig3->squeezed_time_grid);
        j["sweep"] = f;
    } else if (s.fig4) {
        j["sweep"] = {{"kind", "fig4"},
                      {"nbar_w_in", s.fig4->nbar_w_in},
                      {"omega_c_khz", r12(rad_per_s_to_khz(s.fig4->omega_c))},
                      {"ion_mass_amu", r12(s.fig4->ion_mass / codata2014.amu)},
                      {"refine_tol_us", r12(s_to_us(s.fig4->refine_tol))}};
    }
    return j.dump(2) + "\n";
}

} // namespace ionfridge::experiments
