#pragma once

#include "ionfridge/benchmarks.hpp"
#include "ionfridge/dense_oracle.hpp"
#include "ionfridge/dynamics.hpp"
#include "ionfridge/measurement.hpp"
#include "ionfridge/trap.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ionfridge::experiments {

inline constexpr int scenario_schema_version = 1;
const char* software_version();

// Where the coupling rate comes from. A measured value is the observed
// population-exchange rate, twice the Hamiltonian coupling; `hamiltonian`
// is used as given; `trap` evaluates the closed-form rate for a trap.
struct Coupling {
    enum class Source { measured, hamiltonian, trap };
    Source source = Source::hamiltonian;
    double value = 0.0; // rad/s, unused for Source::trap
    std::optional<trap::TrapConfig> trap;

    static Coupling measured(double xi_measured);
    static Coupling hamiltonian(double xi);
    static Coupling from_trap(const trap::TrapConfig& t);

    // Coupling of the Hamiltonian, rad/s.
    double xi() const;
};

struct SteadyStateRule {
    enum class Method { dephasing, window_average };
    Method method = Method::dephasing;
    double window_start = 240e-6; // s

    static SteadyStateRule dephasing() { return {}; }
    static SteadyStateRule window(double start_s) { return {Method::window_average, start_s}; }
    // "dephasing" or "window:<us>".
    static SteadyStateRule parse(std::string_view text);
    std::string describe() const;
};

struct Fig2Sweep {
    std::vector<double> nbar_w_in;
    std::vector<double> nbar_c_in;
};

struct ThermalRow {
    double h = 0.0, w = 0.0, c = 0.0;
};

struct SqueezedRow {
    double h = 0.0, w = 0.0, r = 0.0, c = 0.0;
};

struct Fig3Sweep {
    std::vector<ThermalRow> thermal_rows;
    std::vector<SqueezedRow> squeezed_rows;
    std::optional<Coupling> squeezed_coupling; // rows taken in a different trap setting
    std::optional<std::vector<double>> squeezed_time_grid;
};

struct Fig4Sweep {
    std::vector<double> nbar_w_in;
    double omega_c = 0.0;  // rad/s, for the cooling power
    double ion_mass = 171.0 * codata2014.amu;
    double refine_tol = 0.1e-6; // s
};

struct Scenario {
    std::string name = "scenario";
    Coupling coupling;
    double detuning = 0.0; // rad/s
    dynamics::ModePreps preps;
    std::vector<double> time_grid; // s
    fock::TruncationPolicy truncation;
    std::optional<measurement::SidebandConfig> sideband;
    std::uint64_t seed = 0;
    std::vector<std::string> outputs{"trajectory", "steady_state"};
    SteadyStateRule rule;
    std::optional<Fig2Sweep> fig2;
    std::optional<Fig3Sweep> fig3;
    std::optional<Fig4Sweep> fig4;

    // Throws ValidationError.
    void validate() const;
};

// JSON scenario files. Unknown keys and schema versions are rejected.
Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::filesystem::path& path);
std::string scenario_to_json(const Scenario& s);

// Trap file: "A", "B", or {omega_x_khz, omega_y_khz, omega_z_khz[, ion_mass_amu, n_ions]}.
trap::TrapConfig parse_trap_json(std::string_view json_text);
trap::TrapConfig load_trap(const std::filesystem::path& path);

std::vector<double> linear_grid(double start, double stop, int points);

// ---- datasets -------------------------------------------------------------

struct Table {
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void meta(std::string key, std::string value);
    void meta(std::string key, double value);
};

// `# key: value` lines, header, rows; {:.12g} floats, LF endings.
void write_csv(std::ostream& out, const Table& table);
void write_csv(const std::filesystem::path& path, const Table& table);

struct TrajectoryRow {
    double tau = 0.0; // s
    dynamics::ModeMeans means;
    std::optional<std::array<double, 3>> p_up; // red-sideband brightness per mode
};

struct Trajectory {
    std::vector<TrajectoryRow> rows;
    double retained_weight = 0.0;
    std::size_t sector_count = 0;
    double xi = 0.0;
};

Trajectory run_scenario(const Scenario& s);
Table trajectory_table(const Scenario& s, const Trajectory& t);

// Propagator for a scenario's initial ensemble.
dynamics::SpectralPropagator make_propagator(const Scenario& s);

dynamics::ModeMeans steady_state(const Scenario& s, const SteadyStateRule& rule);
dynamics::ModeMeans steady_state(const dynamics::SpectralPropagator& prop, std::span<const double> grid,
                                 const SteadyStateRule& rule);

struct Fig2Cell {
    double nbar_w_in = 0.0;
    double nbar_c_in = 0.0;
    dynamics::ModeMeans ss;
    double eps_h = 0.0; // n_h^in - n_h^ss
};

struct Fig2Row {
    double nbar_w_in = 0.0;
    double nbar_c_eq = 0.0; // from the eps_h sign change (NaN for a single cell)
    bool extrapolated = false;
    std::optional<double> nbar_c_eq_classical; // closed form; empty when no solution
};

struct Fig2Dataset {
    std::vector<Fig2Cell> cells;
    std::vector<Fig2Row> equilibrium;
};

Fig2Dataset fig2_dataset(const Scenario& base, const Fig2Sweep& sweep);
std::pair<Table, Table> fig2_tables(const Scenario& base, const Fig2Dataset& d);

struct Fig3Row {
    bool squeezed = false;
    double nbar_h_in = 0.0, nbar_w_in = 0.0, r = 0.0, nbar_c_in = 0.0;
    double work_mean = 0.0;   // mean phonons of the work-mode state
    double nbar_c_ss = 0.0;
    double delta_c0 = 0.0;    // n_c^in - n_c^ss
    double delta_c_classical = 0.0; // closed-form end point with the same means
    std::vector<double> tau;
    std::vector<double> delta_c; // n_c(tau) - n_c^ss
    std::size_t sector_count = 0;
};

std::vector<Fig3Row> fig3_dataset(const Scenario& base, const Fig3Sweep& sweep);
std::pair<Table, Table> fig3_tables(const Scenario& base, const std::vector<Fig3Row>& rows);

struct SingleShot {
    double tau_star = 0.0; // s
    double nbar_c_min = 0.0;
};

// Grid scan then golden-section refinement of argmin n_c(tau). Throws
// ValidationError when the grid is coarser than 5 us around the minimum.
SingleShot single_shot_search(const dynamics::SpectralPropagator& prop, std::span<const double> grid,
                              double tol = 0.1e-6);

struct Fig4Point {
    double nbar_w_in = 0.0;
    double tau_star = 0.0;
    double nbar_c_in = 0.0;
    double nbar_c_min = 0.0;
    double delta_single = 0.0;     // n_c^in - n_c(tau*)
    double delta_long_time = 0.0;  // n_c^in - n_c^inf
    double delta_classical = 0.0;  // n_c^in - classical end point
    double incoherent_excess = 0.0; // n_c^inf - min_t n_c^incoherent(t) (<= 0 means never below)
    double power = 0.0;            // W/kg
};

struct Fig4Dataset {
    std::vector<Fig4Point> points;
    std::size_t best = 0; // largest delta_single
};

Fig4Dataset fig4_dataset(const Scenario& base, const Fig4Sweep& sweep);
Table fig4_table(const Scenario& base, const Fig4Dataset& d);

// Linearized brightness-to-occupation conversion for one mode at time tau,
// using simulations at the nominal initial state and with that mode's
// initial occupation shifted by +/- delta.
struct EstimatorRun {
    measurement::EstimatorInputs inputs;
    double estimate = 0.0;
};

EstimatorRun estimate_from_scenario(const Scenario& s, double tau, double p_up_exp,
                                    const measurement::EstimatorConfig& cfg = {});
// Brightness of one mode at tau for a scenario (requires a sideband config).
double simulated_brightness(const Scenario& s, double tau, char mode);

struct OracleReport {
    double max_abs_diff = 0.0;
    std::size_t points = 0;
    double seconds = 0.0;
};

OracleReport oracle_check(const dynamics::ModePreps& preps, double xi, std::span<const double> times,
                          dynamics::DenseCaps caps, double detuning = 0.0);

// Built-in scenarios matching the reported experiments.
namespace presets {
Scenario fig3a();
Scenario fig2();
Scenario fig3();
Scenario fig4();
Scenario oracle();
} // namespace presets

} // namespace ionfridge::experiments
