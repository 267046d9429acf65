#pragma once

#include "sapa/meanfield.hpp"
#include "sapa/metrics.hpp"
#include "sapa/params.hpp"
#include "sapa/scans.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

// Scenario configuration: a strict, nested key-value schema (JSON on disk)
// holding everything a run needs — system parameters in bench units (GHz,
// MHz, ueV), drive tones, grids, the noise chain, the seed, and the output
// path. Parsing validates every field and rejects unknown keys with
// path-qualified messages; defaults are injected on load and echoed back in
// the output header so any accepted config round-trips to an identical one.

namespace sapa {

enum class Scenario {
    rabi_map,       ///< pump-off transmission map vs probe frequency x detuning
    gain_map,       ///< pump-on signal map vs probe frequency x detuning
    tune_map,       ///< pump-on signal map vs pump-probe beat x detuning
    tones,          ///< emission comb at one working point
    readout,        ///< dispersive readout ensembles, amplifier on vs off
    compress,       ///< gain vs probe power and the 1 dB compression point
    fit,            ///< synthetic spectrum fit: recover couplings from data
    noise_budget,   ///< closed-form amplifier chain metrics
    calibrate_pump, ///< pump amplitude reaching the target parametric gain
};

/// Hyphenated scenario name as used in configs and CLI subcommands.
std::string to_string(Scenario scenario);

/// Inverse of to_string; throws std::invalid_argument listing valid names.
Scenario scenario_from_string(const std::string& name);

/// All nine scenarios in a fixed order (config/CLI surface).
const std::vector<Scenario>& all_scenarios();

struct DqdConfig {
    double epsilon_uev = 0.0;    ///< interdot detuning, ueV
    double two_tc_ghz = 5.32;    ///< qubit gap 2 t_c / h at zero detuning, GHz
    double g_c_mhz = 60.0;       ///< bare charge-cavity coupling g_c/2pi, MHz
    double gamma_1_mhz = 100.0;  ///< relaxation gamma_1/2pi, MHz
    double gamma_phi_mhz = 50.0; ///< pure dephasing gamma_phi/2pi, MHz
    double lever_arm = 0.072;    ///< gate-voltage to detuning conversion, eV/V

    DqdParams make() const;
};

struct SystemConfig {
    double omega_r_ghz = 5.198;  ///< cavity frequency omega_r/2pi, GHz
    double kappa_in_mhz = 7.0;   ///< input port rate kappa_in/2pi, MHz
    double kappa_out_mhz = 7.0;  ///< output port rate kappa_out/2pi, MHz
    double kappa_int_mhz = 0.0;  ///< internal loss kappa_int/2pi, MHz
    std::vector<DqdConfig> dqds = {DqdConfig{}};

    SystemParams make() const;
};

struct DriveConfig {
    double probe_freq_ghz = 5.198;  ///< signal tone frequency, GHz
    double probe_amp = 2000.0;      ///< incident flux amplitude, sqrt(ph/s)
    double probe_phase_rad = 0.0;
    double pump_amp = 0.0;  ///< 0 means "calibrate when a pump is needed"
    double beat_mhz = 1.0;  ///< pump sits at probe + beat
    int n_harmonics = 2;    ///< demodulation window half-width

    DriveTone probe_tone() const;
    double beat() const;  ///< rad/s
};

/// Linear grids (min, max, points); each scenario uses the axes it needs.
/// A single-point axis collapses to its minimum.
struct GridConfig {
    double freq_min_ghz = 5.168;
    double freq_max_ghz = 5.228;
    int freq_points = 61;

    double eps_min_uev = -200.0;
    double eps_max_uev = 200.0;
    int eps_points = 41;

    double beat_min_mhz = 0.5;
    double beat_max_mhz = 25.0;
    int beat_points = 20;

    double power_min_dbm = -140.0;
    double power_max_dbm = -95.0;
    int power_points = 16;

    double eps2_min_uev = 0.0;
    double eps2_max_uev = 20.0;
    int eps2_points = 2;

    Eigen::VectorXd freq_grid() const;   ///< rad/s
    Eigen::VectorXd eps_grid() const;    ///< J
    Eigen::VectorXd beat_grid() const;   ///< rad/s
    Eigen::VectorXd power_grid() const;  ///< dBm
    Eigen::VectorXd eps2_grid() const;   ///< J
};

struct NoiseConfig {
    double n_sapa = 1.5;          ///< on-chip amplifier added noise, quanta
    double n_hemt = 10.0;         ///< downstream chain input-referred, quanta
    double g_sapa_linear = 13.4;  ///< amplifier power gain, linear

    NoiseChain make() const;
};

struct ReadoutConfig {
    int repeats = 30;     ///< single-shot repetitions per grid point
    int sapa_index = 0;   ///< which DQD is the amplifier (the other is sensed)
    double bandwidth_hz = 1000.0;
};

struct FitConfig {
    double noise_std = 0.01;        ///< additive amplitude noise sigma
    double g_init_factor = 1.3;     ///< initial guess = truth * factor
    double gamma_init_factor = 0.7;
};

struct CalibrationConfig {
    double target_db = 11.28;
    double tol_db = 0.05;
    double initial_amp = 1000.0;
    double growth = 1.3;
    int max_steps = 200;
    double max_amp_factor = 300.0;

    CalibrationOptions make() const;  ///< scan options filled in separately
};

struct IntegratorConfig {
    double rtol = 1e-9;
    double atol = 1e-12;
    double settle_rel = 1e-6;
    double settle_abs = 1e-9;
    int max_periods = 200;
    int samples_per_period = 256;
    double max_photons = 1e9;

    PeriodicOptions make() const;
};

struct ScenarioConfig {
    Scenario scenario = Scenario::rabi_map;
    std::uint64_t seed = 1;
    std::string output;  ///< CSV path; defaults to "<scenario>.csv"

    SystemConfig system;
    DriveConfig drive;
    GridConfig grid;
    NoiseConfig noise;
    ReadoutConfig readout;
    FitConfig fit;
    CalibrationConfig calibration;
    IntegratorConfig integrator;

    SystemParams make_system() const { return system.make(); }
    PumpScanOptions scan_options() const;
    CalibrationOptions calibration_options() const;

    /// Semantic checks beyond field ranges (grid ordering, system validity).
    void validate() const;
};

/// Parse and fully validate a config document. Unknown keys, missing
/// required keys, type mismatches, and range violations all throw
/// std::invalid_argument with the offending path (e.g. "system.kappa_in_mhz:
/// must be >= 0"). The only required key is "scenario"; everything else
/// defaults to the reference device values above.
ScenarioConfig parse_config(const std::string& text);

/// Canonical one-line JSON rendering with every key materialized (defaults
/// included), keys sorted. parse_config(canonical_text(c)) reproduces c
/// exactly, and equal configs produce identical strings.
std::string canonical_text(const ScenarioConfig& config);

/// FNV-1a hash of canonical_text, as 16 hex digits.
std::string config_hash_hex(const ScenarioConfig& config);

}  // namespace sapa
