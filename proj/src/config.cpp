#include "sapa/config.hpp"

#include "sapa/constants.hpp"
#include "sapa/hash.hpp"

#include <json.hpp>

#include <climits>
#include <cstdio>
#include <initializer_list>
#include <stdexcept>
#include <string>

namespace sapa {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& message)
{
    throw std::invalid_argument(path + ": " + message);
}

std::string join(const std::string& path, const std::string& key)
{
    return path.empty() ? key : path + "." + key;
}

void expect_object(const json& j, const std::string& path)
{
    if (!j.is_object()) {
        fail(path, "expected an object");
    }
}

/// Strict-schema guard: every key present must be in the allowed list.
void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed)
{
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* key : allowed) {
            if (item.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) {
            fail(join(path, item.key()), "unknown key");
        }
    }
}

double read_double(const json& j, const std::string& path, const char* key,
                   double fallback)
{
    if (!j.contains(key)) {
        return fallback;
    }
    const json& v = j.at(key);
    if (!v.is_number()) {
        fail(join(path, key), "expected a number");
    }
    return v.get<double>();
}

int read_int(const json& j, const std::string& path, const char* key,
             int fallback)
{
    if (!j.contains(key)) {
        return fallback;
    }
    const json& v = j.at(key);
    if (!v.is_number_integer() && !v.is_number_unsigned()) {
        fail(join(path, key), "expected an integer");
    }
    const auto wide = v.get<long long>();
    if (wide < INT_MIN || wide > INT_MAX) {
        fail(join(path, key), "integer out of range");
    }
    return static_cast<int>(wide);
}

std::uint64_t read_seed(const json& j, const std::string& path,
                        const char* key, std::uint64_t fallback)
{
    if (!j.contains(key)) {
        return fallback;
    }
    const json& v = j.at(key);
    if (v.is_number_unsigned()) {
        return v.get<std::uint64_t>();
    }
    if (v.is_number_integer()) {
        fail(join(path, key), "must be >= 0");
    }
    fail(join(path, key), "expected an unsigned integer");
}

std::string read_string(const json& j, const std::string& path,
                        const char* key, const std::string& fallback)
{
    if (!j.contains(key)) {
        return fallback;
    }
    const json& v = j.at(key);
    if (!v.is_string()) {
        fail(join(path, key), "expected a string");
    }
    return v.get<std::string>();
}

void require_positive(double value, const std::string& path)
{
    if (!(value > 0)) {
        fail(path, "must be > 0");
    }
}

void require_non_negative(double value, const std::string& path)
{
    if (!(value >= 0)) {
        fail(path, "must be >= 0");
    }
}

DqdConfig parse_dqd(const json& j, const std::string& path)
{
    expect_object(j, path);
    check_keys(j, path,
               {"epsilon_uev", "two_tc_ghz", "g_c_mhz", "gamma_1_mhz",
                "gamma_phi_mhz", "lever_arm"});
    DqdConfig d;
    d.epsilon_uev = read_double(j, path, "epsilon_uev", d.epsilon_uev);
    d.two_tc_ghz = read_double(j, path, "two_tc_ghz", d.two_tc_ghz);
    d.g_c_mhz = read_double(j, path, "g_c_mhz", d.g_c_mhz);
    d.gamma_1_mhz = read_double(j, path, "gamma_1_mhz", d.gamma_1_mhz);
    d.gamma_phi_mhz = read_double(j, path, "gamma_phi_mhz", d.gamma_phi_mhz);
    d.lever_arm = read_double(j, path, "lever_arm", d.lever_arm);
    require_non_negative(d.two_tc_ghz, join(path, "two_tc_ghz"));
    require_non_negative(d.g_c_mhz, join(path, "g_c_mhz"));
    require_non_negative(d.gamma_1_mhz, join(path, "gamma_1_mhz"));
    require_non_negative(d.gamma_phi_mhz, join(path, "gamma_phi_mhz"));
    require_positive(d.lever_arm, join(path, "lever_arm"));
    return d;
}

SystemConfig parse_system(const json& j, const std::string& path)
{
    expect_object(j, path);
    check_keys(j, path,
               {"omega_r_ghz", "kappa_in_mhz", "kappa_out_mhz",
                "kappa_int_mhz", "dqds"});
    SystemConfig s;
    s.omega_r_ghz = read_double(j, path, "omega_r_ghz", s.omega_r_ghz);
    s.kappa_in_mhz = read_double(j, path, "kappa_in_mhz", s.kappa_in_mhz);
    s.kappa_out_mhz = read_double(j, path, "kappa_out_mhz", s.kappa_out_mhz);
    s.kappa_int_mhz = read_double(j, path, "kappa_int_mhz", s.kappa_int_mhz);
    require_positive(s.omega_r_ghz, join(path, "omega_r_ghz"));
    require_non_negative(s.kappa_in_mhz, join(path, "kappa_in_mhz"));
    require_non_negative(s.kappa_out_mhz, join(path, "kappa_out_mhz"));
    require_non_negative(s.kappa_int_mhz, join(path, "kappa_int_mhz"));
    if (!(s.kappa_in_mhz + s.kappa_out_mhz + s.kappa_int_mhz > 0)) {
        fail(path, "total kappa must be > 0");
    }
    if (j.contains("dqds")) {
        const json& arr = j.at("dqds");
        if (!arr.is_array()) {
            fail(join(path, "dqds"), "expected an array");
        }
        if (arr.empty() || arr.size() > 2) {
            fail(join(path, "dqds"), "need 1 or 2 entries");
        }
        s.dqds.clear();
        for (std::size_t i = 0; i < arr.size(); ++i) {
            s.dqds.push_back(parse_dqd(
                arr[i], join(path, "dqds[" + std::to_string(i) + "]")));
        }
    }
    return s;
}

DriveConfig parse_drive(const json& j, const std::string& path)
{
    expect_object(j, path);
    check_keys(j, path,
               {"probe_freq_ghz", "probe_amp", "probe_phase_rad", "pump_amp",
                "beat_mhz", "n_harmonics"});
    DriveConfig d;
    d.probe_freq_ghz = read_double(j, path, "probe_freq_ghz", d.probe_freq_ghz);
    d.probe_amp = read_double(j, path, "probe_amp", d.probe_amp);
    d.probe_phase_rad = read_double(j, path, "probe_phase_rad",
                                    d.probe_phase_rad);
    d.pump_amp = read_double(j, path, "pump_amp", d.pump_amp);
    d.beat_mhz = read_double(j, path, "beat_mhz", d.beat_mhz);
    d.n_harmonics = read_int(j, path, "n_harmonics", d.n_harmonics);
    require_positive(d.probe_freq_ghz, join(path, "probe_freq_ghz"));
    require_positive(d.probe_amp, join(path, "probe_amp"));
    require_non_negative(d.pump_amp, join(path, "pump_amp"));
    require_positive(d.beat_mhz, join(path, "beat_mhz"));
    if (d.n_harmonics < 1) {
        fail(join(path, "n_harmonics"), "must be >= 1");
    }
    return d;
}

void parse_axis(const json& j, const std::string& path, const char* min_key,
                const char* max_key, const char* points_key, double& min_value,
                double& max_value, int& points)
{
    min_value = read_double(j, path, min_key, min_value);
    max_value = read_double(j, path, max_key, max_value);
    points = read_int(j, path, points_key, points);
    if (points < 1) {
        fail(join(path, points_key), "must be >= 1");
    }
    if (!(max_value >= min_value)) {
        fail(join(path, max_key), "must be >= the axis minimum");
    }
}

GridConfig parse_grid(const json& j, const std::string& path)
{
    expect_object(j, path);
    check_keys(j, path,
               {"freq_min_ghz", "freq_max_ghz", "freq_points", "eps_min_uev",
                "eps_max_uev", "eps_points", "beat_min_mhz", "beat_max_mhz",
                "beat_points", "power_min_dbm", "power_max_dbm",
                "power_points", "eps2_min_uev", "eps2_max_uev",
                "eps2_points"});
    GridConfig g;
    parse_axis(j, path, "freq_min_ghz", "freq_max_ghz", "freq_points",
               g.freq_min_ghz, g.freq_max_ghz, g.freq_points);
    parse_axis(j, path, "eps_min_uev", "eps_max_uev", "eps_points",
               g.eps_min_uev, g.eps_max_uev, g.eps_points);
    parse_axis(j, path, "beat_min_mhz", "beat_max_mhz", "beat_points",
               g.beat_min_mhz, g.beat_max_mhz, g.beat_points);
    parse_axis(j, path, "power_min_dbm", "power_max_dbm", "power_points",
               g.power_min_dbm, g.power_max_dbm, g.power_points);
    parse_axis(j, path, "eps2_min_uev", "eps2_max_uev", "eps2_points",
               g.eps2_min_uev, g.eps2_max_uev, g.eps2_points);
    require_positive(g.freq_min_ghz, join(path, "freq_min_ghz"));
    require_positive(g.beat_min_mhz, join(path, "beat_min_mhz"));
    return g;
}

NoiseConfig parse_noise(const json& j, const std::string& path)
{
    expect_object(j, path);
    check_keys(j, path, {"n_sapa", "n_hemt", "g_sapa_linear"});
    NoiseConfig n;
    n.n_sapa = read_double(j, path, "n_sapa", n.n_sapa);
    n.n_hemt = read_double(j, path, "n_hemt", n.n_hemt);
    n.g_sapa_linear = read_double(j, path, "g_sapa_linear", n.g_sapa_linear);
    require_non_negative(n.n_sapa, join(path, "n_sapa"));
    require_non_negative(n.n_hemt, join(path, "n_hemt"));
    if (!(n.g_sapa_linear >= 1)) {
        fail(join(path, "g_sapa_linear"), "must be >= 1");
    }
    return n;
}

ReadoutConfig parse_readout(const json& j, const std::string& path)
{
    expect_object(j, path);
    check_keys(j, path, {"repeats", "sapa_index", "bandwidth_hz"});
    ReadoutConfig r;
    r.repeats = read_int(j, path, "repeats", r.repeats);
    r.sapa_index = read_int(j, path, "sapa_index", r.sapa_index);
    r.bandwidth_hz = read_double(j, path, "bandwidth_hz", r.bandwidth_hz);
    if (r.repeats < 2) {
        fail(join(path, "repeats"), "must be >= 2");
    }
    if (r.sapa_index != 0 && r.sapa_index != 1) {
        fail(join(path, "sapa_index"), "must be 0 or 1");
    }
    require_positive(r.bandwidth_hz, join(path, "bandwidth_hz"));
    return r;
}

FitConfig parse_fit(const json& j, const std::string& path)
{
    expect_object(j, path);
    check_keys(j, path, {"noise_std", "g_init_factor", "gamma_init_factor"});
    FitConfig f;
    f.noise_std = read_double(j, path, "noise_std", f.noise_std);
    f.g_init_factor = read_double(j, path, "g_init_factor", f.g_init_factor);
    f.gamma_init_factor =
        read_double(j, path, "gamma_init_factor", f.gamma_init_factor);
    require_non_negative(f.noise_std, join(path, "noise_std"));
    require_positive(f.g_init_factor, join(path, "g_init_factor"));
    require_positive(f.gamma_init_factor, join(path, "gamma_init_factor"));
    return f;
}

CalibrationConfig parse_calibration(const json& j, const std::string& path)
{
    expect_object(j, path);
    check_keys(j, path,
               {"target_db", "tol_db", "initial_amp", "growth", "max_steps",
                "max_amp_factor"});
    CalibrationConfig c;
    c.target_db = read_double(j, path, "target_db", c.target_db);
    c.tol_db = read_double(j, path, "tol_db", c.tol_db);
    c.initial_amp = read_double(j, path, "initial_amp", c.initial_amp);
    c.growth = read_double(j, path, "growth", c.growth);
    c.max_steps = read_int(j, path, "max_steps", c.max_steps);
    c.max_amp_factor = read_double(j, path, "max_amp_factor",
                                   c.max_amp_factor);
    require_positive(c.target_db, join(path, "target_db"));
    require_positive(c.tol_db, join(path, "tol_db"));
    require_positive(c.initial_amp, join(path, "initial_amp"));
    if (!(c.growth > 1)) {
        fail(join(path, "growth"), "must be > 1");
    }
    if (c.max_steps < 1) {
        fail(join(path, "max_steps"), "must be >= 1");
    }
    if (!(c.max_amp_factor > 1)) {
        fail(join(path, "max_amp_factor"), "must be > 1");
    }
    return c;
}

IntegratorConfig parse_integrator(const json& j, const std::string& path)
{
    expect_object(j, path);
    check_keys(j, path,
               {"rtol", "atol", "settle_rel", "settle_abs", "max_periods",
                "samples_per_period", "max_photons"});
    IntegratorConfig i;
    i.rtol = read_double(j, path, "rtol", i.rtol);
    i.atol = read_double(j, path, "atol", i.atol);
    i.settle_rel = read_double(j, path, "settle_rel", i.settle_rel);
    i.settle_abs = read_double(j, path, "settle_abs", i.settle_abs);
    i.max_periods = read_int(j, path, "max_periods", i.max_periods);
    i.samples_per_period =
        read_int(j, path, "samples_per_period", i.samples_per_period);
    i.max_photons = read_double(j, path, "max_photons", i.max_photons);
    require_positive(i.rtol, join(path, "rtol"));
    require_positive(i.atol, join(path, "atol"));
    require_positive(i.settle_rel, join(path, "settle_rel"));
    require_non_negative(i.settle_abs, join(path, "settle_abs"));
    if (i.max_periods < 2) {
        fail(join(path, "max_periods"), "must be >= 2");
    }
    if (i.samples_per_period < 64) {
        fail(join(path, "samples_per_period"), "must be >= 64");
    }
    require_positive(i.max_photons, join(path, "max_photons"));
    return i;
}

Eigen::VectorXd linear_grid(double min_value, double max_value, int points)
{
    if (points == 1) {
        return Eigen::VectorXd::Constant(1, min_value);
    }
    return Eigen::VectorXd::LinSpaced(points, min_value, max_value);
}

constexpr double kGhz = constants::two_pi * 1e9;
constexpr double kMhz = constants::two_pi * 1e6;

}  // namespace

std::string to_string(Scenario scenario)
{
    switch (scenario) {
        case Scenario::rabi_map: return "rabi-map";
        case Scenario::gain_map: return "gain-map";
        case Scenario::tune_map: return "tune-map";
        case Scenario::tones: return "tones";
        case Scenario::readout: return "readout";
        case Scenario::compress: return "compress";
        case Scenario::fit: return "fit";
        case Scenario::noise_budget: return "noise-budget";
        case Scenario::calibrate_pump: return "calibrate-pump";
    }
    throw std::invalid_argument("to_string: unknown scenario value");
}

const std::vector<Scenario>& all_scenarios()
{
    static const std::vector<Scenario> scenarios = {
        Scenario::rabi_map, Scenario::gain_map,  Scenario::tune_map,
        Scenario::tones,    Scenario::readout,   Scenario::compress,
        Scenario::fit,      Scenario::noise_budget,
        Scenario::calibrate_pump,
    };
    return scenarios;
}

Scenario scenario_from_string(const std::string& name)
{
    for (Scenario s : all_scenarios()) {
        if (to_string(s) == name) {
            return s;
        }
    }
    std::string valid;
    for (Scenario s : all_scenarios()) {
        if (!valid.empty()) {
            valid += ", ";
        }
        valid += to_string(s);
    }
    throw std::invalid_argument("scenario: unknown name \"" + name +
                                "\" (valid: " + valid + ")");
}

DqdParams DqdConfig::make() const
{
    DqdParams d;
    d.epsilon = constants::uev_to_joule(epsilon_uev);
    d.t_c = 0.5 * constants::h_planck * two_tc_ghz * 1e9;
    d.g_c = g_c_mhz * kMhz;
    d.gamma_1 = gamma_1_mhz * kMhz;
    d.gamma_phi = gamma_phi_mhz * kMhz;
    d.lever_arm = lever_arm;
    return d;
}

SystemParams SystemConfig::make() const
{
    SystemParams s;
    s.cavity.omega_r = omega_r_ghz * kGhz;
    s.cavity.kappa_in = kappa_in_mhz * kMhz;
    s.cavity.kappa_out = kappa_out_mhz * kMhz;
    s.cavity.kappa_int = kappa_int_mhz * kMhz;
    for (const DqdConfig& d : dqds) {
        s.dqds.push_back(d.make());
    }
    return s;
}

DriveTone DriveConfig::probe_tone() const
{
    return DriveTone{probe_freq_ghz * kGhz, probe_amp, probe_phase_rad};
}

double DriveConfig::beat() const
{
    return beat_mhz * kMhz;
}

Eigen::VectorXd GridConfig::freq_grid() const
{
    return linear_grid(freq_min_ghz * kGhz, freq_max_ghz * kGhz, freq_points);
}

Eigen::VectorXd GridConfig::eps_grid() const
{
    return linear_grid(constants::uev_to_joule(eps_min_uev),
                       constants::uev_to_joule(eps_max_uev), eps_points);
}

Eigen::VectorXd GridConfig::beat_grid() const
{
    return linear_grid(beat_min_mhz * kMhz, beat_max_mhz * kMhz, beat_points);
}

Eigen::VectorXd GridConfig::power_grid() const
{
    return linear_grid(power_min_dbm, power_max_dbm, power_points);
}

Eigen::VectorXd GridConfig::eps2_grid() const
{
    return linear_grid(constants::uev_to_joule(eps2_min_uev),
                       constants::uev_to_joule(eps2_max_uev), eps2_points);
}

NoiseChain NoiseConfig::make() const
{
    NoiseChain chain;
    chain.n_sapa = n_sapa;
    chain.n_hemt = n_hemt;
    chain.g_sapa_linear = g_sapa_linear;
    return chain;
}

CalibrationOptions CalibrationConfig::make() const
{
    CalibrationOptions c;
    c.target_db = target_db;
    c.tol_db = tol_db;
    c.initial_amp = initial_amp;
    c.growth = growth;
    c.max_steps = max_steps;
    c.max_amp_factor = max_amp_factor;
    return c;
}

PeriodicOptions IntegratorConfig::make() const
{
    PeriodicOptions p;
    p.rtol = rtol;
    p.atol = atol;
    p.settle_rel = settle_rel;
    p.settle_abs = settle_abs;
    p.max_periods = max_periods;
    p.samples_per_period = samples_per_period;
    p.max_photons = max_photons;
    return p;
}

PumpScanOptions ScenarioConfig::scan_options() const
{
    PumpScanOptions options;
    options.probe_amp = drive.probe_amp;
    options.n_harmonics = drive.n_harmonics;
    options.periodic = integrator.make();
    return options;
}

CalibrationOptions ScenarioConfig::calibration_options() const
{
    CalibrationOptions options = calibration.make();
    options.scan = scan_options();
    return options;
}

void ScenarioConfig::validate() const
{
    make_system().validate();
    if (scenario == Scenario::readout && system.dqds.size() != 2) {
        fail("system.dqds",
             "readout needs exactly 2 entries (amplifier + sensor)");
    }
    if (scenario == Scenario::compress) {
        if (grid.power_points < 2) {
            fail("grid.power_points", "compress needs >= 2 powers");
        }
        if (!(grid.power_max_dbm > grid.power_min_dbm)) {
            fail("grid.power_max_dbm",
                 "compress needs a strictly increasing power axis");
        }
    }
    if (output.empty()) {
        fail("output", "must be a non-empty path");
    }
}

ScenarioConfig parse_config(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    expect_object(j, "config");
    check_keys(j, "",
               {"scenario", "seed", "output", "system", "drive", "grid",
                "noise", "readout", "fit", "calibration", "integrator"});

    ScenarioConfig cfg;
    if (!j.contains("scenario")) {
        fail("scenario", "missing required key");
    }
    cfg.scenario =
        scenario_from_string(read_string(j, "", "scenario", ""));
    cfg.seed = read_seed(j, "", "seed", cfg.seed);
    cfg.output = read_string(j, "", "output", to_string(cfg.scenario) + ".csv");
    if (j.contains("system")) {
        cfg.system = parse_system(j.at("system"), "system");
    }
    if (j.contains("drive")) {
        cfg.drive = parse_drive(j.at("drive"), "drive");
    }
    if (j.contains("grid")) {
        cfg.grid = parse_grid(j.at("grid"), "grid");
    }
    if (j.contains("noise")) {
        cfg.noise = parse_noise(j.at("noise"), "noise");
    }
    if (j.contains("readout")) {
        cfg.readout = parse_readout(j.at("readout"), "readout");
    }
    if (j.contains("fit")) {
        cfg.fit = parse_fit(j.at("fit"), "fit");
    }
    if (j.contains("calibration")) {
        cfg.calibration = parse_calibration(j.at("calibration"), "calibration");
    }
    if (j.contains("integrator")) {
        cfg.integrator = parse_integrator(j.at("integrator"), "integrator");
    }
    cfg.validate();
    return cfg;
}

std::string canonical_text(const ScenarioConfig& config)
{
    json j;
    j["scenario"] = to_string(config.scenario);
    j["seed"] = config.seed;
    j["output"] = config.output;

    json sys;
    sys["omega_r_ghz"] = config.system.omega_r_ghz;
    sys["kappa_in_mhz"] = config.system.kappa_in_mhz;
    sys["kappa_out_mhz"] = config.system.kappa_out_mhz;
    sys["kappa_int_mhz"] = config.system.kappa_int_mhz;
    sys["dqds"] = json::array();
    for (const DqdConfig& d : config.system.dqds) {
        json dj;
        dj["epsilon_uev"] = d.epsilon_uev;
        dj["two_tc_ghz"] = d.two_tc_ghz;
        dj["g_c_mhz"] = d.g_c_mhz;
        dj["gamma_1_mhz"] = d.gamma_1_mhz;
        dj["gamma_phi_mhz"] = d.gamma_phi_mhz;
        dj["lever_arm"] = d.lever_arm;
        sys["dqds"].push_back(dj);
    }
    j["system"] = sys;

    json drive;
    drive["probe_freq_ghz"] = config.drive.probe_freq_ghz;
    drive["probe_amp"] = config.drive.probe_amp;
    drive["probe_phase_rad"] = config.drive.probe_phase_rad;
    drive["pump_amp"] = config.drive.pump_amp;
    drive["beat_mhz"] = config.drive.beat_mhz;
    drive["n_harmonics"] = config.drive.n_harmonics;
    j["drive"] = drive;

    json grid;
    grid["freq_min_ghz"] = config.grid.freq_min_ghz;
    grid["freq_max_ghz"] = config.grid.freq_max_ghz;
    grid["freq_points"] = config.grid.freq_points;
    grid["eps_min_uev"] = config.grid.eps_min_uev;
    grid["eps_max_uev"] = config.grid.eps_max_uev;
    grid["eps_points"] = config.grid.eps_points;
    grid["beat_min_mhz"] = config.grid.beat_min_mhz;
    grid["beat_max_mhz"] = config.grid.beat_max_mhz;
    grid["beat_points"] = config.grid.beat_points;
    grid["power_min_dbm"] = config.grid.power_min_dbm;
    grid["power_max_dbm"] = config.grid.power_max_dbm;
    grid["power_points"] = config.grid.power_points;
    grid["eps2_min_uev"] = config.grid.eps2_min_uev;
    grid["eps2_max_uev"] = config.grid.eps2_max_uev;
    grid["eps2_points"] = config.grid.eps2_points;
    j["grid"] = grid;

    json noise;
    noise["n_sapa"] = config.noise.n_sapa;
    noise["n_hemt"] = config.noise.n_hemt;
    noise["g_sapa_linear"] = config.noise.g_sapa_linear;
    j["noise"] = noise;

    json readout;
    readout["repeats"] = config.readout.repeats;
    readout["sapa_index"] = config.readout.sapa_index;
    readout["bandwidth_hz"] = config.readout.bandwidth_hz;
    j["readout"] = readout;

    json fit;
    fit["noise_std"] = config.fit.noise_std;
    fit["g_init_factor"] = config.fit.g_init_factor;
    fit["gamma_init_factor"] = config.fit.gamma_init_factor;
    j["fit"] = fit;

    json cal;
    cal["target_db"] = config.calibration.target_db;
    cal["tol_db"] = config.calibration.tol_db;
    cal["initial_amp"] = config.calibration.initial_amp;
    cal["growth"] = config.calibration.growth;
    cal["max_steps"] = config.calibration.max_steps;
    cal["max_amp_factor"] = config.calibration.max_amp_factor;
    j["calibration"] = cal;

    json integ;
    integ["rtol"] = config.integrator.rtol;
    integ["atol"] = config.integrator.atol;
    integ["settle_rel"] = config.integrator.settle_rel;
    integ["settle_abs"] = config.integrator.settle_abs;
    integ["max_periods"] = config.integrator.max_periods;
    integ["samples_per_period"] = config.integrator.samples_per_period;
    integ["max_photons"] = config.integrator.max_photons;
    j["integrator"] = integ;

    return j.dump();
}

std::string config_hash_hex(const ScenarioConfig& config)
{
    const std::string text = canonical_text(config);
    HashAccumulator acc;
    acc.add(std::string_view(text));
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(acc.value()));
    return std::string(buf);
}

}  // namespace sapa
