#include "sapa/runner.hpp"

#include "sapa/constants.hpp"
#include "sapa/fitting.hpp"
#include "sapa/metrics.hpp"
#include "sapa/response.hpp"
#include "sapa/rng.hpp"
#include "sapa/scans.hpp"
#include "sapa/version.hpp"

#include <atomic>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace sapa {

namespace {

/// Locale-independent shortest-ish decimal rendering (12 significant
/// digits), the single formatter for every numeric CSV cell.
std::string fmt(double value)
{
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value,
                                   std::chars_format::general, 12);
    return std::string(buf, res.ptr);
}

std::string fmt(int value)
{
    return std::to_string(value);
}

class CsvBuilder {
public:
    void header(const std::string& key, const std::string& value)
    {
        text_ += "# " + key + ": " + value + "\n";
    }
    void header(const std::string& key, double value)
    {
        header(key, fmt(value));
    }
    void columns(const std::string& joined) { text_ += joined + "\n"; }
    void cell(const std::string& value, bool last = false)
    {
        text_ += value;
        text_ += last ? '\n' : ',';
    }
    void cell(double value, bool last = false) { cell(fmt(value), last); }
    void cell(int value, bool last = false) { cell(fmt(value), last); }
    std::string take() { return std::move(text_); }

private:
    std::string text_;
};

CsvBuilder make_builder(const ScenarioConfig& cfg)
{
    CsvBuilder csv;
    csv.header("tool", std::string("sapa ") + kVersion);
    csv.header("scenario", to_string(cfg.scenario));
    csv.header("seed", std::to_string(cfg.seed));
    csv.header("config_hash", config_hash_hex(cfg));
    csv.header("config", canonical_text(cfg));
    return csv;
}

int clamp_workers(int workers, Eigen::Index jobs)
{
    if (workers < 1) {
        workers = 1;
    }
    if (static_cast<Eigen::Index>(workers) > jobs) {
        workers = static_cast<int>(jobs);
    }
    return workers;
}

/// Computes one single-column map per axis2 index and assembles them in
/// grid order; the per-column work is identical for any worker count, so
/// the assembled map is too.
SpectrumMap assemble_columns(
    Eigen::Index n_cols, int workers,
    const std::function<SpectrumMap(Eigen::Index)>& column)
{
    std::vector<SpectrumMap> cols(static_cast<std::size_t>(n_cols));
    workers = clamp_workers(workers, n_cols);
    if (workers <= 1) {
        for (Eigen::Index j = 0; j < n_cols; ++j) {
            cols[static_cast<std::size_t>(j)] = column(j);
        }
    } else {
        std::atomic<Eigen::Index> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        auto work = [&]() {
            for (;;) {
                const Eigen::Index j = next.fetch_add(1);
                if (j >= n_cols) {
                    return;
                }
                try {
                    cols[static_cast<std::size_t>(j)] = column(j);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) {
                        first_error = std::current_exception();
                    }
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
        for (std::thread& t : pool) {
            t.join();
        }
        if (first_error) {
            std::rethrow_exception(first_error);
        }
    }

    SpectrumMap map = cols[0];
    const Eigen::Index rows = map.amplitude.rows();
    map.axis2.values.resize(n_cols);
    map.amplitude.resize(rows, n_cols);
    map.normalized.resize(rows, n_cols);
    map.valid.resize(rows, n_cols);
    for (Eigen::Index j = 0; j < n_cols; ++j) {
        const SpectrumMap& c = cols[static_cast<std::size_t>(j)];
        map.axis2.values[j] = c.axis2.values[0];
        map.amplitude.col(j) = c.amplitude.col(0);
        map.normalized.col(j) = c.normalized.col(0);
        map.valid.col(j) = c.valid.col(0);
    }
    return map;
}

/// Pump flux amplitude for scenarios that need one: explicit from the
/// config when positive, otherwise calibrated at the probe frequency.
std::pair<double, std::string> resolve_pump(const ScenarioConfig& cfg,
                                            const SystemParams& system)
{
    if (cfg.drive.pump_amp > 0) {
        return {cfg.drive.pump_amp, "configured"};
    }
    const double amp =
        calibrate_pump(system, cfg.drive.probe_tone().frequency,
                       cfg.drive.beat(), cfg.calibration_options());
    return {amp, "calibrated"};
}

void emit_map(CsvBuilder& csv, const SpectrumMap& map,
              const std::string& axis1_label, double axis1_scale,
              const std::string& axis2_label, double axis2_scale)
{
    csv.header("a0", map.a0);
    csv.columns(axis1_label + "," + axis2_label +
                ",re_amplitude,im_amplitude,normalized,valid");
    for (Eigen::Index j = 0; j < map.axis2.values.size(); ++j) {
        for (Eigen::Index i = 0; i < map.axis1.values.size(); ++i) {
            csv.cell(map.axis1.values[i] / axis1_scale);
            csv.cell(map.axis2.values[j] / axis2_scale);
            csv.cell(map.amplitude(i, j).real());
            csv.cell(map.amplitude(i, j).imag());
            csv.cell(map.normalized(i, j));
            csv.cell(static_cast<int>(map.valid(i, j)), true);
        }
    }
}

constexpr double kGhz = constants::two_pi * 1e9;
constexpr double kMhz = constants::two_pi * 1e6;
const double kUev = constants::uev_to_joule(1.0);

std::string run_rabi_map(const ScenarioConfig& cfg, int workers)
{
    const SystemParams system = cfg.make_system();
    const Eigen::VectorXd freqs = cfg.grid.freq_grid();
    const Eigen::VectorXd eps = cfg.grid.eps_grid();
    const SpectrumMap map =
        assemble_columns(eps.size(), workers, [&](Eigen::Index j) {
            return rabi_map(system, freqs, eps.segment(j, 1));
        });

    CsvBuilder csv = make_builder(cfg);
    emit_map(csv, map, "probe_frequency_ghz", kGhz, "epsilon_uev", kUev);
    return csv.take();
}

std::string run_gain_map(const ScenarioConfig& cfg, int workers)
{
    const SystemParams system = cfg.make_system();
    const auto [pump_amp, pump_source] = resolve_pump(cfg, system);
    const Eigen::VectorXd freqs = cfg.grid.freq_grid();
    const Eigen::VectorXd eps = cfg.grid.eps_grid();
    const PumpScanOptions options = cfg.scan_options();
    const double beat = cfg.drive.beat();
    const SpectrumMap map =
        assemble_columns(eps.size(), workers, [&](Eigen::Index j) {
            return gain_map(system, pump_amp, beat, freqs, eps.segment(j, 1),
                            options);
        });

    CsvBuilder csv = make_builder(cfg);
    csv.header("pump_amp", pump_amp);
    csv.header("pump_source", pump_source);
    csv.header("beat_mhz", beat / kMhz);
    emit_map(csv, map, "probe_frequency_ghz", kGhz, "epsilon_uev", kUev);
    return csv.take();
}

std::string run_tune_map(const ScenarioConfig& cfg, int workers)
{
    const SystemParams system = cfg.make_system();
    const auto [pump_amp, pump_source] = resolve_pump(cfg, system);
    const Eigen::VectorXd beats = cfg.grid.beat_grid();
    const Eigen::VectorXd eps = cfg.grid.eps_grid();
    const PumpScanOptions options = cfg.scan_options();
    const double omega_s = cfg.drive.probe_tone().frequency;
    const SpectrumMap map =
        assemble_columns(eps.size(), workers, [&](Eigen::Index j) {
            return tune_map(system, pump_amp, omega_s, beats,
                            eps.segment(j, 1), options);
        });

    CsvBuilder csv = make_builder(cfg);
    csv.header("pump_amp", pump_amp);
    csv.header("pump_source", pump_source);
    csv.header("probe_frequency_ghz", omega_s / kGhz);
    emit_map(csv, map, "beat_mhz", kMhz, "epsilon_uev", kUev);
    return csv.take();
}

std::string run_tones(const ScenarioConfig& cfg)
{
    const SystemParams system = cfg.make_system();
    const auto [pump_amp, pump_source] = resolve_pump(cfg, system);
    const DriveTone probe = cfg.drive.probe_tone();
    const DriveTone pump{probe.frequency + cfg.drive.beat(), pump_amp, 0.0};
    const ToneSpectrum spectrum =
        tone_spectrum(system, pump, probe, cfg.scan_options());

    CsvBuilder csv = make_builder(cfg);
    csv.header("pump_amp", pump_amp);
    csv.header("pump_source", pump_source);
    csv.header("pump_frequency_ghz", spectrum.pump_frequency / kGhz);
    csv.header("probe_frequency_ghz", spectrum.probe_frequency / kGhz);
    csv.header("beat_mhz", spectrum.beat / kMhz);
    csv.columns("harmonic,lab_frequency_ghz,power_db");
    for (const TonePower& tone : spectrum.tones) {
        csv.cell(tone.harmonic);
        csv.cell(tone.lab_frequency / kGhz);
        csv.cell(tone.power_db, true);
    }
    return csv.take();
}

std::string run_readout(const ScenarioConfig& cfg)
{
    const SystemParams system = cfg.make_system();
    const auto [pump_amp, pump_source] = resolve_pump(cfg, system);
    const DriveTone probe = cfg.drive.probe_tone();
    const DriveTone pump{probe.frequency + cfg.drive.beat(), pump_amp, 0.0};
    ReadoutOptions options;
    options.bandwidth_hz = cfg.readout.bandwidth_hz;
    options.n_harmonics = cfg.drive.n_harmonics;
    options.periodic = cfg.integrator.make();
    const ReadoutSweepResult result = readout_sweep(
        system, cfg.readout.sapa_index, pump, probe, cfg.grid.eps2_grid(),
        cfg.noise.make(), cfg.readout.repeats, cfg.seed, options);

    CsvBuilder csv = make_builder(cfg);
    csv.header("pump_amp", pump_amp);
    csv.header("pump_source", pump_source);
    csv.header("a0", result.a0);
    csv.header("repeats", fmt(result.repeats));
    csv.header("bandwidth_hz", cfg.readout.bandwidth_hz);
    if (result.eps2.size() == 2 && result.pump_on.valid[0] &&
        result.pump_on.valid[1] && result.pump_off.valid[0] &&
        result.pump_off.valid[1]) {
        const double snr_on = snr(result.pump_on.ensembles[0],
                                  result.pump_on.ensembles[1]);
        const double snr_off = snr(result.pump_off.ensembles[0],
                                   result.pump_off.ensembles[1]);
        csv.header("snr_pump_on", snr_on);
        csv.header("snr_pump_off", snr_off);
        csv.header("snr_ratio", snr_on / snr_off);
    }
    csv.columns("eps2_uev,leg,amplitude_normalized,mean,std_dev,valid");
    const ReadoutLeg* legs[2] = {&result.pump_on, &result.pump_off};
    const char* leg_names[2] = {"pump_on", "pump_off"};
    for (int leg = 0; leg < 2; ++leg) {
        for (Eigen::Index i = 0; i < result.eps2.size(); ++i) {
            const auto k = static_cast<std::size_t>(i);
            csv.cell(result.eps2[i] / kUev);
            csv.cell(std::string(leg_names[leg]));
            csv.cell(legs[leg]->amplitude[i]);
            csv.cell(legs[leg]->ensembles[k].mean);
            csv.cell(legs[leg]->ensembles[k].std_dev);
            csv.cell(static_cast<int>(legs[leg]->valid[k]), true);
        }
    }
    return csv.take();
}

std::string run_compress(const ScenarioConfig& cfg)
{
    const SystemParams system = cfg.make_system();
    const auto [pump_amp, pump_source] = resolve_pump(cfg, system);
    const DriveTone probe = cfg.drive.probe_tone();
    const DriveTone pump{probe.frequency + cfg.drive.beat(), pump_amp, 0.0};
    const CompressionResult result = compression_sweep(
        system, pump, probe, cfg.grid.power_grid(), cfg.scan_options());

    CsvBuilder csv = make_builder(cfg);
    csv.header("pump_amp", pump_amp);
    csv.header("pump_source", pump_source);
    csv.header("p1db_dbm", result.p1db_dbm);
    csv.columns("power_dbm,gain_db");
    for (const auto& [power_dbm, gain_db] : result.curve) {
        csv.cell(power_dbm);
        csv.cell(gain_db, true);
    }
    return csv.take();
}

std::string run_fit(const ScenarioConfig& cfg)
{
    const SystemParams system = cfg.make_system();
    const DqdParams& dqd = system.dqds[0];
    const double kappa = system.cavity.kappa_total();
    const double scale =
        std::sqrt(system.cavity.kappa_in * system.cavity.kappa_out) /
        (0.5 * kappa);

    // Synthetic transmission samples over the configured grid, with
    // seed-keyed additive amplitude noise.
    const Eigen::VectorXd freqs = cfg.grid.freq_grid();
    const Eigen::VectorXd eps = cfg.grid.eps_grid();
    std::vector<CoupledPoint> data;
    data.reserve(static_cast<std::size_t>(freqs.size() * eps.size()));
    std::uint64_t point_index = 0;
    for (Eigen::Index j = 0; j < eps.size(); ++j) {
        SystemParams sys = system;
        sys.dqds[0].epsilon = eps[j];
        for (Eigen::Index i = 0; i < freqs.size(); ++i, ++point_index) {
            CoupledPoint pt;
            pt.omega = freqs[i];
            pt.epsilon = eps[j];
            pt.amplitude = std::abs(linear_response_transmission(pt.omega, sys));
            if (cfg.fit.noise_std > 0) {
                NoiseStream stream(cfg.seed, point_index, 0);
                pt.amplitude += cfg.fit.noise_std * stream.normal();
            }
            data.push_back(pt);
        }
    }

    // Truth vector in fit_coupled parameter order; g_c and gamma_2 float,
    // the rest are held at their configured values.
    Eigen::VectorXd truth(6);
    truth << dqd.g_c, dqd.gamma_2(), dqd.t_c, system.cavity.omega_r, kappa,
        scale;
    Eigen::VectorXd init = truth;
    init[0] *= cfg.fit.g_init_factor;
    init[1] *= cfg.fit.gamma_init_factor;
    Eigen::VectorXd lower = 0.05 * truth;
    Eigen::VectorXd upper = 20.0 * truth;
    const std::set<std::string> fixed = {"t_c", "omega_r", "kappa", "scale"};
    const FitResult result = fit_coupled(data, init, lower, upper, fixed);

    CsvBuilder csv = make_builder(cfg);
    csv.header("noise_std", cfg.fit.noise_std);
    csv.header("points", fmt(static_cast<int>(data.size())));
    csv.header("converged", result.converged ? "1" : "0");
    csv.header("iterations", fmt(result.iterations));
    csv.header("residual_rms", result.residual_rms);
    csv.columns("parameter,unit,truth,initial,fitted,std_error,rel_error");
    const auto& names = coupled_parameter_names();
    for (std::size_t k = 0; k < names.size(); ++k) {
        const FitParameter& p = result.parameter(names[k].first);
        const double t = truth[static_cast<Eigen::Index>(k)];
        csv.cell(p.name);
        csv.cell(names[k].second);
        csv.cell(t);
        csv.cell(init[static_cast<Eigen::Index>(k)]);
        csv.cell(p.value);
        csv.cell(p.std_error);
        csv.cell(t != 0 ? (p.value - t) / t : p.value - t, true);
    }
    return csv.take();
}

std::string run_noise_budget(const ScenarioConfig& cfg)
{
    const NoiseChain chain = cfg.noise.make();
    chain.validate();
    const double omega = cfg.drive.probe_tone().frequency;
    const double bandwidth = cfg.readout.bandwidth_hz;

    CsvBuilder csv = make_builder(cfg);
    csv.columns("quantity,unit,value");
    auto row = [&](const std::string& name, const std::string& unit,
                   double value) {
        csv.cell(name);
        csv.cell(unit);
        csv.cell(value, true);
    };
    row("n_sapa", "quanta", chain.n_sapa);
    row("n_hemt", "quanta", chain.n_hemt);
    row("g_sapa_linear", "", chain.g_sapa_linear);
    row("g_sapa_db", "dB", 10.0 * std::log10(chain.g_sapa_linear));
    row("output_noise_on", "quanta", output_noise_quanta(chain, true));
    row("output_noise_off", "quanta", output_noise_quanta(chain, false));
    row("chain_noise_std_on", "",
        chain_noise_std(chain, bandwidth, omega, true));
    row("chain_noise_std_off", "",
        chain_noise_std(chain, bandwidth, omega, false));
    row("snr_improvement", "", snr_improvement(chain));
    row("t_eff_sapa", "K", effective_temperature(chain.n_sapa, omega));
    row("t_eff_hemt", "K", effective_temperature(chain.n_hemt, omega));
    return csv.take();
}

std::string run_calibrate_pump(const ScenarioConfig& cfg)
{
    const SystemParams system = cfg.make_system();
    const DriveTone probe = cfg.drive.probe_tone();
    const double beat = cfg.drive.beat();
    const double amp = calibrate_pump(system, probe.frequency, beat,
                                      cfg.calibration_options());
    const DriveTone pump{probe.frequency + beat, amp, 0.0};
    const double achieved =
        pump_on_gain_db(system, pump, probe, cfg.scan_options());

    CsvBuilder csv = make_builder(cfg);
    csv.columns("quantity,unit,value");
    auto row = [&](const std::string& name, const std::string& unit,
                   double value) {
        csv.cell(name);
        csv.cell(unit);
        csv.cell(value, true);
    };
    row("pump_amp", "sqrt_photons_per_s", amp);
    row("achieved_gain_db", "dB", achieved);
    row("target_db", "dB", cfg.calibration.target_db);
    row("tol_db", "dB", cfg.calibration.tol_db);
    row("probe_frequency_ghz", "GHz", probe.frequency / kGhz);
    row("pump_frequency_ghz", "GHz", pump.frequency / kGhz);
    row("beat_mhz", "MHz", beat / kMhz);
    return csv.take();
}

}  // namespace

int worker_count_from_env()
{
    const char* raw = std::getenv("SAPA_WORKERS");
    if (raw == nullptr || *raw == '\0') {
        const unsigned hw = std::thread::hardware_concurrency();
        return hw > 0 ? static_cast<int>(hw) : 1;
    }
    int value = 0;
    const char* end = raw + std::string_view(raw).size();
    const auto res = std::from_chars(raw, end, value);
    if (res.ec != std::errc{} || res.ptr != end || value < 1) {
        throw std::invalid_argument(
            "SAPA_WORKERS: must be a positive integer");
    }
    return value;
}

std::string render_scenario(const ScenarioConfig& config, int workers)
{
    config.validate();
    switch (config.scenario) {
        case Scenario::rabi_map: return run_rabi_map(config, workers);
        case Scenario::gain_map: return run_gain_map(config, workers);
        case Scenario::tune_map: return run_tune_map(config, workers);
        case Scenario::tones: return run_tones(config);
        case Scenario::readout: return run_readout(config);
        case Scenario::compress: return run_compress(config);
        case Scenario::fit: return run_fit(config);
        case Scenario::noise_budget: return run_noise_budget(config);
        case Scenario::calibrate_pump: return run_calibrate_pump(config);
    }
    throw std::invalid_argument("render_scenario: unknown scenario value");
}

void run_scenario(const ScenarioConfig& config, int workers)
{
    const std::string text = render_scenario(config, workers);
    std::ofstream out(config.output, std::ios::binary);
    if (!out) {
        throw std::runtime_error("output: cannot open \"" + config.output +
                                 "\" for writing");
    }
    out << text;
    if (!out) {
        throw std::runtime_error("output: failed writing \"" + config.output +
                                 "\"");
    }
}

}  // namespace sapa
