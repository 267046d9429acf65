#include "sapa/config.hpp"
#include "sapa/constants.hpp"
#include "sapa/runner.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

using namespace sapa;
using constants::two_pi;

namespace {

/// Minimal CSV reader for the runner's output: "# key: value" headers, one
/// column-label line, comma-separated data rows.
struct ParsedCsv {
    std::map<std::string, std::string> headers;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const
    {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (columns[i] == name) {
                return static_cast<int>(i);
            }
        }
        throw std::out_of_range("no column " + name);
    }
    double number(const std::vector<std::string>& row,
                  const std::string& name) const
    {
        return std::stod(row[static_cast<std::size_t>(column(name))]);
    }
};

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, sep)) {
        out.push_back(cell);
    }
    return out;
}

ParsedCsv parse_csv(const std::string& text)
{
    ParsedCsv csv;
    std::stringstream ss(text);
    std::string line;
    bool have_columns = false;
    while (std::getline(ss, line)) {
        if (line.empty()) {
            continue;
        }
        if (line.rfind("# ", 0) == 0) {
            const auto colon = line.find(": ");
            REQUIRE(colon != std::string::npos);
            csv.headers[line.substr(2, colon - 2)] = line.substr(colon + 2);
            continue;
        }
        if (!have_columns) {
            csv.columns = split(line, ',');
            have_columns = true;
            continue;
        }
        csv.rows.push_back(split(line, ','));
    }
    return csv;
}

}  // namespace

TEST_CASE("minimal config parses with reference defaults")
{
    const ScenarioConfig cfg = parse_config(R"({"scenario":"rabi-map"})");
    CHECK(cfg.scenario == Scenario::rabi_map);
    CHECK(cfg.seed == 1);
    CHECK(cfg.output == "rabi-map.csv");
    CHECK(cfg.system.omega_r_ghz == 5.198);
    CHECK(cfg.system.kappa_in_mhz == 7.0);
    CHECK(cfg.system.kappa_out_mhz == 7.0);
    CHECK(cfg.system.kappa_int_mhz == 0.0);
    REQUIRE(cfg.system.dqds.size() == 1);
    CHECK(cfg.system.dqds[0].two_tc_ghz == 5.32);
    CHECK(cfg.system.dqds[0].g_c_mhz == 60.0);
    CHECK(cfg.system.dqds[0].gamma_1_mhz == 100.0);
    CHECK(cfg.system.dqds[0].gamma_phi_mhz == 50.0);
    CHECK(cfg.system.dqds[0].lever_arm == 0.072);
    CHECK(cfg.drive.probe_amp == 2000.0);
    CHECK(cfg.noise.g_sapa_linear == 13.4);

    const SystemParams sys = cfg.make_system();
    CHECK(sys.cavity.omega_r == doctest::Approx(two_pi * 5.198e9));
    CHECK(sys.cavity.kappa_in == doctest::Approx(two_pi * 7e6));
    CHECK(sys.dqds[0].t_c ==
          doctest::Approx(0.5 * constants::h_planck * 5.32e9));
    CHECK(sys.dqds[0].g_c == doctest::Approx(two_pi * 60e6));
    CHECK(sys.dqds[0].epsilon == 0.0);

    // The canonical echo materializes every default.
    const std::string echo = canonical_text(cfg);
    CHECK(echo.find("\"omega_r_ghz\":5.198") != std::string::npos);
    CHECK(echo.find("\"scenario\":\"rabi-map\"") != std::string::npos);
    CHECK(echo.find('\n') == std::string::npos);
}

TEST_CASE("canonical text round-trips to an identical config")
{
    const std::string text = R"({
        "scenario": "gain-map",
        "seed": 42,
        "output": "out.csv",
        "system": {
            "omega_r_ghz": 5.2,
            "kappa_in_mhz": 6.5,
            "kappa_out_mhz": 7.5,
            "kappa_int_mhz": 0.3,
            "dqds": [
                {"epsilon_uev": 12.5, "g_c_mhz": 55.0},
                {"two_tc_ghz": 7.08, "g_c_mhz": 40.0, "lever_arm": 0.11}
            ]
        },
        "drive": {"probe_freq_ghz": 5.194, "pump_amp": 18000.0,
                  "beat_mhz": 0.7, "n_harmonics": 3},
        "grid": {"freq_points": 5, "eps_points": 3},
        "noise": {"n_sapa": 1.7},
        "readout": {"repeats": 50},
        "fit": {"noise_std": 0.02},
        "calibration": {"target_db": 9.0},
        "integrator": {"max_periods": 120, "max_photons": 1e8}
    })";
    const ScenarioConfig cfg = parse_config(text);
    const std::string echo = canonical_text(cfg);
    const ScenarioConfig round = parse_config(echo);
    CHECK(canonical_text(round) == echo);
    CHECK(config_hash_hex(round) == config_hash_hex(cfg));
    CHECK(round.system.dqds.size() == 2);
    CHECK(round.system.dqds[1].g_c_mhz == 40.0);
    CHECK(round.drive.pump_amp == 18000.0);
    CHECK(round.integrator.max_photons == 1e8);

    // Seeds and physics fields both feed the hash.
    ScenarioConfig reseeded = cfg;
    reseeded.seed = 43;
    CHECK(config_hash_hex(reseeded) != config_hash_hex(cfg));
    ScenarioConfig nudged = cfg;
    nudged.system.dqds[0].epsilon_uev =
        std::nextafter(nudged.system.dqds[0].epsilon_uev, 1e9);
    CHECK(config_hash_hex(nudged) != config_hash_hex(cfg));
}

TEST_CASE("scenario names round-trip")
{
    for (Scenario s : all_scenarios()) {
        CHECK(scenario_from_string(to_string(s)) == s);
    }
    CHECK_THROWS_WITH_AS(scenario_from_string("warp-drive"),
                         doctest::Contains("unknown name"),
                         std::invalid_argument);
}

TEST_CASE("strict schema rejects unknown keys with full paths")
{
    CHECK_THROWS_WITH_AS(
        parse_config(R"({"scenario":"rabi-map","bogus":1})"),
        doctest::Contains("bogus: unknown key"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        parse_config(R"({"scenario":"rabi-map","system":{"kapa_in_mhz":7}})"),
        doctest::Contains("system.kapa_in_mhz: unknown key"),
        std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        parse_config(
            R"({"scenario":"rabi-map",
                "system":{"dqds":[{},{"tunnel_ghz":5.0}]}})"),
        doctest::Contains("system.dqds[1].tunnel_ghz: unknown key"),
        std::invalid_argument);
}

TEST_CASE("config validation errors carry field paths")
{
    CHECK_THROWS_WITH_AS(parse_config(R"({})"),
                         doctest::Contains("scenario: missing required key"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        parse_config(
            R"({"scenario":"rabi-map","system":{"kappa_in_mhz":-7}})"),
        doctest::Contains("system.kappa_in_mhz: must be >= 0"),
        std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        parse_config(R"({"scenario":"rabi-map","seed":-1})"),
        doctest::Contains("seed: must be >= 0"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        parse_config(R"({"scenario":"rabi-map","seed":1.5})"),
        doctest::Contains("seed: expected an unsigned integer"),
        std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        parse_config(
            R"({"scenario":"rabi-map","grid":{"freq_points":2.5}})"),
        doctest::Contains("grid.freq_points: expected an integer"),
        std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        parse_config(R"({"scenario":"rabi-map","drive":"loud"})"),
        doctest::Contains("drive: expected an object"),
        std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        parse_config(R"({"scenario":"rabi-map",
                         "grid":{"freq_min_ghz":5.2,"freq_max_ghz":5.1}})"),
        doctest::Contains("grid.freq_max_ghz"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        parse_config(R"({"scenario":"rabi-map","system":{"dqds":[]}})"),
        doctest::Contains("system.dqds: need 1 or 2"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        parse_config(R"({"scenario":"readout"})"),
        doctest::Contains("system.dqds: readout needs exactly 2"),
        std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config("{not json"),
                         doctest::Contains("config:"), std::invalid_argument);
}

TEST_CASE("grids convert to engine units")
{
    ScenarioConfig cfg = parse_config(R"({"scenario":"rabi-map"})");
    const Eigen::VectorXd f = cfg.grid.freq_grid();
    REQUIRE(f.size() == 61);
    CHECK(f[0] == doctest::Approx(two_pi * 5.168e9));
    CHECK(f[60] == doctest::Approx(two_pi * 5.228e9));
    const Eigen::VectorXd e = cfg.grid.eps_grid();
    REQUIRE(e.size() == 41);
    CHECK(e[0] == doctest::Approx(constants::uev_to_joule(-200.0)));
    CHECK(e[20] == doctest::Approx(0.0));

    cfg.grid.freq_points = 1;
    const Eigen::VectorXd single = cfg.grid.freq_grid();
    REQUIRE(single.size() == 1);
    CHECK(single[0] == doctest::Approx(two_pi * 5.168e9));
}

TEST_CASE("rabi-map scenario renders a deterministic normalized map")
{
    ScenarioConfig cfg = parse_config(R"({
        "scenario": "rabi-map",
        "grid": {"freq_points": 41,
                 "eps_min_uev": -200.0, "eps_max_uev": 200.0,
                 "eps_points": 3}
    })");
    const std::string text = render_scenario(cfg, 1);
    const ParsedCsv csv = parse_csv(text);

    CHECK(csv.headers.at("scenario") == "rabi-map");
    CHECK(csv.headers.at("seed") == "1");
    CHECK(csv.headers.at("tool").rfind("sapa ", 0) == 0);
    CHECK(csv.headers.at("config_hash") == config_hash_hex(cfg));

    // The echoed config line is the canonical form and round-trips.
    CHECK(csv.headers.at("config") == canonical_text(cfg));
    const ScenarioConfig round = parse_config(csv.headers.at("config"));
    CHECK(canonical_text(round) == canonical_text(cfg));

    REQUIRE(csv.rows.size() == 41 * 3);
    double far_max = 0.0;
    for (const auto& row : csv.rows) {
        CHECK(csv.number(row, "valid") == 1.0);
        if (csv.number(row, "epsilon_uev") == 200.0) {
            far_max = std::max(far_max, csv.number(row, "normalized"));
        }
    }
    CHECK(std::abs(far_max - 1.0) < 1e-6);

    // Reruns and worker counts do not change a byte.
    CHECK(render_scenario(cfg, 1) == text);
    CHECK(render_scenario(cfg, 3) == text);
}

TEST_CASE("gain-map scenario amplifies near zero detuning")
{
    ScenarioConfig cfg = parse_config(R"({
        "scenario": "gain-map",
        "drive": {"probe_freq_ghz": 5.198, "pump_amp": 18000.0,
                  "beat_mhz": 1.0},
        "grid": {"freq_min_ghz": 5.194, "freq_max_ghz": 5.202,
                 "freq_points": 3,
                 "eps_min_uev": 0.0, "eps_max_uev": 150.0, "eps_points": 2}
    })");
    const std::string text = render_scenario(cfg, 1);
    const ParsedCsv csv = parse_csv(text);
    CHECK(csv.headers.at("pump_source") == "configured");
    CHECK(std::stod(csv.headers.at("pump_amp")) == 18000.0);
    REQUIRE(csv.rows.size() == 6);

    double center_gain = 0.0;
    double far_gain = 0.0;
    for (const auto& row : csv.rows) {
        if (csv.number(row, "probe_frequency_ghz") != 5.198) {
            continue;
        }
        if (csv.number(row, "epsilon_uev") == 0.0) {
            center_gain = csv.number(row, "normalized");
        } else {
            far_gain = csv.number(row, "normalized");
        }
    }
    // Pump-on beats the analytic pump-off level at zero detuning only.
    const SystemParams sys = cfg.make_system();
    const double off_normalized =
        std::abs(linear_response_transmission(two_pi * 5.198e9, sys)) /
        blockade_transmission(sys);
    CHECK(center_gain > 1.5 * off_normalized);
    CHECK(far_gain < 1.05);

    CHECK(render_scenario(cfg, 2) == text);
}

TEST_CASE("tune-map scenario sweeps the beat axis")
{
    ScenarioConfig cfg = parse_config(R"({
        "scenario": "tune-map",
        "drive": {"pump_amp": 18000.0},
        "grid": {"beat_min_mhz": 0.5, "beat_max_mhz": 8.0, "beat_points": 2,
                 "eps_min_uev": 0.0, "eps_max_uev": 0.0, "eps_points": 1}
    })");
    const ParsedCsv csv = parse_csv(render_scenario(cfg, 1));
    REQUIRE(csv.rows.size() == 2);
    CHECK(csv.number(csv.rows[0], "beat_mhz") == doctest::Approx(0.5));
    CHECK(csv.number(csv.rows[1], "beat_mhz") == doctest::Approx(8.0));
    CHECK(csv.number(csv.rows[0], "normalized") >
          csv.number(csv.rows[1], "normalized"));
}

TEST_CASE("tones scenario emits the demodulated comb")
{
    ScenarioConfig cfg = parse_config(R"({
        "scenario": "tones",
        "drive": {"pump_amp": 18000.0, "beat_mhz": 1.0}
    })");
    const ParsedCsv csv = parse_csv(render_scenario(cfg, 1));
    REQUIRE(csv.rows.size() == 5);
    CHECK(csv.number(csv.rows[0], "harmonic") == -2.0);
    CHECK(csv.number(csv.rows[4], "harmonic") == 2.0);

    double p_signal = 0.0;
    double p_pump = 0.0;
    double p_idler = 0.0;
    double f_signal = 0.0;
    double f_idler = 0.0;
    for (const auto& row : csv.rows) {
        const int n = static_cast<int>(csv.number(row, "harmonic"));
        if (n == -1) {
            p_signal = csv.number(row, "power_db");
            f_signal = csv.number(row, "lab_frequency_ghz");
        } else if (n == 0) {
            p_pump = csv.number(row, "power_db");
        } else if (n == 1) {
            p_idler = csv.number(row, "power_db");
            f_idler = csv.number(row, "lab_frequency_ghz");
        }
    }
    CHECK(f_signal == doctest::Approx(5.198).epsilon(1e-9));
    CHECK(f_idler == doctest::Approx(5.198 + 2e-3).epsilon(1e-9));
    CHECK(p_pump > p_signal);
    CHECK(p_signal > p_idler);
}

TEST_CASE("calibrate-pump scenario reports the anchored amplitude")
{
    ScenarioConfig cfg = parse_config(R"({"scenario":"calibrate-pump"})");
    const ParsedCsv csv = parse_csv(render_scenario(cfg, 1));
    double amp = 0.0;
    double achieved = 0.0;
    for (const auto& row : csv.rows) {
        if (row[0] == "pump_amp") {
            amp = csv.number(row, "value");
        }
        if (row[0] == "achieved_gain_db") {
            achieved = csv.number(row, "value");
        }
    }
    CHECK(amp > 0.0);
    CHECK(std::abs(achieved - 11.28) <= 0.05);
}

TEST_CASE("noise-budget scenario reports the closed-form chain metrics")
{
    ScenarioConfig cfg = parse_config(R"({"scenario":"noise-budget"})");
    const ParsedCsv csv = parse_csv(render_scenario(cfg, 1));
    double improvement = 0.0;
    double g_db = 0.0;
    for (const auto& row : csv.rows) {
        if (row[0] == "snr_improvement") {
            improvement = csv.number(row, "value");
        }
        if (row[0] == "g_sapa_db") {
            g_db = csv.number(row, "value");
        }
    }
    CHECK(std::abs(improvement - 2.11) <= 0.01);
    CHECK(g_db == doctest::Approx(10.0 * std::log10(13.4)));
}

TEST_CASE("readout scenario renders ensembles for both legs")
{
    ScenarioConfig cfg = parse_config(R"({
        "scenario": "readout",
        "system": {"dqds": [
            {"two_tc_ghz": 5.32, "g_c_mhz": 60.0},
            {"two_tc_ghz": 5.32, "g_c_mhz": 40.0}
        ]},
        "drive": {"pump_amp": 18000.0},
        "readout": {"repeats": 12}
    })");
    const std::string text = render_scenario(cfg, 1);
    const ParsedCsv csv = parse_csv(text);
    REQUIRE(csv.rows.size() == 4);
    CHECK(csv.headers.count("snr_pump_on") == 1);
    CHECK(csv.headers.count("snr_pump_off") == 1);
    CHECK(csv.headers.count("snr_ratio") == 1);
    CHECK(std::stod(csv.headers.at("snr_ratio")) > 0.0);
    int on_rows = 0;
    for (const auto& row : csv.rows) {
        CHECK(csv.number(row, "valid") == 1.0);
        CHECK(csv.number(row, "std_dev") > 0.0);
        if (row[static_cast<std::size_t>(csv.column("leg"))] == "pump_on") {
            ++on_rows;
        }
    }
    CHECK(on_rows == 2);
    CHECK(render_scenario(cfg, 1) == text);
}

TEST_CASE("compress scenario reports a finite compression point")
{
    ScenarioConfig cfg = parse_config(R"({"scenario":"compress"})");
    const std::string text = render_scenario(cfg, 1);
    const ParsedCsv csv = parse_csv(text);
    CHECK(csv.headers.at("pump_source") == "calibrated");
    const double p1db = std::stod(csv.headers.at("p1db_dbm"));
    CHECK(p1db > -130.0);
    CHECK(p1db < -110.0);
    REQUIRE(csv.rows.size() >= 10);
    // Small-signal plateau: first two grid powers agree to 0.1 dB.
    CHECK(std::abs(csv.number(csv.rows[0], "gain_db") -
                   csv.number(csv.rows[1], "gain_db")) < 0.1);
}

TEST_CASE("fit scenario recovers the coupling from noisy synthetic data")
{
    ScenarioConfig cfg = parse_config(R"({
        "scenario": "fit",
        "grid": {"freq_points": 21,
                 "eps_min_uev": -100.0, "eps_max_uev": 100.0,
                 "eps_points": 5}
    })");
    const ParsedCsv csv = parse_csv(render_scenario(cfg, 1));
    CHECK(csv.headers.at("converged") == "1");
    REQUIRE(csv.rows.size() == 6);
    for (const auto& row : csv.rows) {
        if (row[0] == "g_c" || row[0] == "gamma_2") {
            CHECK(std::abs(csv.number(row, "rel_error")) < 0.05);
        } else {
            // Held parameters come back exactly.
            CHECK(csv.number(row, "rel_error") == 0.0);
        }
    }
}

TEST_CASE("run_scenario writes the rendered bytes to the output path")
{
    ScenarioConfig cfg = parse_config(R"({
        "scenario": "noise-budget",
        "output": "test_config_out.csv"
    })");
    run_scenario(cfg, 1);
    std::ifstream in(cfg.output, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream buffer;
    buffer << in.rdbuf();
    CHECK(buffer.str() == render_scenario(cfg, 1));
    std::remove(cfg.output.c_str());

    ScenarioConfig bad = cfg;
    bad.output = "no_such_dir/never.csv";
    CHECK_THROWS_WITH_AS(run_scenario(bad, 1), doctest::Contains("output:"),
                         std::runtime_error);
}

TEST_CASE("worker count env variable is validated")
{
    unsetenv("SAPA_WORKERS");
    CHECK(worker_count_from_env() >= 1);
    setenv("SAPA_WORKERS", "3", 1);
    CHECK(worker_count_from_env() == 3);
    setenv("SAPA_WORKERS", "0", 1);
    CHECK_THROWS_AS(worker_count_from_env(), std::invalid_argument);
    setenv("SAPA_WORKERS", "many", 1);
    CHECK_THROWS_AS(worker_count_from_env(), std::invalid_argument);
    unsetenv("SAPA_WORKERS");
}
