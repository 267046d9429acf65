#include "sapa/config.hpp"
#include "sapa/runner.hpp"
#include "sapa/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

// Command-line front end: one subcommand per scenario, each reading a JSON
// config (--config), with optional output-path and seed overrides. All
// randomness flows from the config seed; the only environment knob is
// SAPA_WORKERS (worker count), which never changes output bytes. Failures
// print a single machine-readable JSON line to stderr and exit nonzero.

namespace {

struct CliArgs {
    std::string config_path;
    std::string out_override;
    std::optional<std::uint64_t> seed_override;
};

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("config: cannot open \"" + path + "\"");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

[[noreturn]] void emit_error_and_exit(const std::string& scenario,
                                      const std::string& message)
{
    nlohmann::json line;
    line["error"] = message;
    line["scenario"] = scenario;
    std::fprintf(stderr, "%s\n", line.dump().c_str());
    std::exit(1);
}

int run_subcommand(const std::string& scenario_name, const CliArgs& args)
{
    try {
        sapa::ScenarioConfig cfg =
            sapa::parse_config(read_file(args.config_path));
        if (sapa::to_string(cfg.scenario) != scenario_name) {
            throw std::invalid_argument(
                "scenario: config says \"" + sapa::to_string(cfg.scenario) +
                "\" but the subcommand is \"" + scenario_name + "\"");
        }
        // Overrides are applied before hashing/echoing, so the output
        // header describes exactly what ran.
        if (args.seed_override) {
            cfg.seed = *args.seed_override;
        }
        if (!args.out_override.empty()) {
            cfg.output = args.out_override;
        }
        sapa::run_scenario(cfg, sapa::worker_count_from_env());
        std::printf("wrote %s\n", cfg.output.c_str());
        return 0;
    } catch (const std::exception& e) {
        emit_error_and_exit(scenario_name, e.what());
    }
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"sapa: cavity + double-quantum-dot amplifier simulator"};
    app.set_version_flag("--version", std::string(sapa::kVersion));
    app.require_subcommand(0, 1);

    static const std::pair<const char*, const char*> kScenarios[] = {
        {"rabi-map", "pump-off transmission map vs probe frequency/detuning"},
        {"gain-map", "pump-on signal map vs probe frequency/detuning"},
        {"tune-map", "pump-on signal map vs pump-probe beat/detuning"},
        {"tones", "demodulated output comb at one working point"},
        {"readout", "dispersive readout ensembles, amplifier on vs off"},
        {"compress", "gain vs probe power with 1 dB compression point"},
        {"fit", "recover couplings from synthetic noisy spectra"},
        {"noise-budget", "closed-form amplifier chain metrics"},
        {"calibrate-pump", "pump amplitude reaching the target gain"},
    };

    std::vector<std::shared_ptr<CliArgs>> arg_blocks;
    for (const auto& [name, description] : kScenarios) {
        auto args = std::make_shared<CliArgs>();
        arg_blocks.push_back(args);
        CLI::App* sub = app.add_subcommand(name, description);
        sub->add_option("--config", args->config_path,
                        "JSON scenario config path")
            ->required();
        sub->add_option("--out", args->out_override,
                        "override the config's output path");
        sub->add_option("--seed", args->seed_override,
                        "override the config's seed");
        const std::string scenario_name = name;
        sub->callback([scenario_name, args]() {
            std::exit(run_subcommand(scenario_name, *args));
        });
    }

    CLI11_PARSE(app, argc, argv);
    std::puts("no scenario selected; see --help");
    return 0;
}
