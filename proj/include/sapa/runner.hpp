#pragma once

#include "sapa/config.hpp"

#include <string>

// Scenario execution: dispatches a validated config to the engines and
// renders one CSV document (UTF-8, '.' decimal separator) consisting of a
// "# key: value" header block — tool version, scenario, seed, config hash,
// and the canonical config echo — followed by column-labeled rows. Output
// bytes depend only on the config (seed included), never on wall clock,
// environment, or worker count.

namespace sapa {

/// Worker count from the SAPA_WORKERS environment variable; unset defaults
/// to the hardware concurrency (at least 1). Set but not a positive integer
/// throws std::invalid_argument.
int worker_count_from_env();

/// Render the scenario's CSV text. `workers` bounds the number of threads
/// used for map scans (grid columns are computed independently and
/// assembled in grid order, so any worker count gives identical bytes).
std::string render_scenario(const ScenarioConfig& config, int workers = 1);

/// Render and write to config.output. Throws std::runtime_error on I/O
/// failure.
void run_scenario(const ScenarioConfig& config, int workers = 1);

}  // namespace sapa
