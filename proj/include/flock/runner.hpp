#pragma once

#include "flock/sim.hpp"

#include <json.hpp>

#include <filesystem>

namespace flock {

/// Scalar outcome of a finished run, as written to summary.json.
nlohmann::json summarize(const ScenarioConfig& cfg, const RunResult& result);

struct RunOutput {
    RunResult result;
    nlohmann::json summary;
};

/// Runs the scenario and writes config.json, trajectory.csv, metrics.csv,
/// forces.csv, dataset_agent_<i>.csv, bound.json and summary.json into `out`.
/// With `svg`, also writes the plots; a learning run then simulates a nominal
/// companion for the Lyapunov comparison.
RunOutput execute_run(const ScenarioConfig& cfg, const std::filesystem::path& out, bool svg);

/// Compares two run directories of the same scenario. Ratios are A / B.
/// Throws Error if framework or disturbances differ.
nlohmann::json compare_runs(const std::filesystem::path& dir_a, const std::filesystem::path& dir_b);

}  // namespace flock
