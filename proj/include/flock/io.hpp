#pragma once

#include "flock/gp.hpp"
#include "flock/network.hpp"
#include "flock/sim.hpp"
#include "flock/trajectory.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace flock {

/// Shortest round-trip-safe text with 17 significant digits and '.' as the decimal separator.
std::string format_double(double x);

/// t, q_1_x, ..., v_1_x, ..., u_1_x, ..., e_1, ..., e_E, V, delta_norm, bound
std::vector<std::string> trajectory_header(const Framework& fw);

void write_trajectory_csv(const std::filesystem::path& path, const Framework& fw, const TrajectoryRecord& traj,
                          double bound);
/// t, vbar_x, ..., avg_neighbor_distance, delta_bar, error_norm
void write_metrics_csv(const std::filesystem::path& path, const Framework& fw, const TrajectoryRecord& traj);
/// t, f_1_x, ..., mu_1_x, ...: true disturbance next to the learned compensation.
void write_forces_csv(const std::filesystem::path& path, const TrajectoryRecord& traj);
/// p_1, ..., p_2d, y_1, ..., y_d
void write_dataset_csv(const std::filesystem::path& path, const AgentDataset& data);

nlohmann::json bound_report_json(const BoundReport& report);

/// Pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace flock
