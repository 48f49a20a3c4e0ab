#pragma once

#include "flock/error.hpp"
#include "flock/sim.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace flock {

inline constexpr int kConfigSchemaVersion = 1;

/// Problems with a scenario file. `kind` separates malformed JSON, schema
/// violations (missing or mistyped fields) and model invariants.
class ConfigError : public Error {
public:
    enum class Kind { Parse, Schema, Invariant };

    ConfigError(Kind kind, std::string field, const std::string& message);

    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] const std::string& field() const { return field_; }

private:
    Kind kind_;
    std::string field_;
};

ScenarioConfig parse_config(const std::filesystem::path& path);
ScenarioConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ScenarioConfig& cfg);

/// Built-in experiments: "triangle2d", "hexad2d", "tetra3d". `seed` drives the
/// random initial perturbation (triangle2d) and the measurement noise.
ScenarioConfig preset(std::string_view name, std::uint64_t seed = 0);
std::vector<std::string> preset_names();

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b);

}  // namespace flock
