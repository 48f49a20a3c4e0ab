#include "flock/config.hpp"
#include "flock/error.hpp"
#include "flock/io.hpp"
#include "flock/runner.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRun = 3;

std::filesystem::path default_out(const std::string& name) {
    const char* env = std::getenv("FLOCK_OUT");
    return std::filesystem::path(env != nullptr && *env != '\0' ? env : "flock_out") / name;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rigidity-based flocking with learned disturbance compensation"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Simulate a scenario and write its artifacts");
    std::string config_path;
    std::string preset_name;
    std::string mode;
    std::string out_dir;
    bool svg = false;
    bool no_disturbance = false;
    std::uint64_t seed = 0;
    auto* config_opt = run->add_option("--config", config_path, "Scenario JSON file")->check(CLI::ExistingFile);
    auto* preset_opt = run->add_option("--preset", preset_name, "Built-in scenario")
                           ->check(CLI::IsMember(flock::preset_names()));
    config_opt->excludes(preset_opt);
    run->add_option("--mode", mode, "Control law")->check(CLI::IsMember({"nominal", "learning"}));
    run->add_option("--out", out_dir, "Output directory (default $FLOCK_OUT/<name> or flock_out/<name>)");
    run->add_flag("--svg", svg, "Also write SVG plots");
    auto* seed_opt = run->add_option("--seed", seed, "Seed for initial perturbation and measurement noise");
    run->add_flag("--no-disturbance", no_disturbance, "Drop the configured disturbance forces");

    auto* compare = app.add_subcommand("compare", "Compare two run directories (ratios are A / B)");
    std::string dir_a;
    std::string dir_b;
    compare->add_option("dirA", dir_a)->required()->check(CLI::ExistingDirectory);
    compare->add_option("dirB", dir_b)->required()->check(CLI::ExistingDirectory);

    auto* validate = app.add_subcommand("validate", "Check a scenario file");
    std::string validate_path;
    validate->add_option("--config", validate_path)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            if (config_opt->count() + preset_opt->count() != 1) {
                std::cerr << "run: exactly one of --config or --preset is required\n";
                return kExitConfig;
            }
            flock::ScenarioConfig cfg = preset_opt->count() > 0 ? flock::preset(preset_name, seed)
                                                                : flock::parse_config(config_path);
            if (seed_opt->count() > 0) { cfg.sim.seed = seed; }
            if (!mode.empty()) {
                cfg.control.mode = mode == "learning" ? flock::ControlMode::Learning : flock::ControlMode::Nominal;
            }
            if (no_disturbance) {
                cfg.disturbance = flock::ForceField(cfg.framework.agent_count(), cfg.framework.dimension());
            }
            cfg.validate();
            const std::filesystem::path out = out_dir.empty() ? default_out(cfg.name) : std::filesystem::path(out_dir);
            const auto result = flock::execute_run(cfg, out, svg);
            std::cout << result.summary.dump(2) << '\n';
            return 0;
        }
        if (*compare) {
            std::cout << flock::compare_runs(dir_a, dir_b).dump(2) << '\n';
            return 0;
        }
        if (*validate) {
            const auto cfg = flock::parse_config(validate_path);
            std::cout << "ok: " << cfg.name << " (" << cfg.framework.agent_count() << " agents, d = "
                      << cfg.framework.dimension() << ", " << cfg.framework.edge_count() << " edges)\n";
            return 0;
        }
    } catch (const flock::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return kExitConfig;
    } catch (const flock::DivergenceError& e) {
        std::cerr << "simulation diverged: " << e.what() << '\n';
        return kExitRun;
    } catch (const flock::ConditioningError& e) {
        std::cerr << "numerical conditioning failure: " << e.what() << '\n';
        return kExitRun;
    } catch (const flock::Error& e) {
        std::cerr << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
