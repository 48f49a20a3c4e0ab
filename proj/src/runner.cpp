#include "flock/runner.hpp"

#include "flock/config.hpp"
#include "flock/error.hpp"
#include "flock/io.hpp"
#include "flock/metrics.hpp"
#include "flock/svg.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

namespace flock {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) { throw Error("cannot write " + path.string()); }
    out << text;
}

std::vector<double> times(const TrajectoryRecord& traj) {
    std::vector<double> t;
    t.reserve(traj.size());
    for (const auto& s : traj.samples) { t.push_back(s.t); }
    return t;
}

std::vector<double> normalized_lyapunov(const TrajectoryRecord& traj) {
    std::vector<double> v;
    v.reserve(traj.size());
    const double v0 = traj.samples.front().lyapunov;
    for (const auto& s : traj.samples) { v.push_back(v0 > 0 ? s.lyapunov / v0 : s.lyapunov); }
    return v;
}

void write_plots(const ScenarioConfig& cfg, const RunResult& run, const std::filesystem::path& out) {
    const Framework& fw = cfg.framework;
    const TrajectoryRecord& traj = run.trajectory;
    const int n = fw.agent_count();
    const int d = fw.dimension();
    const auto t = times(traj);
    const char* axes[] = {"x", "y", "z"};

    write_text(out / "trajectory.svg", svg::trajectory_plot(fw, traj, cfg.name + " agent paths"));

    std::vector<svg::Series> velocity;
    const auto vbar = average_velocity_trace(traj);
    for (int a = 0; a < d; ++a) {
        svg::Series s{std::string("v̄ ") + axes[a], t, {}};
        for (const auto& v : vbar) { s.y.push_back(v(a)); }
        velocity.push_back(std::move(s));
    }
    write_text(out / "average_velocity.svg", svg::line_chart(velocity, {"Average velocity", "t", "v̄", false}));

    const auto dist = average_neighbor_distance_trace(fw, traj);
    const auto& lengths = fw.desired_lengths();
    const double target = std::accumulate(lengths.begin(), lengths.end(), 0.0) / static_cast<double>(lengths.size());
    write_text(out / "average_distance.svg",
               svg::line_chart({{"mean ‖z_k‖", t, dist}, {"mean d_k", t, std::vector<double>(t.size(), target)}},
                               {"Average neighbor distance", "t", "distance", false}));

    std::vector<svg::Series> forces;
    for (int i = 0; i < n; ++i) {
        if (cfg.disturbance.agent_count() == 0) { break; }
        for (int a = 0; a < d; ++a) {
            if (cfg.disturbance.terms(i, a).empty()) { continue; }
            const std::string tag = std::to_string(i + 1) + axes[a];
            svg::Series real{"f_" + tag, t, {}};
            svg::Series pred{"μ_" + tag, t, {}};
            for (const auto& s : traj.samples) {
                real.y.push_back(s.f_true.block(i)(a));
                pred.y.push_back(s.mu.block(i)(a));
            }
            forces.push_back(std::move(real));
            forces.push_back(std::move(pred));
        }
    }
    if (!forces.empty()) {
        write_text(out / "forces.svg", svg::line_chart(forces, {"Real and predicted disturbance", "t", "force", false}));
    }

    std::vector<svg::Series> lyap;
    if (cfg.control.mode == ControlMode::Learning) {
        ScenarioConfig nominal = cfg;
        nominal.control.mode = ControlMode::Nominal;
        const RunResult companion = run_scenario(nominal);
        lyap.push_back({"nominal", times(companion.trajectory), normalized_lyapunov(companion.trajectory)});
        lyap.push_back({"learning", t, normalized_lyapunov(traj)});
    } else {
        lyap.push_back({"nominal", t, normalized_lyapunov(traj)});
    }
    write_text(out / "lyapunov.svg", svg::line_chart(lyap, {"Normalized Lyapunov function", "t", "V / V(0)", true}));
}

}  // namespace

json summarize(const ScenarioConfig& cfg, const RunResult& result) {
    const Framework& fw = cfg.framework;
    const TrajectoryRecord& traj = result.trajectory;
    const TrajectorySample& last = traj.back();
    const double e_norm = last.e.norm();
    const double delta_norm = last.delta.data().norm();

    std::optional<double> rate;
    try {
        std::vector<double> t;
        std::vector<double> v;
        for (const auto& s : traj.samples) {
            t.push_back(s.t);
            v.push_back(s.lyapunov);
        }
        rate = fit_exponential_rate(t, v, cfg.sim.t_end / 6.0, 5.0 * cfg.sim.t_end / 6.0);
    } catch (const Error&) {
        rate.reset();
    }

    const auto vbar = average_velocity_trace(traj);
    double drift = 0.0;
    for (const auto& v : vbar) { drift = std::max(drift, (v - vbar.front()).norm()); }

    const auto dist = average_neighbor_distance_trace(fw, traj);
    const auto& lengths = fw.desired_lengths();
    const double target = std::accumulate(lengths.begin(), lengths.end(), 0.0) / static_cast<double>(lengths.size());

    const UltimateBound& ub = result.bound.ultimate;
    json doc;
    doc["name"] = cfg.name;
    doc["mode"] = cfg.control.mode == ControlMode::Learning ? "learning" : "nominal";
    doc["seed"] = cfg.sim.seed;
    doc["samples"] = traj.size();
    doc["converged"] = e_norm < kConvergenceTolerance && delta_norm < kConvergenceTolerance;
    doc["bound"] = ub.b;
    doc["bound_violated"] = !ub.t_eps.has_value();
    doc["t_eps"] = optional_number(ub.t_eps);
    doc["within_bound_after_freeze"] = result.bound.within_bound_after_freeze;
    doc["max_error_after_freeze"] = result.bound.max_error_after_freeze;
    doc["terminal"] = {{"t", last.t},
                       {"e_norm", e_norm},
                       {"delta_norm", delta_norm},
                       {"V", last.lyapunov},
                       {"error_norm", last.error_norm()}};
    doc["rate_V"] = optional_number(rate);
    doc["rate_window"] = {cfg.sim.t_end / 6.0, 5.0 * cfg.sim.t_end / 6.0};
    doc["avg_neighbor_distance"] = dist.back();
    doc["mean_desired_length"] = target;
    doc["avg_distance_relative_error"] = std::abs(dist.back() - target) / target;
    doc["vbar_drift"] = drift;
    return doc;
}

RunOutput execute_run(const ScenarioConfig& cfg, const std::filesystem::path& out, bool svg) {
    std::filesystem::create_directories(out);
    write_json(out / "config.json", config_to_json(cfg));

    RunOutput output{run_scenario(cfg), {}};
    const RunResult& run = output.result;
    const Framework& fw = cfg.framework;

    write_trajectory_csv(out / "trajectory.csv", fw, run.trajectory, run.bound.ultimate.b);
    write_metrics_csv(out / "metrics.csv", fw, run.trajectory);
    write_forces_csv(out / "forces.csv", run.trajectory);
    for (std::size_t i = 0; i < run.models.size(); ++i) {
        write_dataset_csv(out / ("dataset_agent_" + std::to_string(i + 1) + ".csv"), run.models[i].dataset());
    }
    write_json(out / "bound.json", bound_report_json(run.bound));
    output.summary = summarize(cfg, run);
    write_json(out / "summary.json", output.summary);
    if (svg) { write_plots(cfg, run, out); }
    return output;
}

json compare_runs(const std::filesystem::path& dir_a, const std::filesystem::path& dir_b) {
    const json cfg_a = read_json(dir_a / "config.json");
    const json cfg_b = read_json(dir_b / "config.json");
    if (cfg_a.at("framework") != cfg_b.at("framework")) {
        throw Error("runs use different frameworks: " + dir_a.string() + " vs " + dir_b.string());
    }
    if (cfg_a.at("disturbances") != cfg_b.at("disturbances")) {
        throw Error("runs use different disturbances: " + dir_a.string() + " vs " + dir_b.string());
    }
    const json sum_a = read_json(dir_a / "summary.json");
    const json sum_b = read_json(dir_b / "summary.json");

    const auto ratio = [](const json& a, const json& b) -> json {
        if (a.is_null() || b.is_null()) { return nullptr; }
        const double x = a.get<double>();
        const double y = b.get<double>();
        if (x == y) { return 1.0; }
        if (y == 0.0) { return nullptr; }
        return x / y;
    };
    const auto side = [](const json& s) {
        return json{{"mode", s.at("mode")},
                    {"terminal_e_norm", s.at("terminal").at("e_norm")},
                    {"terminal_delta_norm", s.at("terminal").at("delta_norm")},
                    {"terminal_V", s.at("terminal").at("V")},
                    {"rate_V", s.at("rate_V")},
                    {"avg_neighbor_distance", s.at("avg_neighbor_distance")},
                    {"avg_distance_relative_error", s.at("avg_distance_relative_error")},
                    {"bound", s.at("bound")},
                    {"bound_violated", s.at("bound_violated")}};
    };
    json report;
    report["a"] = side(sum_a);
    report["a"]["dir"] = dir_a.string();
    report["b"] = side(sum_b);
    report["b"]["dir"] = dir_b.string();
    report["ratios"] = {
        {"terminal_e_norm", ratio(sum_a["terminal"]["e_norm"], sum_b["terminal"]["e_norm"])},
        {"terminal_V", ratio(sum_a["terminal"]["V"], sum_b["terminal"]["V"])},
        {"rate_V", ratio(sum_a["rate_V"], sum_b["rate_V"])},
        {"avg_distance_relative_error",
         ratio(sum_a["avg_distance_relative_error"], sum_b["avg_distance_relative_error"])}};
    return report;
}

}  // namespace flock
