#include "flock/io.hpp"

#include "flock/error.hpp"
#include "flock/metrics.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>

namespace flock {

using nlohmann::json;

namespace {

constexpr const char* kAxes[] = {"x", "y", "z"};

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) { throw Error("cannot write " + path.string()); }
    return out;
}

void write_row(std::ofstream& out, const std::vector<double>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i > 0) { out << ','; }
        out << format_double(row[i]);
    }
    out << '\n';
}

void write_header(std::ofstream& out, const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i > 0) { out << ','; }
        out << names[i];
    }
    out << '\n';
}

void append(std::vector<double>& row, const Eigen::VectorXd& x) {
    row.insert(row.end(), x.data(), x.data() + x.size());
}

void agent_columns(std::vector<std::string>& names, const char* prefix, int n, int d) {
    for (int i = 0; i < n; ++i) {
        for (int a = 0; a < d; ++a) {
            names.push_back(std::string(prefix) + "_" + std::to_string(i + 1) + "_" + kAxes[a]);
        }
    }
}

json vector_json(const Eigen::VectorXd& x) { return std::vector<double>(x.data(), x.data() + x.size()); }

}  // namespace

std::string format_double(double x) {
    if (std::isnan(x)) { return "nan"; }
    if (std::isinf(x)) { return x > 0 ? "inf" : "-inf"; }
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::general, 17);
    return {buf.data(), res.ptr};
}

std::vector<std::string> trajectory_header(const Framework& fw) {
    const int n = fw.agent_count();
    const int d = fw.dimension();
    std::vector<std::string> names{"t"};
    agent_columns(names, "q", n, d);
    agent_columns(names, "v", n, d);
    agent_columns(names, "u", n, d);
    for (int k = 0; k < fw.edge_count(); ++k) { names.push_back("e_" + std::to_string(k + 1)); }
    names.insert(names.end(), {"V", "delta_norm", "bound"});
    return names;
}

void write_trajectory_csv(const std::filesystem::path& path, const Framework& fw, const TrajectoryRecord& traj,
                          double bound) {
    auto out = open_out(path);
    write_header(out, trajectory_header(fw));
    std::vector<double> row;
    for (const auto& s : traj.samples) {
        row.assign(1, s.t);
        append(row, s.q.data());
        append(row, s.v.data());
        append(row, s.u.data());
        append(row, s.e);
        row.insert(row.end(), {s.lyapunov, s.delta.data().norm(), bound});
        write_row(out, row);
    }
}

void write_metrics_csv(const std::filesystem::path& path, const Framework& fw, const TrajectoryRecord& traj) {
    auto out = open_out(path);
    std::vector<std::string> names{"t"};
    for (int a = 0; a < fw.dimension(); ++a) { names.push_back(std::string("vbar_") + kAxes[a]); }
    names.insert(names.end(), {"avg_neighbor_distance", "delta_bar", "error_norm"});
    write_header(out, names);
    const auto vbar = average_velocity_trace(traj);
    const auto dist = average_neighbor_distance_trace(fw, traj);
    std::vector<double> row;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const auto& s = traj.samples[k];
        row.assign(1, s.t);
        append(row, vbar[k]);
        row.insert(row.end(), {dist[k], s.delta_bar, s.error_norm()});
        write_row(out, row);
    }
}

void write_forces_csv(const std::filesystem::path& path, const TrajectoryRecord& traj) {
    auto out = open_out(path);
    if (traj.samples.empty()) { return; }
    const auto n = static_cast<int>(traj.samples.front().q.block_count());
    const auto d = static_cast<int>(traj.samples.front().q.block_size());
    std::vector<std::string> names{"t"};
    agent_columns(names, "f", n, d);
    agent_columns(names, "mu", n, d);
    write_header(out, names);
    std::vector<double> row;
    for (const auto& s : traj.samples) {
        row.assign(1, s.t);
        append(row, s.f_true.data());
        append(row, s.mu.data());
        write_row(out, row);
    }
}

void write_dataset_csv(const std::filesystem::path& path, const AgentDataset& data) {
    auto out = open_out(path);
    std::vector<std::string> names;
    for (Eigen::Index j = 0; j < data.inputs.cols(); ++j) { names.push_back("p_" + std::to_string(j + 1)); }
    for (Eigen::Index j = 0; j < data.outputs.cols(); ++j) { names.push_back("y_" + std::to_string(j + 1)); }
    write_header(out, names);
    std::vector<double> row;
    for (Eigen::Index r = 0; r < data.size(); ++r) {
        row.clear();
        append(row, data.inputs.row(r).transpose());
        append(row, data.outputs.row(r).transpose());
        write_row(out, row);
    }
}

json bound_report_json(const BoundReport& report) {
    const UltimateBound& u = report.ultimate;
    json doc;
    doc["mode"] = report.mode;
    doc["b"] = u.b;
    doc["max_delta_bar"] = u.max_delta_bar;
    doc["epsilon"] = u.epsilon;
    doc["grid"] = {{"points_per_axis", u.points_per_axis},
                   {"evaluated_cells", u.evaluated_cells},
                   {"full_grid_cells", u.full_grid_cells}};
    doc["truncated_grid"] = u.truncated_grid;
    doc["argmax"] = vector_json(u.argmax);
    doc["t_eps"] = u.t_eps ? json(*u.t_eps) : json(nullptr);
    if (report.omega.dim() > 0) {
        doc["omega"] = {{"lower", vector_json(report.omega.lower)}, {"upper", vector_json(report.omega.upper)}};
    } else {
        doc["omega"] = nullptr;
    }
    doc["rkhs_surrogate"] = report.rkhs_surrogate;
    const auto per_agent = [](const std::vector<Eigen::VectorXd>& xs) {
        json arr = json::array();
        for (const auto& x : xs) { arr.push_back(vector_json(x)); }
        return arr;
    };
    doc["rkhs_bounds"] = per_agent(report.rkhs_bounds);
    doc["gamma"] = per_agent(report.gamma);
    doc["beta"] = per_agent(report.beta);
    doc["dataset_sizes"] = report.dataset_sizes;
    doc["lambda_min_rrt"] = report.lambda_min_rrt;
    doc["lambda2"] = report.lambda2;
    doc["within_bound_after_freeze"] = report.within_bound_after_freeze;
    doc["max_error_after_freeze"] = report.max_error_after_freeze;
    return doc;
}

void write_json(const std::filesystem::path& path, const json& doc) {
    auto out = open_out(path);
    out << doc.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) { throw Error("cannot read " + path.string()); }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

}  // namespace flock
