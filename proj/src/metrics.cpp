#include "flock/metrics.hpp"

#include "flock/error.hpp"

#include <cmath>
#include <string>

namespace flock {

Disagreement disagreement(const StackedVector& v) {
    const Eigen::Index d = v.block_size();
    const Eigen::Index n = v.block_count();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (Eigen::Index i = 0; i < n; ++i) { mean += v.block(i); }
    if (n > 0) { mean /= static_cast<double>(n); }
    StackedVector delta = v;
    for (Eigen::Index i = 0; i < n; ++i) { delta.block(i) -= mean; }
    return {std::move(delta), std::move(mean)};
}

double lyapunov(const Eigen::Ref<const Eigen::VectorXd>& e, const Eigen::Ref<const Eigen::VectorXd>& delta) {
    return 0.5 * e.squaredNorm() + delta.squaredNorm();
}

std::vector<Eigen::VectorXd> average_velocity_trace(const TrajectoryRecord& traj) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(traj.size());
    for (const auto& s : traj.samples) { out.push_back(disagreement(s.v).mean_velocity); }
    return out;
}

std::vector<double> average_neighbor_distance_trace(const Framework& fw, const TrajectoryRecord& traj) {
    std::vector<double> out;
    out.reserve(traj.size());
    for (const auto& s : traj.samples) {
        const StackedVector z = relative_positions(fw, s.q);
        double sum = 0.0;
        for (int k = 0; k < fw.edge_count(); ++k) { sum += z.block(k).norm(); }
        out.push_back(sum / fw.edge_count());
    }
    return out;
}

double fit_exponential_rate(std::span<const double> times, std::span<const double> values, double window_start,
                            double window_end) {
    if (times.size() != values.size()) { throw DimensionError("times and values differ in length"); }
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < window_start || times[i] > window_end) { continue; }
        if (!(values[i] > 0.0)) {
            throw DomainError("exponential fit needs strictly positive values; got " + std::to_string(values[i]) +
                              " at t = " + std::to_string(times[i]));
        }
        const double x = times[i];
        const double y = std::log(values[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    if (count < 2) { throw DomainError("exponential fit needs at least two samples in the window"); }
    const auto n = static_cast<double>(count);
    const double denom = n * sxx - sx * sx;
    if (denom <= 0.0) { throw DomainError("exponential fit window has no time spread"); }
    return (n * sxy - sx * sy) / denom;
}

std::pair<int, bool> fit_grid_to_cap(int requested, Eigen::Index dims_per_agent, int agents, double max_cells) {
    for (int g = requested; g >= 2; --g) {
        const double cells = agents * std::pow(static_cast<double>(g), static_cast<double>(dims_per_agent));
        if (cells <= max_cells) { return {g, g < requested}; }
    }
    throw DomainError("even 2 points per axis exceed the cell cap of " + std::to_string(max_cells));
}

double stacked_error_bound(std::span<const GpModel> models, std::span<const Eigen::VectorXd> betas,
                           const Eigen::Ref<const Eigen::VectorXd>& p) {
    if (models.size() != betas.size()) { throw DimensionError("one beta per model is required"); }
    double total = 0.0;
    Eigen::Index offset = 0;
    for (std::size_t i = 0; i < models.size(); ++i) {
        const Eigen::Index w = models[i].input_dim();
        const double bound = pointwise_error_bound(models[i], betas[i], p.segment(offset, w));
        total += bound * bound;
        offset += w;
    }
    if (offset != p.size()) { throw DimensionError("stacked state does not match the models"); }
    return std::sqrt(total);
}

UltimateBound ultimate_bound(const ErrorBoundParams& params, std::span<const GpModel> models,
                             std::span<const Eigen::VectorXd> betas) {
    params.validate();
    if (models.empty() || models.size() != betas.size()) { throw DimensionError("one beta per model is required"); }
    const Eigen::Index width = models.front().input_dim();
    for (const auto& m : models) {
        if (!m.is_frozen()) { throw DomainError("ultimate bound requires frozen datasets"); }
        if (m.input_dim() != width) { throw DimensionError("models disagree on input dimension"); }
    }
    const auto agents = static_cast<Eigen::Index>(models.size());
    if (params.omega.dim() != agents * width) {
        throw DimensionError("omega has " + std::to_string(params.omega.dim()) + " axes, expected " +
                             std::to_string(agents * width));
    }
    const int g = params.grid_points_per_axis;
    const double per_agent = std::pow(static_cast<double>(g), static_cast<double>(width));
    const double evaluated = static_cast<double>(agents) * per_agent;
    if (evaluated > params.max_cells) {
        throw DomainError("bound grid needs " + std::to_string(evaluated) + " cells, above the cap of " +
                          std::to_string(params.max_cells) + "; use a coarser grid");
    }

    UltimateBound out;
    out.epsilon = params.epsilon;
    out.points_per_axis = g;
    out.evaluated_cells = evaluated;
    out.full_grid_cells = std::pow(static_cast<double>(g), static_cast<double>(agents * width));
    out.argmax.resize(agents * width);
    double total = 0.0;
    for (Eigen::Index i = 0; i < agents; ++i) {
        const Box sub = params.omega.slice(i * width, width);
        const auto& model = models[static_cast<std::size_t>(i)];
        const auto& b = betas[static_cast<std::size_t>(i)];
        double best = -1.0;
        Eigen::VectorXd best_point;
        for (std::size_t c = 0; c < static_cast<std::size_t>(per_agent); ++c) {
            Eigen::VectorXd x = sub.grid_point(c, g);
            const double value = pointwise_error_bound(model, b, x);
            if (value > best) {
                best = value;
                best_point = std::move(x);
            }
        }
        total += best * best;
        out.argmax.segment(i * width, width) = best_point;
    }
    out.max_delta_bar = std::sqrt(total);
    out.b = std::sqrt(2.0) * out.max_delta_bar;
    return out;
}

std::optional<double> settling_time(const TrajectoryRecord& traj, double bound, double tolerance) {
    if (traj.samples.empty()) { return std::nullopt; }
    std::size_t first_good = traj.size();
    for (std::size_t k = traj.size(); k-- > 0;) {
        if (traj.samples[k].error_norm() > bound + tolerance) { break; }
        first_good = k;
    }
    if (first_good == traj.size()) { return std::nullopt; }
    return traj.samples[first_good].t;
}

}  // namespace flock
