#pragma once

#include "flock/gp.hpp"
#include "flock/network.hpp"
#include "flock/trajectory.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace flock {

/// Threshold below which ‖e‖ and ‖δ‖ count as converged.
inline constexpr double kConvergenceTolerance = 1e-6;

struct Disagreement {
    StackedVector delta;
    Eigen::VectorXd mean_velocity;
};

/// δ_i = v_i − v̄ with v̄ the swarm-average velocity.
Disagreement disagreement(const StackedVector& v);

/// V(e, δ) = ½‖e‖² + ‖δ‖².
double lyapunov(const Eigen::Ref<const Eigen::VectorXd>& e, const Eigen::Ref<const Eigen::VectorXd>& delta);

std::vector<Eigen::VectorXd> average_velocity_trace(const TrajectoryRecord& traj);
/// Mean edge length ‖z_k‖ at every sample.
std::vector<double> average_neighbor_distance_trace(const Framework& fw, const TrajectoryRecord& traj);

/// Least-squares slope of log(values) against times over [window_start, window_end].
/// Throws DomainError on non-positive values inside the window or fewer than two points.
double fit_exponential_rate(std::span<const double> times, std::span<const double> values, double window_start,
                            double window_end);

struct UltimateBound {
    /// √2 · max over the grid of the stacked Δ̄.
    double b = 0.0;
    double max_delta_bar = 0.0;
    double epsilon = 0.0;
    int points_per_axis = 0;
    Eigen::VectorXd argmax;
    /// Δ̄_i evaluations actually performed (Σ_i g^{2d}).
    double evaluated_cells = 0.0;
    /// Size of the stacked tensor grid g^{2dn} the maximum is taken over.
    double full_grid_cells = 0.0;
    bool truncated_grid = false;
    /// First sample time after which ‖(e, δ)‖ ≤ b for the rest of the run.
    std::optional<double> t_eps;
};

/// Grid resolution that fits `requested` into the cell cap. Returns the
/// resolution and whether it had to be reduced; throws if even 2 points per
/// axis exceed the cap.
std::pair<int, bool> fit_grid_to_cap(int requested, Eigen::Index dims_per_agent, int agents, double max_cells);

/// Max of the stacked pointwise bound sqrt(Σ_i Δ̄_i(p_i)²) over the tensor grid
/// on Ω. Each Δ̄_i depends on agent i's coordinates only, so the stacked max is
/// the combination of per-agent maxima over each agent's sub-grid.
UltimateBound ultimate_bound(const ErrorBoundParams& params, std::span<const GpModel> models,
                             std::span<const Eigen::VectorXd> betas);

/// Stacked Δ̄ at a full state p = [p_1; ...; p_n].
double stacked_error_bound(std::span<const GpModel> models, std::span<const Eigen::VectorXd> betas,
                           const Eigen::Ref<const Eigen::VectorXd>& p);

std::optional<double> settling_time(const TrajectoryRecord& traj, double bound, double tolerance = 0.0);

}  // namespace flock
