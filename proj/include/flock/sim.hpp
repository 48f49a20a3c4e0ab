#pragma once

#include "flock/control.hpp"
#include "flock/forces.hpp"
#include "flock/gp.hpp"
#include "flock/metrics.hpp"
#include "flock/network.hpp"
#include "flock/trajectory.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace flock {

using DisturbanceSpec = ForceField;

struct SwarmState {
    StackedVector q;
    StackedVector v;
};

struct SimSettings {
    double dt = 1e-3;
    double t_end = 30.0;
    double sample_interval = 1e-2;
    /// Datasets are frozen from this time on.
    double freeze_time = 15.0;
    /// Standard deviation of the additive noise on measured accelerations.
    double accel_noise_sigma = 0.0;
    std::uint64_t seed = 0;
    /// Keep every k-th integration step in the trajectory record.
    int record_every = 1;
    /// Oldest-first eviction once a dataset exceeds this size.
    std::optional<int> max_samples;

    void validate() const;
    bool operator==(const SimSettings&) const = default;
};

struct GpSettings {
    KernelParams kernel;
    /// Refit hyperparameters by log marginal likelihood when the datasets freeze.
    bool fit_hyperparameters = false;
    bool operator==(const GpSettings&) const = default;
};

struct BoundSettings {
    double epsilon = 0.95;
    /// Per-output RKHS norm bounds; unset means the data-driven surrogate times the safety factor.
    std::optional<Eigen::VectorXd> rkhs_bounds;
    double surrogate_safety_factor = 2.0;
    /// Unset means the realized trajectory box inflated by `omega_inflation`.
    std::optional<Box> omega;
    double omega_inflation = 0.2;
    int grid_points_per_axis = 5;
    double max_cells = 1e6;
    bool operator==(const BoundSettings&) const = default;
};

/// Declarative description of one closed-loop experiment.
struct ScenarioConfig {
    std::string name;
    Framework framework;
    StackedVector q0;
    StackedVector v0;
    DisturbanceSpec disturbance;
    ControlConfig control;
    GpSettings gp;
    SimSettings sim;
    BoundSettings bound;

    /// Throws DomainError / DimensionError naming the offending field.
    void validate() const;
};

struct BoundReport {
    std::string mode;
    UltimateBound ultimate;
    Box omega;
    std::vector<Eigen::VectorXd> rkhs_bounds;
    bool rkhs_surrogate = false;
    std::vector<Eigen::VectorXd> gamma;
    std::vector<Eigen::VectorXd> beta;
    std::vector<Eigen::Index> dataset_sizes;
    double lambda_min_rrt = 0.0;
    double lambda2 = 0.0;
    bool within_bound_after_freeze = true;
    double max_error_after_freeze = 0.0;
};

struct RunResult {
    TrajectoryRecord trajectory;
    std::vector<GpModel> models;
    BoundReport bound;
};

/// One RK4 step of q̇ = v, v̇ = u + f(q, v) with u held constant.
SwarmState step(const Framework& fw, const SwarmState& state, const StackedVector& u,
                const DisturbanceSpec& disturbance, double dt);

RunResult run_scenario(const ScenarioConfig& cfg);

/// Right-hand side of the interpolated family
///   ṗ = −λ ∇_q V + (1 − λ) ∇_v V,   v̇ = (λ − 1) ∇_q V − 𝓛 ∇_v V
/// with ∇_q V = R(z)ᵀe and ∇_v V = δ.
SwarmState interpolated_family_rhs(const Framework& fw, const SwarmState& state, double lambda);

/// Max over interior samples of ‖ė_fd − 2R(z)v‖∞, divided by max ‖2R(z)v‖∞.
double edot_identity_check(const Framework& fw, const TrajectoryRecord& traj);

/// Bound certificate of a finished learning run (frozen models).
BoundReport compute_bound_report(const ScenarioConfig& cfg, const TrajectoryRecord& traj,
                                 std::span<const GpModel> models, std::vector<Eigen::VectorXd>& betas);

/// Tight box around all recorded states, widened by `inflation` of its width per axis.
Box trajectory_box(const TrajectoryRecord& traj, double inflation);

}  // namespace flock
