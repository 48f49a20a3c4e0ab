#pragma once

#include "flock/network.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace flock {

/// One recorded instant of a closed-loop run.
struct TrajectorySample {
    double t = 0.0;
    StackedVector q;
    StackedVector v;
    StackedVector u;
    Eigen::VectorXd e;
    StackedVector delta;
    double lyapunov = 0.0;
    /// True disturbance f(q, v) and the compensation μ applied by the controller.
    StackedVector f_true;
    StackedVector mu;
    /// Stacked Δ̄ of the frozen models at this state (0 for nominal runs).
    double delta_bar = 0.0;

    [[nodiscard]] double error_norm() const {
        return std::sqrt(e.squaredNorm() + delta.data().squaredNorm());
    }
};

/// Uniformly sampled closed-loop trajectory.
struct TrajectoryRecord {
    std::vector<TrajectorySample> samples;
    /// Spacing between consecutive samples.
    double sample_dt = 0.0;

    [[nodiscard]] std::size_t size() const { return samples.size(); }
    [[nodiscard]] const TrajectorySample& back() const { return samples.back(); }
};

}  // namespace flock
