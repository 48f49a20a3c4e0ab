#pragma once

#include "flock/network.hpp"
#include "flock/trajectory.hpp"

#include <string>
#include <vector>

namespace flock::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct ChartOptions {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
};

/// Polyline chart with axes, tick labels and a legend. Long series are thinned
/// to at most 1500 points each.
std::string line_chart(const std::vector<Series>& series, const ChartOptions& options);

/// Agent paths projected on the first two coordinates, with the final formation's edges.
std::string trajectory_plot(const Framework& fw, const TrajectoryRecord& traj, const std::string& title);

}  // namespace flock::svg
