#include "flock/sim.hpp"

#include "flock/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace flock {

namespace {

constexpr double kDivergenceLimit = 1e9;

long steps_for(double duration, double dt) { return std::lround(duration / dt); }

void check_finite(const SwarmState& s) {
    const auto bad = [](const Eigen::VectorXd& x) {
        return !x.allFinite() || (x.size() > 0 && x.cwiseAbs().maxCoeff() > kDivergenceLimit);
    };
    if (bad(s.q.data()) || bad(s.v.data())) {
        throw DivergenceError("state diverged (|component| > 1e9 or non-finite)");
    }
}

Eigen::VectorXd agent_input(const SwarmState& s, int i) {
    Eigen::VectorXd p(2 * s.q.block_size());
    p << s.q.block(i), s.v.block(i);
    return p;
}

}  // namespace

void SimSettings::validate() const {
    if (!(dt > 0.0)) { throw DomainError("sim.dt must be positive"); }
    if (!(sample_interval >= dt)) { throw DomainError("sim.sample_interval must be >= sim.dt"); }
    if (!(freeze_time >= sample_interval)) { throw DomainError("sim.freeze_time must be >= sim.sample_interval"); }
    if (!(t_end >= freeze_time)) { throw DomainError("sim.t_end must be >= sim.freeze_time"); }
    if (!(accel_noise_sigma >= 0.0)) { throw DomainError("sim.accel_noise_sigma must be non-negative"); }
    if (record_every < 1) { throw DomainError("sim.record_every must be >= 1"); }
    if (max_samples && *max_samples < 1) { throw DomainError("sim.max_samples must be >= 1"); }
}

void ScenarioConfig::validate() const {
    const int n = framework.agent_count();
    const int d = framework.dimension();
    if (q0.block_size() != d || q0.block_count() != n) {
        throw DimensionError("initial.q must hold " + std::to_string(n) + " positions of dimension " + std::to_string(d));
    }
    if (v0.block_size() != d || v0.block_count() != n) {
        throw DimensionError("initial.v must hold " + std::to_string(n) + " velocities of dimension " + std::to_string(d));
    }
    if (!q0.data().allFinite() || !v0.data().allFinite()) { throw DomainError("initial state must be finite"); }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (q0.block(i) == q0.block(j)) {
                throw DomainError("initial.q: agents " + std::to_string(i + 1) + " and " + std::to_string(j + 1) +
                                  " start at the same position");
            }
        }
    }
    if (!is_infinitesimally_minimally_rigid(framework, q0)) {
        throw DomainError("framework: not infinitesimally rigid at the initial positions");
    }
    if (disturbance.agent_count() != n || disturbance.dimension() != d) {
        throw DimensionError("disturbances do not match the framework");
    }
    if (control.prior.agent_count() != 0 &&
        (control.prior.agent_count() != n || control.prior.dimension() != d)) {
        throw DimensionError("control.prior does not match the framework");
    }
    if (!(control.gains.align > 0.0) || !(control.gains.shape > 0.0)) {
        throw DomainError("control gains must be positive");
    }
    gp.kernel.validate();
    if (gp.kernel.input_dim() != 2 * d) {
        throw DimensionError("gp.lengthscales must have 2d = " + std::to_string(2 * d) + " entries");
    }
    sim.validate();
    if (!(bound.epsilon > 0.0 && bound.epsilon < 1.0)) { throw DomainError("bound.epsilon must lie in (0, 1)"); }
    if (bound.rkhs_bounds && (bound.rkhs_bounds->size() != d || !(bound.rkhs_bounds->array() > 0.0).all())) {
        throw DomainError("bound.rkhs_bounds must hold d positive values");
    }
    if (!(bound.surrogate_safety_factor > 0.0)) { throw DomainError("bound.surrogate_safety_factor must be positive"); }
    if (bound.omega) {
        bound.omega->validate();
        if (bound.omega->dim() != 2 * d * n) {
            throw DimensionError("bound.omega must have 2dn = " + std::to_string(2 * d * n) + " axes");
        }
    }
    if (!(bound.omega_inflation >= 0.0)) { throw DomainError("bound.omega_inflation must be non-negative"); }
    if (bound.grid_points_per_axis < 2) { throw DomainError("bound.grid_points_per_axis must be >= 2"); }
    if (!(bound.max_cells >= 1.0)) { throw DomainError("bound.max_cells must be >= 1"); }
    if (control.mode == ControlMode::Learning && !(gp.kernel.noise_variance > 0.0)) {
        throw DomainError("gp.noise_variance must be positive for the learning bound");
    }
}

SwarmState step(const Framework& fw, const SwarmState& state, const StackedVector& u,
                const DisturbanceSpec& disturbance, double dt) {
    if (!(dt > 0.0)) { throw DomainError("step size must be positive"); }
    if (u.size() != state.v.size()) { throw DimensionError("control input does not match the state"); }
    const Eigen::Index d = fw.dimension();
    const bool disturbed = !disturbance.is_zero();
    const auto accel = [&](const Eigen::VectorXd& q, const Eigen::VectorXd& v) -> Eigen::VectorXd {
        if (!disturbed) { return u.data(); }
        return u.data() + disturbance.evaluate(StackedVector(q, d), StackedVector(v, d)).data();
    };
    const Eigen::VectorXd& q = state.q.data();
    const Eigen::VectorXd& v = state.v.data();

    const Eigen::VectorXd k1q = v;
    const Eigen::VectorXd k1v = accel(q, v);
    const Eigen::VectorXd k2q = v + 0.5 * dt * k1v;
    const Eigen::VectorXd k2v = accel(q + 0.5 * dt * k1q, k2q);
    const Eigen::VectorXd k3q = v + 0.5 * dt * k2v;
    const Eigen::VectorXd k3v = accel(q + 0.5 * dt * k2q, k3q);
    const Eigen::VectorXd k4q = v + dt * k3v;
    const Eigen::VectorXd k4v = accel(q + dt * k3q, k4q);

    SwarmState next{StackedVector(q + dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q), d),
                    StackedVector(v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v), d)};
    check_finite(next);
    return next;
}

SwarmState interpolated_family_rhs(const Framework& fw, const SwarmState& state, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) { throw DomainError("lambda must lie in [0, 1]"); }
    const Eigen::VectorXd grad_q = potential_shape_gradient(fw, state.q).data();
    const Eigen::VectorXd grad_v = disagreement(state.v).delta.data();
    const Eigen::Index d = fw.dimension();
    return {StackedVector(-lambda * grad_q + (1.0 - lambda) * grad_v, d),
            StackedVector((lambda - 1.0) * grad_q - stacked_laplacian(fw) * grad_v, d)};
}

double edot_identity_check(const Framework& fw, const TrajectoryRecord& traj) {
    if (traj.size() < 3) { throw DomainError("identity check needs at least 3 samples"); }
    const double h = traj.sample_dt;
    double max_residual = 0.0;
    double max_scale = 0.0;
    for (std::size_t k = 1; k + 1 < traj.size(); ++k) {
        const auto& s = traj.samples[k];
        const Eigen::VectorXd fd = (traj.samples[k + 1].e - traj.samples[k - 1].e) / (2.0 * h);
        const Eigen::VectorXd exact = 2.0 * rigidity_matrix(fw, s.q) * s.v.data();
        max_residual = std::max(max_residual, (fd - exact).cwiseAbs().maxCoeff());
        max_scale = std::max(max_scale, exact.cwiseAbs().maxCoeff());
    }
    if (max_scale == 0.0) { return max_residual; }
    return max_residual / max_scale;
}

Box trajectory_box(const TrajectoryRecord& traj, double inflation) {
    if (traj.samples.empty()) { throw DomainError("empty trajectory"); }
    const Eigen::Index d = traj.samples.front().q.block_size();
    const Eigen::Index n = traj.samples.front().q.block_count();
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(2 * d * n, std::numeric_limits<double>::infinity());
    Eigen::VectorXd hi = -lo;
    for (const auto& s : traj.samples) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto qi = s.q.block(i);
            const auto vi = s.v.block(i);
            for (Eigen::Index a = 0; a < d; ++a) {
                const Eigen::Index base = i * 2 * d;
                lo(base + a) = std::min(lo(base + a), qi(a));
                hi(base + a) = std::max(hi(base + a), qi(a));
                lo(base + d + a) = std::min(lo(base + d + a), vi(a));
                hi(base + d + a) = std::max(hi(base + d + a), vi(a));
            }
        }
    }
    const Eigen::VectorXd pad = 0.5 * inflation * (hi - lo);
    return {lo - pad, hi + pad};
}

BoundReport compute_bound_report(const ScenarioConfig& cfg, const TrajectoryRecord& traj,
                                 std::span<const GpModel> models, std::vector<Eigen::VectorXd>& betas) {
    const Framework& fw = cfg.framework;
    const int n = fw.agent_count();
    const int d = fw.dimension();
    const Eigen::Index width = 2 * d;

    BoundReport report;
    report.mode = "learning";
    report.omega = cfg.bound.omega ? *cfg.bound.omega : trajectory_box(traj, cfg.bound.omega_inflation);
    report.rkhs_surrogate = !cfg.bound.rkhs_bounds.has_value();

    const auto [g, truncated] = fit_grid_to_cap(cfg.bound.grid_points_per_axis, width, n, cfg.bound.max_cells);

    betas.clear();
    Eigen::VectorXd rkhs_max = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < n; ++i) {
        const GpModel& model = models[static_cast<std::size_t>(i)];
        Eigen::VectorXd rkhs;
        if (cfg.bound.rkhs_bounds) {
            rkhs = *cfg.bound.rkhs_bounds;
        } else {
            // Floor keeps the bound parameters strictly positive when an agent's residual is exactly zero.
            rkhs = (cfg.bound.surrogate_safety_factor * rkhs_norm_estimate(model)).cwiseMax(1e-12);
        }
        const Box sub = report.omega.slice(i * width, width);
        const double gain = information_gain(model.kernel(), sub, g, model.size(), model.kernel().noise_variance);
        const Eigen::VectorXd gamma = Eigen::VectorXd::Constant(d, gain);
        betas.push_back(beta(cfg.bound.epsilon, rkhs, gamma, model.size(), d, n));
        report.rkhs_bounds.push_back(rkhs);
        report.gamma.push_back(gamma);
        report.beta.push_back(betas.back());
        report.dataset_sizes.push_back(model.size());
        rkhs_max = rkhs_max.cwiseMax(rkhs);
    }

    ErrorBoundParams params;
    params.epsilon = cfg.bound.epsilon;
    params.rkhs_bounds = rkhs_max;
    params.omega = report.omega;
    params.grid_points_per_axis = g;
    params.max_cells = cfg.bound.max_cells;
    report.ultimate = ultimate_bound(params, models, betas);
    report.ultimate.truncated_grid = truncated;
    return report;
}

RunResult run_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    const Framework& fw = cfg.framework;
    const SimSettings& sim = cfg.sim;
    const int n = fw.agent_count();
    const int d = fw.dimension();
    const bool learning = cfg.control.mode == ControlMode::Learning;

    const long total_steps = steps_for(sim.t_end, sim.dt);
    const long sample_every = std::max(1L, steps_for(sim.sample_interval, sim.dt));
    const long freeze_step = steps_for(sim.freeze_time, sim.dt);

    std::mt19937_64 rng(sim.seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    RunResult result;
    result.models.assign(static_cast<std::size_t>(n), GpModel(cfg.gp.kernel, d));
    result.trajectory.sample_dt = sim.dt * sim.record_every;
    result.trajectory.samples.reserve(static_cast<std::size_t>(total_steps / sim.record_every + 1));

    const bool has_prior = cfg.control.prior.agent_count() > 0;
    const auto prior_at = [&](int i, const SwarmState& s) -> Eigen::VectorXd {
        return has_prior ? cfg.control.prior.evaluate(i, s.q.block(i), s.v.block(i)) : Eigen::VectorXd::Zero(d);
    };

    SwarmState state{cfg.q0, cfg.v0};
    for (long k = 0; k <= total_steps; ++k) {
        const double t = static_cast<double>(k) * sim.dt;
        if (k == freeze_step) {
            for (auto& m : result.models) {
                if (cfg.gp.fit_hyperparameters && m.size() > 0) { m = m.with_kernel(fit_hyperparameters(m)); }
                m = m.frozen();
            }
        }

        const StackedVector u = learning ? learning_control(fw, state.q, state.v, cfg.control, result.models)
                                         : nominal_control(fw, state.q, state.v, cfg.control.gains);

        if (k % sim.record_every == 0) {
            TrajectorySample s;
            s.t = t;
            s.q = state.q;
            s.v = state.v;
            s.u = u;
            s.e = distance_errors(fw, state.q);
            s.delta = disagreement(state.v).delta;
            s.lyapunov = lyapunov(s.e, s.delta.data());
            s.f_true = cfg.disturbance.evaluate(state.q, state.v);
            s.mu = StackedVector(d, n);
            if (learning) {
                for (int i = 0; i < n; ++i) {
                    s.mu.block(i) = result.models[static_cast<std::size_t>(i)].mean(agent_input(state, i));
                }
            }
            result.trajectory.samples.push_back(std::move(s));
        }
        if (k == total_steps) { break; }

        SwarmState next;
        try {
            next = step(fw, state, u, cfg.disturbance, sim.dt);
        } catch (const DivergenceError& err) {
            throw DivergenceError(std::string(err.what()) + " at t = " + std::to_string(t + sim.dt));
        }

        if (k < freeze_step && k % sample_every == 0) {
            for (int i = 0; i < n; ++i) {
                Eigen::VectorXd accel = (next.v.block(i) - state.v.block(i)) / sim.dt;
                if (sim.accel_noise_sigma > 0.0) {
                    for (Eigen::Index a = 0; a < d; ++a) { accel(a) += sim.accel_noise_sigma * noise(rng); }
                }
                const Sample sample = collect_sample(state.q.block(i), state.v.block(i), u.block(i), accel,
                                                     prior_at(i, state));
                auto& model = result.models[static_cast<std::size_t>(i)];
                model = std::move(model).with_observation(sample.p, sample.y);
                if (sim.max_samples && model.size() > *sim.max_samples) { model = model.without_oldest(); }
            }
        }
        state = std::move(next);
    }

    const auto& last = result.trajectory.back();
    const Eigen::MatrixXd r = rigidity_matrix(fw, last.q);
    result.bound.lambda_min_rrt = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(r * r.transpose()).eigenvalues()(0);
    result.bound.lambda2 = algebraic_connectivity(fw);

    if (learning) {
        std::vector<Eigen::VectorXd> betas;
        BoundReport report = compute_bound_report(cfg, result.trajectory, result.models, betas);
        report.lambda_min_rrt = result.bound.lambda_min_rrt;
        report.lambda2 = result.bound.lambda2;
        for (auto& s : result.trajectory.samples) {
            Eigen::VectorXd p(2 * d * n);
            for (int i = 0; i < n; ++i) {
                p.segment(2 * d * i, d) = s.q.block(i);
                p.segment(2 * d * i + d, d) = s.v.block(i);
            }
            s.delta_bar = stacked_error_bound(result.models, betas, p);
        }
        result.bound = std::move(report);
    } else {
        // The nominal law assumes a known model; its certified set is the equilibrium set itself.
        result.bound.mode = "nominal";
        result.bound.ultimate.b = 0.0;
        result.bound.ultimate.epsilon = cfg.bound.epsilon;
        for (const auto& m : result.models) { result.bound.dataset_sizes.push_back(m.size()); }
    }

    const double b = result.bound.ultimate.b;
    result.bound.ultimate.t_eps = settling_time(result.trajectory, b, learning ? 0.0 : kConvergenceTolerance);
    result.bound.max_error_after_freeze = 0.0;
    result.bound.within_bound_after_freeze = true;
    for (const auto& s : result.trajectory.samples) {
        if (s.t + 0.5 * sim.dt < sim.freeze_time) { continue; }
        result.bound.max_error_after_freeze = std::max(result.bound.max_error_after_freeze, s.error_norm());
        if (s.error_norm() > b) { result.bound.within_bound_after_freeze = false; }
    }
    return result;
}

}  // namespace flock
