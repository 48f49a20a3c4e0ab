#include "flock/error.hpp"
#include "flock/metrics.hpp"
#include "flock/sim.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace flock;

namespace {

ScenarioConfig small_triangle(ControlMode mode) {
    Framework fw(3, 2, {{0, 1}, {1, 2}, {2, 0}}, {2.0, 2.0, 2.0});
    StackedVector q(2, 3);
    q.block(0) = Eigen::Vector2d(0.1, -0.2);
    q.block(1) = Eigen::Vector2d(2.2, 0.1);
    q.block(2) = Eigen::Vector2d(0.9, 1.6);
    StackedVector v(2, 3);
    v.block(0) = Eigen::Vector2d(0.3, 0.0);
    ScenarioConfig cfg{.name = "small", .framework = fw, .q0 = q, .v0 = v, .disturbance = ForceField(3, 2),
                       .control = {}, .gp = {}, .sim = {}, .bound = {}};
    cfg.control.mode = mode;
    cfg.gp.kernel = KernelParams::isotropic(4, 2.0, 4.0, 0.01);
    cfg.sim.dt = 1e-2;
    cfg.sim.t_end = 4.0;
    cfg.sim.freeze_time = 2.0;
    cfg.sim.sample_interval = 0.1;
    return cfg;
}

}  // namespace

TEST_CASE("RK4 step is exact for constant acceleration") {
    const Framework fw(3, 2, {{0, 1}, {1, 2}, {2, 0}}, {1.0, 1.0, 1.0});
    StackedVector q(2, 3);
    q.block(1) = Eigen::Vector2d(1, 0);
    q.block(2) = Eigen::Vector2d(0, 1);
    StackedVector v(2, 3);
    v.data().setConstant(0.5);
    StackedVector u(2, 3);
    u.data().setConstant(-2.0);
    ForceField f(3, 2);
    f.add_term(0, 1, {3.0, Trig::Const, 0.0, 0});
    const double dt = 0.1;
    const SwarmState next = step(fw, {q, v}, u, f, dt);
    StackedVector a = u;
    a.block(0)(1) += 3.0;
    CHECK((next.q.data() - (q.data() + dt * v.data() + 0.5 * dt * dt * a.data())).norm() < 1e-14);
    CHECK((next.v.data() - (v.data() + dt * a.data())).norm() < 1e-14);

    StackedVector huge = u;
    huge.data().setConstant(1e13);
    CHECK_THROWS_AS(step(fw, {q, v}, huge, f, dt), DivergenceError);
    CHECK_THROWS_AS(step(fw, {q, v}, u, f, 0.0), DomainError);
}

TEST_CASE("RK4 converges at fourth order on a velocity-dependent force") {
    const Framework fw(3, 2, {{0, 1}, {1, 2}, {2, 0}}, {1.0, 1.0, 1.0});
    ForceField f(3, 2);
    f.add_term(0, 0, {1.0, Trig::Sin, 1.0, 0});
    StackedVector q(2, 3);
    q.block(1) = Eigen::Vector2d(1, 0);
    q.block(2) = Eigen::Vector2d(0, 1);
    StackedVector v(2, 3);
    v.block(0)(0) = 1.0;
    const StackedVector u(2, 3);
    // v̇ = sin v ⇒ tan(v/2) = tan(v0/2) e^t
    const auto error_at = [&](double dt) {
        SwarmState s{q, v};
        const int steps = static_cast<int>(std::lround(1.0 / dt));
        for (int k = 0; k < steps; ++k) { s = step(fw, s, u, f, dt); }
        const double exact = 2.0 * std::atan(std::tan(0.5) * std::exp(1.0));
        return std::abs(s.v.block(0)(0) - exact);
    };
    const double ratio = error_at(0.1) / error_at(0.05);
    CHECK(ratio > 12.0);
    CHECK(ratio < 20.0);
}

TEST_CASE("interpolated family dissipates V0 + V1") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Framework fw(4, 2, {{0, 1}, {1, 2}, {0, 2}, {2, 3}, {1, 3}}, std::vector<double>(5, 1.0));
    for (const double lambda : {0.0, 0.3, 1.0}) {
        StackedVector q(2, 4);
        StackedVector v(2, 4);
        for (Eigen::Index k = 0; k < q.size(); ++k) {
            q.data()(k) = normal(rng);
            v.data()(k) = normal(rng);
        }
        const SwarmState rhs = interpolated_family_rhs(fw, {q, v}, lambda);
        const auto energy = [&](double s) {
            const StackedVector qs(q.data() + s * rhs.q.data(), 2);
            const StackedVector vs(v.data() + s * rhs.v.data(), 2);
            return potential_shape(fw, qs) + potential_disagreement(vs);
        };
        const double h = 1e-6;
        const double fd = (energy(h) - energy(-h)) / (2 * h);
        const Eigen::VectorXd grad_q = potential_shape_gradient(fw, q).data();
        const Eigen::VectorXd delta = disagreement(v).delta.data();
        const double expected = -lambda * grad_q.squaredNorm() - delta.dot(stacked_laplacian(fw) * delta);
        CHECK(fd == doctest::Approx(expected).epsilon(1e-5));
        CHECK(expected <= 0.0);
    }
    // Equilibria coincide: desired shape and equal velocities are fixed points for every λ
    StackedVector q(2, 3);
    q.block(1) = Eigen::Vector2d(1, 0);
    q.block(2) = Eigen::Vector2d(0.5, std::sqrt(3.0) / 2);
    StackedVector v(2, 3);
    for (int i = 0; i < 3; ++i) { v.block(i) = Eigen::Vector2d(0.7, 0.2); }
    const Framework tri(3, 2, {{0, 1}, {1, 2}, {2, 0}}, {1.0, 1.0, 1.0});
    for (const double lambda : {0.0, 0.5, 1.0}) {
        const SwarmState rhs = interpolated_family_rhs(tri, {q, v}, lambda);
        CHECK(rhs.q.data().norm() < 1e-12);
        CHECK(rhs.v.data().norm() < 1e-12);
    }
    CHECK_THROWS_AS(interpolated_family_rhs(tri, {q, v}, 1.5), DomainError);
}

TEST_CASE("nominal undisturbed run at unit gains") {
    ScenarioConfig cfg = small_triangle(ControlMode::Nominal);
    cfg.sim.t_end = 20.0;
    cfg.sim.freeze_time = 10.0;
    const RunResult run = run_scenario(cfg);
    const auto& traj = run.trajectory;
    CHECK(traj.size() == 2001);
    CHECK(traj.back().t == doctest::Approx(20.0));
    // V is non-increasing at unit gains (up to integration error)
    for (std::size_t k = 1; k < traj.size(); ++k) {
        CHECK(traj.samples[k].lyapunov <= traj.samples[k - 1].lyapunov * (1.0 + 1e-9) + 1e-15);
    }
    CHECK(traj.back().error_norm() < 1e-6);
    // Recorded V matches a recomputation from raw states
    for (std::size_t k = 0; k < traj.size(); k += 97) {
        const auto& s = traj.samples[k];
        const Eigen::VectorXd e = distance_errors(cfg.framework, s.q);
        const Eigen::VectorXd delta = disagreement(s.v).delta.data();
        CHECK(s.lyapunov == doctest::Approx(0.5 * e.squaredNorm() + delta.squaredNorm()).epsilon(1e-12));
    }
    const auto vbar = average_velocity_trace(traj);
    CHECK((vbar.back() - vbar.front()).norm() < 1e-9);
    CHECK(run.bound.mode == "nominal");
    CHECK(run.bound.ultimate.b == 0.0);
    CHECK(run.bound.ultimate.t_eps.has_value());
    CHECK(edot_identity_check(cfg.framework, traj) < 1e-2);

    cfg.sim.dt = 1e-3;
    cfg.sim.t_end = 5.0;
    cfg.sim.freeze_time = 2.5;
    CHECK(edot_identity_check(cfg.framework, run_scenario(cfg).trajectory) < 1e-4);
}

TEST_CASE("momentum bookkeeping under a constant force") {
    ScenarioConfig cfg = small_triangle(ControlMode::Nominal);
    cfg.disturbance.add_term(0, 1, {-300.0, Trig::Const, 0.0, 0});
    const RunResult run = run_scenario(cfg);
    const auto vbar = average_velocity_trace(run.trajectory);
    const double t = run.trajectory.back().t;
    CHECK((vbar.back() - vbar.front() - Eigen::Vector2d(0.0, -100.0 * t)).norm() < 1e-6);
}

TEST_CASE("learning run collects, freezes and certifies") {
    ScenarioConfig cfg = small_triangle(ControlMode::Learning);
    cfg.disturbance.add_term(0, 0, {1.0, Trig::Sin, 1.0, 1});
    cfg.disturbance.add_term(2, 1, {-0.5, Trig::Const, 0.0, 0});
    const RunResult run = run_scenario(cfg);
    // Samples at k·0.1 for t < 2 (k = 0..19)
    for (const auto& m : run.models) {
        CHECK(m.size() == 20);
        CHECK(m.is_frozen());
    }
    CHECK(run.bound.mode == "learning");
    CHECK(run.bound.ultimate.b > 0.0);
    CHECK(run.bound.dataset_sizes.size() == 3);
    // Omega contains the trajectory
    for (const auto& s : run.trajectory.samples) {
        for (int i = 0; i < 3; ++i) {
            for (int a = 0; a < 2; ++a) {
                CHECK(s.q.block(i)(a) >= run.bound.omega.lower(4 * i + a));
                CHECK(s.q.block(i)(a) <= run.bound.omega.upper(4 * i + a));
                CHECK(s.v.block(i)(a) >= run.bound.omega.lower(4 * i + 2 + a));
                CHECK(s.v.block(i)(a) <= run.bound.omega.upper(4 * i + 2 + a));
            }
        }
    }
    // Sample residuals equal the true disturbance (noise-free, no prior) up to the discretization of the measured acceleration
    const auto& data = run.models[2].dataset();
    CHECK((data.outputs.col(1).array() + 0.5).abs().maxCoeff() < 1e-2);

    // Determinism
    const RunResult again = run_scenario(cfg);
    CHECK(again.trajectory.back().q == run.trajectory.back().q);
    CHECK(again.bound.ultimate.b == run.bound.ultimate.b);
}

TEST_CASE("noise seed changes the datasets reproducibly") {
    ScenarioConfig cfg = small_triangle(ControlMode::Learning);
    cfg.sim.accel_noise_sigma = 0.1;
    cfg.sim.seed = 1;
    const RunResult a = run_scenario(cfg);
    const RunResult b = run_scenario(cfg);
    cfg.sim.seed = 2;
    const RunResult c = run_scenario(cfg);
    CHECK(a.models[0].dataset().outputs == b.models[0].dataset().outputs);
    CHECK(a.models[0].dataset().outputs != c.models[0].dataset().outputs);
}

TEST_CASE("sample cap evicts oldest pairs") {
    ScenarioConfig cfg = small_triangle(ControlMode::Learning);
    cfg.sim.max_samples = 5;
    const RunResult run = run_scenario(cfg);
    for (const auto& m : run.models) { CHECK(m.size() == 5); }
}

TEST_CASE("scenario validation") {
    ScenarioConfig cfg = small_triangle(ControlMode::Learning);
    CHECK_NOTHROW(cfg.validate());
    auto bad = cfg;
    bad.q0.block(1) = bad.q0.block(0);
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = cfg;
    bad.q0.block(2) = Eigen::Vector2d(4.3, 0.4);  // collinear with agents 1 and 2
    bad.q0.block(0) = Eigen::Vector2d(0.1, -0.2);
    bad.q0.block(1) = Eigen::Vector2d(2.2, 0.1);
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = cfg;
    bad.control.gains.shape = 0.0;
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = cfg;
    bad.gp.kernel = KernelParams::isotropic(3);
    CHECK_THROWS_AS(bad.validate(), DimensionError);
    bad = cfg;
    bad.sim.freeze_time = 10.0;
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = cfg;
    bad.gp.kernel.noise_variance = 0.0;
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = cfg;
    bad.bound.epsilon = 1.0;
    CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("trajectory box inflation") {
    TrajectoryRecord traj;
    for (int k = 0; k < 2; ++k) {
        TrajectorySample s;
        s.q = StackedVector(Eigen::Vector2d(k * 10.0, 0.0), 2);
        s.v = StackedVector(Eigen::Vector2d(1.0, -k * 2.0), 2);
        traj.samples.push_back(s);
    }
    const Box box = trajectory_box(traj, 0.2);
    CHECK(box.lower(0) == doctest::Approx(-1.0));
    CHECK(box.upper(0) == doctest::Approx(11.0));
    CHECK(box.lower(1) == 0.0);
    CHECK(box.upper(3) == doctest::Approx(0.2));
    CHECK(box.lower(3) == doctest::Approx(-2.2));
}
