#pragma once

#include "flock/forces.hpp"
#include "flock/gp.hpp"
#include "flock/network.hpp"

#include <Eigen/Dense>

#include <map>
#include <span>

namespace flock {

enum class ControlMode { Nominal, Learning };

/// Scalar gains on the alignment (−𝓛v) and shape (−R(z)ᵀe) terms. Unit gains
/// give the textbook law.
struct Gains {
    double align = 1.0;
    double shape = 1.0;
    bool operator==(const Gains&) const = default;
};

struct ControlConfig {
    ControlMode mode = ControlMode::Nominal;
    Gains gains;
    /// f̂; an empty field (agent_count() == 0) means zero prior knowledge.
    ForceField prior;
};

/// V_k = ¼(‖z_k‖² − d_k²)².
double potential_edge(const Eigen::Ref<const Eigen::VectorXd>& z_k, double d_k);
/// V₀ = Σ_k V_k.
double potential_shape(const Framework& fw, const StackedVector& q);
/// ∇_q V₀ = R(z)ᵀ e.
StackedVector potential_shape_gradient(const Framework& fw, const StackedVector& q);
/// V₁ = ½ Σ_i ‖δ_i‖².
double potential_disagreement(const StackedVector& v);

/// u = −k_a (L ⊗ I_d) v − k_s R(z)ᵀ e.
StackedVector nominal_control(const Framework& fw, const StackedVector& q, const StackedVector& v,
                              const Gains& gains = {});

/// nominal_control − f̂(q, v) − μ(ρ | p, D), with one GP per agent.
StackedVector learning_control(const Framework& fw, const StackedVector& q, const StackedVector& v,
                               const ControlConfig& cfg, std::span<const GpModel> models);

struct AgentState {
    Eigen::VectorXd q;
    Eigen::VectorXd v;
};

/// Input of agent `i` from its own state, its neighbors' states and its own GP
/// (nullptr for the nominal law). Throws if a neighbor state is missing.
Eigen::VectorXd decentralized_control_agent(const Framework& fw, int i, const AgentState& own,
                                            const std::map<int, AgentState>& neighbors, const GpModel* own_model,
                                            const ControlConfig& cfg);

}  // namespace flock
