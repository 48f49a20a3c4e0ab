#include "flock/control.hpp"

#include "flock/error.hpp"
#include "flock/metrics.hpp"

#include <string>

namespace flock {

double potential_edge(const Eigen::Ref<const Eigen::VectorXd>& z_k, double d_k) {
    const double ek = z_k.squaredNorm() - d_k * d_k;
    return 0.25 * ek * ek;
}

double potential_shape(const Framework& fw, const StackedVector& q) {
    const StackedVector z = relative_positions(fw, q);
    double total = 0.0;
    for (int k = 0; k < fw.edge_count(); ++k) {
        total += potential_edge(z.block(k), fw.desired_lengths()[static_cast<std::size_t>(k)]);
    }
    return total;
}

StackedVector potential_shape_gradient(const Framework& fw, const StackedVector& q) {
    return {rigidity_matrix(fw, q).transpose() * distance_errors(fw, q), fw.dimension()};
}

double potential_disagreement(const StackedVector& v) { return 0.5 * disagreement(v).delta.data().squaredNorm(); }

StackedVector nominal_control(const Framework& fw, const StackedVector& q, const StackedVector& v,
                              const Gains& gains) {
    if (v.block_size() != fw.dimension() || v.block_count() != fw.agent_count()) {
        throw DimensionError("velocity vector does not match the framework");
    }
    const Eigen::VectorXd alignment = stacked_laplacian(fw) * v.data();
    const Eigen::VectorXd shape = rigidity_matrix(fw, q).transpose() * distance_errors(fw, q);
    return {-gains.align * alignment - gains.shape * shape, fw.dimension()};
}

StackedVector learning_control(const Framework& fw, const StackedVector& q, const StackedVector& v,
                               const ControlConfig& cfg, std::span<const GpModel> models) {
    if (static_cast<int>(models.size()) != fw.agent_count()) {
        throw DimensionError("learning control needs one GP model per agent");
    }
    StackedVector u = nominal_control(fw, q, v, cfg.gains);
    const bool has_prior = cfg.prior.agent_count() > 0;
    for (int i = 0; i < fw.agent_count(); ++i) {
        Eigen::VectorXd p(2 * fw.dimension());
        p << q.block(i), v.block(i);
        if (has_prior) { u.block(i) -= cfg.prior.evaluate(i, q.block(i), v.block(i)); }
        u.block(i) -= models[static_cast<std::size_t>(i)].mean(p);
    }
    return u;
}

Eigen::VectorXd decentralized_control_agent(const Framework& fw, int i, const AgentState& own,
                                            const std::map<int, AgentState>& neighbors, const GpModel* own_model,
                                            const ControlConfig& cfg) {
    const int d = fw.dimension();
    if (own.q.size() != d || own.v.size() != d) { throw DimensionError("own state has the wrong dimension"); }
    const auto neighbor = [&](int j) -> const AgentState& {
        const auto it = neighbors.find(j);
        if (it == neighbors.end()) {
            throw DomainError("agent " + std::to_string(i + 1) + " is missing the state of neighbor " +
                              std::to_string(j + 1));
        }
        return it->second;
    };

    Eigen::VectorXd alignment = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd shape = Eigen::VectorXd::Zero(d);
    for (const int k : fw.incident_edges(i)) {
        const Edge& edge = fw.edges()[static_cast<std::size_t>(k)];
        const bool is_tail = edge.tail == i;
        const AgentState& other = neighbor(is_tail ? edge.head : edge.tail);
        alignment += own.v - other.v;
        // z_k = q_tail − q_head; agent i sees +z_k as tail and −z_k as head.
        const Eigen::VectorXd z_k = is_tail ? Eigen::VectorXd(own.q - other.q) : Eigen::VectorXd(other.q - own.q);
        const double dk = fw.desired_lengths()[static_cast<std::size_t>(k)];
        const double e_k = z_k.squaredNorm() - dk * dk;
        shape += (is_tail ? 1.0 : -1.0) * e_k * z_k;
    }
    Eigen::VectorXd u = -cfg.gains.align * alignment - cfg.gains.shape * shape;
    if (cfg.mode == ControlMode::Learning) {
        if (cfg.prior.agent_count() > 0) { u -= cfg.prior.evaluate(i, own.q, own.v); }
        if (own_model == nullptr) { throw DomainError("learning control needs the agent's GP model"); }
        Eigen::VectorXd p(2 * d);
        p << own.q, own.v;
        u -= own_model->mean(p);
    }
    return u;
}

}  // namespace flock
