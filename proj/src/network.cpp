#include "flock/network.hpp"

#include "flock/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>

namespace flock {

StackedVector::StackedVector(Eigen::Index block_size, Eigen::Index block_count)
    : data_(Eigen::VectorXd::Zero(block_size * block_count)), block_size_(block_size) {
    if (block_size <= 0) { throw DimensionError("block size must be positive"); }
}

StackedVector::StackedVector(Eigen::VectorXd data, Eigen::Index block_size)
    : data_(std::move(data)), block_size_(block_size) {
    if (block_size <= 0 || data_.size() % block_size != 0) {
        throw DimensionError("stacked vector length " + std::to_string(data_.size()) +
                             " is not a multiple of block size " + std::to_string(block_size));
    }
}

StackedVector StackedVector::from_blocks(std::span<const Eigen::VectorXd> blocks) {
    if (blocks.empty()) { throw DimensionError("no blocks"); }
    const Eigen::Index bs = blocks.front().size();
    StackedVector out(bs, static_cast<Eigen::Index>(blocks.size()));
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (blocks[i].size() != bs) { throw DimensionError("blocks of unequal size"); }
        out.block(static_cast<Eigen::Index>(i)) = blocks[i];
    }
    return out;
}

namespace {

Eigen::MatrixXd incidence_from_edges(int n, const std::vector<Edge>& edges) {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(edges.size()));
    for (std::size_t k = 0; k < edges.size(); ++k) {
        b(edges[k].tail, static_cast<Eigen::Index>(k)) = 1.0;
        b(edges[k].head, static_cast<Eigen::Index>(k)) = -1.0;
    }
    return b;
}

double second_smallest_eigenvalue(const Eigen::MatrixXd& l) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(l, Eigen::EigenvaluesOnly);
    return solver.eigenvalues()(1);
}

void check_positions(const Framework& fw, const StackedVector& q) {
    if (q.block_size() != fw.dimension() || q.block_count() != fw.agent_count()) {
        throw DimensionError("position vector must have " + std::to_string(fw.agent_count()) + " blocks of size " +
                             std::to_string(fw.dimension()));
    }
}

}  // namespace

Framework::Framework(int n, int d, std::vector<Edge> edges, std::vector<double> desired_lengths)
    : n_(n), d_(d), edges_(std::move(edges)), desired_lengths_(std::move(desired_lengths)) {
    if (n_ < 2) { throw DomainError("framework needs at least 2 agents"); }
    if (d_ != 2 && d_ != 3) { throw DomainError("agent dimension must be 2 or 3"); }
    if (desired_lengths_.size() != edges_.size()) {
        throw DimensionError("one desired length per edge is required");
    }
    std::set<std::pair<int, int>> seen;
    for (const auto& [tail, head] : edges_) {
        if (tail < 0 || tail >= n_ || head < 0 || head >= n_) { throw DomainError("edge endpoint out of range"); }
        if (tail == head) { throw DomainError("self-loop on agent " + std::to_string(tail + 1)); }
        if (!seen.insert(std::minmax(tail, head)).second) {
            throw DomainError("duplicate edge (" + std::to_string(tail + 1) + "," + std::to_string(head + 1) + ")");
        }
    }
    if (std::any_of(desired_lengths_.begin(), desired_lengths_.end(), [](double x) { return !(x > 0.0); })) {
        throw DomainError("desired lengths must be positive");
    }
    const int expected = d_ == 2 ? 2 * n_ - 3 : 3 * n_ - 6;
    if (edge_count() != expected) {
        throw DomainError("minimal rigidity in R^" + std::to_string(d_) + " with " + std::to_string(n_) +
                          " agents needs " + std::to_string(expected) + " edges, got " +
                          std::to_string(edge_count()));
    }
    const Eigen::MatrixXd b = incidence_from_edges(n_, edges_);
    if (!(second_smallest_eigenvalue(b * b.transpose()) > 1e-9)) { throw DomainError("graph is not connected"); }

    neighbors_.resize(static_cast<std::size_t>(n_));
    incident_.resize(static_cast<std::size_t>(n_));
    for (int k = 0; k < edge_count(); ++k) {
        const auto& e = edges_[static_cast<std::size_t>(k)];
        neighbors_[static_cast<std::size_t>(e.tail)].push_back(e.head);
        neighbors_[static_cast<std::size_t>(e.head)].push_back(e.tail);
        incident_[static_cast<std::size_t>(e.tail)].push_back(k);
        incident_[static_cast<std::size_t>(e.head)].push_back(k);
    }
}

Eigen::MatrixXd incidence_matrix(const Framework& fw) { return incidence_from_edges(fw.agent_count(), fw.edges()); }

Eigen::MatrixXd laplacian(const Framework& fw) {
    const Eigen::MatrixXd b = incidence_matrix(fw);
    return b * b.transpose();
}

Eigen::MatrixXd stacked_laplacian(const Framework& fw) {
    const Eigen::MatrixXd l = laplacian(fw);
    const int d = fw.dimension();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(l.rows() * d, l.cols() * d);
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
        for (Eigen::Index j = 0; j < l.cols(); ++j) {
            out.block(i * d, j * d, d, d).diagonal().setConstant(l(i, j));
        }
    }
    return out;
}

double algebraic_connectivity(const Framework& fw) { return second_smallest_eigenvalue(laplacian(fw)); }

StackedVector relative_positions(const Framework& fw, const StackedVector& q) {
    check_positions(fw, q);
    StackedVector z(fw.dimension(), fw.edge_count());
    for (int k = 0; k < fw.edge_count(); ++k) {
        const auto& e = fw.edges()[static_cast<std::size_t>(k)];
        z.block(k) = q.block(e.tail) - q.block(e.head);
    }
    return z;
}

Eigen::MatrixXd rigidity_matrix(const Framework& fw, const StackedVector& q) {
    const StackedVector z = relative_positions(fw, q);
    const int d = fw.dimension();
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(fw.edge_count(), d * fw.agent_count());
    for (int k = 0; k < fw.edge_count(); ++k) {
        const auto& e = fw.edges()[static_cast<std::size_t>(k)];
        r.block(k, e.tail * d, 1, d) = z.block(k).transpose();
        r.block(k, e.head * d, 1, d) = -z.block(k).transpose();
    }
    return r;
}

Eigen::VectorXd distance_errors(const Framework& fw, const StackedVector& q) {
    const StackedVector z = relative_positions(fw, q);
    Eigen::VectorXd e(fw.edge_count());
    for (int k = 0; k < fw.edge_count(); ++k) {
        const double dk = fw.desired_lengths()[static_cast<std::size_t>(k)];
        e(k) = z.block(k).squaredNorm() - dk * dk;
    }
    return e;
}

int numerical_rank(const Eigen::MatrixXd& m, double relative_tolerance) {
    if (m.size() == 0) { return 0; }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const Eigen::VectorXd& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) { return 0; }
    const double cut = relative_tolerance * s(0);
    return static_cast<int>((s.array() > cut).count());
}

bool is_infinitesimally_minimally_rigid(const Framework& fw, const StackedVector& q) {
    return fw.edge_count() == fw.rigid_rank() && numerical_rank(rigidity_matrix(fw, q)) == fw.rigid_rank();
}

}  // namespace flock
