#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace flock {

/// Real vector made of equally sized blocks (one block per agent or per edge).
class StackedVector {
public:
    StackedVector() = default;
    StackedVector(Eigen::Index block_size, Eigen::Index block_count);
    StackedVector(Eigen::VectorXd data, Eigen::Index block_size);

    static StackedVector from_blocks(std::span<const Eigen::VectorXd> blocks);

    [[nodiscard]] Eigen::Index block_size() const { return block_size_; }
    [[nodiscard]] Eigen::Index block_count() const { return block_size_ == 0 ? 0 : data_.size() / block_size_; }
    [[nodiscard]] Eigen::Index size() const { return data_.size(); }

    [[nodiscard]] auto block(Eigen::Index i) { return data_.segment(i * block_size_, block_size_); }
    [[nodiscard]] auto block(Eigen::Index i) const { return data_.segment(i * block_size_, block_size_); }

    [[nodiscard]] const Eigen::VectorXd& data() const { return data_; }
    [[nodiscard]] Eigen::VectorXd& data() { return data_; }

    bool operator==(const StackedVector& other) const {
        return block_size_ == other.block_size_ && data_ == other.data_;
    }

private:
    Eigen::VectorXd data_;
    Eigen::Index block_size_ = 1;
};

struct Edge {
    int tail = 0;
    int head = 0;
    bool operator==(const Edge&) const = default;
};

/// Undirected, connected, minimally rigid graph with desired edge lengths.
/// The constructor rejects anything that violates those conditions.
class Framework {
public:
    Framework(int n, int d, std::vector<Edge> edges, std::vector<double> desired_lengths);

    [[nodiscard]] int agent_count() const { return n_; }
    [[nodiscard]] int dimension() const { return d_; }
    [[nodiscard]] int edge_count() const { return static_cast<int>(edges_.size()); }
    [[nodiscard]] const std::vector<Edge>& edges() const { return edges_; }
    [[nodiscard]] const std::vector<double>& desired_lengths() const { return desired_lengths_; }
    /// Agents sharing an edge with `i`, in edge order.
    [[nodiscard]] const std::vector<int>& neighbors(int i) const { return neighbors_[static_cast<std::size_t>(i)]; }
    /// Edges touching `i`, in edge order.
    [[nodiscard]] const std::vector<int>& incident_edges(int i) const { return incident_[static_cast<std::size_t>(i)]; }

    /// d·n − d(d+1)/2; rank of the rigidity matrix for an infinitesimally rigid framework.
    [[nodiscard]] int rigid_rank() const { return d_ * n_ - d_ * (d_ + 1) / 2; }

    bool operator==(const Framework& other) const {
        return n_ == other.n_ && d_ == other.d_ && edges_ == other.edges_ &&
               desired_lengths_ == other.desired_lengths_;
    }

private:
    int n_;
    int d_;
    std::vector<Edge> edges_;
    std::vector<double> desired_lengths_;
    std::vector<std::vector<int>> neighbors_;
    std::vector<std::vector<int>> incident_;
};

// Singular values below this fraction of the largest count as zero.
inline constexpr double kRankTolerance = 1e-8;

Eigen::MatrixXd incidence_matrix(const Framework& fw);
Eigen::MatrixXd laplacian(const Framework& fw);
/// L ⊗ I_d.
Eigen::MatrixXd stacked_laplacian(const Framework& fw);
double algebraic_connectivity(const Framework& fw);

/// Block k is q_tail(k) − q_head(k).
StackedVector relative_positions(const Framework& fw, const StackedVector& q);

/// |E| × dn matrix; row k holds z_kᵀ at the tail columns and −z_kᵀ at the head columns.
Eigen::MatrixXd rigidity_matrix(const Framework& fw, const StackedVector& q);

/// e_k = ‖z_k‖² − d_k².
Eigen::VectorXd distance_errors(const Framework& fw, const StackedVector& q);

/// Numerical rank using kRankTolerance relative to the largest singular value.
int numerical_rank(const Eigen::MatrixXd& m, double relative_tolerance = kRankTolerance);

bool is_infinitesimally_minimally_rigid(const Framework& fw, const StackedVector& q);

}  // namespace flock
