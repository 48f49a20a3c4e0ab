#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace flock {

/// ARD squared-exponential kernel σ_f² exp(−½ Σ_j (x_j − x'_j)² / ℓ_j²) plus the
/// observation noise variance σ².
struct KernelParams {
    Eigen::VectorXd lengthscales;
    double signal_variance = 1e4;
    double noise_variance = 1.0;

    static KernelParams isotropic(Eigen::Index input_dim, double lengthscale = 1.0, double signal_variance = 1e4,
                                  double noise_variance = 1.0);

    void validate() const;
    [[nodiscard]] Eigen::Index input_dim() const { return lengthscales.size(); }

    bool operator==(const KernelParams& other) const {
        return lengthscales == other.lengthscales && signal_variance == other.signal_variance &&
               noise_variance == other.noise_variance;
    }
};

double kernel_eval(const KernelParams& params, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& x_prime);

/// Training pairs (p, y) of a single agent. Rows of `inputs` are p = [qᵀ, vᵀ]ᵀ.
struct AgentDataset {
    Eigen::MatrixXd inputs;
    Eigen::MatrixXd outputs;
    bool frozen = false;

    AgentDataset() = default;
    AgentDataset(Eigen::Index input_dim, Eigen::Index output_dim)
        : inputs(0, input_dim), outputs(0, output_dim) {}

    [[nodiscard]] Eigen::Index size() const { return inputs.rows(); }
};

struct Posterior {
    Eigen::VectorXd mean;
    /// Identical in every output dimension because the kernel is shared.
    Eigen::VectorXd variance;
};

/// Exact GP regression of a vector-valued function with one kernel shared by
/// all output dimensions. Values are immutable; adding data yields a new model.
class GpModel {
public:
    GpModel() = default;
    GpModel(KernelParams kernel, Eigen::Index output_dim);
    GpModel(KernelParams kernel, AgentDataset data);

    /// Returns the model conditioned on one more pair. Throws FrozenDatasetError once frozen.
    [[nodiscard]] GpModel with_observation(const Eigen::Ref<const Eigen::VectorXd>& p,
                                           const Eigen::Ref<const Eigen::VectorXd>& y) const&;
    [[nodiscard]] GpModel with_observation(const Eigen::Ref<const Eigen::VectorXd>& p,
                                           const Eigen::Ref<const Eigen::VectorXd>& y) &&;
    /// Drops the oldest pair (used only when a sample cap is configured).
    [[nodiscard]] GpModel without_oldest() const;
    [[nodiscard]] GpModel frozen() const;
    [[nodiscard]] GpModel with_kernel(KernelParams kernel) const;

    [[nodiscard]] Posterior posterior(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    [[nodiscard]] Eigen::VectorXd mean(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    [[nodiscard]] double variance(const Eigen::Ref<const Eigen::VectorXd>& x) const;

    /// Σ_j log p(Y_:,j | X) under the current kernel.
    [[nodiscard]] double log_marginal_likelihood() const;

    [[nodiscard]] const KernelParams& kernel() const { return kernel_; }
    [[nodiscard]] const AgentDataset& dataset() const { return data_; }
    [[nodiscard]] Eigen::Index size() const { return data_.size(); }
    [[nodiscard]] Eigen::Index input_dim() const { return kernel_.input_dim(); }
    [[nodiscard]] Eigen::Index output_dim() const { return data_.outputs.cols(); }
    [[nodiscard]] bool is_frozen() const { return data_.frozen; }
    /// Diagonal jitter currently folded into the factorization (0 if none was needed).
    [[nodiscard]] double jitter() const { return jitter_; }
    /// Lower Cholesky factor of K + (σ² + jitter) I.
    [[nodiscard]] const Eigen::MatrixXd& gram_factor() const { return chol_; }
    /// (K + σ²I)⁻¹ Y.
    [[nodiscard]] const Eigen::MatrixXd& weights() const { return alpha_; }

private:
    void refactorize();
    void append_factor_row(const Eigen::VectorXd& k_new, double k_self);
    void refresh_weights();
    [[nodiscard]] Eigen::VectorXd cross_kernel(const Eigen::Ref<const Eigen::VectorXd>& x) const;

    KernelParams kernel_;
    AgentDataset data_;
    Eigen::MatrixXd chol_;
    Eigen::MatrixXd alpha_;
    double jitter_ = 0.0;
};

/// Training pair from one measurement: p = [qᵀ, vᵀ]ᵀ and y = measured_accel − f̂ − u.
struct Sample {
    Eigen::VectorXd p;
    Eigen::VectorXd y;
};
Sample collect_sample(const Eigen::Ref<const Eigen::VectorXd>& q_i, const Eigen::Ref<const Eigen::VectorXd>& v_i,
                      const Eigen::Ref<const Eigen::VectorXd>& u_i,
                      const Eigen::Ref<const Eigen::VectorXd>& measured_accel,
                      const Eigen::Ref<const Eigen::VectorXd>& prior_estimate);

/// Axis-aligned box with a lexicographic tensor grid (first axis varies slowest).
struct Box {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    [[nodiscard]] Eigen::Index dim() const { return lower.size(); }
    void validate() const;
    [[nodiscard]] Box slice(Eigen::Index start, Eigen::Index count) const;
    /// Number of grid points; returned as double so huge grids do not overflow.
    [[nodiscard]] double grid_size(int points_per_axis) const;
    [[nodiscard]] Eigen::VectorXd grid_point(std::size_t flat_index, int points_per_axis) const;
    /// All grid points as rows, in flat-index order.
    [[nodiscard]] Eigen::MatrixXd grid(int points_per_axis) const;

    bool operator==(const Box&) const = default;
};

/// Inputs to the model-error bound: confidence ε, per-output RKHS norm bounds,
/// the compact state box Ω (stacked over agents, [q_1, v_1, q_2, v_2, ...]) and
/// the grid used to search it.
struct ErrorBoundParams {
    double epsilon = 0.95;
    Eigen::VectorXd rkhs_bounds;
    Box omega;
    int grid_points_per_axis = 5;
    double max_cells = 1e6;

    void validate() const;
};

/// Greedy approximation of max ½ log|I + σ⁻² K| over m+1 points drawn (with
/// replacement) from `candidates` (one per row). Ties go to the lowest row.
double information_gain(const KernelParams& kernel, const Eigen::Ref<const Eigen::MatrixXd>& candidates,
                        Eigen::Index m, double noise_variance);
double information_gain(const KernelParams& kernel, const Box& omega, int points_per_axis, Eigen::Index m,
                        double noise_variance);

/// β_j = sqrt(2‖ρ_j‖² + 300 γ_j ln³((m+1)/(1 − ε^{1/(d n)}))).
Eigen::VectorXd beta(double epsilon, const Eigen::Ref<const Eigen::VectorXd>& rkhs_bounds,
                     const Eigen::Ref<const Eigen::VectorXd>& gamma, Eigen::Index m, int d, int n);

/// RKHS norm of the posterior mean per output dimension, sqrt(α_jᵀ K α_j).
/// A data-driven lower surrogate for ‖ρ_j‖_k.
Eigen::VectorXd rkhs_norm_estimate(const GpModel& model);

/// ‖β ⊙ σ(x)‖ with σ the posterior standard deviation.
double pointwise_error_bound(const GpModel& model, const Eigen::Ref<const Eigen::VectorXd>& beta,
                             const Eigen::Ref<const Eigen::VectorXd>& x);

/// Coordinate search over log lengthscales and log signal variance that
/// maximizes the log marginal likelihood. Noise variance is left untouched.
KernelParams fit_hyperparameters(const GpModel& model, int sweeps = 4);

}  // namespace flock
