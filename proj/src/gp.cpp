#include "flock/gp.hpp"

#include "flock/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

namespace flock {

namespace {

constexpr double kJitterScale = 1e-10;
constexpr double kVarianceClampScale = 1e-10;

}  // namespace

KernelParams KernelParams::isotropic(Eigen::Index input_dim, double lengthscale, double signal_variance,
                                     double noise_variance) {
    KernelParams k;
    k.lengthscales = Eigen::VectorXd::Constant(input_dim, lengthscale);
    k.signal_variance = signal_variance;
    k.noise_variance = noise_variance;
    k.validate();
    return k;
}

void KernelParams::validate() const {
    if (lengthscales.size() == 0) { throw DimensionError("kernel needs at least one lengthscale"); }
    if (!(lengthscales.array() > 0.0).all() || !lengthscales.allFinite()) {
        throw DomainError("lengthscales must be positive and finite");
    }
    if (!(signal_variance > 0.0) || !std::isfinite(signal_variance)) {
        throw DomainError("signal variance must be positive");
    }
    if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) {
        throw DomainError("noise variance must be non-negative");
    }
}

double kernel_eval(const KernelParams& params, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& x_prime) {
    if (x.size() != params.input_dim() || x_prime.size() != params.input_dim()) {
        throw DimensionError("kernel input of size " + std::to_string(x.size()) + "/" +
                             std::to_string(x_prime.size()) + ", expected " + std::to_string(params.input_dim()));
    }
    const double r2 = ((x - x_prime).array() / params.lengthscales.array()).square().sum();
    return params.signal_variance * std::exp(-0.5 * r2);
}

// ---------------------------------------------------------------------------
// GpModel

GpModel::GpModel(KernelParams kernel, Eigen::Index output_dim)
    : kernel_(std::move(kernel)), data_(kernel_.input_dim(), output_dim) {
    kernel_.validate();
    if (output_dim <= 0) { throw DimensionError("output dimension must be positive"); }
    chol_.resize(0, 0);
    alpha_.resize(0, output_dim);
}

GpModel::GpModel(KernelParams kernel, AgentDataset data) : kernel_(std::move(kernel)), data_(std::move(data)) {
    kernel_.validate();
    if (data_.inputs.cols() != kernel_.input_dim()) { throw DimensionError("dataset input width differs from kernel"); }
    if (data_.inputs.rows() != data_.outputs.rows()) { throw DimensionError("dataset inputs and outputs differ in length"); }
    if (data_.outputs.cols() <= 0) { throw DimensionError("output dimension must be positive"); }
    refactorize();
}

void GpModel::refactorize() {
    const Eigen::Index m = data_.size();
    Eigen::MatrixXd gram(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index i = j; i < m; ++i) {
            gram(i, j) = kernel_eval(kernel_, data_.inputs.row(i).transpose(), data_.inputs.row(j).transpose());
            gram(j, i) = gram(i, j);
        }
    }
    gram.diagonal().array() += kernel_.noise_variance + jitter_;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success && jitter_ == 0.0) {
        jitter_ = kJitterScale * kernel_.signal_variance;
        gram.diagonal().array() += jitter_;
        llt.compute(gram);
    }
    if (llt.info() != Eigen::Success) {
        throw ConditioningError("Gram matrix is not positive definite after jitter (m = " + std::to_string(m) + ")");
    }
    chol_ = llt.matrixL();
    refresh_weights();
}

void GpModel::append_factor_row(const Eigen::VectorXd& k_new, double k_self) {
    const Eigen::Index m = chol_.rows();
    Eigen::VectorXd l = k_new;
    if (m > 0) { chol_.triangularView<Eigen::Lower>().solveInPlace(l); }
    const double s2 = k_self + kernel_.noise_variance + jitter_ - l.squaredNorm();
    if (!(s2 > 0.0) || !std::isfinite(s2)) {
        refactorize();
        return;
    }
    chol_.conservativeResize(m + 1, m + 1);
    chol_.row(m).head(m) = l.transpose();
    chol_.col(m).head(m).setZero();
    chol_(m, m) = std::sqrt(s2);
    refresh_weights();
}

void GpModel::refresh_weights() {
    alpha_ = data_.outputs;
    if (data_.size() == 0) { return; }
    chol_.triangularView<Eigen::Lower>().solveInPlace(alpha_);
    chol_.triangularView<Eigen::Lower>().adjoint().solveInPlace(alpha_);
}

GpModel GpModel::with_observation(const Eigen::Ref<const Eigen::VectorXd>& p,
                                  const Eigen::Ref<const Eigen::VectorXd>& y) const& {
    GpModel copy(*this);
    return std::move(copy).with_observation(p, y);
}

GpModel GpModel::with_observation(const Eigen::Ref<const Eigen::VectorXd>& p,
                                  const Eigen::Ref<const Eigen::VectorXd>& y) && {
    if (data_.frozen) { throw FrozenDatasetError("dataset is frozen; no further observations accepted"); }
    if (p.size() != input_dim() || y.size() != output_dim()) {
        throw DimensionError("observation sizes do not match the model");
    }
    const Eigen::VectorXd k_new = cross_kernel(p);
    const Eigen::Index m = data_.size();
    data_.inputs.conservativeResize(m + 1, Eigen::NoChange);
    data_.outputs.conservativeResize(m + 1, Eigen::NoChange);
    data_.inputs.row(m) = p.transpose();
    data_.outputs.row(m) = y.transpose();
    append_factor_row(k_new, kernel_eval(kernel_, p, p));
    return std::move(*this);
}

GpModel GpModel::without_oldest() const {
    if (data_.frozen) { throw FrozenDatasetError("dataset is frozen"); }
    if (data_.size() == 0) { return *this; }
    AgentDataset trimmed = data_;
    const Eigen::Index m = data_.size();
    trimmed.inputs = data_.inputs.bottomRows(m - 1);
    trimmed.outputs = data_.outputs.bottomRows(m - 1);
    return GpModel(kernel_, std::move(trimmed));
}

GpModel GpModel::frozen() const {
    GpModel copy(*this);
    copy.data_.frozen = true;
    return copy;
}

GpModel GpModel::with_kernel(KernelParams kernel) const {
    AgentDataset data = data_;
    return GpModel(std::move(kernel), std::move(data));
}

Eigen::VectorXd GpModel::cross_kernel(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != input_dim()) { throw DimensionError("query has wrong input dimension"); }
    const Eigen::Index m = data_.size();
    Eigen::VectorXd k(m);
    for (Eigen::Index j = 0; j < m; ++j) { k(j) = kernel_eval(kernel_, x, data_.inputs.row(j).transpose()); }
    return k;
}

Eigen::VectorXd GpModel::mean(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (data_.size() == 0) {
        if (x.size() != input_dim()) { throw DimensionError("query has wrong input dimension"); }
        return Eigen::VectorXd::Zero(output_dim());
    }
    return alpha_.transpose() * cross_kernel(x);
}

double GpModel::variance(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    const double prior = kernel_eval(kernel_, x, x);
    if (data_.size() == 0) { return prior; }
    Eigen::VectorXd v = cross_kernel(x);
    chol_.triangularView<Eigen::Lower>().solveInPlace(v);
    const double var = prior - v.squaredNorm();
    if (var >= 0.0) { return var; }
    if (var > -kVarianceClampScale * kernel_.signal_variance) { return 0.0; }
    throw ConditioningError("posterior variance " + std::to_string(var) + " is negative beyond rounding");
}

Posterior GpModel::posterior(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return {mean(x), Eigen::VectorXd::Constant(output_dim(), variance(x))};
}

double GpModel::log_marginal_likelihood() const {
    const Eigen::Index m = data_.size();
    if (m == 0) { return 0.0; }
    const double fit = (data_.outputs.array() * alpha_.array()).sum();
    const double log_det = 2.0 * chol_.diagonal().array().log().sum();
    const auto d = static_cast<double>(output_dim());
    return -0.5 * fit - 0.5 * d * log_det - 0.5 * d * static_cast<double>(m) * std::log(2.0 * std::numbers::pi);
}

Sample collect_sample(const Eigen::Ref<const Eigen::VectorXd>& q_i, const Eigen::Ref<const Eigen::VectorXd>& v_i,
                      const Eigen::Ref<const Eigen::VectorXd>& u_i,
                      const Eigen::Ref<const Eigen::VectorXd>& measured_accel,
                      const Eigen::Ref<const Eigen::VectorXd>& prior_estimate) {
    const Eigen::Index d = q_i.size();
    if (v_i.size() != d || u_i.size() != d || measured_accel.size() != d || prior_estimate.size() != d) {
        throw DimensionError("collect_sample: all vectors must share the agent dimension");
    }
    Sample s;
    s.p.resize(2 * d);
    s.p << q_i, v_i;
    s.y = measured_accel - prior_estimate - u_i;
    return s;
}

// ---------------------------------------------------------------------------
// Box

void Box::validate() const {
    if (lower.size() != upper.size() || lower.size() == 0) { throw DimensionError("box bounds must match in size"); }
    if (!lower.allFinite() || !upper.allFinite() || (upper.array() < lower.array()).any()) {
        throw DomainError("box must be nonempty with finite bounds");
    }
}

Box Box::slice(Eigen::Index start, Eigen::Index count) const {
    return {lower.segment(start, count), upper.segment(start, count)};
}

double Box::grid_size(int points_per_axis) const {
    return std::pow(static_cast<double>(points_per_axis), static_cast<double>(dim()));
}

Eigen::VectorXd Box::grid_point(std::size_t flat_index, int points_per_axis) const {
    const auto g = static_cast<std::size_t>(points_per_axis);
    Eigen::VectorXd x(dim());
    for (Eigen::Index a = dim() - 1; a >= 0; --a) {
        const auto j = flat_index % g;
        flat_index /= g;
        x(a) = points_per_axis == 1 ? 0.5 * (lower(a) + upper(a))
                                    : lower(a) + (upper(a) - lower(a)) * static_cast<double>(j) /
                                                     static_cast<double>(points_per_axis - 1);
    }
    return x;
}

Eigen::MatrixXd Box::grid(int points_per_axis) const {
    if (points_per_axis < 1) { throw DomainError("grid needs at least one point per axis"); }
    const auto count = static_cast<Eigen::Index>(grid_size(points_per_axis));
    Eigen::MatrixXd pts(count, dim());
    for (Eigen::Index c = 0; c < count; ++c) {
        pts.row(c) = grid_point(static_cast<std::size_t>(c), points_per_axis).transpose();
    }
    return pts;
}

// ---------------------------------------------------------------------------
// Bound machinery

void ErrorBoundParams::validate() const {
    if (!(epsilon > 0.0 && epsilon < 1.0)) { throw DomainError("epsilon must lie strictly inside (0, 1)"); }
    if (rkhs_bounds.size() == 0 || !(rkhs_bounds.array() > 0.0).all()) {
        throw DomainError("RKHS bounds must be positive");
    }
    omega.validate();
    if (grid_points_per_axis < 2) { throw DomainError("grid needs at least 2 points per axis"); }
    if (!(max_cells >= 1.0)) { throw DomainError("cell cap must be at least 1"); }
}

double information_gain(const KernelParams& kernel, const Eigen::Ref<const Eigen::MatrixXd>& candidates,
                        Eigen::Index m, double noise_variance) {
    if (!(noise_variance > 0.0)) { throw DomainError("information gain requires a positive noise variance"); }
    if (m < 0) { throw DomainError("m must be non-negative"); }
    if (candidates.rows() == 0) { throw DomainError("candidate set is empty"); }
    if (candidates.cols() != kernel.input_dim()) { throw DimensionError("candidate width differs from kernel"); }

    const Eigen::Index c_count = candidates.rows();
    const Eigen::Index picks = m + 1;
    // Row c of `w` holds the projections of candidate c on the selected points;
    // posterior variance is k(c,c) − ‖w_c‖² with noise σ² on each selection.
    Eigen::MatrixXd w(c_count, picks);
    Eigen::VectorXd var(c_count);
    for (Eigen::Index c = 0; c < c_count; ++c) {
        var(c) = kernel_eval(kernel, candidates.row(c).transpose(), candidates.row(c).transpose());
    }
    double gain = 0.0;
    for (Eigen::Index t = 0; t < picks; ++t) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < c_count; ++c) {
            if (var(c) > var(best)) { best = c; }
        }
        const double s = std::max(var(best), 0.0);
        gain += 0.5 * std::log1p(s / noise_variance);
        const double scale = 1.0 / std::sqrt(s + noise_variance);
        const Eigen::VectorXd x_best = candidates.row(best).transpose();
        const Eigen::VectorXd w_best = w.row(best).head(t).transpose();
        for (Eigen::Index c = 0; c < c_count; ++c) {
            const double cov = kernel_eval(kernel, candidates.row(c).transpose(), x_best) -
                               w.row(c).head(t).dot(w_best);
            w(c, t) = cov * scale;
            var(c) -= w(c, t) * w(c, t);
        }
    }
    return gain;
}

double information_gain(const KernelParams& kernel, const Box& omega, int points_per_axis, Eigen::Index m,
                        double noise_variance) {
    omega.validate();
    return information_gain(kernel, omega.grid(points_per_axis), m, noise_variance);
}

Eigen::VectorXd beta(double epsilon, const Eigen::Ref<const Eigen::VectorXd>& rkhs_bounds,
                     const Eigen::Ref<const Eigen::VectorXd>& gamma, Eigen::Index m, int d, int n) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) { throw DomainError("epsilon must lie strictly inside (0, 1)"); }
    if (rkhs_bounds.size() != gamma.size()) { throw DimensionError("one RKHS bound per information gain"); }
    if ((gamma.array() < 0.0).any()) { throw DomainError("information gain must be non-negative"); }
    if ((rkhs_bounds.array() < 0.0).any()) { throw DomainError("RKHS bounds must be non-negative"); }
    if (m < 0 || d <= 0 || n <= 0) { throw DomainError("m must be >= 0 and d, n positive"); }
    const double root = std::pow(epsilon, 1.0 / static_cast<double>(d * n));
    const double arg = (static_cast<double>(m) + 1.0) / (1.0 - root);
    const double l = std::log(arg);
    const double factor = 300.0 * l * l * l;
    return (2.0 * rkhs_bounds.array().square() + factor * gamma.array()).sqrt();
}

Eigen::VectorXd rkhs_norm_estimate(const GpModel& model) {
    const Eigen::Index m = model.size();
    if (m == 0) { throw DomainError("RKHS norm estimate needs at least one observation"); }
    const auto& x = model.dataset().inputs;
    Eigen::MatrixXd k(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index i = j; i < m; ++i) {
            k(i, j) = kernel_eval(model.kernel(), x.row(i).transpose(), x.row(j).transpose());
            k(j, i) = k(i, j);
        }
    }
    const Eigen::MatrixXd& alpha = model.weights();
    Eigen::VectorXd out(model.output_dim());
    for (Eigen::Index j = 0; j < model.output_dim(); ++j) {
        out(j) = std::sqrt(std::max(0.0, alpha.col(j).dot(k * alpha.col(j))));
    }
    return out;
}

double pointwise_error_bound(const GpModel& model, const Eigen::Ref<const Eigen::VectorXd>& beta,
                             const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (beta.size() != model.output_dim()) { throw DimensionError("beta must have one entry per output dimension"); }
    const double sd = std::sqrt(model.variance(x));
    return (beta.array() * sd).matrix().norm();
}

KernelParams fit_hyperparameters(const GpModel& model, int sweeps) {
    if (model.size() == 0) { return model.kernel(); }
    KernelParams best = model.kernel();
    double best_lml = model.log_marginal_likelihood();
    const double factors[] = {0.25, 0.5, 2.0, 4.0};
    const auto try_candidate = [&](const KernelParams& candidate) {
        try {
            const double lml = model.with_kernel(candidate).log_marginal_likelihood();
            if (std::isfinite(lml) && lml > best_lml) {
                best_lml = lml;
                best = candidate;
            }
        } catch (const ConditioningError&) {
            // rejected candidate
        }
    };
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        for (Eigen::Index a = 0; a <= best.input_dim(); ++a) {
            const KernelParams base = best;
            for (const double f : factors) {
                KernelParams candidate = base;
                if (a < base.input_dim()) {
                    candidate.lengthscales(a) *= f;
                } else {
                    candidate.signal_variance *= f;
                }
                try_candidate(candidate);
            }
        }
    }
    return best;
}

}  // namespace flock
