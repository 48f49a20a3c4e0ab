#pragma once

#include "flock/network.hpp"

#include <Eigen/Dense>

#include <vector>

namespace flock {

enum class Trig { Sin, Cos, Const };

/// amplitude · trig(frequency · v[input]); Const ignores frequency and input.
struct ForceTerm {
    double amplitude = 0.0;
    Trig trig = Trig::Const;
    double frequency = 0.0;
    int input = 0;

    bool operator==(const ForceTerm&) const = default;
};

/// Per-agent, per-component sums of velocity-dependent trigonometric terms.
/// Used for the true disturbances f_i and for the prior estimate f̂_i.
class ForceField {
public:
    ForceField() = default;
    ForceField(int n, int d);

    [[nodiscard]] static ForceField zero(int n, int d) { return {n, d}; }

    void add_term(int agent, int component, ForceTerm term);
    [[nodiscard]] const std::vector<ForceTerm>& terms(int agent, int component) const;

    [[nodiscard]] int agent_count() const { return n_; }
    [[nodiscard]] int dimension() const { return d_; }
    [[nodiscard]] bool is_zero() const;

    [[nodiscard]] Eigen::VectorXd evaluate(int agent, const Eigen::Ref<const Eigen::VectorXd>& q_i,
                                           const Eigen::Ref<const Eigen::VectorXd>& v_i) const;
    [[nodiscard]] StackedVector evaluate(const StackedVector& q, const StackedVector& v) const;

    bool operator==(const ForceField&) const = default;

private:
    int n_ = 0;
    int d_ = 0;
    // terms_[agent * d + component]
    std::vector<std::vector<ForceTerm>> terms_;
};

}  // namespace flock
