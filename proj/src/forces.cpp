#include "flock/forces.hpp"

#include "flock/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace flock {

ForceField::ForceField(int n, int d) : n_(n), d_(d), terms_(static_cast<std::size_t>(n * d)) {
    if (n <= 0 || d <= 0) { throw DimensionError("force field needs positive agent count and dimension"); }
}

void ForceField::add_term(int agent, int component, ForceTerm term) {
    if (agent < 0 || agent >= n_ || component < 0 || component >= d_) {
        throw DomainError("force term targets agent " + std::to_string(agent + 1) + " component " +
                          std::to_string(component) + " outside the swarm");
    }
    if (term.trig != Trig::Const && (term.input < 0 || term.input >= d_)) {
        throw DomainError("force term input index " + std::to_string(term.input) + " outside [0, d)");
    }
    if (!std::isfinite(term.amplitude) || !std::isfinite(term.frequency)) {
        throw DomainError("force term parameters must be finite");
    }
    terms_[static_cast<std::size_t>(agent * d_ + component)].push_back(term);
}

const std::vector<ForceTerm>& ForceField::terms(int agent, int component) const {
    return terms_.at(static_cast<std::size_t>(agent * d_ + component));
}

bool ForceField::is_zero() const {
    return std::all_of(terms_.begin(), terms_.end(), [](const auto& list) {
        return std::all_of(list.begin(), list.end(), [](const ForceTerm& t) { return t.amplitude == 0.0; });
    });
}

Eigen::VectorXd ForceField::evaluate(int agent, const Eigen::Ref<const Eigen::VectorXd>& /*q_i*/,
                                     const Eigen::Ref<const Eigen::VectorXd>& v_i) const {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(d_);
    for (int c = 0; c < d_; ++c) {
        for (const auto& t : terms(agent, c)) {
            switch (t.trig) {
                case Trig::Sin: f(c) += t.amplitude * std::sin(t.frequency * v_i(t.input)); break;
                case Trig::Cos: f(c) += t.amplitude * std::cos(t.frequency * v_i(t.input)); break;
                case Trig::Const: f(c) += t.amplitude; break;
            }
        }
    }
    return f;
}

StackedVector ForceField::evaluate(const StackedVector& q, const StackedVector& v) const {
    if (q.block_count() != n_ || v.block_count() != n_ || q.block_size() != d_ || v.block_size() != d_) {
        throw DimensionError("state does not match the force field");
    }
    StackedVector out(d_, n_);
    for (int i = 0; i < n_; ++i) { out.block(i) = evaluate(i, q.block(i), v.block(i)); }
    return out;
}

}  // namespace flock
