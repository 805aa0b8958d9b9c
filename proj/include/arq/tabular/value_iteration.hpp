#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include "arq/tabular/mdp.hpp"
#include "arq/tabular/qtable.hpp"

namespace arq::tabular {

struct IterationOptions {
    double tol = 1e-10;
    int max_iterations = 1'000'000;
    // Discount applied between action dimensions of one timestep. 1.0 is the
    // correct value; anything else exists only to mutation-test the oracles.
    double intra_step_discount = 1.0;
};

/// One application of the full-action optimality operator.
inline ActionValues full_action_backup(const TabularMdp& mdp, const ActionValues& q) {
    ActionValues out(mdp.num_states, mdp.num_actions());
    std::vector<double> v(static_cast<std::size_t>(mdp.num_states));
    for (int s = 0; s < mdp.num_states; ++s) v[static_cast<std::size_t>(s)] = q.state_value(s);
    for (int s = 0; s < mdp.num_states; ++s) {
        for (std::size_t a = 0; a < out.num_actions; ++a) {
            double ev = 0.0;
            const auto next = mdp.next_distribution(s, a);
            for (std::size_t s2 = 0; s2 < next.size(); ++s2) ev += next[s2] * v[s2];
            out.at(s, a) = mdp.R(s, a) + mdp.gamma * ev;
        }
    }
    return out;
}

inline ActionValues full_action_value_iteration(const TabularMdp& mdp, double tol = 1e-10, int max_iterations = 1'000'000) {
    mdp.validate();
    ActionValues q(mdp.num_states, mdp.num_actions());
    for (int it = 0; it < max_iterations; ++it) {
        ActionValues next = full_action_backup(mdp, q);
        double change = 0.0;
        for (std::size_t i = 0; i < q.values.size(); ++i) change = std::max(change, std::abs(next.values[i] - q.values[i]));
        q = std::move(next);
        if (change < tol) return q;
    }
    throw DivergenceError("full-action value iteration did not reach tolerance");
}

/// One application of the per-dimension operator to every (state, prefix)
/// node. Non-final depths back up the max over the next dimension (no reward,
/// intra-step discount); the final depth backs up R + gamma * E[max_{a^1} Q(s', a^1)].
inline QTable per_dim_backup(const TabularMdp& mdp, const QTable& q, double intra_step_discount = 1.0) {
    require(q.num_states() == mdp.num_states && q.depth() == mdp.action_spec.num_dims(),
            "QTable does not match the MDP");
    QTable out = q;
    const int D = q.depth();
    std::vector<double> v(static_cast<std::size_t>(mdp.num_states));
    for (int s = 0; s < mdp.num_states; ++s) v[static_cast<std::size_t>(s)] = q.state_value(s);

    for (int s = 0; s < mdp.num_states; ++s) {
        for (int d = 0; d + 1 < D; ++d) {
            const auto nb = static_cast<std::size_t>(q.bins(d + 1));
            for (std::size_t p = 0; p < q.nodes_at(d); ++p) {
                double m = q.at(s, d + 1, p * nb);
                for (std::size_t b = 1; b < nb; ++b) m = std::max(m, q.at(s, d + 1, p * nb + b));
                out.at(s, d, p) = intra_step_discount * m;
            }
        }
        for (std::size_t a = 0; a < q.nodes_at(D - 1); ++a) {
            double ev = 0.0;
            const auto next = mdp.next_distribution(s, a);
            for (std::size_t s2 = 0; s2 < next.size(); ++s2) ev += next[s2] * v[s2];
            out.at(s, D - 1, a) = mdp.R(s, a) + mdp.gamma * ev;
        }
    }
    return out;
}

// A full timestep's worth of per-dimension backups: every path from any node
// crosses the reward/discount depth exactly once.
inline QTable per_dim_step_backup(const TabularMdp& mdp, QTable q, double intra_step_discount = 1.0) {
    for (int i = 0; i < q.depth(); ++i) q = per_dim_backup(mdp, q, intra_step_discount);
    return q;
}

inline QTable per_dim_value_iteration(const TabularMdp& mdp, const IterationOptions& opts = {}) {
    mdp.validate();
    QTable q(mdp.num_states, mdp.action_spec);
    for (int it = 0; it < opts.max_iterations; ++it) {
        QTable next = per_dim_step_backup(mdp, q, opts.intra_step_discount);
        const double change = sup_distance(next, q);
        q = std::move(next);
        if (change < opts.tol) return q;
    }
    throw DivergenceError("per-dimension value iteration did not reach tolerance");
}

inline QTable per_dim_value_iteration(const TabularMdp& mdp, double tol) {
    IterationOptions opts;
    opts.tol = tol;
    return per_dim_value_iteration(mdp, opts);
}

struct ContractionResult {
    double lhs = 0.0;
    double rhs = 0.0;
};

/// lhs = ||B q1 - B q2||_inf and rhs = gamma * ||q1 - q2||_inf, where B is the
/// per-dimension operator applied once per action dimension (one timestep).
inline ContractionResult contraction_check(const TabularMdp& mdp, const QTable& q1, const QTable& q2) {
    require(q1.same_layout(q2), "QTables have mismatched node sets");
    const QTable b1 = per_dim_step_backup(mdp, q1);
    const QTable b2 = per_dim_step_backup(mdp, q2);
    return {sup_distance(b1, b2), mdp.gamma * sup_distance(q1, q2)};
}

}  // namespace arq::tabular
