#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "arq/tabular/behavior.hpp"
#include "arq/tabular/value_iteration.hpp"

namespace arq::tabular {

/// Weighted-backup coefficient m = pi_beta / (pi_beta + alpha * complement)
/// for every node. With alpha = 0 a node that the behavior never chose has no
/// weight in the objective; it is given m = 1 (the plain backup), unless the
/// whole state is unobserved, which is reported as degenerate.
inline QTable backup_weights(const EmpiricalBehavior& behavior, double alpha) {
    require(alpha >= 0.0, "alpha must be non-negative");
    QTable m(behavior.num_states(), behavior.action_spec());
    for (int s = 0; s < m.num_states(); ++s) {
        if (alpha == 0.0 && !behavior.state_observed(s))
            throw DegenerateBehavior("state " + std::to_string(s) + " has no observations and alpha = 0");
        for (int d = 0; d < m.depth(); ++d) {
            for (std::size_t p = 0; p < m.nodes_at(d); ++p) {
                const double pb = behavior.behavior(s, d, p);
                const double denom = pb + alpha * behavior.complement(s, d, p);
                m.at(s, d, p) = denom > 0.0 ? pb / denom : 1.0;
            }
        }
    }
    return m;
}

/// m(s,a) * B q_prev(s,a), elementwise over the prefix tree.
inline QTable conservative_fixed_point(const TabularMdp& mdp, const EmpiricalBehavior& behavior, double alpha,
                                       const QTable& q_prev) {
    require(behavior.num_states() == mdp.num_states && behavior.action_spec() == mdp.action_spec,
            "behavior does not match the MDP");
    const QTable m = backup_weights(behavior, alpha);
    QTable out = per_dim_backup(mdp, q_prev);
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] *= m.values()[i];
    return out;
}

struct ObjectiveTrace {
    QTable q;
    double final_objective = 0.0;
    int iterations = 0;
};

/// Gradient descent on
///   J(Q) = sum_nodes 1/2 pi_beta (Q - B q_target)^2 + alpha * 1/2 complement * Q^2
/// with B q_target frozen, starting from Q = 0. Nodes with zero weight in J
/// keep their starting value.
inline ObjectiveTrace minimize_tabular_objective_traced(const TabularMdp& mdp, const EmpiricalBehavior& behavior,
                                                        double alpha, const QTable& q_target, double step, int iters) {
    require(alpha >= 0.0, "alpha must be non-negative");
    require(step > 0.0 && iters >= 0, "invalid step size or iteration count");
    const QTable target = per_dim_backup(mdp, q_target);
    QTable w_td(mdp.num_states, mdp.action_spec);
    QTable w_reg(mdp.num_states, mdp.action_spec);
    for (int s = 0; s < mdp.num_states; ++s)
        for (int d = 0; d < w_td.depth(); ++d)
            for (std::size_t p = 0; p < w_td.nodes_at(d); ++p) {
                w_td.at(s, d, p) = behavior.behavior(s, d, p);
                w_reg.at(s, d, p) = alpha * behavior.complement(s, d, p);
            }

    const auto& T = target.values();
    const auto& a = w_td.values();
    const auto& c = w_reg.values();
    auto objective = [&](const std::vector<double>& q) {
        double j = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            const double e = q[i] - T[i];
            j += 0.5 * a[i] * e * e + 0.5 * c[i] * q[i] * q[i];
        }
        return j;
    };

    ObjectiveTrace out{QTable(mdp.num_states, mdp.action_spec), 0.0, 0};
    auto& q = out.q.values();
    double j_prev = objective(q);
    const double slack = 1e-12 * (j_prev + 1.0);
    for (int it = 0; it < iters; ++it) {
        double max_update = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            const double g = a[i] * (q[i] - T[i]) + c[i] * q[i];
            q[i] -= step * g;
            max_update = std::max(max_update, std::abs(step * g));
        }
        const double j = objective(q);
        out.iterations = it + 1;
        if (!std::isfinite(j) || j > j_prev + slack)
            throw DivergenceError("tabular objective increased at iteration " + std::to_string(it) +
                                  "; step size too large");
        j_prev = j;
        if (max_update == 0.0) break;
    }
    out.final_objective = j_prev;
    return out;
}

inline QTable minimize_tabular_objective(const TabularMdp& mdp, const EmpiricalBehavior& behavior, double alpha,
                                         const QTable& q_target, double step, int iters) {
    return minimize_tabular_objective_traced(mdp, behavior, alpha, q_target, step, iters).q;
}

}  // namespace arq::tabular
