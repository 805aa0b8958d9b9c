#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "arq/core/random.hpp"
#include "arq/env/random_mdp.hpp"
#include "arq/tabular/conservative.hpp"
#include "arq/tabular/value_iteration.hpp"

namespace arq::tabular {

struct SuiteResult {
    std::string name;
    int trials = 0;
    double worst = 0.0;  // largest residual observed
    double tolerance = 0.0;
    bool passed = true;
};

/// Random MDP shape within the tabular limits (|S| <= 6, d_A <= 3, bins <= 4).
inline env::RandomMdpOptions random_shape(Rng& rng, double gamma = 0.9) {
    env::RandomMdpOptions o;
    o.num_states = 1 + rng.below(env::kMaxRandomStates);
    o.num_dims = 1 + rng.below(env::kMaxRandomDims);
    o.bins = 2 + rng.below(env::kMaxRandomBins - 1);
    o.gamma = gamma;
    return o;
}

inline QTable random_qtable(Rng& rng, int num_states, const ActionSpec& spec, double lo, double hi) {
    QTable q(num_states, spec);
    for (auto& v : q.values()) v = rng.uniform(lo, hi);
    return q;
}

/// Per-dimension value iteration against full-action value iteration: the
/// root maximum of every state must equal V*(s).
inline SuiteResult consistency_suite(int trials, std::uint64_t seed, double intra_step_discount = 1.0,
                                     double tolerance = 1e-8) {
    SuiteResult r{"consistency", trials, 0.0, tolerance, true};
    for (int t = 0; t < trials; ++t) {
        Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(t)));
        const auto shape = random_shape(rng);
        const TabularMdp mdp = env::random_tabular_mdp(rng.next(), shape);
        const ActionValues full = full_action_value_iteration(mdp, 1e-12);
        IterationOptions opts;
        opts.tol = 1e-12;
        opts.intra_step_discount = intra_step_discount;
        const QTable per_dim = per_dim_value_iteration(mdp, opts);
        for (int s = 0; s < mdp.num_states; ++s)
            r.worst = std::max(r.worst, std::abs(per_dim.state_value(s) - full.state_value(s)));
    }
    r.passed = r.worst <= tolerance;
    return r;
}

/// ||B q1 - B q2|| <= gamma ||q1 - q2|| on random tables; `worst` is the
/// largest lhs - rhs seen (negative when every pair contracts with room).
inline SuiteResult contraction_suite(int trials, std::uint64_t seed, double tolerance = 1e-12) {
    SuiteResult r{"contraction", trials, trials > 0 ? -std::numeric_limits<double>::infinity() : 0.0, tolerance, true};
    for (int t = 0; t < trials; ++t) {
        Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(t)));
        const auto shape = random_shape(rng, 0.5 + 0.49 * rng.uniform());
        const TabularMdp mdp = env::random_tabular_mdp(rng.next(), shape);
        const QTable q1 = random_qtable(rng, mdp.num_states, mdp.action_spec, -2.0, 2.0);
        const QTable q2 = random_qtable(rng, mdp.num_states, mdp.action_spec, -2.0, 2.0);
        const auto c = contraction_check(mdp, q1, q2);
        r.worst = std::max(r.worst, c.lhs - c.rhs);
    }
    r.passed = r.worst <= tolerance;
    return r;
}

/// Gradient descent on the conservative objective against m * B q. Every
/// other instance uses a Dirac behavior, where the unseen-action values must
/// also reach 0. `worst` is the larger of the two residuals.
inline SuiteResult fixed_point_suite(int trials, std::uint64_t seed, double tolerance = 1e-4) {
    SuiteResult r{"fixed-point", trials, 0.0, tolerance, true};
    for (int t = 0; t < trials; ++t) {
        Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(t)));
        const bool dirac = t % 2 == 0;
        const auto shape = random_shape(rng);
        const TabularMdp mdp = env::random_tabular_mdp(rng.next(), shape);
        const EmpiricalBehavior behavior(mdp.num_states, mdp.action_spec,
                                         env::random_behavior_counts(rng.next(), mdp, dirac));
        const double alpha = dirac ? 1.0 : 0.25 + 1.75 * rng.uniform();
        const QTable q_prev = random_qtable(rng, mdp.num_states, mdp.action_spec, 0.0, 1.0);
        const QTable expected = conservative_fixed_point(mdp, behavior, alpha, q_prev);
        const QTable got = minimize_tabular_objective(mdp, behavior, alpha, q_prev, 1.0 / (1.0 + alpha), 20'000);
        r.worst = std::max(r.worst, sup_distance(expected, got));
        if (dirac)
            for (int s = 0; s < mdp.num_states; ++s)
                for (int d = 0; d < got.depth(); ++d)
                    for (std::size_t p = 0; p < got.nodes_at(d); ++p)
                        if (behavior.behavior(s, d, p) == 0.0) r.worst = std::max(r.worst, std::abs(got.at(s, d, p)));
    }
    r.passed = r.worst <= tolerance;
    return r;
}

}  // namespace arq::tabular
