#pragma once

#include <cstdint>
#include <vector>

#include "arq/core/random.hpp"
#include "arq/tabular/mdp.hpp"

namespace arq::env {

struct RandomMdpOptions {
    int num_states = 4;
    int num_dims = 2;
    int bins = 3;
    double gamma = 0.9;
    double reward_prob = 0.2;
    bool zero_rewards = false;
};

inline constexpr int kMaxRandomStates = 6;
inline constexpr int kMaxRandomDims = 3;
inline constexpr int kMaxRandomBins = 4;

/// Random enumerable MDP: transition rows are normalized uniform draws,
/// rewards are Bernoulli(reward_prob) in {0, 1}. Same seed, same MDP.
inline tabular::TabularMdp random_tabular_mdp(std::uint64_t seed, const RandomMdpOptions& opt = {}) {
    require(opt.num_states >= 1 && opt.num_states <= kMaxRandomStates, "random MDP: num_states must lie in [1, 6]");
    require(opt.num_dims >= 1 && opt.num_dims <= kMaxRandomDims, "random MDP: num_dims must lie in [1, 3]");
    require(opt.bins >= 2 && opt.bins <= kMaxRandomBins, "random MDP: bins must lie in [2, 4]");
    require(opt.gamma > 0.0 && opt.gamma < 1.0, "random MDP: gamma must lie in (0, 1)");

    Rng rng(seed);
    tabular::TabularMdp mdp;
    mdp.num_states = opt.num_states;
    mdp.action_spec = ActionSpec::discrete(std::vector<int>(static_cast<std::size_t>(opt.num_dims), opt.bins));
    mdp.gamma = opt.gamma;
    mdp.terminal.assign(static_cast<std::size_t>(opt.num_states), 0);
    const auto S = static_cast<std::size_t>(opt.num_states);
    const std::size_t A = mdp.num_actions();
    mdp.transition.resize(S * A * S);
    mdp.reward.resize(S * A);
    for (std::size_t sa = 0; sa < S * A; ++sa) {
        double* row = mdp.transition.data() + sa * S;
        double total = 0.0;
        for (std::size_t s2 = 0; s2 < S; ++s2) {
            row[s2] = rng.uniform() + 1e-3;
            total += row[s2];
        }
        for (std::size_t s2 = 0; s2 < S; ++s2) row[s2] /= total;
        const bool one = rng.bernoulli(opt.reward_prob);
        mdp.reward[sa] = (one && !opt.zero_rewards) ? 1.0 : 0.0;
    }
    return mdp;
}

/// Behavior counts over (state, joint action) for a random MDP, covering
/// every state. A Dirac behavior picks one action per state.
inline std::vector<double> random_behavior_counts(std::uint64_t seed, const tabular::TabularMdp& mdp, bool dirac) {
    Rng rng(seed);
    const std::size_t A = mdp.num_actions();
    std::vector<double> counts(static_cast<std::size_t>(mdp.num_states) * A, 0.0);
    for (int s = 0; s < mdp.num_states; ++s) {
        double* row = counts.data() + static_cast<std::size_t>(s) * A;
        if (dirac) {
            row[rng.below(static_cast<std::uint64_t>(A))] = 1.0;
            continue;
        }
        const int draws = 1 + rng.below(3 * static_cast<int>(A));
        for (int k = 0; k < draws; ++k) row[rng.below(static_cast<std::uint64_t>(A))] += 1.0;
    }
    return counts;
}

}  // namespace arq::env
