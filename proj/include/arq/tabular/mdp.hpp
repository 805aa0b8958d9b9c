#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "arq/core/types.hpp"

namespace arq::tabular {

/// Enumerable MDP over joint actions. Transition rows and rewards are stored
/// flat, indexed [state][joint action] (and [.. ][next state] for transitions).
struct TabularMdp {
    int num_states = 0;
    ActionSpec action_spec;
    std::vector<double> transition;
    std::vector<double> reward;
    double gamma = 0.9;
    std::vector<char> terminal;

    std::size_t num_actions() const { return static_cast<std::size_t>(action_spec.joint_action_count()); }

    std::span<const double> next_distribution(int s, std::size_t a) const {
        const auto S = static_cast<std::size_t>(num_states);
        return {transition.data() + (static_cast<std::size_t>(s) * num_actions() + a) * S, S};
    }

    double R(int s, std::size_t a) const { return reward[static_cast<std::size_t>(s) * num_actions() + a]; }

    void validate() const {
        require(num_states >= 1, "MDP needs at least one state");
        action_spec.require_tabular();
        for (int d = 0; d < action_spec.num_dims(); ++d)
            require(!action_spec.is_continuous(d), "tabular MDPs need categorical action dimensions");
        require(gamma > 0.0 && gamma < 1.0, "tabular value iteration needs gamma in (0, 1)");
        const auto S = static_cast<std::size_t>(num_states);
        const std::size_t A = num_actions();
        require(transition.size() == S * A * S, "transition table has wrong size");
        require(reward.size() == S * A, "reward table has wrong size");
        require(terminal.size() == S, "terminal flags have wrong size");
        for (int s = 0; s < num_states; ++s) {
            for (std::size_t a = 0; a < A; ++a) {
                double total = 0.0;
                for (double p : next_distribution(s, a)) {
                    require(p >= 0.0, "negative transition probability");
                    total += p;
                }
                require(std::abs(total - 1.0) <= 1e-12, "transition row does not sum to 1");
                require(std::isfinite(R(s, a)), "non-finite reward");
                if (terminal[static_cast<std::size_t>(s)]) {
                    require(R(s, a) == 0.0, "terminal states must have zero reward");
                    require(next_distribution(s, a)[static_cast<std::size_t>(s)] == 1.0,
                            "terminal states must self-loop");
                }
            }
        }
    }
};

/// Q over (state, joint action), the object full-action value iteration works on.
struct ActionValues {
    int num_states = 0;
    std::size_t num_actions = 0;
    std::vector<double> values;

    ActionValues() = default;
    ActionValues(int states, std::size_t actions)
        : num_states(states), num_actions(actions), values(static_cast<std::size_t>(states) * actions, 0.0) {}

    double& at(int s, std::size_t a) { return values[static_cast<std::size_t>(s) * num_actions + a]; }
    double at(int s, std::size_t a) const { return values[static_cast<std::size_t>(s) * num_actions + a]; }

    double state_value(int s) const {
        double m = at(s, 0);
        for (std::size_t a = 1; a < num_actions; ++a) m = std::max(m, at(s, a));
        return m;
    }
};

}  // namespace arq::tabular
