#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "arq/core/types.hpp"
#include "arq/tabular/qtable.hpp"

namespace arq::tabular {

/// Empirical behavior policy from joint-action counts per state.
///
/// At a prefix node (s, a^{1:i-1}, a^i) the behavior probability is the
/// conditional frequency of a^i among observed actions that share the prefix
/// a^{1:i-1}; at depth 0 that is the plain state marginal. The complement
/// distribution is (1 - pi_beta) normalized over the bins of that dimension.
/// A prefix that was never observed has pi_beta = 0 on every child, so its
/// complement is uniform.
class EmpiricalBehavior {
public:
    EmpiricalBehavior() = default;

    // counts[s * num_actions + a] = times joint action a was seen in state s.
    EmpiricalBehavior(int num_states, const ActionSpec& spec, const std::vector<double>& counts)
        : spec_(spec), node_counts_(num_states, spec), totals_(static_cast<std::size_t>(num_states), 0.0) {
        const std::size_t A = spec.joint_action_count();
        require(counts.size() == static_cast<std::size_t>(num_states) * A, "behavior counts have wrong size");
        const int D = spec.num_dims();
        for (int s = 0; s < num_states; ++s) {
            for (std::size_t a = 0; a < A; ++a) {
                const double c = counts[static_cast<std::size_t>(s) * A + a];
                require(c >= 0.0, "negative behavior count");
                if (c == 0.0) continue;
                totals_[static_cast<std::size_t>(s)] += c;
                // Walk the prefix chain of a from the leaf upward.
                std::size_t p = a;
                for (int d = D - 1; d >= 0; --d) {
                    node_counts_.at(s, d, p) += c;
                    p /= static_cast<std::size_t>(spec.bins(d));
                }
            }
        }
    }

    // Tabular datasets carry the state index in observation component 0.
    static EmpiricalBehavior from_dataset(const OfflineDataset& ds, int num_states) {
        const std::size_t A = ds.action_spec.joint_action_count();
        std::vector<double> counts(static_cast<std::size_t>(num_states) * A, 0.0);
        for (const auto& e : ds.episodes) {
            for (std::size_t t = 0; t < e.length(); ++t) {
                const double sv = e.observations[t].at(0);
                const int s = static_cast<int>(sv);
                require(static_cast<double>(s) == sv && s >= 0 && s < num_states, "observation is not a valid state index");
                counts[static_cast<std::size_t>(s) * A + ds.action_spec.joint_index(e.actions[t])] += 1.0;
            }
        }
        return EmpiricalBehavior(num_states, ds.action_spec, counts);
    }

    int num_states() const { return node_counts_.num_states(); }
    const ActionSpec& action_spec() const { return spec_; }
    bool state_observed(int s) const { return totals_[static_cast<std::size_t>(s)] > 0.0; }

    std::vector<int> unvisited_states() const {
        std::vector<int> out;
        for (int s = 0; s < num_states(); ++s)
            if (!state_observed(s)) out.push_back(s);
        return out;
    }

    // pi_beta(a | s) over joint actions.
    double joint(int s, std::size_t a) const {
        const double tot = totals_[static_cast<std::size_t>(s)];
        return tot > 0.0 ? node_counts_.at(s, spec_.num_dims() - 1, a) / tot : 0.0;
    }

    // pi_beta(a^{d+1} | s, a^{1:d}) at the node (d, p).
    double behavior(int s, int d, std::size_t p) const {
        const double parent = parent_count(s, d, p);
        return parent > 0.0 ? node_counts_.at(s, d, p) / parent : 0.0;
    }

    double complement(int s, int d, std::size_t p) const {
        const auto n = static_cast<double>(spec_.bins(d));
        const double z = parent_count(s, d, p) > 0.0 ? n - 1.0 : n;
        return (1.0 - behavior(s, d, p)) / z;
    }

private:
    double parent_count(int s, int d, std::size_t p) const {
        if (d == 0) return totals_[static_cast<std::size_t>(s)];
        return node_counts_.at(s, d - 1, p / static_cast<std::size_t>(spec_.bins(d)));
    }

    ActionSpec spec_;
    QTable node_counts_;
    std::vector<double> totals_;
};

}  // namespace arq::tabular
