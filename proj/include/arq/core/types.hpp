#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "arq/core/error.hpp"

namespace arq {

using BinVector = std::vector<int>;
using Observation = std::vector<double>;

// Joint-action cap for anything that enumerates the full action space.
inline constexpr std::uint64_t kTabularJointActionLimit = 10'000'000;

struct Range {
    double lo = 0.0;
    double hi = 1.0;
};

/// Per-dimension discretization of an action vector. A dimension without a
/// range is natively categorical.
class ActionSpec {
public:
    ActionSpec() = default;

    ActionSpec(std::vector<int> bins, std::vector<std::optional<Range>> ranges)
        : bins_(std::move(bins)), ranges_(std::move(ranges)) {
        validate();
    }

    // All dimensions categorical.
    static ActionSpec discrete(std::vector<int> bins) {
        std::vector<std::optional<Range>> ranges(bins.size());
        return ActionSpec(std::move(bins), std::move(ranges));
    }

    // Every dimension continuous over the same range with the same bin count.
    static ActionSpec uniform(int num_dims, int bins, Range range) {
        return ActionSpec(std::vector<int>(static_cast<std::size_t>(num_dims), bins),
                          std::vector<std::optional<Range>>(static_cast<std::size_t>(num_dims), range));
    }

    int num_dims() const { return static_cast<int>(bins_.size()); }
    int bins(int dim) const { return bins_.at(static_cast<std::size_t>(dim)); }
    const std::vector<int>& bins() const { return bins_; }
    const std::optional<Range>& range(int dim) const { return ranges_.at(static_cast<std::size_t>(dim)); }
    bool is_continuous(int dim) const { return range(dim).has_value(); }
    int max_bins() const {
        int m = 0;
        for (int b : bins_) m = std::max(m, b);
        return m;
    }

    // Saturates at UINT64_MAX rather than overflowing.
    std::uint64_t joint_action_count() const {
        std::uint64_t n = 1;
        for (int b : bins_) {
            const auto ub = static_cast<std::uint64_t>(b);
            if (n > UINT64_MAX / ub) return UINT64_MAX;
            n *= ub;
        }
        return n;
    }

    void require_tabular() const {
        require(joint_action_count() <= kTabularJointActionLimit,
                "action space too large for tabular use (> 1e7 joint actions)");
    }

    bool contains(const BinVector& a) const {
        if (a.size() != bins_.size()) return false;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (a[i] < 0 || a[i] >= bins_[i]) return false;
        return true;
    }

    // Mixed-radix index with dimension 0 most significant.
    std::uint64_t joint_index(const BinVector& a) const {
        std::uint64_t idx = 0;
        for (std::size_t i = 0; i < a.size(); ++i) idx = idx * static_cast<std::uint64_t>(bins_[i]) + static_cast<std::uint64_t>(a[i]);
        return idx;
    }

    BinVector joint_action(std::uint64_t idx) const {
        BinVector a(bins_.size());
        for (std::size_t i = bins_.size(); i-- > 0;) {
            const auto b = static_cast<std::uint64_t>(bins_[i]);
            a[i] = static_cast<int>(idx % b);
            idx /= b;
        }
        return a;
    }

    bool operator==(const ActionSpec& o) const {
        if (bins_ != o.bins_ || ranges_.size() != o.ranges_.size()) return false;
        for (std::size_t i = 0; i < ranges_.size(); ++i) {
            if (ranges_[i].has_value() != o.ranges_[i].has_value()) return false;
            if (ranges_[i] && (ranges_[i]->lo != o.ranges_[i]->lo || ranges_[i]->hi != o.ranges_[i]->hi)) return false;
        }
        return true;
    }

private:
    void validate() const {
        require(!bins_.empty(), "ActionSpec needs at least one dimension");
        require(bins_.size() == ranges_.size(), "ActionSpec bins/ranges length mismatch");
        for (std::size_t i = 0; i < bins_.size(); ++i) {
            require(bins_[i] >= 2, "every action dimension needs at least 2 bins");
            if (ranges_[i]) require(ranges_[i]->lo < ranges_[i]->hi, "continuous range needs lo < hi");
        }
    }

    std::vector<int> bins_;
    std::vector<std::optional<Range>> ranges_;
};

struct ActionToken {
    int dim = 0;
    int bin = 0;

    bool valid_for(const ActionSpec& spec) const {
        return dim >= 0 && dim < spec.num_dims() && bin >= 0 && bin < spec.bins(dim);
    }
};

/// The last w observations, oldest first. Slots before the episode start hold
/// zero vectors and are flagged in `pad`.
struct StateWindow {
    std::vector<Observation> slots;
    std::vector<char> pad;

    int size() const { return static_cast<int>(slots.size()); }

    static StateWindow single(Observation o) { return StateWindow{{std::move(o)}, {0}}; }
};

enum class EpisodeOrigin { unknown, demo, replay };

struct Episode {
    std::int64_t task_id = 0;
    std::vector<Observation> observations;
    std::vector<BinVector> actions;
    std::vector<double> rewards;
    std::optional<std::vector<double>> mc_returns;
    EpisodeOrigin origin = EpisodeOrigin::unknown;

    std::size_t length() const { return rewards.size(); }
    double terminal_reward() const { return rewards.empty() ? 0.0 : rewards.back(); }
    bool successful() const { return terminal_reward() == 1.0; }

    void validate(const ActionSpec& spec, std::size_t obs_dim) const {
        require(task_id >= 0, "task_id must be non-negative");
        const std::size_t T = rewards.size();
        require(T >= 1, "episode must have at least one step");
        require(observations.size() == T && actions.size() == T,
                "observations, actions and rewards must have equal length");
        for (const auto& o : observations) require(o.size() == obs_dim, "observation has wrong dimension");
        for (const auto& a : actions) require(spec.contains(a), "action does not conform to the action spec");
        for (std::size_t t = 0; t + 1 < T; ++t)
            require(rewards[t] == 0.0, "sparse reward regime: only the final step may carry reward");
        require(rewards[T - 1] == 0.0 || rewards[T - 1] == 1.0, "terminal reward must be 0 or 1");
        if (mc_returns) require(mc_returns->size() == T, "mc_returns length mismatch");
    }
};

struct OfflineDataset {
    std::vector<Episode> episodes;
    ActionSpec action_spec;
    double gamma = 0.98;
    std::size_t obs_dim = 1;
    std::map<std::string, std::string> metadata;

    std::size_t num_transitions() const {
        std::size_t n = 0;
        for (const auto& e : episodes) n += e.length();
        return n;
    }

    void validate() const {
        require(gamma > 0.0 && gamma <= 1.0, "dataset gamma must lie in (0, 1]");
        require(obs_dim >= 1, "obs_dim must be positive");
        for (const auto& e : episodes) {
            e.validate(action_spec, obs_dim);
            if (!e.mc_returns) continue;
            double acc = 0.0;
            for (std::size_t t = e.length(); t-- > 0;) {
                acc = e.rewards[t] + gamma * acc;
                require(std::abs((*e.mc_returns)[t] - acc) <= 1e-9, "mc_returns inconsistent with dataset gamma");
            }
        }
    }
};

enum class ConservatismMode { paper, softmax, none };

inline const char* to_string(ConservatismMode m) {
    switch (m) {
        case ConservatismMode::paper: return "paper";
        case ConservatismMode::softmax: return "softmax";
        case ConservatismMode::none: return "none";
    }
    return "?";
}

inline ConservatismMode conservatism_from_string(const std::string& s) {
    if (s == "paper") return ConservatismMode::paper;
    if (s == "softmax") return ConservatismMode::softmax;
    if (s == "none") return ConservatismMode::none;
    throw InvalidArgument("unknown conservatism_mode '" + s + "' (expected paper, softmax or none)");
}

/// Training hyper-parameters. Defaults follow the published setup where one
/// exists (gamma, alpha, EMA rate) and desk-scale choices elsewhere.
struct TrainConfig {
    double gamma = 0.98;
    double alpha = 1.0;
    int window_w = 1;
    bool use_mc_max = true;
    bool use_n_step = true;
    double ema_rate = 0.01;
    double learning_rate = 1e-2;
    double momentum = 0.9;
    int batch_size = 64;
    int grad_steps = 20'000;
    std::uint64_t seed = 0;
    ConservatismMode conservatism_mode = ConservatismMode::paper;
    int model_width = 32;
    int num_layers = 2;
    int eval_every = 1'000;
    int eval_episodes = 200;

    void validate() const {
        require(gamma > 0.0 && gamma <= 1.0, "gamma must lie in (0, 1]");
        require(alpha >= 0.0, "alpha must be non-negative");
        require(window_w >= 1, "window_w must be positive");
        require(ema_rate > 0.0 && ema_rate <= 1.0, "ema_rate must lie in (0, 1]");
        require(learning_rate > 0.0, "learning_rate must be positive");
        require(momentum >= 0.0 && momentum < 1.0, "momentum must lie in [0, 1)");
        require(batch_size >= 1, "batch_size must be positive");
        require(grad_steps >= 0, "grad_steps must be non-negative");
        require(model_width >= 1, "model_width must be positive");
        require(num_layers >= 0, "num_layers must be non-negative");
        require(eval_every >= 0 && eval_episodes >= 1, "invalid evaluation cadence");
    }
};

// ---------------------------------------------------------------------------
// Discretization

inline int discretize(double value, int dim, const ActionSpec& spec) {
    require(dim >= 0 && dim < spec.num_dims(), "dimension index out of range");
    require(std::isfinite(value), "cannot discretize a non-finite value");
    const auto& r = spec.range(dim);
    require(r.has_value(), "dimension is categorical, not continuous");
    const int n = spec.bins(dim);
    const double v = std::clamp(value, r->lo, r->hi);
    const int bin = static_cast<int>(std::floor((v - r->lo) / (r->hi - r->lo) * n));
    return std::clamp(bin, 0, n - 1);
}

inline double undiscretize(int bin, int dim, const ActionSpec& spec) {
    require(dim >= 0 && dim < spec.num_dims(), "dimension index out of range");
    require(bin >= 0 && bin < spec.bins(dim), "bin index out of range");
    const auto& r = spec.range(dim);
    require(r.has_value(), "dimension is categorical, not continuous");
    return r->lo + (bin + 0.5) * (r->hi - r->lo) / spec.bins(dim);
}

// MC_t = sum_{j >= t} gamma^{j-t} r_j, evaluated by the backward recursion.
inline std::vector<double> discounted_returns(const std::vector<double>& rewards, double gamma) {
    std::vector<double> mc(rewards.size());
    double acc = 0.0;
    for (std::size_t t = rewards.size(); t-- > 0;) {
        acc = rewards[t] + gamma * acc;
        mc[t] = acc;
    }
    return mc;
}

inline Episode compute_mc_returns(Episode episode, double gamma) {
    require(!episode.rewards.empty(), "episode has no rewards");
    episode.mc_returns = discounted_returns(episode.rewards, gamma);
    return episode;
}

inline OfflineDataset compute_mc_returns(OfflineDataset ds) {
    for (auto& e : ds.episodes) e = compute_mc_returns(std::move(e), ds.gamma);
    return ds;
}

}  // namespace arq
