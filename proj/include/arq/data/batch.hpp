#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "arq/core/random.hpp"
#include "arq/core/types.hpp"

namespace arq::data {

/// One transition as the learner sees it.
struct Sample {
    StateWindow window;
    BinVector action;
    StateWindow next_window;
    std::optional<BinVector> next_action;
    double reward = 0.0;
    std::optional<double> mc_return;
    bool done = false;
    std::int64_t task_id = 0;
    std::size_t episode = 0;
    std::size_t t = 0;
};

using Batch = std::vector<Sample>;

inline StateWindow make_window(const Episode& e, std::size_t t, int w, std::size_t obs_dim) {
    StateWindow win;
    win.slots.reserve(static_cast<std::size_t>(w));
    win.pad.reserve(static_cast<std::size_t>(w));
    for (int k = w - 1; k >= 0; --k) {
        const auto back = static_cast<std::size_t>(k);
        if (t >= back) {
            win.slots.push_back(e.observations[t - back]);
            win.pad.push_back(0);
        } else {
            win.slots.emplace_back(obs_dim, 0.0);
            win.pad.push_back(1);
        }
    }
    return win;
}

// The final recorded step of every episode is terminal for bootstrapping.
inline Sample make_sample(const OfflineDataset& ds, std::size_t episode, std::size_t t, int w) {
    const Episode& e = ds.episodes.at(episode);
    require(t < e.length(), "timestep out of range");
    Sample s;
    s.window = make_window(e, t, w, ds.obs_dim);
    s.action = e.actions[t];
    s.reward = e.rewards[t];
    if (e.mc_returns) s.mc_return = (*e.mc_returns)[t];
    s.done = t + 1 == e.length();
    s.task_id = e.task_id;
    s.episode = episode;
    s.t = t;
    if (!s.done) {
        s.next_window = make_window(e, t + 1, w, ds.obs_dim);
        s.next_action = e.actions[t + 1];
    }
    return s;
}

/// Uniform sampling over (episode, timestep) pairs.
class TransitionIndex {
public:
    explicit TransitionIndex(const OfflineDataset& ds) {
        require(!ds.episodes.empty(), "cannot sample from an empty dataset");
        cumulative_.reserve(ds.episodes.size());
        std::size_t total = 0;
        for (const auto& e : ds.episodes) {
            total += e.length();
            cumulative_.push_back(total);
        }
    }

    std::size_t size() const { return cumulative_.back(); }

    std::pair<std::size_t, std::size_t> locate(std::size_t flat) const {
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), flat);
        const auto ep = static_cast<std::size_t>(it - cumulative_.begin());
        const std::size_t start = ep == 0 ? 0 : cumulative_[ep - 1];
        return {ep, flat - start};
    }

private:
    std::vector<std::size_t> cumulative_;
};

inline Batch sample_batch(const OfflineDataset& ds, const TransitionIndex& index, int batch_size, int window_w, Rng& rng) {
    require(batch_size >= 1 && window_w >= 1, "batch_size and window_w must be positive");
    Batch b;
    b.reserve(static_cast<std::size_t>(batch_size));
    for (int i = 0; i < batch_size; ++i) {
        const auto [ep, t] = index.locate(rng.below(static_cast<std::uint64_t>(index.size())));
        b.push_back(make_sample(ds, ep, t, window_w));
    }
    return b;
}

inline Batch sample_batch(const OfflineDataset& ds, int batch_size, int window_w, Rng& rng) {
    return sample_batch(ds, TransitionIndex(ds), batch_size, window_w, rng);
}

}  // namespace arq::data
