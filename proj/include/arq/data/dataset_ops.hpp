#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "arq/core/random.hpp"
#include "arq/core/types.hpp"
#include "arq/env/grid_pick.hpp"

namespace arq::data {

struct NoiseSpec {
    // Probability that each action dimension is replaced by a uniform random bin.
    double per_dim_flip_prob = 0.3;

    void validate() const { require(per_dim_flip_prob >= 0.0 && per_dim_flip_prob <= 1.0, "noise must lie in [0, 1]"); }
};

/// Runs an action sequence open-loop from `start`. Stops at done, or when the
/// actions run out (the last recorded step then ends the episode).
inline Episode rollout_actions(const env::GridPickConfig& cfg, const env::GridPickState& start,
                               const std::vector<BinVector>& actions) {
    env::GridPickEnv e(cfg);
    Observation obs = e.reset(start);
    Episode ep;
    for (const auto& a : actions) {
        ep.observations.push_back(obs);
        ep.actions.push_back(a);
        const auto r = e.step(a);
        ep.rewards.push_back(r.reward);
        obs = r.observation;
        if (r.done) break;
    }
    return ep;
}

inline Episode expert_episode(const env::GridPickConfig& cfg, const env::GridPickState& start) {
    env::GridPickEnv e(cfg);
    Observation obs = e.reset(start);
    Episode ep;
    while (!e.state().done) {
        const BinVector a = env::scripted_expert(e.state());
        ep.observations.push_back(obs);
        ep.actions.push_back(a);
        const auto r = e.step(a);
        ep.rewards.push_back(r.reward);
        obs = r.observation;
    }
    return ep;
}

inline std::size_t demo_count(std::size_t num_episodes, double demo_fraction) {
    return static_cast<std::size_t>(std::llround(static_cast<double>(num_episodes) * demo_fraction));
}

/// Expert demonstrations plus expert action sequences replayed with
/// per-dimension bin flips. The first round(n * demo_fraction) episodes are
/// demonstrations; each episode draws its start state and noise from its own
/// stream derived from (seed, episode index).
inline OfflineDataset generate_mixed_dataset(const env::GridPickConfig& cfg, std::size_t num_episodes,
                                             double demo_fraction, const NoiseSpec& noise, std::uint64_t seed,
                                             double gamma = 0.98) {
    cfg.validate();
    noise.validate();
    require(demo_fraction > 0.0 && demo_fraction <= 1.0, "demo_fraction must lie in (0, 1]");
    const ActionSpec spec = env::GridPickEnv::action_spec();
    OfflineDataset ds;
    ds.action_spec = spec;
    ds.gamma = gamma;
    ds.obs_dim = env::kGridPickObsDim;
    const std::size_t n_demo = demo_count(num_episodes, demo_fraction);
    ds.metadata = {{"generator", "grid-pick-mixed"},
                   {"seed", std::to_string(seed)},
                   {"noise", std::to_string(noise.per_dim_flip_prob)},
                   {"demo_fraction", std::to_string(demo_fraction)},
                   {"grid_size", std::to_string(cfg.grid_size)},
                   {"horizon", std::to_string(cfg.horizon)}};
    const env::GridPickEnv proto(cfg);
    for (std::size_t i = 0; i < num_episodes; ++i) {
        Rng rng(Rng::derive(seed, i));
        const env::GridPickState start = proto.random_start(rng);
        Episode ep = expert_episode(cfg, start);
        if (i < n_demo) {
            ep.origin = EpisodeOrigin::demo;
        } else {
            std::vector<BinVector> noisy = ep.actions;
            for (auto& a : noisy)
                for (int d = 0; d < spec.num_dims(); ++d)
                    if (rng.bernoulli(noise.per_dim_flip_prob)) a[static_cast<std::size_t>(d)] = rng.below(spec.bins(d));
            ep = rollout_actions(cfg, start, noisy);
            ep.origin = EpisodeOrigin::replay;
        }
        ep.task_id = 0;
        ds.episodes.push_back(compute_mc_returns(std::move(ep), gamma));
    }
    return ds;
}

/// Keeps every demonstration and drops successful replays.
inline OfflineDataset filter_successes(OfflineDataset ds) {
    for (const auto& e : ds.episodes)
        require(e.origin != EpisodeOrigin::unknown, "filter_successes needs per-episode origin tags");
    std::erase_if(ds.episodes, [](const Episode& e) { return e.origin == EpisodeOrigin::replay && e.successful(); });
    ds.metadata["filtered"] = "successful-replays-removed";
    return ds;
}

inline OfflineDataset successful_episodes(OfflineDataset ds) {
    std::erase_if(ds.episodes, [](const Episode& e) { return !e.successful(); });
    return ds;
}

/// Reassigns an episode to another task with its reward removed.
inline Episode relabel_episode(Episode e, std::int64_t alternate_task_id) {
    require(alternate_task_id >= 0, "task_id must be non-negative");
    require(alternate_task_id != e.task_id, "relabel needs a different task id");
    e.task_id = alternate_task_id;
    std::fill(e.rewards.begin(), e.rewards.end(), 0.0);
    e.mc_returns = std::vector<double>(e.rewards.size(), 0.0);
    return e;
}

struct OriginSummary {
    std::size_t demos = 0;
    std::size_t replays = 0;
    std::size_t demo_successes = 0;
    std::size_t replay_successes = 0;
};

inline OriginSummary summarize(const OfflineDataset& ds) {
    OriginSummary s;
    for (const auto& e : ds.episodes) {
        if (e.origin == EpisodeOrigin::demo) {
            ++s.demos;
            s.demo_successes += e.successful();
        } else if (e.origin == EpisodeOrigin::replay) {
            ++s.replays;
            s.replay_successes += e.successful();
        }
    }
    return s;
}

}  // namespace arq::data
