#include <cmath>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "arq/core/serialization.hpp"
#include "arq/data/batch.hpp"
#include "arq/data/dataset_ops.hpp"

using namespace arq;
using namespace arq::data;

TEST(MixedDataset, AllDemosSucceed) {
    const auto ds = generate_mixed_dataset({}, 50, 1.0, NoiseSpec{0.3}, 1);
    for (const auto& e : ds.episodes) {
        EXPECT_EQ(e.origin, EpisodeOrigin::demo);
        EXPECT_EQ(e.terminal_reward(), 1.0);
    }
}

TEST(MixedDataset, ZeroNoiseReplaysEqualDemos) {
    const auto ds = generate_mixed_dataset({}, 40, 0.5, NoiseSpec{0.0}, 2);
    for (const auto& e : ds.episodes) {
        const auto expert = expert_episode({}, [&] {
            env::GridPickState s;
            const double span = 4.0;
            s.agent_x = static_cast<int>(std::lround(e.observations[0][0] * span));
            s.agent_y = static_cast<int>(std::lround(e.observations[0][1] * span));
            s.obj_x = static_cast<int>(std::lround(e.observations[0][2] * span));
            s.obj_y = static_cast<int>(std::lround(e.observations[0][3] * span));
            return s;
        }());
        EXPECT_EQ(e.actions, expert.actions);
        EXPECT_EQ(e.rewards, expert.rewards);
    }
}

TEST(MixedDataset, DemoCountAndNoisyReplaySuccess) {
    const auto ds = generate_mixed_dataset({}, 500, 0.08, NoiseSpec{0.3}, 7);
    const auto s = summarize(ds);
    EXPECT_EQ(s.demos, 40u);
    EXPECT_EQ(s.replays, 460u);
    EXPECT_EQ(s.demo_successes, 40u);
    EXPECT_LT(s.replay_successes, s.replays);
    EXPECT_GT(s.replay_successes, 0u);
    EXPECT_NO_THROW(ds.validate());
}

TEST(MixedDataset, DeterministicPerSeed) {
    std::ostringstream a, b, c;
    write_dataset(a, generate_mixed_dataset({}, 30, 0.2, NoiseSpec{0.3}, 5));
    write_dataset(b, generate_mixed_dataset({}, 30, 0.2, NoiseSpec{0.3}, 5));
    write_dataset(c, generate_mixed_dataset({}, 30, 0.2, NoiseSpec{0.3}, 6));
    EXPECT_EQ(a.str(), b.str());
    EXPECT_NE(a.str(), c.str());
}

TEST(MixedDataset, RejectsBadParameters) {
    EXPECT_THROW(generate_mixed_dataset({}, 10, 0.0, NoiseSpec{0.3}, 0), InvalidArgument);
    EXPECT_THROW(generate_mixed_dataset({}, 10, 0.5, NoiseSpec{1.5}, 0), InvalidArgument);
}

TEST(FilterSuccesses, AllDemoDatasetUnchanged) {
    const auto ds = generate_mixed_dataset({}, 20, 1.0, NoiseSpec{0.3}, 3);
    EXPECT_EQ(filter_successes(ds).episodes.size(), ds.episodes.size());
}

TEST(FilterSuccesses, AllFailedReplaysUnchanged) {
    auto ds = generate_mixed_dataset({}, 200, 0.05, NoiseSpec{1.0}, 3);
    std::erase_if(ds.episodes, [](const Episode& e) { return e.origin == EpisodeOrigin::replay && e.successful(); });
    EXPECT_EQ(filter_successes(ds).episodes.size(), ds.episodes.size());
}

TEST(FilterSuccesses, DropsExactlyTheSuccessfulReplays) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto ds = generate_mixed_dataset({}, 300, 0.1, NoiseSpec{0.3}, seed);
        const auto before = summarize(ds);
        const auto f = filter_successes(ds);
        const auto after = summarize(f);
        EXPECT_EQ(f.episodes.size(), ds.episodes.size() - before.replay_successes);
        EXPECT_EQ(after.replay_successes, 0u);
        EXPECT_EQ(successful_episodes(f).episodes.size(), after.demos);
    }
}

TEST(FilterSuccesses, NeedsOriginTags) {
    auto ds = generate_mixed_dataset({}, 5, 0.4, NoiseSpec{0.3}, 3);
    ds.episodes[0].origin = EpisodeOrigin::unknown;
    EXPECT_THROW(filter_successes(ds), InvalidArgument);
}

TEST(Relabel, SuccessfulEpisodeLosesReward) {
    const auto ds = generate_mixed_dataset({}, 3, 1.0, NoiseSpec{0.3}, 3);
    const auto r = relabel_episode(ds.episodes[0], 1);
    EXPECT_EQ(r.task_id, 1);
    EXPECT_EQ(r.terminal_reward(), 0.0);
    for (double m : *r.mc_returns) EXPECT_EQ(m, 0.0);
}

TEST(Relabel, FailedEpisodeRewardsStayZero) {
    Episode e;
    e.observations = {{0.0}, {0.0}};
    e.actions = {{0}, {1}};
    e.rewards = {0.0, 0.0};
    const auto r = relabel_episode(e, 4);
    EXPECT_EQ(r.rewards, e.rewards);
    EXPECT_EQ(r.task_id, 4);
    EXPECT_THROW(relabel_episode(e, 0), InvalidArgument);
}

TEST(Relabel, ContributesOnlyBootstrapTargetsProperty) {
    Rng rng(3);
    const auto ds = generate_mixed_dataset({}, 100, 0.3, NoiseSpec{0.3}, 8);
    for (const auto& e : ds.episodes) {
        const auto r = relabel_episode(e, 1 + rng.below(10));
        for (std::size_t t = 0; t < r.length(); ++t) {
            const double bootstrap = rng.uniform();
            const double target = std::max((*r.mc_returns)[t], r.rewards[t] + 0.98 * bootstrap);
            EXPECT_EQ(target, 0.98 * bootstrap);
        }
    }
}

TEST(Windows, SingleSlot) {
    const auto ds = generate_mixed_dataset({}, 2, 1.0, NoiseSpec{0.3}, 1);
    const auto w = make_window(ds.episodes[0], 1, 1, ds.obs_dim);
    ASSERT_EQ(w.size(), 1);
    EXPECT_EQ(w.slots[0], ds.episodes[0].observations[1]);
    EXPECT_EQ(w.pad[0], 0);
}

TEST(Windows, PaddingAtEpisodeStart) {
    const auto ds = generate_mixed_dataset({}, 2, 1.0, NoiseSpec{0.3}, 1);
    const auto w = make_window(ds.episodes[0], 0, 3, ds.obs_dim);
    ASSERT_EQ(w.size(), 3);
    EXPECT_EQ(w.pad, (std::vector<char>{1, 1, 0}));
    EXPECT_EQ(w.slots[0], Observation(ds.obs_dim, 0.0));
    EXPECT_EQ(w.slots[2], ds.episodes[0].observations[0]);
}

TEST(Samples, TerminalAndNextFields) {
    const auto ds = generate_mixed_dataset({}, 3, 1.0, NoiseSpec{0.3}, 4);
    const auto& e = ds.episodes[0];
    const auto last = make_sample(ds, 0, e.length() - 1, 2);
    EXPECT_TRUE(last.done);
    EXPECT_FALSE(last.next_action.has_value());
    EXPECT_EQ(last.reward, 1.0);
    EXPECT_EQ(*last.mc_return, 1.0);
    if (e.length() > 1) {
        const auto first = make_sample(ds, 0, 0, 2);
        EXPECT_FALSE(first.done);
        EXPECT_EQ(*first.next_action, e.actions[1]);
        EXPECT_EQ(first.next_window.slots.back(), e.observations[1]);
    }
}

TEST(Sampling, UniformOverTransitions) {
    const auto ds = generate_mixed_dataset({}, 12, 0.5, NoiseSpec{0.3}, 2);
    const TransitionIndex index(ds);
    const std::size_t n = index.size();
    std::map<std::pair<std::size_t, std::size_t>, int> counts;
    Rng rng(11);
    const int draws = 100000;
    for (int k = 0; k < draws / 100; ++k)
        for (const auto& s : sample_batch(ds, index, 100, 1, rng)) ++counts[{s.episode, s.t}];
    EXPECT_EQ(counts.size(), n);
    const double p = 1.0 / static_cast<double>(n);
    const double sigma = std::sqrt(draws * p * (1 - p));
    for (const auto& [key, c] : counts) EXPECT_NEAR(c, draws * p, 3.5 * sigma);
}

TEST(Serialization, DatasetRoundTripIsExact) {
    auto ds = generate_mixed_dataset({}, 40, 0.2, NoiseSpec{0.3}, 13);
    ds.episodes[3] = relabel_episode(ds.episodes[3], 2);
    ds.episodes[4].observations[0][0] = 0.1 + 1e-17;
    ds.episodes[4].observations[0][1] = 1.0 / 3.0;
    std::stringstream a;
    write_dataset(a, ds);
    const auto back = read_dataset(a);
    std::ostringstream b;
    write_dataset(b, back);
    EXPECT_EQ(a.str(), b.str());
    ASSERT_EQ(back.episodes.size(), ds.episodes.size());
    for (std::size_t i = 0; i < ds.episodes.size(); ++i) {
        EXPECT_EQ(back.episodes[i].observations, ds.episodes[i].observations);
        EXPECT_EQ(back.episodes[i].actions, ds.episodes[i].actions);
        EXPECT_EQ(back.episodes[i].rewards, ds.episodes[i].rewards);
        EXPECT_EQ(back.episodes[i].mc_returns, ds.episodes[i].mc_returns);
        EXPECT_EQ(back.episodes[i].task_id, ds.episodes[i].task_id);
        EXPECT_EQ(back.episodes[i].origin, ds.episodes[i].origin);
    }
    EXPECT_EQ(back.action_spec, ds.action_spec);
    EXPECT_EQ(back.gamma, ds.gamma);
    EXPECT_EQ(back.metadata, ds.metadata);
}

TEST(Serialization, MalformedFilesAreRejectedWithLineNumbers) {
    std::istringstream empty("");
    EXPECT_THROW(read_dataset(empty), ParseError);
    std::istringstream no_header("{\"task_id\":0}\n");
    EXPECT_THROW(read_dataset(no_header), ParseError);
    std::stringstream good;
    write_dataset(good, generate_mixed_dataset({}, 2, 1.0, NoiseSpec{0.3}, 1));
    std::istringstream broken(good.str() + "{not json\n");
    try {
        read_dataset(broken);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
    }
}
