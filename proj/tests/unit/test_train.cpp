#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "arq/data/dataset_ops.hpp"
#include "arq/train/ablation.hpp"
#include "arq/train/bc.hpp"
#include "arq/train/evaluate.hpp"
#include "arq/train/metrics_io.hpp"
#include "arq/train/trainer.hpp"

using namespace arq;
using namespace arq::train;

namespace {

OfflineDataset single_transition_dataset() {
    OfflineDataset ds;
    ds.action_spec = env::GridPickEnv::action_spec();
    ds.obs_dim = env::kGridPickObsDim;
    ds.gamma = 0.98;
    Episode e;
    e.observations = {{0.25, 0.5, 0.25, 0.5, 1.0, 0.0}};
    e.actions = {{2, 0, 1, 1}};
    e.rewards = {1.0};
    e.origin = EpisodeOrigin::demo;
    ds.episodes.push_back(compute_mc_returns(e, ds.gamma));
    return ds;
}

TrainConfig small_config(int steps) {
    TrainConfig c;
    c.grad_steps = steps;
    c.batch_size = 8;
    c.model_width = 16;
    c.num_layers = 1;
    c.eval_episodes = 20;
    return c;
}

std::string metrics_text(const TrainResult& r) {
    std::ostringstream out;
    write_metrics(out, r.metrics);
    return out.str();
}

}  // namespace

TEST(Trainer, ZeroStepsLeavesInitialParameters) {
    const auto ds = single_transition_dataset();
    const auto cfg = small_config(0);
    const auto res = train_offline(ds, cfg);
    EXPECT_EQ(res.state.online.values, init_state(ds, cfg).online.values);
    EXPECT_EQ(res.state.step, 0);
    EXPECT_TRUE(res.metrics.empty());
}

TEST(Trainer, SingleTransitionConvergesToReward) {
    const auto ds = single_transition_dataset();
    auto cfg = small_config(3000);
    cfg.alpha = 0.0;
    cfg.conservatism_mode = ConservatismMode::none;
    const auto res = train_offline(ds, cfg);
    const auto s = data::make_sample(ds, 0, 0, 1);
    const auto q = res.state.model.q_values_along(res.state.online, s.window, s.action);
    for (int i = 0; i < 4; ++i)
        EXPECT_NEAR(q[static_cast<std::size_t>(i)][static_cast<std::size_t>(s.action[static_cast<std::size_t>(i)])], 1.0, 0.05);
}

TEST(Trainer, DeterministicAndThreadInvariant) {
    const auto ds = data::generate_mixed_dataset({}, 40, 0.2, data::NoiseSpec{0.3}, 1);
    const auto cfg = small_config(40);
    TrainHooks one, three;
    one.log_every = three.log_every = 10;
    one.threads = 1;
    three.threads = 3;
    const auto a = train_offline(ds, cfg, one);
    const auto b = train_offline(ds, cfg, one);
    const auto c = train_offline(ds, cfg, three);
    EXPECT_EQ(a.state.online.values, b.state.online.values);
    EXPECT_EQ(a.state.online.values, c.state.online.values);
    EXPECT_EQ(metrics_text(a), metrics_text(c));
    auto other = cfg;
    other.seed = 1;
    EXPECT_NE(train_offline(ds, other, one).state.online.values, a.state.online.values);
}

TEST(Trainer, TargetsStayInUnitInterval) {
    const auto ds = data::filter_successes(data::generate_mixed_dataset({}, 60, 0.2, data::NoiseSpec{0.3}, 2));
    for (bool nstep : {true, false}) {
        auto cfg = small_config(50);
        cfg.use_n_step = nstep;
        TrainHooks hooks;
        hooks.log_every = 10;
        for (const auto& row : train_offline(ds, cfg, hooks).metrics) {
            EXPECT_GE(row.min_target, 0.0);
            EXPECT_LE(row.max_target, 1.0);
            EXPECT_TRUE(std::isfinite(row.loss_td));
        }
    }
}

TEST(Trainer, NonFiniteLossReportsBatchIndices) {
    const auto ds = single_transition_dataset();
    const auto cfg = small_config(1);
    auto st = init_state(ds, cfg);
    std::fill(st.online.values.begin(), st.online.values.end(), std::numeric_limits<double>::quiet_NaN());
    const data::TransitionIndex index(ds);
    try {
        train_step(st, ds, index, cfg, 1);
        FAIL();
    } catch (const NanLossError& e) {
        EXPECT_EQ(e.offending.size(), 8u);
    }
}

TEST(Trainer, RejectsMismatchedGamma) {
    auto cfg = small_config(1);
    cfg.gamma = 0.9;
    EXPECT_THROW(train_offline(single_transition_dataset(), cfg), InvalidArgument);
}

TEST(Evaluate, ExpertAlwaysSucceeds) {
    const env::GridPickConfig cfg;
    const auto rep = evaluate(expert_policy(cfg), cfg, 200, 3);
    EXPECT_EQ(rep.success_rate, 1.0);
    EXPECT_EQ(rep.episodes, 200);
}

TEST(Evaluate, RandomPolicyRarelySucceeds) {
    const env::GridPickConfig cfg;
    EXPECT_LT(evaluate(random_policy(env::GridPickEnv::action_spec(), 1), cfg, 500, 4).success_rate, 0.05);
}

TEST(Evaluate, NeedsEpisodes) {
    const env::GridPickConfig cfg;
    EXPECT_THROW(evaluate(expert_policy(cfg), cfg, 0, 1), InvalidArgument);
}

TEST(Evaluate, SameSeedSameStarts) {
    const env::GridPickConfig cfg;
    const SeqQModel m(ModelShape{6, 1, 8, 1, {3, 3, 2, 2}});
    const auto p = m.init_params(1);
    EXPECT_EQ(evaluate(greedy_policy(m, p), cfg, 30, 5).mean_return, evaluate(greedy_policy(m, p), cfg, 30, 5).mean_return);
}

TEST(BehaviorCloning, SingleTransitionLossVanishes) {
    auto cfg = small_config(400);
    TrainHooks hooks;
    hooks.log_every = 50;
    const auto res = train_bc(single_transition_dataset(), cfg, hooks);
    ASSERT_FALSE(res.metrics.empty());
    EXPECT_LT(res.metrics.back().loss_bc, 0.05);
    EXPECT_EQ(res.state.target.values, res.state.online.values);
}

TEST(BehaviorCloning, NeedsSuccessfulEpisodes) {
    auto ds = single_transition_dataset();
    ds.episodes[0].rewards = {0.0};
    ds.episodes[0] = compute_mc_returns(ds.episodes[0], ds.gamma);
    EXPECT_THROW(train_bc(ds, small_config(1)), InvalidArgument);
}

TEST(BehaviorCloning, LearnsTheExpertFromDemos) {
    const auto ds = data::successful_episodes(data::generate_mixed_dataset({}, 500, 0.08, data::NoiseSpec{0.3}, 7));
    TrainConfig cfg;
    cfg.grad_steps = 3000;
    cfg.batch_size = 32;
    const auto res = train_bc(ds, cfg);
    const env::GridPickConfig env;
    EXPECT_GE(evaluate(greedy_policy(res.state.model, res.state.online), env, 200, 9).success_rate, 0.9);
}

TEST(Ablation, IdenticalResolvedConfigsAreCached) {
    const auto ds = data::generate_mixed_dataset({}, 30, 0.2, data::NoiseSpec{0.3}, 3);
    auto base = small_config(3);
    base.alpha = 0.0;
    const std::vector<AblationCell> cells{{"a", ConservatismMode::paper, true, true, false},
                                          {"b", ConservatismMode::softmax, true, true, false},
                                          {"c", ConservatismMode::paper, false, true, false}};
    int runs = 0;
    AblationOptions opt;
    opt.progress = [&](const std::string&) { ++runs; };
    const auto table = run_ablation_matrix(ds, base, {0, 1}, cells, opt);
    ASSERT_EQ(table.size(), 3u);
    EXPECT_FALSE(table[0].cached);
    EXPECT_TRUE(table[1].cached);
    EXPECT_FALSE(table[2].cached);
    EXPECT_EQ(runs, 4);
    EXPECT_EQ(table[1].mean_success(), table[0].mean_success());
}

TEST(Ablation, StepsToFraction) {
    const std::vector<std::pair<std::int64_t, double>> curve{{100, 0.2}, {200, 0.85}, {300, 0.95}, {400, 1.0}};
    EXPECT_EQ(steps_to_fraction(curve, 1.0), 300);
    EXPECT_EQ(steps_to_fraction(curve, 0.5), 200);
}
