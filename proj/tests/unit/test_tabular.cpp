#include <cmath>

#include <gtest/gtest.h>

#include "arq/env/random_mdp.hpp"
#include "arq/tabular/conservative.hpp"
#include "arq/tabular/value_iteration.hpp"
#include "arq/tabular/verification.hpp"

using namespace arq;
using namespace arq::tabular;

namespace {

// State 0 moves to the absorbing terminal state 1 whatever the action; the
// joint action (1,1) earns reward 1.
TabularMdp one_step_mdp() {
    TabularMdp m;
    m.num_states = 2;
    m.action_spec = ActionSpec::discrete({2, 2});
    m.gamma = 0.9;
    m.terminal = {0, 1};
    const std::size_t A = 4;
    m.transition.assign(2 * A * 2, 0.0);
    m.reward.assign(2 * A, 0.0);
    for (std::size_t a = 0; a < A; ++a) {
        m.transition[(0 * A + a) * 2 + 1] = 1.0;
        m.transition[(1 * A + a) * 2 + 1] = 1.0;
    }
    m.reward[m.action_spec.joint_index({1, 1})] = 1.0;
    return m;
}

// A single state whose only dimension determines the reward.
TabularMdp single_dim_mdp(std::uint64_t seed) {
    env::RandomMdpOptions o;
    o.num_states = 3;
    o.num_dims = 1;
    o.bins = 3;
    return env::random_tabular_mdp(seed, o);
}

EmpiricalBehavior dirac_behavior(const TabularMdp& mdp, const std::vector<std::size_t>& chosen) {
    std::vector<double> counts(static_cast<std::size_t>(mdp.num_states) * mdp.num_actions(), 0.0);
    for (int s = 0; s < mdp.num_states; ++s) counts[static_cast<std::size_t>(s) * mdp.num_actions() + chosen[static_cast<std::size_t>(s)]] = 1.0;
    return EmpiricalBehavior(mdp.num_states, mdp.action_spec, counts);
}

}  // namespace

TEST(FullActionValueIteration, OneStepReward) {
    const auto q = full_action_value_iteration(one_step_mdp());
    EXPECT_NEAR(q.at(0, 3), 1.0, 1e-12);
    for (std::size_t a = 0; a < 3; ++a) EXPECT_NEAR(q.at(0, a), 0.0, 1e-12);
}

TEST(FullActionValueIteration, ZeroRewardGivesZero) {
    env::RandomMdpOptions o;
    o.zero_rewards = true;
    const auto q = full_action_value_iteration(env::random_tabular_mdp(3, o));
    for (double v : q.values) EXPECT_EQ(v, 0.0);
}

TEST(FullActionValueIteration, MatchesLongBruteForceBackup) {
    const auto mdp = env::random_tabular_mdp(17, {});
    ASSERT_EQ(mdp.num_states, 4);
    ActionValues brute(mdp.num_states, mdp.num_actions());
    for (int i = 0; i < 100000; ++i) brute = full_action_backup(mdp, brute);
    const auto q = full_action_value_iteration(mdp);
    for (std::size_t i = 0; i < q.values.size(); ++i) EXPECT_NEAR(q.values[i], brute.values[i], 1e-8);
}

TEST(PerDimValueIteration, HandEnumeratedNodes) {
    const auto q = per_dim_value_iteration(one_step_mdp(), 1e-12);
    EXPECT_NEAR(q.at(0, BinVector{1}), 1.0, 1e-12);
    EXPECT_NEAR(q.at(0, BinVector{0}), 0.0, 1e-12);
    EXPECT_NEAR(q.at(0, BinVector{1, 1}), 1.0, 1e-12);
    EXPECT_NEAR(q.at(0, BinVector{1, 0}), 0.0, 1e-12);
    EXPECT_NEAR(q.at(0, BinVector{0, 1}), 0.0, 1e-12);
}

TEST(PerDimValueIteration, ZeroRewardGivesZero) {
    env::RandomMdpOptions o;
    o.zero_rewards = true;
    o.num_dims = 3;
    const auto q = per_dim_value_iteration(env::random_tabular_mdp(5, o));
    for (double v : q.values()) EXPECT_EQ(v, 0.0);
}

TEST(PerDimValueIteration, RootValuesMatchFullActionValues) {
    const auto r = consistency_suite(60, 99);
    EXPECT_TRUE(r.passed) << r.worst;
    EXPECT_LT(r.worst, 1e-8);
}

TEST(PerDimValueIteration, LeafValuesEqualFullActionQ) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        env::RandomMdpOptions o;
        o.num_dims = 3;
        o.bins = 2;
        const auto mdp = env::random_tabular_mdp(seed, o);
        const auto full = full_action_value_iteration(mdp, 1e-13);
        const auto per = per_dim_value_iteration(mdp, 1e-13);
        for (int s = 0; s < mdp.num_states; ++s)
            for (std::size_t a = 0; a < mdp.num_actions(); ++a) EXPECT_NEAR(per.at(s, 2, a), full.at(s, a), 1e-9);
    }
}

TEST(PerDimValueIteration, IntraStepDiscountMutationIsCaught) {
    const auto r = consistency_suite(20, 0, 0.9);
    EXPECT_FALSE(r.passed);
    EXPECT_GT(r.worst, 1e-3);
}

TEST(Contraction, IdenticalTables) {
    const auto mdp = env::random_tabular_mdp(1, {});
    Rng rng(2);
    const QTable q = random_qtable(rng, mdp.num_states, mdp.action_spec, -1.0, 1.0);
    const auto c = contraction_check(mdp, q, q);
    EXPECT_EQ(c.lhs, 0.0);
    EXPECT_EQ(c.rhs, 0.0);
}

TEST(Contraction, ConstantShiftOnFinalDimensionOnlyMdp) {
    const auto mdp = single_dim_mdp(8);
    Rng rng(3);
    const QTable q1 = random_qtable(rng, mdp.num_states, mdp.action_spec, -1.0, 1.0);
    for (double c : {0.5, -2.0, 3.25}) {
        QTable q2 = q1;
        for (auto& v : q2.values()) v += c;
        const auto r = contraction_check(mdp, q1, q2);
        EXPECT_NEAR(r.lhs, mdp.gamma * std::abs(c), 1e-12);
        EXPECT_NEAR(r.rhs, mdp.gamma * std::abs(c), 1e-12);
    }
}

TEST(Contraction, HoldsOnRandomTriples) {
    const auto r = contraction_suite(1000, 5);
    EXPECT_TRUE(r.passed) << r.worst;
}

TEST(Contraction, SingleApplicationIsOnlyANonExpansion) {
    // Differences at a non-final depth pass through one application undiscounted.
    const auto mdp = env::random_tabular_mdp(4, {});
    QTable q1(mdp.num_states, mdp.action_spec);
    QTable q2 = q1;
    for (std::size_t p = 0; p < q2.nodes_at(1); ++p) q2.at(0, 1, p) = 1.0;
    const double once = sup_distance(per_dim_backup(mdp, q1), per_dim_backup(mdp, q2));
    EXPECT_GT(once, mdp.gamma * sup_distance(q1, q2));
    const auto step = contraction_check(mdp, q1, q2);
    EXPECT_LE(step.lhs, step.rhs + 1e-12);
}

TEST(BackupWeights, DiracBehavior) {
    const auto mdp = env::random_tabular_mdp(6, {});
    const std::vector<std::size_t> chosen{0, 4, 8, 5};
    const auto beh = dirac_behavior(mdp, chosen);
    const QTable m = backup_weights(beh, 1.0);
    for (int s = 0; s < mdp.num_states; ++s) {
        const BinVector a = mdp.action_spec.joint_action(chosen[static_cast<std::size_t>(s)]);
        for (std::size_t j = 0; j < mdp.num_actions(); ++j)
            EXPECT_EQ(m.at(s, 1, j), j == chosen[static_cast<std::size_t>(s)] ? 1.0 : 0.0);
        for (int b = 0; b < 3; ++b) EXPECT_EQ(m.at(s, BinVector{b}), b == a[0] ? 1.0 : 0.0);
    }
}

TEST(BackupWeights, AlphaZeroIsPlainBackupOnObservedActions) {
    const auto mdp = env::random_tabular_mdp(6, {});
    const EmpiricalBehavior beh(mdp.num_states, mdp.action_spec, env::random_behavior_counts(1, mdp, false));
    const QTable m = backup_weights(beh, 0.0);
    for (int s = 0; s < mdp.num_states; ++s)
        for (int d = 0; d < m.depth(); ++d)
            for (std::size_t p = 0; p < m.nodes_at(d); ++p)
                if (beh.behavior(s, d, p) > 0.0) EXPECT_EQ(m.at(s, d, p), 1.0);
}

TEST(BackupWeights, UniformOverTwoActionsGivesOneHalf) {
    env::RandomMdpOptions o;
    o.num_states = 1;
    o.num_dims = 1;
    o.bins = 2;
    const auto mdp = env::random_tabular_mdp(0, o);
    const EmpiricalBehavior beh(1, mdp.action_spec, {1.0, 1.0});
    const QTable m = backup_weights(beh, 1.0);
    EXPECT_DOUBLE_EQ(m.at(0, 0, 0), 0.5);
    EXPECT_DOUBLE_EQ(m.at(0, 0, 1), 0.5);
}

TEST(BackupWeights, RangeAndUnitOnZeroComplementProperty) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        Rng rng(seed);
        const auto mdp = env::random_tabular_mdp(seed, random_shape(rng));
        const EmpiricalBehavior beh(mdp.num_states, mdp.action_spec, env::random_behavior_counts(seed, mdp, seed % 3 == 0));
        const double alpha = rng.uniform(0.0, 3.0);
        const QTable m = backup_weights(beh, alpha);
        for (int s = 0; s < mdp.num_states; ++s)
            for (int d = 0; d < m.depth(); ++d)
                for (std::size_t p = 0; p < m.nodes_at(d); ++p) {
                    const double v = m.at(s, d, p);
                    EXPECT_GE(v, 0.0);
                    EXPECT_LE(v, 1.0);
                    if (beh.complement(s, d, p) == 0.0) EXPECT_EQ(v, 1.0);
                }
    }
}

TEST(BackupWeights, AlphaZeroWithUnobservedStateIsDegenerate) {
    const auto mdp = env::random_tabular_mdp(6, {});
    std::vector<double> counts(static_cast<std::size_t>(mdp.num_states) * mdp.num_actions(), 0.0);
    counts[0] = 1.0;
    const EmpiricalBehavior beh(mdp.num_states, mdp.action_spec, counts);
    EXPECT_THROW(backup_weights(beh, 0.0), DegenerateBehavior);
    EXPECT_NO_THROW(backup_weights(beh, 1.0));
    EXPECT_EQ(beh.unvisited_states().size(), 3u);
}

TEST(EmpiricalBehaviorTest, DistributionsNormalizePerNode) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const auto mdp = env::random_tabular_mdp(seed, random_shape(rng));
        const EmpiricalBehavior beh(mdp.num_states, mdp.action_spec, env::random_behavior_counts(seed, mdp, seed % 2 == 0));
        const QTable shape(mdp.num_states, mdp.action_spec);
        for (int s = 0; s < mdp.num_states; ++s) {
            double joint = 0.0;
            for (std::size_t a = 0; a < mdp.num_actions(); ++a) joint += beh.joint(s, a);
            EXPECT_NEAR(joint, 1.0, 1e-12);
            for (int d = 0; d < shape.depth(); ++d) {
                const auto nb = static_cast<std::size_t>(shape.bins(d));
                for (std::size_t parent = 0; parent < shape.nodes_at(d) / nb; ++parent) {
                    double pb = 0.0, comp = 0.0;
                    for (std::size_t b = 0; b < nb; ++b) {
                        pb += beh.behavior(s, d, parent * nb + b);
                        comp += beh.complement(s, d, parent * nb + b);
                        if (beh.behavior(s, d, parent * nb + b) == 1.0) EXPECT_EQ(beh.complement(s, d, parent * nb + b), 0.0);
                    }
                    EXPECT_NEAR(comp, 1.0, 1e-12);
                    EXPECT_TRUE(std::abs(pb - 1.0) < 1e-12 || pb == 0.0);
                }
            }
        }
    }
}

TEST(ConservativeObjective, AlphaZeroReachesBackupOnObservedActions) {
    const auto mdp = env::random_tabular_mdp(9, {});
    const EmpiricalBehavior beh(mdp.num_states, mdp.action_spec, env::random_behavior_counts(2, mdp, false));
    Rng rng(1);
    const QTable q_prev = random_qtable(rng, mdp.num_states, mdp.action_spec, 0.0, 1.0);
    const QTable got = minimize_tabular_objective(mdp, beh, 0.0, q_prev, 1.0, 20000);
    const QTable backup = per_dim_backup(mdp, q_prev);
    for (int s = 0; s < mdp.num_states; ++s)
        for (int d = 0; d < got.depth(); ++d)
            for (std::size_t p = 0; p < got.nodes_at(d); ++p) {
                if (beh.behavior(s, d, p) > 0.0) EXPECT_NEAR(got.at(s, d, p), backup.at(s, d, p), 1e-6);
                else EXPECT_EQ(got.at(s, d, p), 0.0);  // zero weight: keeps its start value
            }
}

TEST(ConservativeObjective, DiracUnseenActionsGoToZero) {
    const auto mdp = env::random_tabular_mdp(6, {});
    const auto beh = dirac_behavior(mdp, {1, 2, 3, 4});
    Rng rng(8);
    const QTable q_prev = random_qtable(rng, mdp.num_states, mdp.action_spec, 0.0, 1.0);
    const QTable got = minimize_tabular_objective(mdp, beh, 1.0, q_prev, 0.5, 20000);
    const QTable expected = conservative_fixed_point(mdp, beh, 1.0, q_prev);
    EXPECT_LT(sup_distance(got, expected), 1e-4);
    for (int s = 0; s < mdp.num_states; ++s)
        for (std::size_t a = 0; a < mdp.num_actions(); ++a)
            if (a != static_cast<std::size_t>(s + 1)) EXPECT_LT(std::abs(got.at(s, 1, a)), 1e-4);
}

TEST(ConservativeObjective, MatchesFixedPointOnRandomInstances) {
    const auto r = fixed_point_suite(30, 12);
    EXPECT_TRUE(r.passed) << r.worst;
}

TEST(ConservativeObjective, ObjectiveDecreasesAndOversizedStepDiverges) {
    const auto mdp = env::random_tabular_mdp(6, {});
    const EmpiricalBehavior beh(mdp.num_states, mdp.action_spec, env::random_behavior_counts(3, mdp, false));
    const QTable q_prev(mdp.num_states, mdp.action_spec, 0.5);
    const auto short_run = minimize_tabular_objective_traced(mdp, beh, 1.0, q_prev, 0.5, 5);
    const auto long_run = minimize_tabular_objective_traced(mdp, beh, 1.0, q_prev, 0.5, 500);
    EXPECT_LE(long_run.final_objective, short_run.final_objective);
    EXPECT_THROW(minimize_tabular_objective(mdp, beh, 1.0, q_prev, 50.0, 100), DivergenceError);
}

TEST(ConservativeFixedPoint, RepeatedIterationConverges) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        env::RandomMdpOptions o;
        o.gamma = 0.95;
        const auto mdp = env::random_tabular_mdp(seed, o);
        const auto beh = dirac_behavior(mdp, {0, 3, 5, 7});
        QTable q(mdp.num_states, mdp.action_spec);
        double change = 1.0;
        int it = 0;
        for (; it < 10000 && change > 1e-13; ++it) {
            QTable next = conservative_fixed_point(mdp, beh, 1.0, q);
            change = sup_distance(next, q);
            q = std::move(next);
        }
        EXPECT_LT(it, 10000);
        const std::vector<std::size_t> chosen{0, 3, 5, 7};
        for (int s = 0; s < mdp.num_states; ++s)
            for (std::size_t a = 0; a < mdp.num_actions(); ++a)
                if (a != chosen[static_cast<std::size_t>(s)]) EXPECT_EQ(q.at(s, 1, a), 0.0);
    }
}

TEST(VerificationSuites, ZeroTrialsPassVacuously) {
    EXPECT_TRUE(consistency_suite(0, 0).passed);
    EXPECT_TRUE(contraction_suite(0, 0).passed);
    EXPECT_TRUE(fixed_point_suite(0, 0).passed);
}

TEST(QTableTest, PrefixIndexingIsDepthFirstBinsAscending) {
    const QTable q(2, ActionSpec::discrete({2, 3}));
    EXPECT_EQ(q.nodes_per_state(), 2u + 6u);
    EXPECT_EQ(q.index(0, BinVector{1}), 1u);
    EXPECT_EQ(q.index(0, BinVector{0, 0}), 2u);
    EXPECT_EQ(q.index(0, BinVector{1, 2}), 7u);
    EXPECT_EQ(q.index(1, BinVector{0}), 8u);
    EXPECT_THROW(q.index(0, BinVector{0, 3}), InvalidArgument);
}
