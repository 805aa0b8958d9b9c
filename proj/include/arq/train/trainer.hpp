#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "arq/core/random.hpp"
#include "arq/core/types.hpp"
#include "arq/data/batch.hpp"
#include "arq/model/loss.hpp"
#include "arq/model/seq_q_model.hpp"

namespace arq::train {

struct MetricRow {
    std::int64_t step = 0;
    double loss_td = 0.0;
    double loss_reg = 0.0;
    double loss_bc = 0.0;  // behavior-cloning runs only
    double mean_q_dataset = 0.0;
    double mean_q_unseen = 0.0;
    double mean_target = 0.0;
    double min_target = 0.0;
    double max_target = 0.0;
    std::optional<double> eval_success_rate;
};

struct TrainState {
    SeqQModel model;
    ParamVector online;
    ParamVector target;
    std::vector<double> velocity;
    std::int64_t step = 0;
    Rng rng{0};
};

/// What the loop reports back through and how often.
struct TrainHooks {
    int log_every = 100;
    // Called every config.eval_every steps and after the last step; returns a
    // success rate that is attached to the metrics row of that step.
    std::function<double(const TrainState&)> evaluator;
    int checkpoint_every = 0;
    std::function<void(const TrainState&)> on_checkpoint;
    // 0: take ARQ_THREADS from the environment, default 1.
    int threads = 0;
};

struct TrainResult {
    TrainState state;
    std::vector<MetricRow> metrics;
};

inline int thread_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("ARQ_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

inline ModelShape model_shape(const OfflineDataset& ds, const TrainConfig& cfg) {
    return ModelShape{static_cast<int>(ds.obs_dim), cfg.window_w, cfg.model_width, cfg.num_layers, ds.action_spec.bins()};
}

inline TrainState init_state(const OfflineDataset& ds, const TrainConfig& cfg) {
    TrainState st;
    st.model = SeqQModel(model_shape(ds, cfg));
    st.online = st.model.init_params(Rng::derive(cfg.seed, 0));
    st.target = st.online;
    st.velocity.assign(st.online.size(), 0.0);
    st.rng = Rng(Rng::derive(cfg.seed, 1));
    return st;
}

namespace detail {

// Samples are processed in fixed chunks whose gradients are summed in chunk order.
inline constexpr std::size_t kChunk = 8;

struct ChunkResult {
    std::vector<double> grad;
    LossBreakdown loss;
    double target_sum = 0.0;
    int target_count = 0;
    double target_min = std::numeric_limits<double>::infinity();
    double target_max = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> bad;
};

template <class Fn>
void for_each_chunk(std::size_t n_chunks, int threads, Fn&& fn) {
    if (threads <= 1 || n_chunks <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) fn(c);
        return;
    }
    std::vector<std::jthread> pool;
    const auto T = static_cast<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(threads), n_chunks));
    for (std::size_t t = 0; t < T; ++t)
        pool.emplace_back([&, t] {
            for (std::size_t c = t; c < n_chunks; c += T) fn(c);
        });
}

inline void sgd_momentum(TrainState& st, const std::vector<double>& grad, const TrainConfig& cfg) {
    for (std::size_t i = 0; i < grad.size(); ++i) {
        st.velocity[i] = cfg.momentum * st.velocity[i] + grad[i];
        st.online.values[i] -= cfg.learning_rate * st.velocity[i];
    }
}

}  // namespace detail

struct StepStats {
    LossBreakdown loss;  // batch means
    double target_sum = 0.0;
    int target_count = 0;
    double target_min = std::numeric_limits<double>::infinity();
    double target_max = -std::numeric_limits<double>::infinity();
};

/// One gradient step on the Q-learning objective: targets from the target
/// network, all action dimensions of every sample, SGD with momentum, then EMA.
inline StepStats train_step(TrainState& st, const OfflineDataset& ds, const data::TransitionIndex& index,
                            const TrainConfig& cfg, int threads) {
    const data::Batch batch = data::sample_batch(ds, index, cfg.batch_size, cfg.window_w, st.rng);
    const std::size_t n_chunks = (batch.size() + detail::kChunk - 1) / detail::kChunk;
    std::vector<detail::ChunkResult> chunks(n_chunks);
    const double w = 1.0 / static_cast<double>(batch.size());
    const std::vector<int> dims = all_dims(st.model);

    detail::for_each_chunk(n_chunks, threads, [&](std::size_t c) {
        auto& out = chunks[c];
        out.grad.assign(st.online.size(), 0.0);
        const std::size_t end = std::min(batch.size(), (c + 1) * detail::kChunk);
        for (std::size_t i = c * detail::kChunk; i < end; ++i) {
            const TargetSet ts = compute_targets(st.model, st.target, batch[i], cfg);
            const LossBreakdown lb =
                sample_loss<double>(st.model, st.online.values, out.grad, batch[i], ts.targets, cfg, w, dims);
            if (!std::isfinite(lb.total())) out.bad.push_back(i);
            out.loss += lb;
            for (double t : ts.targets) {
                out.target_sum += t;
                ++out.target_count;
                out.target_min = std::min(out.target_min, t);
                out.target_max = std::max(out.target_max, t);
            }
        }
    });

    std::vector<double> grad(st.online.size(), 0.0);
    StepStats stats;
    std::vector<std::size_t> bad;
    for (const auto& ch : chunks) {
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += ch.grad[i];
        stats.loss += ch.loss;
        stats.target_sum += ch.target_sum;
        stats.target_count += ch.target_count;
        stats.target_min = std::min(stats.target_min, ch.target_min);
        stats.target_max = std::max(stats.target_max, ch.target_max);
        bad.insert(bad.end(), ch.bad.begin(), ch.bad.end());
    }
    if (!bad.empty()) {
        std::string msg = "non-finite loss at step " + std::to_string(st.step) + ", batch indices:";
        for (auto i : bad) msg += " " + std::to_string(i);
        throw NanLossError(msg, bad);
    }
    stats.loss.td *= w;
    stats.loss.reg *= w;
    detail::sgd_momentum(st, grad, cfg);
    ema_update(st.target, st.online, cfg.ema_rate);
    ++st.step;
    return stats;
}

inline void check_dataset_for_training(const OfflineDataset& ds, const TrainConfig& cfg) {
    cfg.validate();
    ds.validate();
    require(!ds.episodes.empty(), "training dataset is empty");
    if (cfg.use_mc_max) {
        for (const auto& e : ds.episodes) require(e.mc_returns.has_value(), "use_mc_max needs Monte-Carlo returns in the dataset");
        require(std::abs(ds.gamma - cfg.gamma) <= 1e-12, "config gamma differs from the gamma of the dataset's returns");
    }
}

/// Runs cfg.grad_steps updates from a fresh state. Deterministic per
/// (dataset, config): the seed fixes initialization and batch sampling.
inline TrainResult train_offline(const OfflineDataset& ds, const TrainConfig& cfg, const TrainHooks& hooks = {}) {
    check_dataset_for_training(ds, cfg);
    require(hooks.log_every >= 1, "log_every must be positive");
    TrainResult res;
    res.state = init_state(ds, cfg);
    TrainState& st = res.state;
    const data::TransitionIndex index(ds);
    const int threads = thread_count(hooks.threads);

    StepStats acc;
    int acc_steps = 0;
    for (int k = 0; k < cfg.grad_steps; ++k) {
        const StepStats s = train_step(st, ds, index, cfg, threads);
        acc.loss += s.loss;
        acc.target_sum += s.target_sum;
        acc.target_count += s.target_count;
        acc.target_min = std::min(acc.target_min, s.target_min);
        acc.target_max = std::max(acc.target_max, s.target_max);
        ++acc_steps;

        const bool last = k + 1 == cfg.grad_steps;
        const bool log = st.step % hooks.log_every == 0 || last;
        const bool eval = hooks.evaluator && ((cfg.eval_every > 0 && st.step % cfg.eval_every == 0) || last);
        if (log || eval) {
            MetricRow row;
            row.step = st.step;
            row.loss_td = acc.loss.td / acc_steps;
            row.loss_reg = acc.loss.reg / acc_steps;
            row.mean_q_dataset = acc.loss.q_dataset_count ? acc.loss.q_dataset_sum / acc.loss.q_dataset_count : 0.0;
            row.mean_q_unseen = acc.loss.q_unseen_count ? acc.loss.q_unseen_sum / acc.loss.q_unseen_count : 0.0;
            row.mean_target = acc.target_count ? acc.target_sum / acc.target_count : 0.0;
            row.min_target = acc.target_min;
            row.max_target = acc.target_max;
            if (eval) row.eval_success_rate = hooks.evaluator(st);
            res.metrics.push_back(row);
            acc = StepStats{};
            acc_steps = 0;
        }
        if (hooks.on_checkpoint && hooks.checkpoint_every > 0 && st.step % hooks.checkpoint_every == 0)
            hooks.on_checkpoint(st);
    }
    return res;
}

}  // namespace arq::train
