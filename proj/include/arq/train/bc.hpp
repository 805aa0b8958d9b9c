#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "arq/data/dataset_ops.hpp"
#include "arq/train/trainer.hpp"

namespace arq::train {

/// One step of per-dimension cross-entropy on dataset bins. Returns the mean
/// batch loss.
inline double bc_step(TrainState& st, const OfflineDataset& ds, const data::TransitionIndex& index,
                      const TrainConfig& cfg, int threads) {
    const data::Batch batch = data::sample_batch(ds, index, cfg.batch_size, cfg.window_w, st.rng);
    const std::size_t n_chunks = (batch.size() + detail::kChunk - 1) / detail::kChunk;
    std::vector<std::vector<double>> grads(n_chunks);
    std::vector<double> losses(batch.size(), 0.0);
    const double w = 1.0 / static_cast<double>(batch.size());

    detail::for_each_chunk(n_chunks, threads, [&](std::size_t c) {
        grads[c].assign(st.online.size(), 0.0);
        const std::size_t end = std::min(batch.size(), (c + 1) * detail::kChunk);
        for (std::size_t i = c * detail::kChunk; i < end; ++i)
            losses[i] = bc_sample_loss<double>(st.model, st.online.values, grads[c], batch[i], w);
    });

    std::vector<double> grad(st.online.size(), 0.0);
    for (const auto& g : grads)
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g[i];
    double loss = 0.0;
    std::vector<std::size_t> bad;
    for (std::size_t i = 0; i < losses.size(); ++i) {
        if (!std::isfinite(losses[i])) bad.push_back(i);
        loss += losses[i];
    }
    if (!bad.empty()) throw NanLossError("non-finite behavior-cloning loss at step " + std::to_string(st.step), bad);
    detail::sgd_momentum(st, grad, cfg);
    ++st.step;
    return loss * w;
}

/// Behavior cloning on the successful episodes of `ds` with the Q-model's
/// architecture. The policy is greedy decoding of the trained logits.
inline TrainResult train_bc(const OfflineDataset& ds, const TrainConfig& cfg, const TrainHooks& hooks = {}) {
    cfg.validate();
    require(hooks.log_every >= 1, "log_every must be positive");
    const OfflineDataset demos = data::successful_episodes(ds);
    require(!demos.episodes.empty(), "behavior cloning needs at least one successful episode");
    TrainResult res;
    res.state = init_state(demos, cfg);
    TrainState& st = res.state;
    const data::TransitionIndex index(demos);
    const int threads = thread_count(hooks.threads);

    double acc = 0.0;
    int acc_steps = 0;
    for (int k = 0; k < cfg.grad_steps; ++k) {
        acc += bc_step(st, demos, index, cfg, threads);
        ++acc_steps;
        const bool last = k + 1 == cfg.grad_steps;
        const bool log = st.step % hooks.log_every == 0 || last;
        const bool eval = hooks.evaluator && ((cfg.eval_every > 0 && st.step % cfg.eval_every == 0) || last);
        if (log || eval) {
            MetricRow row;
            row.step = st.step;
            row.loss_bc = acc / acc_steps;
            if (eval) row.eval_success_rate = hooks.evaluator(st);
            res.metrics.push_back(row);
            acc = 0.0;
            acc_steps = 0;
        }
        if (hooks.on_checkpoint && hooks.checkpoint_every > 0 && st.step % hooks.checkpoint_every == 0)
            hooks.on_checkpoint(st);
    }
    st.target = st.online;
    return res;
}

}  // namespace arq::train
