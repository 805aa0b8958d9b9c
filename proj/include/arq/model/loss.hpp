#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "arq/core/types.hpp"
#include "arq/data/batch.hpp"
#include "arq/model/seq_q_model.hpp"

namespace arq {

struct TargetSet {
    // Per action dimension: the value regressed onto at the dataset bin.
    std::vector<double> targets;
    // The same targets before the Monte-Carlo max is applied.
    std::vector<double> bootstrap;
};

/// Q-targets for every dimension of one transition, read from the target
/// network. They are constants: nothing here is differentiated.
///
/// Per-dimension chaining: dimension i < d_A bootstraps from the max over
/// dimension i+1 given the dataset prefix (no reward, no discount); the last
/// dimension gets R + gamma * max over dimension 1 at the next window.
/// With n-step targets every dimension instead uses
/// R + gamma * max over the last dimension at the next window, conditioned on
/// the next dataset action's first d_A - 1 bins.
inline TargetSet compute_targets(const SeqQModel& model, const ParamVector& target_params, const data::Sample& s,
                                 const TrainConfig& cfg) {
    const int D = model.num_dims();
    if (cfg.use_mc_max) require(s.mc_return.has_value(), "sample has no Monte-Carlo return but use_mc_max is on");
    TargetSet out;
    out.bootstrap.assign(static_cast<std::size_t>(D), 0.0);
    const auto max_of = [](const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); };

    if (cfg.use_n_step) {
        double next = 0.0;
        if (!s.done) {
            require(s.next_action.has_value(), "n-step target needs the next dataset action");
            const BinVector prefix(s.next_action->begin(), s.next_action->begin() + (D - 1));
            next = max_of(model.q_values(target_params, s.next_window, prefix));
        }
        std::fill(out.bootstrap.begin(), out.bootstrap.end(), s.reward + cfg.gamma * next);
    } else {
        if (D > 1) {
            const auto q = model.q_values_along(target_params, s.window, s.action);
            for (int i = 0; i + 1 < D; ++i) out.bootstrap[static_cast<std::size_t>(i)] = max_of(q[static_cast<std::size_t>(i + 1)]);
        }
        const double next = s.done ? 0.0 : max_of(model.q_values(target_params, s.next_window, {}));
        out.bootstrap[static_cast<std::size_t>(D - 1)] = s.reward + cfg.gamma * next;
    }
    out.targets = out.bootstrap;
    if (cfg.use_mc_max)
        for (auto& t : out.targets) t = std::max(*s.mc_return, t);
    return out;
}

struct LossBreakdown {
    double td = 0.0;
    double reg = 0.0;  // already multiplied by alpha
    double total() const { return td + reg; }
    double q_dataset_sum = 0.0;
    int q_dataset_count = 0;
    double q_unseen_sum = 0.0;
    int q_unseen_count = 0;

    LossBreakdown& operator+=(const LossBreakdown& o) {
        td += o.td;
        reg += o.reg;
        q_dataset_sum += o.q_dataset_sum;
        q_dataset_count += o.q_dataset_count;
        q_unseen_sum += o.q_unseen_sum;
        q_unseen_count += o.q_unseen_count;
        return *this;
    }
};

/// Loss on the dimensions in `dims` for one transition, summed over those
/// dimensions. When `grads` is non-empty, weight * dLoss/dparams is added to it.
/// `total` (optional) receives the unweighted loss in T precision.
///
///   TD  = 1/2 (Q(dataset bin) - target)^2
///   paper:   + alpha * 1/(2(N-1)) * sum_{b != dataset bin} Q(b)^2
///   softmax: + alpha * cross-entropy(softmax over the N Q-values, dataset bin)
///   none:    TD only
template <class T>
LossBreakdown sample_loss(const SeqQModel& model, std::span<const T> params, std::span<T> grads, const data::Sample& s,
                          const std::vector<double>& targets, const TrainConfig& cfg, T weight,
                          const std::vector<int>& dims, T* total = nullptr) {
    const int D = model.num_dims();
    require(static_cast<int>(s.action.size()) == D, "sample action has wrong length");
    T acc = T(0);
    ad::Tape<T> tape(params, grads);
    const BinVector prefix(s.action.begin(), s.action.begin() + (D - 1));
    const auto out = model.build(tape, s.window, prefix, dims);

    LossBreakdown lb;
    for (std::size_t k = 0; k < dims.size(); ++k) {
        const int i = dims[k];
        const auto& z = tape.value(out[k]).data;
        const int N = static_cast<int>(z.size());
        const int a = s.action[static_cast<std::size_t>(i)];
        const T y = static_cast<T>(targets[static_cast<std::size_t>(i)]);
        std::vector<T> q(z.size()), dq(z.size(), T(0));
        for (int b = 0; b < N; ++b) q[static_cast<std::size_t>(b)] = T(1) / (T(1) + std::exp(-z[static_cast<std::size_t>(b)]));

        const T qa = q[static_cast<std::size_t>(a)];
        acc += T(0.5) * (qa - y) * (qa - y);
        lb.td += static_cast<double>(T(0.5) * (qa - y) * (qa - y));
        dq[static_cast<std::size_t>(a)] += qa - y;
        lb.q_dataset_sum += static_cast<double>(qa);
        ++lb.q_dataset_count;
        for (int b = 0; b < N; ++b)
            if (b != a) {
                lb.q_unseen_sum += static_cast<double>(q[static_cast<std::size_t>(b)]);
                ++lb.q_unseen_count;
            }

        const T alpha = static_cast<T>(cfg.alpha);
        switch (cfg.conservatism_mode) {
            case ConservatismMode::paper: {
                const T c = alpha / (T(2) * T(N - 1));
                T reg = T(0);
                for (int b = 0; b < N; ++b) {
                    if (b == a) continue;
                    const T qb = q[static_cast<std::size_t>(b)];
                    reg += c * qb * qb;
                    dq[static_cast<std::size_t>(b)] += T(2) * c * qb;
                }
                acc += reg;
                lb.reg += static_cast<double>(reg);
                break;
            }
            case ConservatismMode::softmax: {
                T mx = *std::max_element(q.begin(), q.end());
                T sum = T(0);
                std::vector<T> p(q.size());
                for (std::size_t b = 0; b < q.size(); ++b) {
                    p[b] = std::exp(q[b] - mx);
                    sum += p[b];
                }
                for (auto& v : p) v /= sum;
                acc -= alpha * std::log(p[static_cast<std::size_t>(a)]);
                lb.reg += static_cast<double>(-alpha * std::log(p[static_cast<std::size_t>(a)]));
                for (int b = 0; b < N; ++b)
                    dq[static_cast<std::size_t>(b)] += alpha * (p[static_cast<std::size_t>(b)] - (b == a ? T(1) : T(0)));
                break;
            }
            case ConservatismMode::none:
                break;
        }
        if (tape.recording()) {
            auto& g = tape.grad(out[k]).data;
            for (int b = 0; b < N; ++b) {
                const T qb = q[static_cast<std::size_t>(b)];
                g[static_cast<std::size_t>(b)] += weight * dq[static_cast<std::size_t>(b)] * qb * (T(1) - qb);
            }
        }
    }
    if (tape.recording()) tape.backward();
    if (total) *total = acc;
    return lb;
}

inline std::vector<int> all_dims(const SeqQModel& model) {
    std::vector<int> d(static_cast<std::size_t>(model.num_dims()));
    for (int i = 0; i < model.num_dims(); ++i) d[static_cast<std::size_t>(i)] = i;
    return d;
}

struct DimLoss {
    LossBreakdown loss;
    std::vector<double> gradient;
    double target = 0.0;
};

/// Loss and gradient of a single action dimension for one transition.
inline DimLoss per_dim_loss(const SeqQModel& model, const ParamVector& online, const ParamVector& target,
                            const data::Sample& s, int dim, const TrainConfig& cfg) {
    require(dim >= 0 && dim < model.num_dims(), "dimension out of range");
    const TargetSet ts = compute_targets(model, target, s, cfg);
    DimLoss out;
    out.gradient.assign(online.size(), 0.0);
    out.target = ts.targets[static_cast<std::size_t>(dim)];
    out.loss = sample_loss<double>(model, online.values, out.gradient, s, ts.targets, cfg, 1.0, {dim});
    return out;
}

/// Behavior-cloning loss: per-dimension cross-entropy of softmax(logits)
/// against the dataset bins, sigmoid head bypassed.
template <class T>
double bc_sample_loss(const SeqQModel& model, std::span<const T> params, std::span<T> grads, const data::Sample& s,
                      T weight) {
    const int D = model.num_dims();
    ad::Tape<T> tape(params, grads);
    const BinVector prefix(s.action.begin(), s.action.begin() + (D - 1));
    const auto out = model.build(tape, s.window, prefix, all_dims(model));
    double loss = 0.0;
    for (int i = 0; i < D; ++i) {
        const auto& z = tape.value(out[static_cast<std::size_t>(i)]).data;
        const int a = s.action[static_cast<std::size_t>(i)];
        const T mx = *std::max_element(z.begin(), z.end());
        T sum = T(0);
        std::vector<T> p(z.size());
        for (std::size_t b = 0; b < z.size(); ++b) {
            p[b] = std::exp(z[b] - mx);
            sum += p[b];
        }
        for (auto& v : p) v /= sum;
        loss += static_cast<double>(-std::log(p[static_cast<std::size_t>(a)]));
        if (tape.recording()) {
            auto& g = tape.grad(out[static_cast<std::size_t>(i)]).data;
            for (std::size_t b = 0; b < z.size(); ++b)
                g[b] += weight * (p[b] - (static_cast<int>(b) == a ? T(1) : T(0)));
        }
    }
    if (tape.recording()) tape.backward();
    return loss;
}

}  // namespace arq
