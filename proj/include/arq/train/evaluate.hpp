#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "arq/core/random.hpp"
#include "arq/core/types.hpp"
#include "arq/env/grid_pick.hpp"
#include "arq/model/seq_q_model.hpp"

namespace arq::train {

using Policy = std::function<BinVector(const StateWindow&)>;

struct EvalReport {
    double success_rate = 0.0;
    int episodes = 0;
    int successes = 0;
    double mean_return = 0.0;
    // Filled when several reports are merged, one entry per seed.
    std::vector<double> per_seed;
};

/// Rolls a window of the last w observations forward through an episode.
class WindowTracker {
public:
    WindowTracker(int w, std::size_t obs_dim) : w_(w), obs_dim_(obs_dim) {}

    void reset(const Observation& o) {
        history_.clear();
        history_.push_back(o);
    }
    void push(const Observation& o) { history_.push_back(o); }

    StateWindow window() const {
        StateWindow win;
        const std::size_t t = history_.size() - 1;
        for (int k = w_ - 1; k >= 0; --k) {
            const auto back = static_cast<std::size_t>(k);
            if (t >= back) {
                win.slots.push_back(history_[t - back]);
                win.pad.push_back(0);
            } else {
                win.slots.emplace_back(obs_dim_, 0.0);
                win.pad.push_back(1);
            }
        }
        return win;
    }

private:
    int w_;
    std::size_t obs_dim_;
    std::vector<Observation> history_;
};

/// Success rate of `policy` on grid-pick over start states drawn from
/// per-episode streams of `seed`. Success means terminal reward 1.
inline EvalReport evaluate(const Policy& policy, const env::GridPickConfig& cfg, int num_episodes, std::uint64_t seed,
                           int window_w = 1) {
    require(num_episodes >= 1, "evaluation needs at least one episode");
    env::GridPickEnv e(cfg);
    WindowTracker tracker(window_w, env::kGridPickObsDim);
    EvalReport rep;
    rep.episodes = num_episodes;
    double total_return = 0.0;
    for (int i = 0; i < num_episodes; ++i) {
        Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(i)));
        tracker.reset(e.reset(rng));
        double ret = 0.0;
        double last = 0.0;
        while (!e.state().done) {
            const auto r = e.step(policy(tracker.window()));
            tracker.push(r.observation);
            ret += r.reward;
            last = r.reward;
        }
        total_return += ret;
        rep.successes += last == 1.0;
    }
    rep.success_rate = static_cast<double>(rep.successes) / rep.episodes;
    rep.mean_return = total_return / rep.episodes;
    return rep;
}

inline Policy greedy_policy(const SeqQModel& model, const ParamVector& params) {
    return [&model, &params](const StateWindow& w) { return greedy_decode(model, params, w); };
}

inline Policy expert_policy(const env::GridPickConfig& cfg) {
    return [cfg](const StateWindow& w) {
        const Observation& o = w.slots.back();
        const double span = cfg.grid_size - 1;
        env::GridPickState s;
        s.agent_x = static_cast<int>(std::lround(o[0] * span));
        s.agent_y = static_cast<int>(std::lround(o[1] * span));
        s.obj_x = static_cast<int>(std::lround(o[2] * span));
        s.obj_y = static_cast<int>(std::lround(o[3] * span));
        s.holding = o[4] == 1.0;
        return env::scripted_expert(s);
    };
}

inline Policy random_policy(const ActionSpec& spec, std::uint64_t seed) {
    auto rng = std::make_shared<Rng>(seed);
    return [spec, rng](const StateWindow&) {
        BinVector a;
        for (int d = 0; d < spec.num_dims(); ++d) a.push_back(rng->below(spec.bins(d)));
        return a;
    };
}

/// Pools reports from several seeds; success_rate stays successes/episodes.
inline EvalReport merge_reports(const std::vector<EvalReport>& reports) {
    EvalReport out;
    double ret = 0.0;
    for (const auto& r : reports) {
        out.episodes += r.episodes;
        out.successes += r.successes;
        ret += r.mean_return * r.episodes;
        out.per_seed.push_back(r.success_rate);
    }
    require(out.episodes > 0, "no reports to merge");
    out.success_rate = static_cast<double>(out.successes) / out.episodes;
    out.mean_return = ret / out.episodes;
    return out;
}

}  // namespace arq::train
