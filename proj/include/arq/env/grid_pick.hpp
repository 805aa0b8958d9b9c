#pragma once

#include <algorithm>
#include <cstdlib>

#include "arq/core/random.hpp"
#include "arq/core/types.hpp"

namespace arq::env {

struct GridPickConfig {
    int grid_size = 5;
    int horizon = 10;

    void validate() const {
        require(grid_size >= 2, "grid_size must be at least 2");
        require(horizon >= 1, "horizon must be positive");
    }
};

struct GridPickState {
    int agent_x = 0;
    int agent_y = 0;
    int obj_x = 0;
    int obj_y = 0;
    bool holding = false;
    int steps = 0;
    bool done = false;

    bool operator==(const GridPickState&) const = default;
};

struct StepResult {
    Observation observation;
    double reward = 0.0;
    bool done = false;
};

// Action layout: dx bin {0,1,2} -> {-1,0,+1}, dy likewise, grasp {0,1}, terminate {0,1}.
enum GridPickDim : int { kDx = 0, kDy = 1, kGrasp = 2, kTerminate = 3 };

inline constexpr std::size_t kGridPickObsDim = 6;

/// Pick-and-terminate toy: move to the object, grasp it, then terminate. The
/// only reward is 1.0 for terminating while holding the object.
class GridPickEnv {
public:
    explicit GridPickEnv(GridPickConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

    static ActionSpec action_spec() { return ActionSpec::discrete({3, 3, 2, 2}); }

    const GridPickConfig& config() const { return cfg_; }
    const GridPickState& state() const { return state_; }

    Observation reset(const GridPickState& start) {
        require(in_bounds(start.agent_x, start.agent_y) && in_bounds(start.obj_x, start.obj_y), "start position off the grid");
        require(!start.holding || (start.agent_x == start.obj_x && start.agent_y == start.obj_y),
                "holding requires the object under the agent");
        state_ = start;
        state_.steps = 0;
        state_.done = false;
        return observe();
    }

    Observation reset(Rng& rng) { return reset(random_start(rng)); }

    GridPickState random_start(Rng& rng) const {
        GridPickState s;
        s.agent_x = rng.below(cfg_.grid_size);
        s.agent_y = rng.below(cfg_.grid_size);
        s.obj_x = rng.below(cfg_.grid_size);
        s.obj_y = rng.below(cfg_.grid_size);
        return s;
    }

    StepResult step(const BinVector& action) {
        require(!state_.done, "step called on a finished episode");
        require(action_spec().contains(action), "invalid grid-pick action");
        auto& s = state_;
        const int g = cfg_.grid_size;
        s.agent_x = std::clamp(s.agent_x + action[kDx] - 1, 0, g - 1);
        s.agent_y = std::clamp(s.agent_y + action[kDy] - 1, 0, g - 1);
        if (s.holding) {
            s.obj_x = s.agent_x;
            s.obj_y = s.agent_y;
        }
        if (action[kGrasp] == 1 && s.agent_x == s.obj_x && s.agent_y == s.obj_y) s.holding = true;
        ++s.steps;
        StepResult r;
        const bool terminate = action[kTerminate] == 1;
        r.reward = (terminate && s.holding) ? 1.0 : 0.0;
        s.done = terminate || s.steps >= cfg_.horizon;
        r.done = s.done;
        r.observation = observe();
        return r;
    }

    Observation observe() const { return observe(state_); }

    Observation observe(const GridPickState& s) const {
        const double span = cfg_.grid_size - 1;
        return {s.agent_x / span,          s.agent_y / span, s.obj_x / span, s.obj_y / span,
                s.holding ? 1.0 : 0.0, static_cast<double>(s.steps) / cfg_.horizon};
    }

private:
    bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < cfg_.grid_size && y < cfg_.grid_size; }

    GridPickConfig cfg_;
    GridPickState state_;
};

/// Greedy Manhattan expert: close the x gap first, then y, grasp when on the
/// object, terminate once holding.
inline BinVector scripted_expert(const GridPickState& s) {
    if (s.holding) return {1, 1, 0, 1};
    if (s.agent_x != s.obj_x) return {s.obj_x > s.agent_x ? 2 : 0, 1, 0, 0};
    if (s.agent_y != s.obj_y) return {1, s.obj_y > s.agent_y ? 2 : 0, 0, 0};
    return {1, 1, 1, 0};
}

inline int expert_steps_needed(const GridPickState& s) {
    if (s.holding) return 1;
    return std::abs(s.agent_x - s.obj_x) + std::abs(s.agent_y - s.obj_y) + 2;
}

}  // namespace arq::env
