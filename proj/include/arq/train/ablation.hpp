#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "arq/core/config_io.hpp"
#include "arq/data/dataset_ops.hpp"
#include "arq/train/bc.hpp"
#include "arq/train/evaluate.hpp"
#include "arq/train/metrics_io.hpp"
#include "arq/train/trainer.hpp"

namespace arq::train {

struct AblationCell {
    std::string name;
    ConservatismMode mode = ConservatismMode::paper;
    bool use_mc_max = true;
    bool use_n_step = true;
    bool behavior_cloning = false;

    TrainConfig apply(TrainConfig base) const {
        base.conservatism_mode = mode;
        base.use_mc_max = use_mc_max;
        base.use_n_step = use_n_step;
        return base;
    }
};

inline std::string cell_name(ConservatismMode mode, bool mc, bool nstep) {
    return std::string(to_string(mode)) + (mc ? "+mc" : "-mc") + (nstep ? "+nstep" : "-nstep");
}

/// {paper, softmax, none} x {mc on, off} x {n-step on, off}.
inline std::vector<AblationCell> full_matrix() {
    std::vector<AblationCell> cells;
    for (auto mode : {ConservatismMode::paper, ConservatismMode::softmax, ConservatismMode::none})
        for (bool mc : {true, false})
            for (bool ns : {true, false}) cells.push_back({cell_name(mode, mc, ns), mode, mc, ns, false});
    return cells;
}

/// The full method, one change at a time, and the behavior-cloning baseline.
inline std::vector<AblationCell> standard_cells() {
    return {{"full", ConservatismMode::paper, true, true, false},
            {"softmax", ConservatismMode::softmax, true, true, false},
            {"no-conservatism", ConservatismMode::none, true, true, false},
            {"no-mc", ConservatismMode::paper, false, true, false},
            {"one-step", ConservatismMode::paper, true, false, false},
            {"bc", ConservatismMode::paper, true, true, true}};
}

struct RunOutcome {
    std::uint64_t seed = 0;
    EvalReport final_eval;
    // (grad step, success rate) at every evaluation.
    std::vector<std::pair<std::int64_t, double>> curve;
    std::int64_t grad_steps = 0;
    // First evaluated step whose success reaches 90% of the final success.
    std::int64_t steps_to_90 = 0;
    std::vector<MetricRow> metrics;
};

struct CellResult {
    AblationCell cell;
    TrainConfig config;
    std::vector<RunOutcome> runs;
    bool cached = false;

    double mean_success() const {
        double s = 0.0;
        for (const auto& r : runs) s += r.final_eval.success_rate;
        return runs.empty() ? 0.0 : s / static_cast<double>(runs.size());
    }
    // Sample standard deviation across seeds (0 for a single seed).
    double spread() const {
        if (runs.size() < 2) return 0.0;
        const double m = mean_success();
        double ss = 0.0;
        for (const auto& r : runs) ss += (r.final_eval.success_rate - m) * (r.final_eval.success_rate - m);
        return std::sqrt(ss / static_cast<double>(runs.size() - 1));
    }
    double mean_steps_to_90() const {
        double s = 0.0;
        for (const auto& r : runs) s += static_cast<double>(r.steps_to_90);
        return runs.empty() ? 0.0 : s / static_cast<double>(runs.size());
    }
};

inline std::int64_t steps_to_fraction(const std::vector<std::pair<std::int64_t, double>>& curve, double final_rate,
                                      double fraction = 0.9) {
    for (const auto& [step, rate] : curve)
        if (rate >= fraction * final_rate) return step;
    return curve.empty() ? 0 : curve.back().first;
}

struct AblationOptions {
    env::GridPickConfig env;
    // Evaluation start states come from derive(eval_seed, training seed).
    std::uint64_t eval_seed = 12345;
    int log_every = 100;
    std::function<void(const std::string&)> progress;
};

/// Trains one configuration (or the BC baseline) with periodic evaluation.
inline RunOutcome run_cell(const OfflineDataset& raw, const AblationCell& cell, const TrainConfig& cfg,
                           const AblationOptions& opt) {
    RunOutcome out;
    out.seed = cfg.seed;
    const std::uint64_t eval_seed = Rng::derive(opt.eval_seed, cfg.seed);
    TrainHooks hooks;
    hooks.log_every = opt.log_every;
    hooks.evaluator = [&](const TrainState& st) {
        const auto rep = evaluate(greedy_policy(st.model, st.online), opt.env, cfg.eval_episodes, eval_seed, cfg.window_w);
        out.curve.emplace_back(st.step, rep.success_rate);
        out.final_eval = rep;
        return rep.success_rate;
    };
    // RL sees the filtered data, BC only its successes.
    const OfflineDataset rl = data::filter_successes(raw);
    const OfflineDataset demos = data::successful_episodes(rl);
    require(data::summarize(rl).replay_successes == 0, "filtered dataset still holds successful replays");
    const TrainResult res = cell.behavior_cloning ? train_bc(demos, cfg, hooks) : train_offline(rl, cfg, hooks);
    out.grad_steps = res.state.step;
    out.metrics = std::move(res.metrics);
    out.steps_to_90 = steps_to_fraction(out.curve, out.final_eval.success_rate);
    return out;
}

/// Runs every cell over every seed. Cells whose resolved configuration is
/// identical (for example any mode once alpha is 0) reuse one set of runs.
inline std::vector<CellResult> run_ablation_matrix(const OfflineDataset& raw, const TrainConfig& base,
                                                   const std::vector<std::uint64_t>& seeds,
                                                   const std::vector<AblationCell>& cells = full_matrix(),
                                                   const AblationOptions& opt = {}) {
    require(!seeds.empty(), "ablation needs at least one seed");
    std::vector<CellResult> table;
    std::map<std::string, std::size_t> cache;
    for (const auto& cell : cells) {
        TrainConfig cfg = cell.apply(base);
        if (cfg.alpha == 0.0 && !cell.behavior_cloning) cfg.conservatism_mode = ConservatismMode::none;
        json key = to_json(cfg);
        key["behavior_cloning"] = cell.behavior_cloning;
        key.erase("seed");
        CellResult cr;
        cr.cell = cell;
        cr.config = cfg;
        if (const auto it = cache.find(key.dump()); it != cache.end()) {
            cr.runs = table[it->second].runs;
            cr.cached = true;
        } else {
            for (auto seed : seeds) {
                TrainConfig c = cfg;
                c.seed = seed;
                if (opt.progress) opt.progress(cell.name + " seed " + std::to_string(seed));
                cr.runs.push_back(run_cell(raw, cell, c, opt));
            }
            cache.emplace(key.dump(), table.size());
        }
        table.push_back(std::move(cr));
    }
    return table;
}

inline void write_ablation_table(std::ostream& out, const std::vector<CellResult>& table,
                                 const std::string& provenance = "") {
    write_comment_block(out, provenance);
    out << "cell,conservatism_mode,use_mc_max,use_n_step,seeds,mean_success,spread,per_seed_success,grad_steps,"
           "mean_steps_to_90,cached\n";
    for (const auto& c : table) {
        std::string per_seed;
        for (const auto& r : c.runs) per_seed += (per_seed.empty() ? "" : ";") + format_double(r.final_eval.success_rate);
        out << c.cell.name << ',' << (c.cell.behavior_cloning ? "bc" : to_string(c.config.conservatism_mode)) << ','
            << c.config.use_mc_max << ',' << c.config.use_n_step << ',' << c.runs.size() << ','
            << format_double(c.mean_success()) << ',' << format_double(c.spread()) << ',' << per_seed << ','
            << (c.runs.empty() ? 0 : c.runs.front().grad_steps) << ',' << format_double(c.mean_steps_to_90()) << ','
            << c.cached << '\n';
    }
}

}  // namespace arq::train
