#pragma once

// The subcommands of the command-line tool. Each takes fully resolved options,
// writes its artifacts, reports to `out` and returns an exit code; failures
// propagate as exceptions.

#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "arq/cli/run_config.hpp"
#include "arq/core/serialization.hpp"
#include "arq/model/checkpoint.hpp"
#include "arq/model/grad_check.hpp"
#include "arq/tabular/verification.hpp"
#include "arq/train/ablation.hpp"
#include "arq/train/bc.hpp"
#include "arq/train/evaluate.hpp"
#include "arq/train/metrics_io.hpp"
#include "arq/train/trainer.hpp"

namespace arq::cli {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitRuntime = 2, kExitVerification = 3 };

/// The resolved configuration and command that produced an artifact.
inline json provenance(const std::string& command, const RunConfig& rc, const json& extra = json::object()) {
    json p{{"command", command}, {"config", to_json(rc)}};
    for (const auto& [k, v] : extra.items()) p[k] = v;
    return p;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    return out;
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
    auto out = open_output(path);
    out << j.dump(2) << '\n';
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

// ---------------------------------------------------------------- gen-data

inline int cmd_gen_data(const RunConfig& rc, const std::string& out_path, std::ostream& out) {
    OfflineDataset ds = data::generate_mixed_dataset(rc.env, static_cast<std::size_t>(rc.dataset.episodes),
                                                     rc.dataset.demo_fraction, data::NoiseSpec{rc.dataset.noise},
                                                     rc.dataset.seed, rc.train.gamma);
    ds.metadata["provenance"] = provenance("gen-data", rc).dump();
    save_dataset(out_path, ds);
    const auto s = data::summarize(ds);
    out << "episodes " << ds.episodes.size() << " transitions " << ds.num_transitions() << '\n'
        << "demos " << s.demos << " (successes " << s.demo_successes << ")\n"
        << "replays " << s.replays << " (successes " << s.replay_successes << ")\n"
        << "wrote " << out_path << '\n';
    return kExitOk;
}

// ---------------------------------------------------------- verify-tabular

struct VerifyOptions {
    int trials = 50;
    std::uint64_t seed = 0;
    // Contraction triples drawn per trial.
    int contraction_factor = 20;
    // Test hook: discount applied between dimensions of one time step.
    double intra_step_discount = 1.0;
};

inline int cmd_verify_tabular(const VerifyOptions& opt, std::ostream& out) {
    require(opt.trials >= 0, "--trials must be non-negative");
    if (opt.trials == 0) out << "warning: --trials 0 runs no instances; every suite passes vacuously\n";
    const std::vector<tabular::SuiteResult> suites{
        tabular::consistency_suite(opt.trials, opt.seed, opt.intra_step_discount),
        tabular::contraction_suite(opt.trials * opt.contraction_factor, opt.seed),
        tabular::fixed_point_suite(opt.trials, opt.seed)};
    bool ok = true;
    for (const auto& s : suites) {
        out << (s.passed ? "PASS " : "FAIL ") << s.name << " trials " << s.trials << " worst "
            << train::format_double(s.worst) << " tolerance " << train::format_double(s.tolerance) << '\n';
        ok = ok && s.passed;
    }
    return ok ? kExitOk : kExitVerification;
}

// ------------------------------------------------------------------- train

struct TrainOptions {
    std::string dataset;
    std::string out_dir;
    bool behavior_cloning = false;
};

/// RL trains on the dataset with successful replays removed; BC on its
/// successful episodes only.
inline OfflineDataset training_view(const OfflineDataset& raw, bool behavior_cloning) {
    bool tagged = true;
    for (const auto& e : raw.episodes) tagged = tagged && e.origin != EpisodeOrigin::unknown;
    OfflineDataset ds = tagged ? data::filter_successes(raw) : raw;
    return behavior_cloning ? data::successful_episodes(std::move(ds)) : ds;
}

inline Checkpoint make_checkpoint(const train::TrainState& st, const TrainConfig& cfg, const json& prov) {
    return Checkpoint{cfg, st.model.shape(), st.step, st.online, st.target, prov};
}

inline int cmd_train(const RunConfig& rc, const TrainOptions& opt, std::ostream& out) {
    const OfflineDataset ds = training_view(load_dataset(opt.dataset), opt.behavior_cloning);
    const json prov = provenance(opt.behavior_cloning ? "train --bc" : "train", rc, {{"dataset", opt.dataset}});
    const std::filesystem::path dir(opt.out_dir);
    std::filesystem::create_directories(dir);

    const std::uint64_t eval_seed = Rng::derive(rc.eval_seed, rc.train.seed);
    train::TrainHooks hooks;
    hooks.log_every = rc.log_every;
    hooks.checkpoint_every = rc.checkpoint_every;
    hooks.evaluator = [&](const train::TrainState& st) {
        const auto rep = train::evaluate(train::greedy_policy(st.model, st.online), rc.env, rc.train.eval_episodes,
                                         eval_seed, rc.train.window_w);
        out << "step " << st.step << " success " << train::format_double(rep.success_rate) << '\n';
        return rep.success_rate;
    };
    hooks.on_checkpoint = [&](const train::TrainState& st) {
        save_checkpoint((dir / ("checkpoint_" + std::to_string(st.step) + ".json")).string(),
                        make_checkpoint(st, rc.train, prov));
    };
    const train::TrainResult res =
        opt.behavior_cloning ? train::train_bc(ds, rc.train, hooks) : train::train_offline(ds, rc.train, hooks);

    auto metrics = open_output(dir / "metrics.csv");
    train::write_metrics(metrics, res.metrics, prov.dump());
    save_checkpoint((dir / "checkpoint.json").string(), make_checkpoint(res.state, rc.train, prov));
    out << "trained " << res.state.step << " steps on " << ds.episodes.size() << " episodes; wrote "
        << (dir / "metrics.csv").string() << " and " << (dir / "checkpoint.json").string() << '\n';
    return kExitOk;
}

// -------------------------------------------------------------------- eval

struct EvalOptions {
    std::string checkpoint;
    std::string out;  // optional report path
    int episodes = 200;
    std::uint64_t seed = 12345;
    bool use_target = false;
};

inline json to_json(const train::EvalReport& r) {
    return json{{"success_rate", r.success_rate},
                {"episodes", r.episodes},
                {"successes", r.successes},
                {"mean_return", r.mean_return}};
}

inline int cmd_eval(const RunConfig& rc, const EvalOptions& opt, std::ostream& out) {
    const Checkpoint ck = load_checkpoint(opt.checkpoint);
    const SeqQModel model(ck.shape);
    const ParamVector& params = opt.use_target ? ck.target : ck.online;
    const auto rep =
        train::evaluate(train::greedy_policy(model, params), rc.env, opt.episodes, opt.seed, ck.config.window_w);
    json report = to_json(rep);
    report["provenance"] = provenance("eval", rc,
                                      {{"checkpoint", opt.checkpoint},
                                       {"checkpoint_provenance", ck.provenance},
                                       {"checkpoint_step", ck.step},
                                       {"eval_episodes", opt.episodes},
                                       {"eval_seed", opt.seed},
                                       {"params", opt.use_target ? "target" : "online"}});
    out << "success_rate " << train::format_double(rep.success_rate) << " (" << rep.successes << "/" << rep.episodes
        << ") mean_return " << train::format_double(rep.mean_return) << '\n';
    if (!opt.out.empty()) {
        write_json_file(opt.out, report);
        out << "wrote " << opt.out << '\n';
    }
    return kExitOk;
}

// ------------------------------------------------------------------ ablate

struct AblateOptions {
    std::string dataset;
    std::string out;
    int seeds = 3;
    bool full_matrix = true;  // otherwise the standard one-change-at-a-time cells
};

inline int cmd_ablate(const RunConfig& rc, const AblateOptions& opt, std::ostream& out) {
    require(opt.seeds >= 1, "--seeds must be positive");
    const OfflineDataset raw = load_dataset(opt.dataset);
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < opt.seeds; ++i) seeds.push_back(rc.train.seed + static_cast<std::uint64_t>(i));
    auto cells = opt.full_matrix ? train::full_matrix() : train::standard_cells();
    if (opt.full_matrix) cells.push_back({"bc", ConservatismMode::paper, true, true, true});
    train::AblationOptions ao;
    ao.env = rc.env;
    ao.eval_seed = rc.eval_seed;
    ao.log_every = rc.log_every;
    ao.progress = [&](const std::string& what) { out << "running " << what << '\n' << std::flush; };
    const auto table = train::run_ablation_matrix(raw, rc.train, seeds, cells, ao);

    auto file = open_output(opt.out);
    train::write_ablation_table(file, table, provenance("ablate", rc, {{"dataset", opt.dataset}, {"seeds", seeds}}).dump());
    for (const auto& c : table)
        out << c.cell.name << " mean " << train::format_double(c.mean_success()) << " spread "
            << train::format_double(c.spread()) << (c.cached ? " (cached)" : "") << '\n';
    out << "wrote " << opt.out << '\n';
    return kExitOk;
}

// -------------------------------------------------------------- grad-check

struct GradCheckCliOptions {
    int seeds = 50;
    double eps = 1e-5;
    std::size_t subset = 256;
    double tolerance = 0.0;  // 0: 1e-4 for the full model, 1e-7 when num_layers is 0
};

inline int cmd_grad_check(const RunConfig& rc, const GradCheckCliOptions& opt, std::ostream& out) {
    require(opt.seeds >= 1, "--seeds must be positive");
    const double tol = opt.tolerance > 0.0 ? opt.tolerance : (rc.train.num_layers == 0 ? 1e-7 : 1e-4);
    const OfflineDataset ds = data::generate_mixed_dataset(rc.env, 20, 0.25, data::NoiseSpec{rc.dataset.noise},
                                                           rc.dataset.seed, rc.train.gamma);
    const SeqQModel model(train::model_shape(ds, rc.train));
    const data::TransitionIndex index(ds);
    double worst = 0.0;
    for (int i = 0; i < opt.seeds; ++i) {
        const auto seed = Rng::derive(rc.train.seed, static_cast<std::uint64_t>(i));
        Rng rng(seed);
        const ParamVector online = model.init_params(rng.next());
        const ParamVector target = model.init_params(rng.next());
        const data::Sample sample = data::sample_batch(ds, index, 1, rc.train.window_w, rng).front();
        const auto rep = grad_check(model, online, target, sample, rc.train,
                                    GradCheckOptions{opt.eps, opt.subset, rng.next(), {}});
        worst = std::max(worst, rep.max_rel_error);
        out << "seed " << i << " max_rel_error " << train::format_double(rep.max_rel_error) << " checked "
            << rep.checked << '\n';
    }
    const bool ok = worst < tol;
    out << (ok ? "PASS" : "FAIL") << " worst " << train::format_double(worst) << " tolerance "
        << train::format_double(tol) << '\n';
    return ok ? kExitOk : kExitVerification;
}

}  // namespace arq::cli
