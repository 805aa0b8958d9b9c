#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "arq/cli/commands.hpp"

namespace {

using arq::json;
using namespace arq::cli;

// Config-file path plus flag overrides, merged as config file < flags.
struct ConfigSources {
    std::string path;
    std::vector<std::string> sets;
    json flags = json::object();

    RunConfig resolve() const {
        json doc = json::object();
        std::string source = "flags";
        if (!path.empty()) {
            std::ifstream in(path);
            if (!in) throw arq::ParseError("cannot open config '" + path + "'");
            std::stringstream ss;
            ss << in.rdbuf();
            doc = arq::parse_json_text(ss.str(), path);
            if (!doc.is_object()) throw arq::ParseError(path + ": config must be a JSON object");
            source = path;
        }
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos || eq == 0) throw arq::ParseError("--set expects key=value, got '" + s + "'");
            const std::string key = s.substr(0, eq), text = s.substr(eq + 1);
            try {
                doc[key] = json::parse(text);
            } catch (const json::parse_error&) {
                doc[key] = text;
            }
        }
        for (const auto& [k, v] : flags.items()) doc[k] = v;
        try {
            return run_config_from_json(doc);
        } catch (const arq::ParseError& e) {
            throw arq::ParseError(source + ": " + e.what());
        }
    }
};

void add_config_flags(CLI::App* cmd, ConfigSources& src) {
    cmd->add_option("--config", src.path, "JSON run configuration")->check(CLI::ExistingFile);
    cmd->add_option("--set", src.sets, "Override one config key: key=value (repeatable)");
}

template <class T>
void bind(CLI::App* cmd, const std::string& flag, const std::string& key, ConfigSources& src, const std::string& help) {
    cmd->add_option_function<T>(flag, [&src, key](const T& v) { src.flags[key] = v; }, help);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Autoregressive per-dimension Q-learning toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "arq 1.0");

    ConfigSources src;
    std::string out_path;

    auto* gen = app.add_subcommand("gen-data", "Generate a mixed grid-pick dataset");
    add_config_flags(gen, src);
    bind<int>(gen, "--episodes", "episodes", src, "Number of episodes");
    bind<double>(gen, "--demo-fraction", "demo_fraction", src, "Fraction of expert demonstrations");
    bind<double>(gen, "--noise", "noise", src, "Per-dimension action flip probability for replays");
    bind<std::uint64_t>(gen, "--seed", "data_seed", src, "Dataset seed");
    bind<int>(gen, "--grid-size", "grid_size", src, "Grid side length");
    bind<int>(gen, "--horizon", "horizon", src, "Episode horizon");
    gen->add_option("--out", out_path, "Output dataset file")->required();

    VerifyOptions vopt;
    auto* verify = app.add_subcommand("verify-tabular", "Run the tabular oracle suites");
    verify->add_option("--trials", vopt.trials, "Instances per suite (contraction uses 20 triples each)");
    verify->add_option("--seed", vopt.seed, "Suite seed");
    verify->add_option("--intra-step-discount", vopt.intra_step_discount)->group("");

    TrainOptions topt;
    auto* train = app.add_subcommand("train", "Train a model on a dataset file");
    add_config_flags(train, src);
    train->add_option("--dataset", topt.dataset, "Dataset file")->required()->check(CLI::ExistingFile);
    train->add_option("--out-dir", topt.out_dir, "Directory for metrics and checkpoints")->required();
    train->add_flag("--bc", topt.behavior_cloning, "Train the behavior-cloning baseline instead");
    bind<std::uint64_t>(train, "--seed", "seed", src, "Training seed");
    bind<int>(train, "--grad-steps", "grad_steps", src, "Gradient steps");
    bind<int>(train, "--batch-size", "batch_size", src, "Batch size");
    bind<double>(train, "--alpha", "alpha", src, "Conservatism weight");
    bind<std::string>(train, "--conservatism-mode", "conservatism_mode", src, "paper, softmax or none");
    bind<bool>(train, "--mc-max", "use_mc_max", src, "Use Monte-Carlo max targets (true/false)");
    bind<bool>(train, "--n-step", "use_n_step", src, "Use n-step targets (true/false)");
    bind<int>(train, "--checkpoint-every", "checkpoint_every", src, "Checkpoint cadence in steps (0: end only)");

    EvalOptions eopt;
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on grid-pick");
    add_config_flags(eval, src);
    eval->add_option("--checkpoint", eopt.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
    eval->add_option("--episodes", eopt.episodes, "Evaluation episodes");
    eval->add_option("--seed", eopt.seed, "Evaluation seed");
    eval->add_option("--out", eopt.out, "Write the report as JSON");
    eval->add_flag("--target", eopt.use_target, "Evaluate the target parameters");

    AblateOptions aopt;
    std::string cells = "full";
    auto* ablate = app.add_subcommand("ablate", "Run the ablation matrix");
    add_config_flags(ablate, src);
    ablate->add_option("--dataset", aopt.dataset, "Dataset file")->required()->check(CLI::ExistingFile);
    ablate->add_option("--out", aopt.out, "Output table")->required();
    ablate->add_option("--seeds", aopt.seeds, "Number of seeds, starting at the config seed");
    ablate->add_option("--cells", cells, "full (every combination) or standard (one change at a time)")
        ->check(CLI::IsMember({"full", "standard"}));
    bind<int>(ablate, "--grad-steps", "grad_steps", src, "Gradient steps per run");

    GradCheckCliOptions gopt;
    auto* gc = app.add_subcommand("grad-check", "Compare analytic and finite-difference gradients");
    add_config_flags(gc, src);
    gc->add_option("--seeds", gopt.seeds, "Random models to check");
    gc->add_option("--eps", gopt.eps, "Finite-difference step");
    gc->add_option("--subset", gopt.subset, "Parameters per model (0: all)");
    gc->add_option("--tolerance", gopt.tolerance, "Pass threshold (default by model depth)");
    bind<int>(gc, "--layers", "num_layers", src, "Transformer layers (0: linear model)");
    bind<std::uint64_t>(gc, "--seed", "seed", src, "Base seed");

    RunConfig rc;
    try {
        app.parse(argc, argv);
        if (!verify->parsed()) rc = src.resolve();
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(rc, out_path, std::cout);
        if (verify->parsed()) return cmd_verify_tabular(vopt, std::cout);
        if (train->parsed()) return cmd_train(rc, topt, std::cout);
        if (eval->parsed()) return cmd_eval(rc, eopt, std::cout);
        if (ablate->parsed()) {
            aopt.full_matrix = cells == "full";
            return cmd_ablate(rc, aopt, std::cout);
        }
        if (gc->parsed()) return cmd_grad_check(rc, gopt, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}
