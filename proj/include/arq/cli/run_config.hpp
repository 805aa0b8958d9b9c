#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "arq/core/config_io.hpp"
#include "arq/data/dataset_ops.hpp"
#include "arq/env/grid_pick.hpp"

namespace arq::cli {

struct DatasetParams {
    int episodes = 500;
    double demo_fraction = 0.08;
    double noise = 0.3;
    std::uint64_t seed = 0;
};

/// Everything a CLI run needs. The document is one flat JSON object; every key
/// is optional and unknown keys are rejected.
struct RunConfig {
    TrainConfig train;
    env::GridPickConfig env;
    DatasetParams dataset;
    int log_every = 100;
    int checkpoint_every = 0;
    std::uint64_t eval_seed = 12345;

    void validate() const {
        train.validate();
        env.validate();
        require(dataset.episodes >= 1, "episodes must be positive");
        require(dataset.demo_fraction > 0.0 && dataset.demo_fraction <= 1.0, "demo_fraction must lie in (0, 1]");
        require(dataset.noise >= 0.0 && dataset.noise <= 1.0, "noise must lie in [0, 1]");
        require(log_every >= 1, "log_every must be positive");
        require(checkpoint_every >= 0, "checkpoint_every must be non-negative");
    }
};

inline json to_json(const RunConfig& c) {
    json j = arq::to_json(c.train);
    j["grid_size"] = c.env.grid_size;
    j["horizon"] = c.env.horizon;
    j["episodes"] = c.dataset.episodes;
    j["demo_fraction"] = c.dataset.demo_fraction;
    j["noise"] = c.dataset.noise;
    j["data_seed"] = c.dataset.seed;
    j["log_every"] = c.log_every;
    j["checkpoint_every"] = c.checkpoint_every;
    j["eval_seed"] = c.eval_seed;
    return j;
}

inline void apply_run_key(RunConfig& c, const std::string& key, const json& v) {
    using namespace config_detail;
    if (apply_train_key(c.train, key, v)) return;
    if (key == "grid_size") c.env.grid_size = small_int(v, key);
    else if (key == "horizon") c.env.horizon = small_int(v, key);
    else if (key == "episodes") c.dataset.episodes = small_int(v, key);
    else if (key == "demo_fraction") c.dataset.demo_fraction = number(v, key);
    else if (key == "noise") c.dataset.noise = number(v, key);
    else if (key == "data_seed") c.dataset.seed = seed(v, key);
    else if (key == "log_every") c.log_every = small_int(v, key);
    else if (key == "checkpoint_every") c.checkpoint_every = small_int(v, key);
    else if (key == "eval_seed") c.eval_seed = seed(v, key);
    else throw ParseError("unknown config key '" + key + "'");
}

inline RunConfig run_config_from_json(const json& j, RunConfig base = {}) {
    if (!j.is_object()) throw ParseError("config must be a JSON object");
    for (const auto& [key, v] : j.items()) apply_run_key(base, key, v);
    try {
        base.validate();
    } catch (const InvalidArgument& e) {
        throw ParseError(std::string("invalid config: ") + e.what());
    }
    return base;
}

inline RunConfig parse_run_config(const std::string& text, const std::string& source = "config") {
    try {
        return run_config_from_json(parse_json_text(text, source));
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        if (msg.rfind(source, 0) == 0) throw;
        throw ParseError(source + ": " + msg);
    }
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str(), path);
}

}  // namespace arq::cli
