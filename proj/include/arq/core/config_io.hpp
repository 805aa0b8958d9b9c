#pragma once

// JSON views of TrainConfig. Reading is strict: unknown keys and wrongly
// typed values are errors naming the offending field.

#include <cstdint>
#include <string>

#include "arq/core/serialization.hpp"
#include "arq/core/types.hpp"

namespace arq {

inline json to_json(const TrainConfig& c) {
    return json{{"gamma", c.gamma},
                {"alpha", c.alpha},
                {"window_w", c.window_w},
                {"use_mc_max", c.use_mc_max},
                {"use_n_step", c.use_n_step},
                {"ema_rate", c.ema_rate},
                {"learning_rate", c.learning_rate},
                {"momentum", c.momentum},
                {"batch_size", c.batch_size},
                {"grad_steps", c.grad_steps},
                {"seed", c.seed},
                {"conservatism_mode", to_string(c.conservatism_mode)},
                {"model_width", c.model_width},
                {"num_layers", c.num_layers},
                {"eval_every", c.eval_every},
                {"eval_episodes", c.eval_episodes}};
}

namespace config_detail {

inline void expect(bool ok, const std::string& key, const char* what) {
    if (!ok) throw ParseError("field '" + key + "': expected " + what);
}

inline double number(const json& v, const std::string& key) {
    expect(v.is_number(), key, "a number");
    return v.get<double>();
}

inline std::int64_t integer(const json& v, const std::string& key) {
    expect(v.is_number_integer(), key, "an integer");
    return v.get<std::int64_t>();
}

inline int small_int(const json& v, const std::string& key) {
    const auto x = integer(v, key);
    expect(x >= INT32_MIN && x <= INT32_MAX, key, "a 32-bit integer");
    return static_cast<int>(x);
}

inline bool boolean(const json& v, const std::string& key) {
    expect(v.is_boolean(), key, "true or false");
    return v.get<bool>();
}

inline std::uint64_t seed(const json& v, const std::string& key) {
    expect(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0), key,
           "a non-negative integer");
    return v.get<std::uint64_t>();
}

}  // namespace config_detail

/// Applies the keys of `j` that belong to TrainConfig; returns true if `key`
/// was one of them.
inline bool apply_train_key(TrainConfig& c, const std::string& key, const json& v) {
    using namespace config_detail;
    if (key == "gamma") c.gamma = number(v, key);
    else if (key == "alpha") c.alpha = number(v, key);
    else if (key == "window_w") c.window_w = small_int(v, key);
    else if (key == "use_mc_max") c.use_mc_max = boolean(v, key);
    else if (key == "use_n_step") c.use_n_step = boolean(v, key);
    else if (key == "ema_rate") c.ema_rate = number(v, key);
    else if (key == "learning_rate") c.learning_rate = number(v, key);
    else if (key == "momentum") c.momentum = number(v, key);
    else if (key == "batch_size") c.batch_size = small_int(v, key);
    else if (key == "grad_steps") c.grad_steps = small_int(v, key);
    else if (key == "seed") c.seed = seed(v, key);
    else if (key == "conservatism_mode") {
        expect(v.is_string(), key, "one of paper, softmax, none");
        try {
            c.conservatism_mode = conservatism_from_string(v.get<std::string>());
        } catch (const InvalidArgument& e) {
            throw ParseError("field 'conservatism_mode': " + std::string(e.what()));
        }
    } else if (key == "model_width") c.model_width = small_int(v, key);
    else if (key == "num_layers") c.num_layers = small_int(v, key);
    else if (key == "eval_every") c.eval_every = small_int(v, key);
    else if (key == "eval_episodes") c.eval_episodes = small_int(v, key);
    else return false;
    return true;
}

inline TrainConfig train_config_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("train config must be a JSON object");
    TrainConfig c;
    for (const auto& [key, v] : j.items())
        if (!apply_train_key(c, key, v)) throw ParseError("unknown config key '" + key + "'");
    try {
        c.validate();
    } catch (const InvalidArgument& e) {
        throw ParseError(std::string("invalid config: ") + e.what());
    }
    return c;
}

/// Parses text as JSON, turning syntax errors into "line N, column M" messages.
inline json parse_json_text(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < text.size() && i + 1 < e.byte; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(what + ": syntax error at line " + std::to_string(line) + ", column " + std::to_string(col));
    }
}

}  // namespace arq
