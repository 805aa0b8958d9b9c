#pragma once

// Checkpoint files are three JSON lines: a header (format tag, resolved
// config, model shape, parameter layout, grad-step counter, free-form
// provenance), the online parameters, and the target parameters. Doubles use
// shortest round-trip text, so save/load is exact.

#include <fstream>
#include <string>

#include "arq/core/config_io.hpp"
#include "arq/core/serialization.hpp"
#include "arq/model/seq_q_model.hpp"

namespace arq {

inline constexpr const char* kCheckpointFormat = "arq-checkpoint/1";

struct Checkpoint {
    TrainConfig config;
    ModelShape shape;
    std::int64_t step = 0;
    ParamVector online;
    ParamVector target;
    json provenance = json::object();
};

inline json to_json(const ModelShape& s) {
    return json{{"obs_dim", s.obs_dim}, {"window", s.window}, {"width", s.width}, {"layers", s.layers}, {"bins", s.bins}};
}

inline ModelShape model_shape_from_json(const json& j) {
    ModelShape s;
    s.obs_dim = j.at("obs_dim").get<int>();
    s.window = j.at("window").get<int>();
    s.width = j.at("width").get<int>();
    s.layers = j.at("layers").get<int>();
    s.bins = j.at("bins").get<std::vector<int>>();
    return s;
}

inline json to_json(const ParamLayout& layout) {
    json out = json::array();
    for (const auto& e : layout.entries())
        out.push_back({{"name", e.name}, {"offset", e.slot.offset}, {"rows", e.slot.rows}, {"cols", e.slot.cols}});
    return out;
}

inline void write_checkpoint(std::ostream& out, const Checkpoint& c) {
    require(c.online.layout == c.target.layout, "online and target layouts differ");
    const json header{{"format", kCheckpointFormat},
                      {"config", to_json(c.config)},
                      {"shape", to_json(c.shape)},
                      {"layout", to_json(c.online.layout)},
                      {"step", c.step},
                      {"provenance", c.provenance}};
    out << header.dump() << '\n';
    out << json(c.online.values).dump() << '\n';
    out << json(c.target.values).dump() << '\n';
}

inline Checkpoint read_checkpoint(std::istream& in) {
    std::string lines[3];
    for (int i = 0; i < 3; ++i)
        if (!std::getline(in, lines[i])) throw ParseError("checkpoint truncated at line " + std::to_string(i + 1));
    Checkpoint c;
    try {
        const json h = json::parse(lines[0]);
        if (h.value("format", "") != kCheckpointFormat) throw ParseError("missing or unsupported checkpoint format tag");
        c.config = train_config_from_json(h.at("config"));
        c.shape = model_shape_from_json(h.at("shape"));
        c.step = h.at("step").get<std::int64_t>();
        c.provenance = h.value("provenance", json::object());
        const SeqQModel model(c.shape);
        if (to_json(model.layout()) != h.at("layout")) throw ParseError("parameter layout does not match the model shape");
        c.online = ParamVector(model.layout());
        c.target = ParamVector(model.layout());
        c.online.values = json::parse(lines[1]).get<std::vector<double>>();
        c.target.values = json::parse(lines[2]).get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("checkpoint: ") + e.what());
    }
    if (c.online.values.size() != c.online.layout.size() || c.target.values.size() != c.target.layout.size())
        throw ParseError("checkpoint parameter count does not match the layout");
    return c;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& c) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_checkpoint(out, c);
    if (!out) throw Error("write to '" + path + "' failed");
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open checkpoint '" + path + "'");
    return read_checkpoint(in);
}

}  // namespace arq
