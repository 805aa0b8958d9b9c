#pragma once

// Line-delimited JSON dataset files: one header record followed by one record
// per episode. Doubles are written in shortest round-trip form, so a
// write/read cycle reproduces every numeric field bit for bit.

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "arq/core/types.hpp"

namespace arq {

using json = nlohmann::json;

inline constexpr const char* kDatasetFormat = "arq-dataset/1";

inline json to_json(const ActionSpec& spec) {
    json ranges = json::array();
    for (int d = 0; d < spec.num_dims(); ++d) {
        if (const auto& r = spec.range(d)) ranges.push_back(json::array({r->lo, r->hi}));
        else ranges.push_back("discrete");
    }
    return json{{"bins", spec.bins()}, {"ranges", ranges}};
}

inline ActionSpec action_spec_from_json(const json& j) {
    auto bins = j.at("bins").get<std::vector<int>>();
    std::vector<std::optional<Range>> ranges;
    for (const auto& r : j.at("ranges")) {
        if (r.is_string()) {
            if (r.get<std::string>() != "discrete") throw ParseError("unknown range marker " + r.dump());
            ranges.emplace_back();
        } else {
            ranges.emplace_back(Range{r.at(0).get<double>(), r.at(1).get<double>()});
        }
    }
    return ActionSpec(std::move(bins), std::move(ranges));
}

inline const char* to_string(EpisodeOrigin o) {
    switch (o) {
        case EpisodeOrigin::demo: return "demo";
        case EpisodeOrigin::replay: return "replay";
        case EpisodeOrigin::unknown: return "unknown";
    }
    return "unknown";
}

inline EpisodeOrigin origin_from_string(const std::string& s) {
    if (s == "demo") return EpisodeOrigin::demo;
    if (s == "replay") return EpisodeOrigin::replay;
    if (s == "unknown") return EpisodeOrigin::unknown;
    throw ParseError("unknown episode origin '" + s + "'");
}

inline json to_json(const Episode& e) {
    json j{{"task_id", e.task_id},
           {"observations", e.observations},
           {"actions", e.actions},
           {"rewards", e.rewards},
           {"mc_returns", nullptr},
           {"origin", to_string(e.origin)}};
    if (e.mc_returns) j["mc_returns"] = *e.mc_returns;
    return j;
}

inline Episode episode_from_json(const json& j) {
    Episode e;
    e.task_id = j.at("task_id").get<std::int64_t>();
    e.observations = j.at("observations").get<std::vector<Observation>>();
    e.actions = j.at("actions").get<std::vector<BinVector>>();
    e.rewards = j.at("rewards").get<std::vector<double>>();
    if (j.contains("mc_returns") && !j.at("mc_returns").is_null())
        e.mc_returns = j.at("mc_returns").get<std::vector<double>>();
    if (j.contains("origin")) e.origin = origin_from_string(j.at("origin").get<std::string>());
    return e;
}

inline json dataset_header(const OfflineDataset& ds) {
    return json{{"format", kDatasetFormat},
                {"action_spec", to_json(ds.action_spec)},
                {"gamma", ds.gamma},
                {"obs_dim", ds.obs_dim},
                {"metadata", ds.metadata}};
}

inline void write_dataset(std::ostream& out, const OfflineDataset& ds) {
    out << dataset_header(ds).dump() << '\n';
    for (const auto& e : ds.episodes) out << to_json(e).dump() << '\n';
}

inline OfflineDataset read_dataset(std::istream& in) {
    OfflineDataset ds;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            if (!have_header) {
                if (j.value("format", "") != kDatasetFormat)
                    throw ParseError("missing or unsupported dataset format tag");
                ds.action_spec = action_spec_from_json(j.at("action_spec"));
                ds.gamma = j.at("gamma").get<double>();
                ds.obs_dim = j.at("obs_dim").get<std::size_t>();
                ds.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
                have_header = true;
            } else {
                ds.episodes.push_back(episode_from_json(j));
            }
        } catch (const json::exception& ex) {
            throw ParseError("dataset line " + std::to_string(lineno) + ": " + ex.what());
        } catch (const Error& ex) {
            throw ParseError("dataset line " + std::to_string(lineno) + ": " + ex.what());
        }
    }
    if (!have_header) throw ParseError("dataset file is empty");
    ds.validate();
    return ds;
}

inline void save_dataset(const std::string& path, const OfflineDataset& ds) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_dataset(out, ds);
    if (!out) throw Error("write to '" + path + "' failed");
}

inline OfflineDataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open dataset '" + path + "'");
    return read_dataset(in);
}

}  // namespace arq
