#pragma once

#include <charconv>
#include <ostream>
#include <string>
#include <vector>

#include "arq/train/trainer.hpp"

namespace arq::train {

/// Shortest round-trip text for a double; identical bytes on every run.
inline std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline const char* kMetricsHeader =
    "step,loss_td,loss_reg,loss_bc,mean_q_dataset,mean_q_unseen,mean_target,min_target,max_target,eval_success_rate";

inline std::string metrics_line(const MetricRow& m) {
    std::string s = std::to_string(m.step);
    for (double v : {m.loss_td, m.loss_reg, m.loss_bc, m.mean_q_dataset, m.mean_q_unseen, m.mean_target, m.min_target,
                     m.max_target}) {
        s += ',';
        s += format_double(v);
    }
    s += ',';
    if (m.eval_success_rate) s += format_double(*m.eval_success_rate);
    return s;
}

/// Writes each line of `text` as a '#' comment.
inline void write_comment_block(std::ostream& out, const std::string& text) {
    std::size_t start = 0;
    while (start < text.size()) {
        const auto end = text.find('\n', start);
        out << "# " << text.substr(start, end == std::string::npos ? std::string::npos : end - start) << '\n';
        if (end == std::string::npos) break;
        start = end + 1;
    }
}

/// Comma-separated metrics, preceded by the provenance comment block.
inline void write_metrics(std::ostream& out, const std::vector<MetricRow>& rows, const std::string& provenance = "") {
    write_comment_block(out, provenance);
    out << kMetricsHeader << '\n';
    for (const auto& m : rows) out << metrics_line(m) << '\n';
}

}  // namespace arq::train
