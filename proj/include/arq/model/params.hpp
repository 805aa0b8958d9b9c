#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "arq/model/autodiff.hpp"

namespace arq {

struct ParamEntry {
    std::string name;
    ad::ParamSlot slot;
};

/// name -> (offset, shape) index over a flat parameter array. Entries are
/// laid out contiguously in insertion order.
class ParamLayout {
public:
    ad::ParamSlot add(const std::string& name, int rows, int cols) {
        require(!index_.contains(name), "duplicate parameter name '" + name + "'");
        ad::ParamSlot slot{size_, rows, cols};
        index_[name] = entries_.size();
        entries_.push_back({name, slot});
        size_ += slot.size();
        return slot;
    }

    const ad::ParamSlot& slot(const std::string& name) const {
        auto it = index_.find(name);
        require(it != index_.end(), "unknown parameter '" + name + "'");
        return entries_[it->second].slot;
    }

    bool contains(const std::string& name) const { return index_.contains(name); }
    std::size_t size() const { return size_; }
    const std::vector<ParamEntry>& entries() const { return entries_; }

    bool operator==(const ParamLayout& o) const {
        if (size_ != o.size_ || entries_.size() != o.entries_.size()) return false;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const auto& a = entries_[i];
            const auto& b = o.entries_[i];
            if (a.name != b.name || a.slot.offset != b.slot.offset || a.slot.rows != b.slot.rows || a.slot.cols != b.slot.cols)
                return false;
        }
        return true;
    }

private:
    std::vector<ParamEntry> entries_;
    std::map<std::string, std::size_t> index_;
    std::size_t size_ = 0;
};

/// Flat trainable parameters. Gradient buffers, momentum and the target
/// network are further ParamVectors (or plain arrays) with the same layout.
struct ParamVector {
    ParamLayout layout;
    std::vector<double> values;

    ParamVector() = default;
    explicit ParamVector(ParamLayout l) : layout(std::move(l)), values(layout.size(), 0.0) {}

    std::size_t size() const { return values.size(); }

    double* data(const std::string& name) { return values.data() + layout.slot(name).offset; }
    const double* data(const std::string& name) const { return values.data() + layout.slot(name).offset; }
};

/// target <- (1 - rate) * target + rate * online
inline void ema_update(ParamVector& target, const ParamVector& online, double rate) {
    require(target.layout == online.layout, "EMA update on mismatched parameter layouts");
    require(rate >= 0.0 && rate <= 1.0, "EMA rate must lie in [0, 1]");
    if (rate == 1.0) {
        target.values = online.values;
        return;
    }
    for (std::size_t i = 0; i < target.values.size(); ++i)
        target.values[i] = (1.0 - rate) * target.values[i] + rate * online.values[i];
}

}  // namespace arq
