#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "arq/core/types.hpp"

namespace arq::tabular {

/// Values over (state, action prefix) nodes. A node at depth d is a prefix
/// a^{1:d+1}. Storage per state is depth-major: all depth-0 nodes, then all
/// depth-1 nodes, ..., each depth in ascending mixed-radix prefix order.
class QTable {
public:
    QTable() = default;

    QTable(int num_states, const ActionSpec& spec, double fill = 0.0) : num_states_(num_states), bins_(spec.bins()) {
        spec.require_tabular();
        require(num_states >= 1, "QTable needs at least one state");
        std::size_t count = 1;
        offsets_.push_back(0);
        for (int b : bins_) {
            count *= static_cast<std::size_t>(b);
            counts_.push_back(count);
            offsets_.push_back(offsets_.back() + count);
        }
        values_.assign(static_cast<std::size_t>(num_states) * nodes_per_state(), fill);
    }

    int num_states() const { return num_states_; }
    int depth() const { return static_cast<int>(bins_.size()); }
    int bins(int d) const { return bins_[static_cast<std::size_t>(d)]; }
    std::size_t nodes_per_state() const { return offsets_.back(); }
    std::size_t nodes_at(int d) const { return counts_[static_cast<std::size_t>(d)]; }
    std::size_t size() const { return values_.size(); }

    // Flat position of the node at depth d whose prefix has mixed-radix index p.
    std::size_t index(int s, int d, std::size_t p) const {
        return static_cast<std::size_t>(s) * nodes_per_state() + offsets_[static_cast<std::size_t>(d)] + p;
    }

    double& at(int s, int d, std::size_t p) { return values_[index(s, d, p)]; }
    double at(int s, int d, std::size_t p) const { return values_[index(s, d, p)]; }

    double& at(int s, const BinVector& prefix) { return values_[index(s, prefix)]; }
    double at(int s, const BinVector& prefix) const { return values_[index(s, prefix)]; }

    std::size_t index(int s, const BinVector& prefix) const {
        require(!prefix.empty() && prefix.size() <= bins_.size(), "prefix length out of range");
        std::size_t p = 0;
        for (std::size_t i = 0; i < prefix.size(); ++i) {
            require(prefix[i] >= 0 && prefix[i] < bins_[i], "prefix bin out of range");
            p = p * static_cast<std::size_t>(bins_[i]) + static_cast<std::size_t>(prefix[i]);
        }
        return index(s, static_cast<int>(prefix.size()) - 1, p);
    }

    // max over the first action dimension: V(s).
    double state_value(int s) const {
        double m = at(s, 0, 0);
        for (std::size_t b = 1; b < nodes_at(0); ++b) m = std::max(m, at(s, 0, b));
        return m;
    }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    bool same_layout(const QTable& o) const { return num_states_ == o.num_states_ && bins_ == o.bins_; }

private:
    int num_states_ = 0;
    std::vector<int> bins_;
    std::vector<std::size_t> counts_;
    std::vector<std::size_t> offsets_;
    std::vector<double> values_;
};

inline double sup_distance(const QTable& a, const QTable& b) {
    require(a.same_layout(b), "QTables have mismatched node sets");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

}  // namespace arq::tabular
