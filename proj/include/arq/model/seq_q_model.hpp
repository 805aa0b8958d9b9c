#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "arq/core/random.hpp"
#include "arq/core/types.hpp"
#include "arq/model/autodiff.hpp"
#include "arq/model/params.hpp"

namespace arq {

struct ModelShape {
    int obs_dim = 6;
    int window = 1;
    int width = 32;
    int layers = 2;
    std::vector<int> bins;

    int num_dims() const { return static_cast<int>(bins.size()); }
    // w state slots followed by the d_A - 1 action tokens that can be conditioned on.
    int max_tokens() const { return window + num_dims() - 1; }

    bool operator==(const ModelShape&) const = default;
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Causal sequence model over [state_1 .. state_w, a^1 .. a^{d_A - 1}].
/// The output at the token preceding a^i feeds the head for dimension i, and a
/// sigmoid turns its logits into per-bin Q-values in (0, 1).
class SeqQModel {
public:
    SeqQModel() = default;

    explicit SeqQModel(ModelShape shape) : shape_(std::move(shape)) {
        require(shape_.obs_dim >= 1 && shape_.window >= 1 && shape_.width >= 1 && shape_.layers >= 0,
                "invalid model shape");
        require(shape_.num_dims() >= 1, "model needs at least one action dimension");
        const int D = shape_.width;
        obs_W_ = layout_.add("obs.W", shape_.obs_dim, D);
        obs_b_ = layout_.add("obs.b", 1, D);
        int rows = 0;
        for (int i = 0; i + 1 < shape_.num_dims(); ++i) {
            act_row_offset_.push_back(rows);
            rows += shape_.bins[static_cast<std::size_t>(i)];
        }
        if (rows > 0) act_E_ = layout_.add("act.E", rows, D);
        pos_ = layout_.add("pos", shape_.max_tokens(), D);
        for (int l = 0; l < shape_.layers; ++l) {
            const std::string p = "block" + std::to_string(l) + ".";
            Block b;
            b.ln1_g = layout_.add(p + "ln1.g", 1, D);
            b.ln1_b = layout_.add(p + "ln1.b", 1, D);
            b.Wq = layout_.add(p + "attn.Wq", D, D);
            b.bq = layout_.add(p + "attn.bq", 1, D);
            b.Wk = layout_.add(p + "attn.Wk", D, D);
            b.bk = layout_.add(p + "attn.bk", 1, D);
            b.Wv = layout_.add(p + "attn.Wv", D, D);
            b.bv = layout_.add(p + "attn.bv", 1, D);
            b.Wo = layout_.add(p + "attn.Wo", D, D);
            b.bo = layout_.add(p + "attn.bo", 1, D);
            b.ln2_g = layout_.add(p + "ln2.g", 1, D);
            b.ln2_b = layout_.add(p + "ln2.b", 1, D);
            b.W1 = layout_.add(p + "ff.W1", D, 2 * D);
            b.b1 = layout_.add(p + "ff.b1", 1, 2 * D);
            b.W2 = layout_.add(p + "ff.W2", 2 * D, D);
            b.b2 = layout_.add(p + "ff.b2", 1, D);
            blocks_.push_back(b);
        }
        lnf_g_ = layout_.add("lnf.g", 1, D);
        lnf_b_ = layout_.add("lnf.b", 1, D);
        for (int i = 0; i < shape_.num_dims(); ++i) {
            head_W_.push_back(layout_.add("head" + std::to_string(i) + ".W", D, shape_.bins[static_cast<std::size_t>(i)]));
            head_b_.push_back(layout_.add("head" + std::to_string(i) + ".b", 1, shape_.bins[static_cast<std::size_t>(i)]));
        }
    }

    const ModelShape& shape() const { return shape_; }
    const ParamLayout& layout() const { return layout_; }
    int num_dims() const { return shape_.num_dims(); }
    int bins(int dim) const { return shape_.bins[static_cast<std::size_t>(dim)]; }

    /// Uniform(+-1/sqrt(fan_in)) weights, unit layer-norm gains, zero biases.
    ParamVector init_params(std::uint64_t seed) const {
        ParamVector p(layout_);
        Rng rng(seed);
        for (const auto& e : layout_.entries()) {
            double* v = p.values.data() + e.slot.offset;
            const std::string& n = e.name;
            const auto ends_with = [&n](const char* suffix) {
                const std::string s(suffix);
                return n.size() >= s.size() && n.compare(n.size() - s.size(), s.size(), s) == 0;
            };
            if (ends_with(".g")) {
                std::fill(v, v + e.slot.size(), 1.0);
            } else if (ends_with(".b") || ends_with(".bq") || ends_with(".bk") || ends_with(".bv") ||
                       ends_with(".bo") || ends_with(".b1") || ends_with(".b2")) {
                std::fill(v, v + e.slot.size(), 0.0);
            } else {
                // Weights are stored [fan_in x fan_out]; embedding and position
                // tables count as linear maps from one-hot inputs.
                const int fan_in = e.slot.rows;
                const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
                for (std::size_t i = 0; i < e.slot.size(); ++i) v[i] = rng.uniform(-bound, bound);
            }
        }
        return p;
    }

    /// Records the forward pass for a window and action prefix on `tape` and
    /// returns the logit rows for the requested dimensions. Query dimension i
    /// needs prefix.size() >= i.
    template <class T>
    std::vector<ad::Var> build(ad::Tape<T>& tape, const StateWindow& window, const BinVector& prefix,
                               const std::vector<int>& query_dims) const {
        const int w = shape_.window;
        const int D = shape_.width;
        require(window.size() == w && window.pad.size() == window.slots.size(), "state window has wrong length");
        require(static_cast<int>(prefix.size()) <= num_dims() - 1, "action prefix too long");
        for (std::size_t i = 0; i < prefix.size(); ++i)
            require(prefix[i] >= 0 && prefix[i] < shape_.bins[i], "prefix bin out of range");

        ad::Matrix<T> obs(w, shape_.obs_dim);
        for (int r = 0; r < w; ++r) {
            const auto& o = window.slots[static_cast<std::size_t>(r)];
            require(static_cast<int>(o.size()) == shape_.obs_dim, "observation has wrong dimension");
            for (int c = 0; c < shape_.obs_dim; ++c) obs(r, c) = static_cast<T>(o[static_cast<std::size_t>(c)]);
        }
        ad::Var x = tape.tanh(tape.linear(tape.constant(std::move(obs)), obs_W_, obs_b_));
        if (!prefix.empty()) {
            std::vector<int> rows;
            for (std::size_t i = 0; i < prefix.size(); ++i) rows.push_back(act_row_offset_[i] + prefix[i]);
            x = tape.concat_rows(x, tape.gather(act_E_, std::move(rows)));
        }
        x = tape.add_param_rows(x, pos_);

        const int n = w + static_cast<int>(prefix.size());
        std::vector<char> allowed(static_cast<std::size_t>(n) * n, 0);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c <= r; ++c)
                allowed[static_cast<std::size_t>(r) * n + c] = !(c < w && window.pad[static_cast<std::size_t>(c)]);

        const T scale = T(1) / std::sqrt(static_cast<T>(D));
        for (const auto& b : blocks_) {
            ad::Var h = tape.layer_norm(x, b.ln1_g, b.ln1_b);
            ad::Var q = tape.linear(h, b.Wq, b.bq);
            ad::Var k = tape.linear(h, b.Wk, b.bk);
            ad::Var v = tape.linear(h, b.Wv, b.bv);
            ad::Var att = tape.masked_softmax(tape.scale(tape.matmul_nt(q, k), scale), allowed);
            x = tape.add(x, tape.linear(tape.matmul(att, v), b.Wo, b.bo));
            h = tape.layer_norm(x, b.ln2_g, b.ln2_b);
            x = tape.add(x, tape.linear(tape.gelu(tape.linear(h, b.W1, b.b1)), b.W2, b.b2));
        }
        x = tape.layer_norm(x, lnf_g_, lnf_b_);

        std::vector<ad::Var> out;
        for (int dim : query_dims) {
            require(dim >= 0 && dim < num_dims() && dim <= static_cast<int>(prefix.size()), "query dimension needs a longer prefix");
            out.push_back(tape.linear(tape.row(x, w - 1 + dim), head_W_[static_cast<std::size_t>(dim)],
                                      head_b_[static_cast<std::size_t>(dim)]));
        }
        return out;
    }

    /// Logits for dimension prefix.size() given the prefix.
    std::vector<double> logits(const ParamVector& params, const StateWindow& window, const BinVector& prefix) const {
        require(params.layout == layout_, "parameters do not match the model layout");
        ad::Tape<double> tape(params.values, {});
        const int dim = static_cast<int>(prefix.size());
        require(dim < num_dims(), "prefix already covers every dimension");
        const auto out = build(tape, window, prefix, {dim});
        return tape.value(out[0]).data;
    }

    /// Per-bin Q-values for dimension prefix.size().
    std::vector<double> q_values(const ParamVector& params, const StateWindow& window, const BinVector& prefix) const {
        auto z = logits(params, window, prefix);
        for (auto& v : z) v = sigmoid(v);
        return z;
    }

    /// Q-values of every dimension along a fixed action (row i is conditioned
    /// on action[0..i)), computed in one pass.
    std::vector<std::vector<double>> q_values_along(const ParamVector& params, const StateWindow& window,
                                                    const BinVector& action) const {
        require(static_cast<int>(action.size()) >= num_dims() - 1, "action too short");
        ad::Tape<double> tape(params.values, {});
        const BinVector prefix(action.begin(), action.begin() + (num_dims() - 1));
        std::vector<int> dims(static_cast<std::size_t>(num_dims()));
        for (int i = 0; i < num_dims(); ++i) dims[static_cast<std::size_t>(i)] = i;
        const auto out = build(tape, window, prefix, dims);
        std::vector<std::vector<double>> q;
        for (auto v : out) {
            auto z = tape.value(v).data;
            for (auto& x : z) x = sigmoid(x);
            q.push_back(std::move(z));
        }
        return q;
    }

private:
    struct Block {
        ad::ParamSlot ln1_g, ln1_b, Wq, bq, Wk, bk, Wv, bv, Wo, bo, ln2_g, ln2_b, W1, b1, W2, b2;
    };

    ModelShape shape_;
    ParamLayout layout_;
    ad::ParamSlot obs_W_, obs_b_, act_E_, pos_, lnf_g_, lnf_b_;
    std::vector<int> act_row_offset_;
    std::vector<Block> blocks_;
    std::vector<ad::ParamSlot> head_W_, head_b_;
};

inline int argmax_lowest(const std::vector<double>& v) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i)
        if (v[static_cast<std::size_t>(i)] > v[static_cast<std::size_t>(best)]) best = i;
    return best;
}

/// Autoregressive argmax: each dimension's bin is chosen given the bins
/// already chosen for earlier dimensions. Ties go to the lowest bin.
inline BinVector greedy_decode(const SeqQModel& model, const ParamVector& params, const StateWindow& window) {
    BinVector a;
    for (int i = 0; i < model.num_dims(); ++i) a.push_back(argmax_lowest(model.q_values(params, window, a)));
    return a;
}

}  // namespace arq
