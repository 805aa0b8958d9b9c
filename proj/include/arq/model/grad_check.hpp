#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "arq/core/random.hpp"
#include "arq/model/loss.hpp"

namespace arq {

struct GradCheckOptions {
    double eps = 1e-5;
    // 0 checks every parameter; otherwise at least this many, one per tensor
    // first and the rest drawn at random.
    std::size_t subset = 256;
    std::uint64_t seed = 0;
    std::vector<int> dims;  // empty means every dimension
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::size_t checked = 0;
};

inline std::vector<std::size_t> grad_check_indices(const ParamLayout& layout, std::size_t subset, std::uint64_t seed) {
    std::vector<std::size_t> all(layout.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    if (subset == 0 || subset >= all.size()) return all;
    Rng rng(seed);
    std::vector<char> taken(all.size(), 0);
    std::vector<std::size_t> out;
    for (const auto& e : layout.entries()) {
        const std::size_t i = e.slot.offset + rng.below(static_cast<std::uint64_t>(e.slot.size()));
        taken[i] = 1;
        out.push_back(i);
    }
    while (out.size() < subset) {
        const std::size_t i = rng.below(static_cast<std::uint64_t>(all.size()));
        if (taken[i]) continue;
        taken[i] = 1;
        out.push_back(i);
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Compares the double-precision analytic gradient of the per-dimension loss
/// (targets from `target`, held fixed) with a five-point central difference
/// evaluated in extended precision. Relative error per parameter is
/// |g_a - g_fd| / max(1e-8, |g_a| + |g_fd|).
inline GradCheckReport grad_check(const SeqQModel& model, const ParamVector& params, const ParamVector& target,
                                  const data::Sample& sample, const TrainConfig& cfg, const GradCheckOptions& opt = {}) {
    require(opt.eps >= 1e-6 && opt.eps <= 1e-3, "grad_check eps must lie in [1e-6, 1e-3]");
    const std::vector<int> dims = opt.dims.empty() ? all_dims(model) : opt.dims;
    const TargetSet ts = compute_targets(model, target, sample, cfg);

    std::vector<double> analytic(params.size(), 0.0);
    sample_loss<double>(model, params.values, analytic, sample, ts.targets, cfg, 1.0, dims);

    using Ext = long double;
    std::vector<Ext> p(params.values.begin(), params.values.end());
    const auto loss_at = [&](std::size_t i, Ext delta) {
        const Ext saved = p[i];
        p[i] = saved + delta;
        Ext total = 0;
        sample_loss<Ext>(model, std::span<const Ext>(p), std::span<Ext>(), sample, ts.targets, cfg, Ext(1), dims, &total);
        p[i] = saved;
        return total;
    };

    GradCheckReport rep;
    const Ext h = static_cast<Ext>(opt.eps);
    for (std::size_t i : grad_check_indices(params.layout, opt.subset, opt.seed)) {
        const Ext near = loss_at(i, h) - loss_at(i, -h);
        const Ext far = loss_at(i, 2 * h) - loss_at(i, -2 * h);
        const Ext fd = (8 * near - far) / (12 * h);
        const double g_fd = static_cast<double>(fd);
        const double g_a = analytic[i];
        const double rel = std::abs(g_a - g_fd) / std::max(1e-8, std::abs(g_a) + std::abs(g_fd));
        if (rel > rep.max_rel_error || rep.checked == 0) {
            rep.max_rel_error = rel;
            rep.worst_index = i;
            rep.worst_analytic = g_a;
            rep.worst_numeric = g_fd;
        }
        ++rep.checked;
    }
    return rep;
}

}  // namespace arq
