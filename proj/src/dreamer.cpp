#include "pcdream/dreamer.hpp"

#include "pcdream/rng.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace pcdream {

namespace {

struct TargetEval {
    float logit = 0.0f;
    float prob = 0.0f;
};

TargetEval eval_target(const Model& model, const PointCloud& pc, int target) {
    const Tensor logits = forward(model, pc);
    const std::vector<float> probs = softmax(logits);
    return {logits.data[static_cast<std::size_t>(target)],
            probs[static_cast<std::size_t>(target)]};
}

void validate_common(const PointCloud& pc, const DreamConfig& cfg, std::size_t class_count) {
    if (pc.empty()) {
        throw std::invalid_argument("empty cloud");
    }
    if (!(cfg.gamma > 0.0f)) {
        throw std::invalid_argument("DreamConfig: gamma must be positive");
    }
    if (cfg.iters < 1) {
        throw std::invalid_argument("DreamConfig: iters must be >= 1");
    }
    if (cfg.target < 0 || static_cast<std::size_t>(cfg.target) >= class_count) {
        throw std::invalid_argument("DreamConfig: target class out of range");
    }
}

PointCloud gradient_step(const Model& model, const PointCloud& pc, const DreamConfig& cfg,
                         std::size_t iter) {
    PointCloud grad;
    try {
        grad = input_gradient(model, pc, cfg.target);
    } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at iteration " + std::to_string(iter));
    }
    PointCloud out = pc;
    for (std::size_t i = 0; i < out.count(); ++i) {
        out.points[i].x += cfg.gamma * grad.points[i].x;
        out.points[i].y += cfg.gamma * grad.points[i].y;
        out.points[i].z += cfg.gamma * grad.points[i].z;
    }
    return out;
}

void maybe_snapshot(DreamTrace& trace, const DreamConfig& cfg, std::size_t iter,
                    const PointCloud& pc) {
    if (cfg.snapshot_period > 0 && iter % cfg.snapshot_period == 0) {
        trace.snapshots.emplace_back(iter, pc);
    }
}

} // namespace

DreamResult deepdream_naive(const Model& model, const PointCloud& pc, const DreamConfig& cfg) {
    validate_common(pc, cfg, model.config.class_count);

    DreamResult result;
    DreamTrace& trace = result.trace;
    trace.algorithm = "dream";
    trace.union_flags_ignored = cfg.period > 0 || cfg.union_mode != UnionMode::WithOriginal;

    const TargetEval initial = eval_target(model, pc, cfg.target);
    trace.initial_logit = initial.logit;
    trace.initial_prob = initial.prob;

    PointCloud x = pc;
    maybe_snapshot(trace, cfg, 0, x);
    for (std::size_t t = 1; t <= cfg.iters; ++t) {
        x = gradient_step(model, x, cfg, t);
        const TargetEval e = eval_target(model, x, cfg.target);
        trace.records.push_back({t, x.count(), e.logit, e.prob, false});
        maybe_snapshot(trace, cfg, t, x);
    }
    result.cloud = std::move(x);
    return result;
}

DreamResult add_run(const Model& model, const PointCloud& pc, const DreamConfig& cfg) {
    validate_common(pc, cfg, model.config.class_count);
    if (cfg.period > 0 && cfg.max_points < pc.count()) {
        throw std::invalid_argument("DreamConfig: max_points must be >= input count when "
                                    "downsampling is enabled");
    }

    DreamResult result;
    DreamTrace& trace = result.trace;
    trace.algorithm = "add";

    const TargetEval initial = eval_target(model, pc, cfg.target);
    trace.initial_logit = initial.logit;
    trace.initial_prob = initial.prob;

    PointCloud x = pc;
    maybe_snapshot(trace, cfg, 0, x);
    for (std::size_t t = 1; t <= cfg.iters; ++t) {
        const PointCloud stepped = gradient_step(model, x, cfg, t);
        PointCloud merged =
            cfg.union_mode == UnionMode::WithOriginal ? set_union(stepped, pc) : set_union(stepped, x);
        bool downsampled = false;
        if (cfg.period > 0 && t % cfg.period == 0) {
            merged = downsample_random(merged, cfg.max_points, derive_seed(cfg.seed, t));
            downsampled = true;
        }
        x = std::move(merged);
        const TargetEval e = eval_target(model, x, cfg.target);
        trace.records.push_back({t, x.count(), e.logit, e.prob, downsampled});
        maybe_snapshot(trace, cfg, t, x);
    }
    result.cloud = std::move(x);
    return result;
}

PointCloud amalgamate_inputs(const std::vector<PointCloud>& clouds,
                             const std::vector<Placement>& placements) {
    if (clouds.empty() || clouds.size() != placements.size()) {
        throw std::invalid_argument("amalgamate_inputs: clouds and placements must be non-empty "
                                    "lists of equal length");
    }
    PointCloud out;
    for (std::size_t i = 0; i < clouds.size(); ++i) {
        out = set_union(out, apply_placement(clouds[i], placements[i]));
    }
    return out;
}

std::string trace_to_csv(const DreamTrace& trace) {
    std::string out = "iter,count,target_logit,target_prob,downsampled\n";
    char buf[128];
    for (const IterationRecord& r : trace.records) {
        std::snprintf(buf, sizeof(buf), "%zu,%zu,%.9g,%.9g,%d\n", r.iter, r.count,
                      static_cast<double>(r.target_logit), static_cast<double>(r.target_prob),
                      r.downsampled ? 1 : 0);
        out += buf;
    }
    return out;
}

} // namespace pcdream
