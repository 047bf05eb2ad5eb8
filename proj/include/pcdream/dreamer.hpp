#pragma once

#include "pcdream/classifier.hpp"
#include "pcdream/point_cloud.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace pcdream {

// Which cloud each iteration's union merges in: the original input (the
// default) or the previous iterate (doubles the cloud every step).
enum class UnionMode { WithOriginal, WithPrevious };

struct DreamConfig {
    float gamma = 0.05f;          // gradient-ascent step size
    std::size_t iters = 50;       // T
    int target = 0;               // class index whose logit is amplified
    std::size_t period = 5;       // downsample every K iterations; 0 = never
    std::size_t max_points = 0;   // downsample target; must be >= input count when period > 0
    UnionMode union_mode = UnionMode::WithOriginal;
    std::uint64_t seed = 0;       // drives the periodic downsampling
    std::size_t snapshot_period = 0; // keep a copy of the cloud every S iterations; 0 = never
};

struct IterationRecord {
    std::size_t iter = 0;     // 1-based iteration index
    std::size_t count = 0;    // point count at the end of the iteration
    float target_logit = 0.0f; // target class logit of the iterate
    float target_prob = 0.0f;  // target class softmax probability
    bool downsampled = false;  // whether this iteration ended in a downsample
};

struct DreamTrace {
    std::string algorithm;               // "dream" or "add"
    bool union_flags_ignored = false;    // naive runs ignore union/downsample settings
    float initial_logit = 0.0f;          // target logit/prob of the input cloud
    float initial_prob = 0.0f;
    std::vector<IterationRecord> records;                     // exactly T entries
    std::vector<std::pair<std::size_t, PointCloud>> snapshots; // (iter, cloud); iter 0 included
};

struct DreamResult {
    PointCloud cloud;
    DreamTrace trace;
};

// Plain gradient-ascent dreaming: T steps of x += gamma * d(logit)/dx. The
// point count never changes; union/downsample settings in cfg are ignored
// (and recorded as ignored in the trace). Inputs are expected in the
// model's normalized frame; no rescaling happens between iterations.
DreamResult deepdream_naive(const Model& model, const PointCloud& pc, const DreamConfig& cfg);

// Amalgamated dreaming: each iteration takes the gradient step and then
// unions the result with the input (or the previous iterate), so the
// original shape keeps feeding the cloud while new structure grows. Every
// `period` iterations the cloud is downsampled back to max_points with a
// per-iteration seed derived from (cfg.seed, iter).
DreamResult add_run(const Model& model, const PointCloud& pc, const DreamConfig& cfg);

// Places each cloud, then unions them in list order.
PointCloud amalgamate_inputs(const std::vector<PointCloud>& clouds,
                             const std::vector<Placement>& placements);

// CSV with header iter,count,target_logit,target_prob,downsampled.
std::string trace_to_csv(const DreamTrace& trace);

} // namespace pcdream
