#pragma once

#include "pcdream/dataset.hpp"
#include "pcdream/point_cloud.hpp"
#include "pcdream/tape.hpp"
#include "pcdream/tensor.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace pcdream {

// Set classifier: shared per-point MLP, feature-wise max-pool over the
// points, dense head to class logits. Max-pooling makes the logits exactly
// invariant to any permutation of the input points.
struct ModelConfig {
    std::vector<std::size_t> point_widths{3, 64, 128};
    std::vector<std::size_t> head_widths{128, 64, 5};
    std::size_t class_count = 5;
    std::uint64_t init_seed = 0;
};

struct Model {
    ModelConfig config;
    std::vector<std::string> labels; // class_count names, canonical order
    std::vector<Tensor> weights;     // per-point layers then head layers
    std::vector<Tensor> biases;

    std::size_t layer_count() const { return weights.size(); }
    std::size_t point_layer_count() const { return config.point_widths.size() - 1; }
};

// Glorot-uniform weights, zero biases, drawn from splitmix64(init_seed).
Model init_model(const ModelConfig& cfg, std::vector<std::string> labels);

// Canonical parameter names ("point0.weight", ..., "head1.bias"), matching
// the order of Model::weights/biases interleaved per layer.
std::vector<std::string> parameter_names(const ModelConfig& cfg);

// Class logits for a cloud. Throws std::invalid_argument("empty cloud") on
// an empty input.
Tensor forward(const Model& model, const PointCloud& pc);

std::vector<float> softmax(const Tensor& logits);

// Gradient of the chosen class logit with respect to every point
// coordinate, returned with the same shape as the input cloud. Points never
// selected by any pooled feature receive exactly zero.
PointCloud input_gradient(const Model& model, const PointCloud& pc, int target_class);

struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    float learning_rate = 1e-3f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float epsilon = 1e-8f;
    std::uint64_t seed = 0;
};

struct EpochStats {
    double loss = 0.0;
    double accuracy = 0.0;
};

struct TrainResult {
    Model model;
    std::vector<EpochStats> history; // one entry per epoch
};

using EpochCallback = std::function<void(std::size_t epoch, const EpochStats&)>;

// Adam training over softmax cross-entropy. Deterministic given the seeds:
// fixed shuffle order, fixed batch composition, single-threaded updates.
// Throws NumericError identifying the epoch/batch if the loss goes
// non-finite.
TrainResult train(const std::vector<LabeledCloud>& data, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg, std::vector<std::string> labels,
                  const EpochCallback& on_epoch = nullptr);

// One forward/backward pass of the training loss, exposing every gradient.
struct LossGradients {
    float loss = 0.0f;
    PointCloud input;            // d loss / d point coordinates
    std::vector<Tensor> weights; // d loss / d weights, per layer
    std::vector<Tensor> biases;
};

LossGradients loss_gradients(const Model& model, const PointCloud& pc, int label);

struct Evaluation {
    double accuracy = 0.0;
    // confusion[true_label][predicted] counts; rows sum to per-class totals.
    std::vector<std::vector<std::size_t>> confusion;
};

Evaluation evaluate(const Model& model, const std::vector<LabeledCloud>& data);

// Checkpoint: JSON envelope (version, config, label names) plus
// base64-encoded little-endian float32 parameter blocks. Round-trips
// bit-exactly.
std::string save_checkpoint(const Model& model);
Model load_checkpoint(std::string_view bytes);

} // namespace pcdream
