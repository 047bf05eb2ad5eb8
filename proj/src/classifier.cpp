#include "pcdream/classifier.hpp"

#include "pcdream/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>

namespace pcdream {

namespace {

using ordered_json = nlohmann::ordered_json;

void validate_config(const ModelConfig& cfg) {
    if (cfg.point_widths.size() < 2 || cfg.head_widths.size() < 2) {
        throw std::invalid_argument("ModelConfig: need at least one per-point and one head layer");
    }
    if (cfg.point_widths.front() != 3) {
        throw std::invalid_argument("ModelConfig: first per-point width must be 3");
    }
    if (cfg.head_widths.back() != cfg.class_count) {
        throw std::invalid_argument("ModelConfig: last head width must equal class_count");
    }
    if (cfg.point_widths.back() != cfg.head_widths.front()) {
        throw std::invalid_argument("ModelConfig: head input width must match pooled width");
    }
    for (std::size_t w : cfg.point_widths) {
        if (w == 0) throw std::invalid_argument("ModelConfig: zero width");
    }
    for (std::size_t w : cfg.head_widths) {
        if (w == 0) throw std::invalid_argument("ModelConfig: zero width");
    }
}

std::vector<std::pair<std::size_t, std::size_t>> layer_dims(const ModelConfig& cfg) {
    std::vector<std::pair<std::size_t, std::size_t>> dims;
    for (std::size_t i = 0; i + 1 < cfg.point_widths.size(); ++i) {
        dims.emplace_back(cfg.point_widths[i], cfg.point_widths[i + 1]);
    }
    for (std::size_t i = 0; i + 1 < cfg.head_widths.size(); ++i) {
        dims.emplace_back(cfg.head_widths[i], cfg.head_widths[i + 1]);
    }
    return dims;
}

Tensor cloud_to_tensor(const PointCloud& pc) {
    Tensor x = Tensor::zeros({pc.count(), std::size_t{3}});
    for (std::size_t i = 0; i < pc.count(); ++i) {
        x.at(i, 0) = pc.points[i].x;
        x.at(i, 1) = pc.points[i].y;
        x.at(i, 2) = pc.points[i].z;
    }
    return x;
}

struct ForwardNodes {
    NodeId input = 0;
    std::vector<NodeId> weights;
    std::vector<NodeId> biases;
    NodeId logits = 0;
};

// One forward graph: per-point affine+relu layers, max-pool, head layers
// with relu between all but the last.
ForwardNodes build_forward(Tape& tape, const Model& model, const PointCloud& pc) {
    if (pc.empty()) {
        throw std::invalid_argument("empty cloud");
    }
    check_finite(pc, "forward");

    ForwardNodes nodes;
    nodes.input = tape.leaf(cloud_to_tensor(pc));
    for (std::size_t i = 0; i < model.layer_count(); ++i) {
        nodes.weights.push_back(tape.leaf(model.weights[i]));
        nodes.biases.push_back(tape.leaf(model.biases[i]));
    }

    NodeId h = nodes.input;
    const std::size_t n_point = model.point_layer_count();
    for (std::size_t i = 0; i < n_point; ++i) {
        h = tape.relu(tape.affine(h, nodes.weights[i], nodes.biases[i]));
    }
    h = tape.max_pool_points(h);
    for (std::size_t i = n_point; i < model.layer_count(); ++i) {
        h = tape.affine(h, nodes.weights[i], nodes.biases[i]);
        if (i + 1 < model.layer_count()) h = tape.relu(h);
    }
    nodes.logits = h;
    return nodes;
}

std::size_t argmax_index(const Tensor& logits) {
    return static_cast<std::size_t>(
        std::max_element(logits.data.begin(), logits.data.end()) - logits.data.begin());
}

// --- base64 ------------------------------------------------------------

constexpr char kB64Alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const unsigned char* bytes, std::size_t n) {
    std::string out;
    out.reserve((n + 2) / 3 * 4);
    for (std::size_t i = 0; i < n; i += 3) {
        const unsigned b0 = bytes[i];
        const unsigned b1 = i + 1 < n ? bytes[i + 1] : 0;
        const unsigned b2 = i + 2 < n ? bytes[i + 2] : 0;
        out += kB64Alphabet[b0 >> 2];
        out += kB64Alphabet[((b0 & 0x3) << 4) | (b1 >> 4)];
        out += i + 1 < n ? kB64Alphabet[((b1 & 0xF) << 2) | (b2 >> 6)] : '=';
        out += i + 2 < n ? kB64Alphabet[b2 & 0x3F] : '=';
    }
    return out;
}

std::vector<unsigned char> base64_decode(std::string_view text, const std::string& what) {
    auto fail = [&what]() -> void {
        throw std::runtime_error("truncated data in checkpoint parameter " + what);
    };
    if (text.size() % 4 != 0) fail();
    int decode_table[256];
    std::fill(std::begin(decode_table), std::end(decode_table), -1);
    for (int i = 0; i < 64; ++i) {
        decode_table[static_cast<unsigned char>(kB64Alphabet[i])] = i;
    }
    std::vector<unsigned char> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int vals[4];
        int pad = 0;
        for (std::size_t k = 0; k < 4; ++k) {
            const char c = text[i + k];
            if (c == '=') {
                if (i + 4 != text.size() || k < 2) fail();
                vals[k] = 0;
                ++pad;
            } else {
                if (pad > 0) fail();
                vals[k] = decode_table[static_cast<unsigned char>(c)];
                if (vals[k] < 0) fail();
            }
        }
        out.push_back(static_cast<unsigned char>((vals[0] << 2) | (vals[1] >> 4)));
        if (pad < 2) out.push_back(static_cast<unsigned char>(((vals[1] & 0xF) << 4) | (vals[2] >> 2)));
        if (pad < 1) out.push_back(static_cast<unsigned char>(((vals[2] & 0x3) << 6) | vals[3]));
    }
    return out;
}

std::string tensor_to_base64(const Tensor& t) {
    // Little-endian float32; this code targets little-endian hosts.
    const auto* bytes = reinterpret_cast<const unsigned char*>(t.data.data());
    return base64_encode(bytes, t.data.size() * sizeof(float));
}

} // namespace

std::vector<std::string> parameter_names(const ModelConfig& cfg) {
    std::vector<std::string> names;
    const std::size_t n_point = cfg.point_widths.size() - 1;
    const std::size_t n_total = n_point + cfg.head_widths.size() - 1;
    for (std::size_t i = 0; i < n_total; ++i) {
        const std::string base = i < n_point ? "point" + std::to_string(i)
                                             : "head" + std::to_string(i - n_point);
        names.push_back(base + ".weight");
        names.push_back(base + ".bias");
    }
    return names;
}

Model init_model(const ModelConfig& cfg, std::vector<std::string> labels) {
    validate_config(cfg);
    if (labels.size() != cfg.class_count) {
        throw std::invalid_argument("init_model: expected " + std::to_string(cfg.class_count) +
                                    " labels, got " + std::to_string(labels.size()));
    }
    Model model;
    model.config = cfg;
    model.labels = std::move(labels);

    SplitMix64 rng(cfg.init_seed);
    for (const auto& [d_in, d_out] : layer_dims(cfg)) {
        Tensor w = Tensor::zeros({d_in, d_out});
        const double limit = std::sqrt(6.0 / static_cast<double>(d_in + d_out));
        for (float& v : w.data) {
            v = static_cast<float>((2.0 * rng.next_double() - 1.0) * limit);
        }
        model.weights.push_back(std::move(w));
        model.biases.push_back(Tensor::zeros({d_out}));
    }
    return model;
}

Tensor forward(const Model& model, const PointCloud& pc) {
    Tape tape;
    const ForwardNodes nodes = build_forward(tape, model, pc);
    return tape.value(nodes.logits);
}

std::vector<float> softmax(const Tensor& logits) {
    const float max_logit = *std::max_element(logits.data.begin(), logits.data.end());
    std::vector<float> probs(logits.numel());
    float denom = 0.0f;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        probs[i] = std::exp(logits.data[i] - max_logit);
        denom += probs[i];
    }
    for (float& p : probs) p /= denom;
    return probs;
}

PointCloud input_gradient(const Model& model, const PointCloud& pc, int target_class) {
    if (target_class < 0 || static_cast<std::size_t>(target_class) >= model.config.class_count) {
        throw std::invalid_argument("input_gradient: class index " + std::to_string(target_class) +
                                    " out of range for " + std::to_string(model.config.class_count) +
                                    " classes");
    }
    Tape tape;
    const ForwardNodes nodes = build_forward(tape, model, pc);
    const NodeId target = tape.select(nodes.logits, static_cast<std::size_t>(target_class));
    const std::vector<Tensor> grads = tape.backward(target);

    const Tensor& gx = grads[nodes.input];
    PointCloud grad;
    grad.points.reserve(pc.count());
    for (std::size_t i = 0; i < pc.count(); ++i) {
        grad.points.push_back({gx.at(i, 0), gx.at(i, 1), gx.at(i, 2)});
    }
    return grad;
}

LossGradients loss_gradients(const Model& model, const PointCloud& pc, int label) {
    Tape tape;
    const ForwardNodes nodes = build_forward(tape, model, pc);
    const NodeId loss_node = tape.softmax_cross_entropy(nodes.logits, label);
    const std::vector<Tensor> grads = tape.backward(loss_node);

    LossGradients out;
    out.loss = tape.value(loss_node).data[0];
    const Tensor& gx = grads[nodes.input];
    out.input.points.reserve(pc.count());
    for (std::size_t i = 0; i < pc.count(); ++i) {
        out.input.points.push_back({gx.at(i, 0), gx.at(i, 1), gx.at(i, 2)});
    }
    for (std::size_t i = 0; i < model.layer_count(); ++i) {
        out.weights.push_back(grads[nodes.weights[i]]);
        out.biases.push_back(grads[nodes.biases[i]]);
    }
    return out;
}

TrainResult train(const std::vector<LabeledCloud>& data, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg, std::vector<std::string> labels,
                  const EpochCallback& on_epoch) {
    if (data.empty()) {
        throw std::invalid_argument("train: empty dataset");
    }
    if (train_cfg.epochs < 1 || train_cfg.batch_size < 1 || !(train_cfg.learning_rate > 0.0f)) {
        throw std::invalid_argument("train: epochs, batch size and learning rate must be positive");
    }
    if (!(train_cfg.beta1 > 0.0f && train_cfg.beta1 < 1.0f) ||
        !(train_cfg.beta2 > 0.0f && train_cfg.beta2 < 1.0f)) {
        throw std::invalid_argument("train: beta1/beta2 must lie in (0, 1)");
    }
    for (const LabeledCloud& lc : data) {
        if (lc.label < 0 || static_cast<std::size_t>(lc.label) >= model_cfg.class_count) {
            throw std::invalid_argument("train: label " + std::to_string(lc.label) +
                                        " out of range for " +
                                        std::to_string(model_cfg.class_count) + " classes");
        }
    }

    TrainResult result;
    result.model = init_model(model_cfg, std::move(labels));
    Model& model = result.model;

    const std::size_t n_params = model.layer_count() * 2;
    auto param = [&model](std::size_t p) -> Tensor& {
        return p % 2 == 0 ? model.weights[p / 2] : model.biases[p / 2];
    };

    std::vector<Tensor> adam_m(n_params), adam_v(n_params);
    for (std::size_t p = 0; p < n_params; ++p) {
        adam_m[p] = Tensor::zeros(param(p).shape);
        adam_v[p] = Tensor::zeros(param(p).shape);
    }

    const std::uint64_t shuffle_base = derive_seed(train_cfg.seed, 0x51u);

    std::vector<std::size_t> order(data.size());
    std::size_t adam_t = 0;

    for (std::size_t epoch = 0; epoch < train_cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        SplitMix64 shuffle_rng(derive_seed(shuffle_base, epoch));
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
            const std::size_t j =
                i + static_cast<std::size_t>(shuffle_rng.next_below(order.size() - i));
            std::swap(order[i], order[j]);
        }

        double epoch_loss = 0.0;
        std::size_t correct = 0;

        for (std::size_t start = 0; start < order.size(); start += train_cfg.batch_size) {
            const std::size_t end = std::min(start + train_cfg.batch_size, order.size());
            const std::size_t batch_n = end - start;
            const std::size_t batch_idx = start / train_cfg.batch_size;

            std::vector<Tensor> grad_accum(n_params);
            for (std::size_t p = 0; p < n_params; ++p) {
                grad_accum[p] = Tensor::zeros(param(p).shape);
            }

            for (std::size_t s = start; s < end; ++s) {
                const LabeledCloud& lc = data[order[s]];
                try {
                    Tape tape;
                    const ForwardNodes nodes = build_forward(tape, model, lc.cloud);
                    const NodeId loss_node = tape.softmax_cross_entropy(nodes.logits, lc.label);
                    const float loss = tape.value(loss_node).data[0];
                    if (!std::isfinite(loss)) {
                        throw NumericError("non-finite loss");
                    }
                    epoch_loss += loss;
                    if (argmax_index(tape.value(nodes.logits)) ==
                        static_cast<std::size_t>(lc.label)) {
                        ++correct;
                    }
                    const std::vector<Tensor> grads = tape.backward(loss_node);
                    for (std::size_t p = 0; p < n_params; ++p) {
                        const Tensor& g =
                            grads[p % 2 == 0 ? nodes.weights[p / 2] : nodes.biases[p / 2]];
                        Tensor& acc = grad_accum[p];
                        for (std::size_t k = 0; k < g.numel(); ++k) acc.data[k] += g.data[k];
                    }
                } catch (const NumericError& e) {
                    throw NumericError(std::string(e.what()) + " at epoch " +
                                       std::to_string(epoch) + " batch " +
                                       std::to_string(batch_idx));
                }
            }

            ++adam_t;
            const float bc1 = 1.0f - std::pow(train_cfg.beta1, static_cast<float>(adam_t));
            const float bc2 = 1.0f - std::pow(train_cfg.beta2, static_cast<float>(adam_t));
            const float inv_batch = 1.0f / static_cast<float>(batch_n);
            for (std::size_t p = 0; p < n_params; ++p) {
                Tensor& theta = param(p);
                Tensor& m = adam_m[p];
                Tensor& v = adam_v[p];
                const Tensor& acc = grad_accum[p];
                for (std::size_t k = 0; k < theta.numel(); ++k) {
                    const float g = acc.data[k] * inv_batch;
                    m.data[k] = train_cfg.beta1 * m.data[k] + (1.0f - train_cfg.beta1) * g;
                    v.data[k] = train_cfg.beta2 * v.data[k] + (1.0f - train_cfg.beta2) * g * g;
                    const float m_hat = m.data[k] / bc1;
                    const float v_hat = v.data[k] / bc2;
                    theta.data[k] -=
                        train_cfg.learning_rate * m_hat / (std::sqrt(v_hat) + train_cfg.epsilon);
                }
            }
        }

        result.history.push_back({epoch_loss / static_cast<double>(data.size()),
                                  static_cast<double>(correct) / static_cast<double>(data.size())});
        if (on_epoch) on_epoch(epoch, result.history.back());
    }
    return result;
}

Evaluation evaluate(const Model& model, const std::vector<LabeledCloud>& data) {
    if (data.empty()) {
        throw std::invalid_argument("evaluate: empty dataset");
    }
    Evaluation eval;
    const std::size_t c = model.config.class_count;
    eval.confusion.assign(c, std::vector<std::size_t>(c, 0));
    std::size_t correct = 0;
    for (const LabeledCloud& lc : data) {
        const Tensor logits = forward(model, lc.cloud);
        const std::size_t pred = argmax_index(logits);
        eval.confusion[static_cast<std::size_t>(lc.label)][pred]++;
        if (pred == static_cast<std::size_t>(lc.label)) ++correct;
    }
    eval.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    return eval;
}

std::string save_checkpoint(const Model& model) {
    ordered_json doc;
    doc["format_version"] = 1;
    doc["config"] = {{"point_widths", model.config.point_widths},
                     {"head_widths", model.config.head_widths},
                     {"class_count", model.config.class_count},
                     {"init_seed", model.config.init_seed}};
    doc["labels"] = model.labels;

    const std::vector<std::string> names = parameter_names(model.config);
    ordered_json params = ordered_json::array();
    for (std::size_t p = 0; p < names.size(); ++p) {
        const Tensor& t = p % 2 == 0 ? model.weights[p / 2] : model.biases[p / 2];
        params.push_back({{"name", names[p]}, {"shape", t.shape}, {"data", tensor_to_base64(t)}});
    }
    doc["parameters"] = std::move(params);
    return doc.dump(2) + "\n";
}

Model load_checkpoint(std::string_view bytes) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(bytes);
    } catch (const ordered_json::parse_error& e) {
        throw std::runtime_error(std::string("checkpoint is not valid JSON: ") + e.what());
    }

    const int version = doc.at("format_version").get<int>();
    if (version != 1) {
        throw std::runtime_error("unsupported checkpoint format version " +
                                 std::to_string(version));
    }

    ModelConfig cfg;
    const auto& jcfg = doc.at("config");
    cfg.point_widths = jcfg.at("point_widths").get<std::vector<std::size_t>>();
    cfg.head_widths = jcfg.at("head_widths").get<std::vector<std::size_t>>();
    cfg.class_count = jcfg.at("class_count").get<std::size_t>();
    cfg.init_seed = jcfg.at("init_seed").get<std::uint64_t>();
    validate_config(cfg);

    Model model;
    model.config = cfg;
    model.labels = doc.at("labels").get<std::vector<std::string>>();
    if (model.labels.size() != cfg.class_count) {
        throw std::runtime_error("checkpoint labels do not match class_count");
    }

    const std::vector<std::string> names = parameter_names(cfg);
    const auto dims = layer_dims(cfg);
    const auto& jparams = doc.at("parameters");
    if (jparams.size() != names.size()) {
        throw std::runtime_error("checkpoint has " + std::to_string(jparams.size()) +
                                 " parameters, expected " + std::to_string(names.size()));
    }

    model.weights.resize(dims.size());
    model.biases.resize(dims.size());
    for (std::size_t p = 0; p < names.size(); ++p) {
        const auto& jp = jparams[p];
        const std::string name = jp.at("name").get<std::string>();
        if (name != names[p]) {
            throw std::runtime_error("checkpoint parameter order mismatch: expected " + names[p] +
                                     ", got " + name);
        }
        const std::vector<std::size_t> expected_shape =
            p % 2 == 0 ? std::vector<std::size_t>{dims[p / 2].first, dims[p / 2].second}
                       : std::vector<std::size_t>{dims[p / 2].second};
        const auto shape = jp.at("shape").get<std::vector<std::size_t>>();
        if (shape != expected_shape) {
            throw std::runtime_error("shape mismatch for parameter " + name + ": expected " +
                                     shape_to_string(expected_shape) + ", got " +
                                     shape_to_string(shape));
        }

        const std::vector<unsigned char> raw =
            base64_decode(jp.at("data").get<std::string>(), name);
        std::size_t numel = 1;
        for (std::size_t d : shape) numel *= d;
        if (raw.size() != numel * sizeof(float)) {
            throw std::runtime_error("truncated data in checkpoint parameter " + name);
        }
        Tensor t = Tensor::zeros(shape);
        std::memcpy(t.data.data(), raw.data(), raw.size());
        for (float v : t.data) {
            if (!std::isfinite(v)) {
                throw std::runtime_error("non-finite parameter value in " + name);
            }
        }
        if (p % 2 == 0) {
            model.weights[p / 2] = std::move(t);
        } else {
            model.biases[p / 2] = std::move(t);
        }
    }
    return model;
}

} // namespace pcdream
