#include "pcdream/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pcdream {

namespace {

// Treat a rank-1 tensor as a single row so the pooled feature vector can
// feed the dense head without a broadcasting engine.
std::size_t row_count(const Tensor& t) { return t.rank() == 1 ? 1 : t.rows(); }
std::size_t col_count(const Tensor& t) { return t.rank() == 1 ? t.shape[0] : t.shape[1]; }

bool row_all_zero(const float* row, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        if (row[i] != 0.0f) return false;
    }
    return true;
}

} // namespace

NodeId Tape::push_checked(Tensor t, const char* op_name) {
    for (float v : t.data) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string("non-finite value produced by ") + op_name);
        }
    }
    values_.push_back(std::move(t));
    return values_.size() - 1;
}

NodeId Tape::leaf(Tensor value) {
    if (value.numel() == 0) {
        throw std::invalid_argument("leaf: empty tensor");
    }
    return push_checked(std::move(value), "leaf");
}

NodeId Tape::affine(NodeId x_id, NodeId w_id, NodeId b_id) {
    const Tensor& x = values_.at(x_id);
    const Tensor& w = values_.at(w_id);
    const Tensor& b = values_.at(b_id);
    const std::size_t m = row_count(x);
    const std::size_t d_in = col_count(x);
    if (w.rank() != 2 || w.rows() != d_in || b.rank() != 1 || b.shape[0] != w.shape[1]) {
        throw std::invalid_argument("affine: x shape " + shape_to_string(x.shape) +
                                    " incompatible with W shape " + shape_to_string(w.shape) +
                                    " / b shape " + shape_to_string(b.shape));
    }
    const std::size_t d_out = w.shape[1];

    Tensor out = x.rank() == 1 ? Tensor::zeros({d_out}) : Tensor::zeros({m, d_out});
    for (std::size_t i = 0; i < m; ++i) {
        float* out_row = out.data.data() + i * d_out;
        const float* x_row = x.data.data() + i * d_in;
        for (std::size_t j = 0; j < d_out; ++j) out_row[j] = b.data[j];
        for (std::size_t k = 0; k < d_in; ++k) {
            const float a = x_row[k];
            const float* w_row = w.data.data() + k * d_out;
            for (std::size_t j = 0; j < d_out; ++j) out_row[j] += a * w_row[j];
        }
    }

    const NodeId out_id = push_checked(std::move(out), "affine");
    steps_.push_back({OpKind::Affine, x_id, w_id, b_id, out_id, {}, {}, -1});
    return out_id;
}

NodeId Tape::relu(NodeId x_id) {
    const Tensor& x = values_.at(x_id);
    Tensor out = x;
    for (float& v : out.data) v = std::max(v, 0.0f);
    const NodeId out_id = push_checked(std::move(out), "relu");
    steps_.push_back({OpKind::Relu, x_id, 0, 0, out_id, {}, {}, -1});
    return out_id;
}

NodeId Tape::max_pool_points(NodeId x_id) {
    const Tensor& x = values_.at(x_id);
    if (x.rank() != 2) {
        throw std::invalid_argument("max_pool_points: expected [m x d], got " +
                                    shape_to_string(x.shape));
    }
    const std::size_t m = x.rows();
    const std::size_t d = x.shape[1];
    if (m == 0) {
        throw std::invalid_argument("max_pool_points: empty set");
    }

    Tensor out = Tensor::zeros({d});
    std::vector<std::size_t> argmax(d, 0);
    for (std::size_t j = 0; j < d; ++j) out.data[j] = x.data[j];
    for (std::size_t i = 1; i < m; ++i) {
        const float* row = x.data.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) {
            if (row[j] > out.data[j]) { // strict: ties keep the lowest index
                out.data[j] = row[j];
                argmax[j] = i;
            }
        }
    }

    const NodeId out_id = push_checked(std::move(out), "max_pool_points");
    steps_.push_back({OpKind::MaxPool, x_id, 0, 0, out_id, std::move(argmax), {}, -1});
    return out_id;
}

NodeId Tape::select(NodeId v_id, std::size_t index) {
    const Tensor& v = values_.at(v_id);
    if (v.rank() != 1 || index >= v.numel()) {
        throw std::invalid_argument("select: index " + std::to_string(index) +
                                    " out of range for shape " + shape_to_string(v.shape));
    }
    Tensor out({std::size_t{1}}, {v.data[index]});
    const NodeId out_id = push_checked(std::move(out), "select");
    steps_.push_back({OpKind::Select, v_id, 0, 0, out_id, {index}, {}, -1});
    return out_id;
}

NodeId Tape::softmax_cross_entropy(NodeId logits_id, int label) {
    const Tensor& logits = values_.at(logits_id);
    if (logits.rank() != 1) {
        throw std::invalid_argument("softmax_cross_entropy: expected rank-1 logits, got " +
                                    shape_to_string(logits.shape));
    }
    const std::size_t c = logits.numel();
    if (label < 0 || static_cast<std::size_t>(label) >= c) {
        throw std::invalid_argument("softmax_cross_entropy: label " + std::to_string(label) +
                                    " out of range for " + std::to_string(c) + " classes");
    }

    const float max_logit = *std::max_element(logits.data.begin(), logits.data.end());
    std::vector<float> probs(c);
    float denom = 0.0f;
    for (std::size_t i = 0; i < c; ++i) {
        probs[i] = std::exp(logits.data[i] - max_logit);
        denom += probs[i];
    }
    for (float& p : probs) p /= denom;
    const float loss = std::log(denom) - (logits.data[static_cast<std::size_t>(label)] - max_logit);

    Tensor out({std::size_t{1}}, {loss});
    const NodeId out_id = push_checked(std::move(out), "softmax_cross_entropy");
    steps_.push_back({OpKind::SoftmaxCE, logits_id, 0, 0, out_id, {}, std::move(probs), label});
    return out_id;
}

std::vector<Tensor> Tape::backward(NodeId output) const {
    if (output >= values_.size()) {
        throw std::invalid_argument("backward: unknown node id");
    }
    if (values_[output].numel() != 1) {
        throw std::invalid_argument("backward: output must be scalar, got shape " +
                                    shape_to_string(values_[output].shape));
    }

    std::vector<Tensor> grads;
    grads.reserve(values_.size());
    for (const Tensor& v : values_) {
        grads.push_back(Tensor::zeros(v.shape));
    }
    grads[output].data[0] = 1.0f;

    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) {
        const Step& s = *it;
        const Tensor& gy = grads[s.out];
        switch (s.kind) {
            case OpKind::Affine: {
                const Tensor& x = values_[s.in0];
                const Tensor& w = values_[s.in1];
                Tensor& gx = grads[s.in0];
                Tensor& gw = grads[s.in1];
                Tensor& gb = grads[s.in2];
                const std::size_t m = row_count(x);
                const std::size_t d_in = col_count(x);
                const std::size_t d_out = w.shape[1];
                for (std::size_t i = 0; i < m; ++i) {
                    const float* gy_row = gy.data.data() + i * d_out;
                    // Rows untouched by the pooled features carry zero
                    // gradient; skipping them dominates backward cost.
                    if (row_all_zero(gy_row, d_out)) continue;
                    const float* x_row = x.data.data() + i * d_in;
                    float* gx_row = gx.data.data() + i * d_in;
                    for (std::size_t k = 0; k < d_in; ++k) {
                        const float* w_row = w.data.data() + k * d_out;
                        float* gw_row = gw.data.data() + k * d_out;
                        float acc = 0.0f;
                        const float xv = x_row[k];
                        for (std::size_t j = 0; j < d_out; ++j) {
                            acc += gy_row[j] * w_row[j];
                            gw_row[j] += xv * gy_row[j];
                        }
                        gx_row[k] += acc;
                    }
                    for (std::size_t j = 0; j < d_out; ++j) gb.data[j] += gy_row[j];
                }
                break;
            }
            case OpKind::Relu: {
                const Tensor& x = values_[s.in0];
                Tensor& gx = grads[s.in0];
                for (std::size_t i = 0; i < x.numel(); ++i) {
                    if (x.data[i] > 0.0f) gx.data[i] += gy.data[i];
                }
                break;
            }
            case OpKind::MaxPool: {
                Tensor& gx = grads[s.in0];
                const std::size_t d = gy.numel();
                for (std::size_t j = 0; j < d; ++j) {
                    gx.at(s.indices[j], j) += gy.data[j];
                }
                break;
            }
            case OpKind::Select: {
                grads[s.in0].data[s.indices[0]] += gy.data[0];
                break;
            }
            case OpKind::SoftmaxCE: {
                Tensor& gl = grads[s.in0];
                for (std::size_t i = 0; i < gl.numel(); ++i) {
                    const float onehot = static_cast<std::size_t>(s.label) == i ? 1.0f : 0.0f;
                    gl.data[i] += (s.cache[i] - onehot) * gy.data[0];
                }
                break;
            }
        }
    }
    return grads;
}

} // namespace pcdream
