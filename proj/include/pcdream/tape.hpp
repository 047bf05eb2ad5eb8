#pragma once

#include "pcdream/tensor.hpp"

#include <cstddef>
#include <vector>

namespace pcdream {

using NodeId = std::size_t;

// Records a forward computation so gradients can be replayed in exact
// reverse execution order. One tape per forward/backward pass; parameters
// enter as leaves each time.
//
// Every operation validates shapes up front and scans its output for
// NaN/Inf, throwing NumericError naming the operation, so nothing
// downstream ever consumes a non-finite value silently.
class Tape {
public:
    // Registers an input (parameter or data) and returns its node id.
    NodeId leaf(Tensor value);

    // Row-wise x*W + b. x may be [m x d_in] or a single row [d_in].
    NodeId affine(NodeId x, NodeId w, NodeId b);

    // Elementwise max(0, x). The backward mask is x > 0 (zero at x == 0).
    NodeId relu(NodeId x);

    // Per-feature max over the point dimension: [m x d] -> [d]. Ties go to
    // the smallest point index; the backward pass routes each feature's
    // gradient entirely to that index.
    NodeId max_pool_points(NodeId x);

    // Picks one entry of a vector as a scalar: [c] -> [1].
    NodeId select(NodeId v, std::size_t index);

    // -log softmax(logits)[label], max-subtracted: [c] -> [1].
    NodeId softmax_cross_entropy(NodeId logits, int label);

    const Tensor& value(NodeId id) const { return values_.at(id); }
    std::size_t node_count() const { return values_.size(); }

    // Gradients of a scalar output with respect to every node, indexed by
    // NodeId. Leaves on no path to the output get zero gradients of their
    // own shape.
    std::vector<Tensor> backward(NodeId output) const;

private:
    enum class OpKind { Affine, Relu, MaxPool, Select, SoftmaxCE };

    struct Step {
        OpKind kind;
        NodeId in0 = 0;
        NodeId in1 = 0;
        NodeId in2 = 0;
        NodeId out = 0;
        std::vector<std::size_t> indices; // pool argmaxes or the select index
        std::vector<float> cache;         // softmax probabilities
        int label = -1;
    };

    NodeId push_checked(Tensor t, const char* op_name);

    std::vector<Tensor> values_;
    std::vector<Step> steps_;
};

} // namespace pcdream
