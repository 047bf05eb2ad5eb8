#include "pcdream/tensor.hpp"

namespace pcdream {

Tensor Tensor::zeros(std::vector<std::size_t> s) {
    std::size_t n = 1;
    for (std::size_t d : s) {
        if (d == 0) {
            throw std::invalid_argument("Tensor: zero-sized dimension in shape " +
                                        shape_to_string(s));
        }
        n *= d;
    }
    Tensor t;
    t.shape = std::move(s);
    t.data.assign(n, 0.0f);
    return t;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(shape[i]);
    }
    out += "]";
    return out;
}

} // namespace pcdream
