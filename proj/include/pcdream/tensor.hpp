#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcdream {

// Raised when a forward pass produces NaN/Inf or training diverges. The CLI
// maps it to its own exit code, distinct from usage errors.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dense row-major float32 tensor. Only the ranks the classifier needs
// (vectors and matrices) ever appear.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<float> data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {}

    static Tensor zeros(std::vector<std::size_t> s);

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }

    std::size_t rows() const { return shape.at(0); }
    std::size_t cols() const { return shape.size() > 1 ? shape[1] : 1; }

    float& at(std::size_t i) { return data[i]; }
    float at(std::size_t i) const { return data[i]; }
    float& at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
    float at(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }
};

std::string shape_to_string(const std::vector<std::size_t>& shape);

} // namespace pcdream
