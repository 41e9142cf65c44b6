#include "ers/tensor.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace ers {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    s += "]";
    return s;
}

Tensor::Tensor(std::vector<std::size_t> shape_, std::vector<double> values_)
    : shape(std::move(shape_)), values(std::move(values_)) {
    if (shape_product(shape) != values.size()) {
        throw ShapeError("tensor shape " + shape_to_string(shape) +
                         " does not match value count " +
                         std::to_string(values.size()));
    }
}

Tensor Tensor::scalar(double v) { return Tensor({}, {v}); }

Tensor Tensor::zeros(std::vector<std::size_t> shape_) {
    std::vector<double> v(shape_product(shape_), 0.0);
    return Tensor(std::move(shape_), std::move(v));
}

Tensor Tensor::row_vector(std::vector<double> v) {
    const std::size_t n = v.size();
    return Tensor({n}, std::move(v));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> v) {
    return Tensor({rows, cols}, std::move(v));
}

std::size_t Tensor::rows() const {
    if (!is_matrix()) throw ShapeError("rows() on non-matrix tensor");
    return shape[0];
}

std::size_t Tensor::cols() const {
    if (!is_matrix()) throw ShapeError("cols() on non-matrix tensor");
    return shape[1];
}

bool Tensor::all_finite() const {
    for (double v : values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace ers
