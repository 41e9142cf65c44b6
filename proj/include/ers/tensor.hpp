#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "ers/common.hpp"

namespace ers {

// Dense row-major array of doubles. Immutable by convention once handed to a
// Tape; the struct itself is a plain value type.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> values;

    Tensor() = default;
    Tensor(std::vector<std::size_t> shape_, std::vector<double> values_);

    static Tensor scalar(double v);
    static Tensor zeros(std::vector<std::size_t> shape_);
    static Tensor row_vector(std::vector<double> v);
    static Tensor matrix(std::size_t rows, std::size_t cols,
                         std::vector<double> v);

    std::size_t size() const { return values.size(); }
    std::size_t rank() const { return shape.size(); }
    bool is_scalar() const { return shape.empty(); }
    bool is_vector() const { return shape.size() == 1; }
    bool is_matrix() const { return shape.size() == 2; }

    std::size_t rows() const;
    std::size_t cols() const;

    double& at(std::size_t i) { return values[i]; }
    double at(std::size_t i) const { return values[i]; }
    double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const {
        return values[r * cols() + c];
    }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;

    bool operator==(const Tensor& other) const = default;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);
std::string shape_to_string(const std::vector<std::size_t>& shape);

}  // namespace ers
