#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace ftm {

/// Dense row-major tensor of 64-bit floats. Plain value type; participation
/// in a recorded computation is handled by Tape/Var (see tape.hpp).
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> values;

    Tensor() = default;
    Tensor(std::vector<std::size_t> s, std::vector<double> v);

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, double fill);
    /// 1 x n row vector.
    static Tensor row(std::vector<double> v);
    /// 1 x 1 scalar.
    static Tensor scalar(double v);
    /// r x c matrix from row-major values.
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> v);

    std::size_t numel() const { return values.size(); }
    std::size_t rank() const { return shape.size(); }
    /// Extent along dimension i (1 if the tensor has fewer dimensions).
    std::size_t dim(std::size_t i) const { return i < shape.size() ? shape[i] : 1; }
    /// Rows/cols of a rank-<=2 tensor.
    std::size_t rows() const { return dim(0); }
    std::size_t cols() const { return dim(1); }

    double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;
};

std::size_t shape_numel(const std::vector<std::size_t>& shape);
std::string shape_to_string(const std::vector<std::size_t>& shape);

} // namespace ftm
