#include "ftm/tensor.hpp"

#include <cmath>
#include <sstream>

#include "ftm/errors.hpp"

namespace ftm {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> v)
    : shape(std::move(s)), values(std::move(v)) {
    for (std::size_t e : shape) {
        if (e == 0) throw ContractViolation("tensor extent must be positive, got shape " + shape_to_string(shape));
    }
    if (shape_numel(shape) != values.size()) {
        std::ostringstream os;
        os << "tensor shape " << shape_to_string(shape) << " implies " << shape_numel(shape)
           << " values, got " << values.size();
        throw ContractViolation(os.str());
    }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    std::size_t n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(std::vector<std::size_t> shape, double fill) {
    std::size_t n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, fill));
}

Tensor Tensor::row(std::vector<double> v) {
    std::size_t n = v.size();
    return Tensor({1, n}, std::move(v));
}

Tensor Tensor::scalar(double v) { return Tensor({1, 1}, {v}); }

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> v) {
    return Tensor({rows, cols}, std::move(v));
}

bool Tensor::all_finite() const {
    for (double v : values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

} // namespace ftm
