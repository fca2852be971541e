#include "nilmtune/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nilmtune::nn {

std::size_t shape_size(const Shape& shape) noexcept {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), values_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), values_(std::move(values)) {
    if (values_.size() != shape_size(shape_)) {
        throw std::invalid_argument("Tensor: " + std::to_string(values_.size()) + " values for shape " +
                                    shape_string(shape_));
    }
}

double Tensor::item() const {
    if (values_.size() != 1) throw std::invalid_argument("Tensor::item on shape " + shape_string(shape_));
    return values_[0];
}

bool Tensor::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

Tensor Tensor::reshaped(Shape shape) const {
    if (shape_size(shape) != values_.size()) {
        throw std::invalid_argument("Tensor::reshaped: " + shape_string(shape_) + " -> " + shape_string(shape));
    }
    return Tensor(std::move(shape), values_);
}

}  // namespace nilmtune::nn
