#include "tensor.hpp"

#include <cmath>

namespace cdln {

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_string(const std::vector<std::size_t>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

std::size_t Tensor::checked_size(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        if (d == 0) fail(errc::contract, "tensor dimensions must be positive: " + shape_string(shape));
        n *= d;
    }
    return shape.empty() ? 0 : n;
}

}  // namespace cdln
