#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "svt/errors.hpp"

namespace svt {

// Ordered list of positive extents, row-major layout convention.
class Shape {
public:
    Shape() = default;
    Shape(std::initializer_list<std::size_t> dims) : dims_(dims) { validate(); }
    explicit Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) { validate(); }

    std::size_t rank() const { return dims_.size(); }
    std::size_t extent(std::size_t axis) const { return dims_.at(axis); }
    const std::vector<std::size_t>& dims() const { return dims_; }

    std::size_t numel() const {
        std::size_t n = 1;
        for (std::size_t d : dims_) n *= d;
        return n;
    }

    // Extent of the last axis (1 for rank-0).
    std::size_t last() const { return dims_.empty() ? 1 : dims_.back(); }

    // Number of rows when the tensor is viewed as [outer x last].
    std::size_t outer() const {
        std::size_t n = 1;
        for (std::size_t i = 0; i + 1 < dims_.size(); ++i) n *= dims_[i];
        return dims_.empty() ? 1 : n;
    }

    bool operator==(const Shape& other) const { return dims_ == other.dims_; }
    bool operator!=(const Shape& other) const { return dims_ != other.dims_; }

    // Row-major flat index of a multi-index.
    std::size_t flat_index(const std::vector<std::size_t>& idx) const {
        std::size_t flat = 0;
        for (std::size_t a = 0; a < dims_.size(); ++a) {
            flat = flat * dims_[a] + idx[a];
        }
        return flat;
    }

    std::string to_string() const {
        std::string s = "[";
        for (std::size_t i = 0; i < dims_.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(dims_[i]);
        }
        return s + "]";
    }

private:
    void validate() const {
        for (std::size_t d : dims_) {
            if (d == 0) throw ShapeMismatchError("shape extents must be >= 1, got " + to_string());
        }
    }

    std::vector<std::size_t> dims_;
};

} // namespace svt
