#pragma once

#include <bit>
#include <cstdint>
#include <vector>

#include "svt/shape.hpp"

namespace svt {

// Dense row-major tensor of doubles. All arithmetic in this library
// accumulates in 64-bit precision; tensors are treated as immutable once
// built (operations return new tensors).
class RealTensor {
public:
    RealTensor() = default;
    explicit RealTensor(Shape shape, double fill = 0.0)
        : shape_(std::move(shape)), data_(shape_.numel(), fill) {}
    RealTensor(Shape shape, std::vector<double> data);

    static RealTensor zeros(Shape shape) { return RealTensor(std::move(shape)); }
    static RealTensor full(Shape shape, double value) { return RealTensor(std::move(shape), value); }

    const Shape& shape() const { return shape_; }
    std::size_t numel() const { return data_.size(); }
    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double at(const std::vector<std::size_t>& idx) const { return data_[shape_.flat_index(idx)]; }
    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool all_finite() const;

    RealTensor reshape(const Shape& new_shape) const;
    RealTensor transpose_axes(const std::vector<std::size_t>& perm) const;

private:
    Shape shape_;
    std::vector<double> data_;
};

// Dense row-major tensor of signed 64-bit integers. Carrier for exact
// accumulation of {0,1} and {-1,+1} products.
class IntTensor {
public:
    IntTensor() = default;
    explicit IntTensor(Shape shape, std::int64_t fill = 0)
        : shape_(std::move(shape)), data_(shape_.numel(), fill) {}
    IntTensor(Shape shape, std::vector<std::int64_t> data);

    const Shape& shape() const { return shape_; }
    std::size_t numel() const { return data_.size(); }
    std::int64_t operator[](std::size_t i) const { return data_[i]; }
    std::int64_t& operator[](std::size_t i) { return data_[i]; }
    const std::vector<std::int64_t>& data() const { return data_; }

    RealTensor to_real() const;

    IntTensor reshape(const Shape& new_shape) const;
    IntTensor transpose_axes(const std::vector<std::size_t>& perm) const;

private:
    Shape shape_;
    std::vector<std::int64_t> data_;
};

// Bit-packed binary tensor. Packing is row-major over the last axis: each
// "row" (all leading indices fixed) occupies ceil(last/64) little-endian
// 64-bit words, bit d of the row stored at word d/64, bit position d%64.
// Padding bits past the last axis are zero after every operation; XOR/AND
// popcount kernels rely on that.
class SpikeTensor {
public:
    SpikeTensor() = default;
    explicit SpikeTensor(Shape shape)
        : shape_(std::move(shape)),
          words_per_row_((shape_.last() + 63) / 64),
          words_(shape_.outer() * words_per_row_, 0) {}

    static SpikeTensor zeros(Shape shape) { return SpikeTensor(std::move(shape)); }
    static SpikeTensor ones(Shape shape);
    // Bernoulli(density) fill, reproducible from the generator state.
    static SpikeTensor random(Shape shape, class Rng& rng, double density = 0.5);

    const Shape& shape() const { return shape_; }
    std::size_t numel() const { return shape_.numel(); }
    std::size_t words_per_row() const { return words_per_row_; }
    const std::vector<std::uint64_t>& words() const { return words_; }
    std::vector<std::uint64_t>& words() { return words_; }
    const std::uint64_t* row(std::size_t r) const { return words_.data() + r * words_per_row_; }

    bool get_flat(std::size_t flat) const {
        const std::size_t last = shape_.last();
        const std::size_t r = flat / last, d = flat % last;
        return (words_[r * words_per_row_ + d / 64] >> (d % 64)) & 1u;
    }
    void set_flat(std::size_t flat, bool value) {
        const std::size_t last = shape_.last();
        const std::size_t r = flat / last, d = flat % last;
        const std::uint64_t mask = std::uint64_t{1} << (d % 64);
        auto& w = words_[r * words_per_row_ + d / 64];
        w = value ? (w | mask) : (w & ~mask);
    }
    bool at(const std::vector<std::size_t>& idx) const { return get_flat(shape_.flat_index(idx)); }

    // Number of set bits over the whole tensor.
    std::size_t count_ones() const {
        std::size_t n = 0;
        for (std::uint64_t w : words_) n += static_cast<std::size_t>(std::popcount(w));
        return n;
    }
    // Fraction of ones; the spiking rate of this tensor.
    double density() const { return numel() == 0 ? 0.0 : static_cast<double>(count_ones()) / numel(); }

    bool operator==(const SpikeTensor& other) const {
        return shape_ == other.shape_ && words_ == other.words_;
    }

    SpikeTensor reshape(const Shape& new_shape) const;
    SpikeTensor transpose_axes(const std::vector<std::size_t>& perm) const;
    // Columns [from, to) of the last axis, repacked.
    SpikeTensor select_channels(std::size_t from, std::size_t to) const;
    // Concatenate along the last axis; all other extents must match.
    static SpikeTensor concat_channels(const SpikeTensor& a, const SpikeTensor& b);
    // Contiguous rows [from, to) of the [outer x last] view as a 2-D tensor.
    SpikeTensor rows_block(std::size_t from, std::size_t to) const;
    // Arbitrary rows of the [outer x last] view, in the given order.
    SpikeTensor gather_rows(const std::vector<std::size_t>& rows) const;

private:
    Shape shape_;
    std::size_t words_per_row_ = 0;
    std::vector<std::uint64_t> words_;
};

// Exact packing of a {0,1}-valued real tensor; throws NonBinaryInputError on
// any other entry.
SpikeTensor pack(const RealTensor& values);
RealTensor unpack(const SpikeTensor& spikes);

} // namespace svt
