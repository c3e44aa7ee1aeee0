#include "svt/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "svt/rng.hpp"

namespace svt {

namespace {

std::vector<std::size_t> unflatten(std::size_t flat, const Shape& shape) {
    std::vector<std::size_t> idx(shape.rank());
    for (std::size_t a = shape.rank(); a-- > 0;) {
        idx[a] = flat % shape.extent(a);
        flat /= shape.extent(a);
    }
    return idx;
}

void check_reshape(const Shape& from, const Shape& to) {
    if (from.numel() != to.numel()) {
        throw ShapeMismatchError("reshape " + from.to_string() + " -> " + to.to_string() +
                                 " changes element count");
    }
}

Shape permuted_shape(const Shape& shape, const std::vector<std::size_t>& perm) {
    if (perm.size() != shape.rank()) {
        throw ShapeMismatchError("permutation rank " + std::to_string(perm.size()) +
                                 " does not match tensor rank " + std::to_string(shape.rank()));
    }
    std::vector<bool> seen(perm.size(), false);
    std::vector<std::size_t> dims(perm.size());
    for (std::size_t a = 0; a < perm.size(); ++a) {
        if (perm[a] >= perm.size() || seen[perm[a]]) {
            throw ShapeMismatchError("invalid axis permutation");
        }
        seen[perm[a]] = true;
        dims[a] = shape.extent(perm[a]);
    }
    return Shape(dims);
}

} // namespace

RealTensor::RealTensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_.numel()) {
        throw ShapeMismatchError("data length " + std::to_string(data_.size()) +
                                 " does not match shape " + shape_.to_string());
    }
}

bool RealTensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

RealTensor RealTensor::reshape(const Shape& new_shape) const {
    check_reshape(shape_, new_shape);
    return RealTensor(new_shape, data_);
}

RealTensor RealTensor::transpose_axes(const std::vector<std::size_t>& perm) const {
    const Shape out_shape = permuted_shape(shape_, perm);
    RealTensor out(out_shape);
    std::vector<std::size_t> out_idx(perm.size());
    for (std::size_t flat = 0; flat < numel(); ++flat) {
        const auto idx = unflatten(flat, shape_);
        for (std::size_t a = 0; a < perm.size(); ++a) out_idx[a] = idx[perm[a]];
        out[out_shape.flat_index(out_idx)] = data_[flat];
    }
    return out;
}

IntTensor::IntTensor(Shape shape, std::vector<std::int64_t> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_.numel()) {
        throw ShapeMismatchError("data length " + std::to_string(data_.size()) +
                                 " does not match shape " + shape_.to_string());
    }
}

RealTensor IntTensor::to_real() const {
    RealTensor out(shape_);
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<double>(data_[i]);
    return out;
}

IntTensor IntTensor::reshape(const Shape& new_shape) const {
    check_reshape(shape_, new_shape);
    return IntTensor(new_shape, data_);
}

IntTensor IntTensor::transpose_axes(const std::vector<std::size_t>& perm) const {
    const Shape out_shape = permuted_shape(shape_, perm);
    IntTensor out(out_shape);
    std::vector<std::size_t> out_idx(perm.size());
    for (std::size_t flat = 0; flat < numel(); ++flat) {
        const auto idx = unflatten(flat, shape_);
        for (std::size_t a = 0; a < perm.size(); ++a) out_idx[a] = idx[perm[a]];
        out[out_shape.flat_index(out_idx)] = data_[flat];
    }
    return out;
}

SpikeTensor SpikeTensor::ones(Shape shape) {
    SpikeTensor out(std::move(shape));
    for (std::size_t i = 0; i < out.numel(); ++i) out.set_flat(i, true);
    return out;
}

SpikeTensor SpikeTensor::random(Shape shape, Rng& rng, double density) {
    SpikeTensor out(std::move(shape));
    for (std::size_t i = 0; i < out.numel(); ++i) out.set_flat(i, rng.bernoulli(density));
    return out;
}

SpikeTensor SpikeTensor::reshape(const Shape& new_shape) const {
    check_reshape(shape_, new_shape);
    // Repack: the padded word layout depends on the last axis.
    SpikeTensor out(new_shape);
    if (new_shape.last() == shape_.last()) {
        out.words_ = words_;
        return out;
    }
    for (std::size_t flat = 0; flat < numel(); ++flat) {
        if (get_flat(flat)) out.set_flat(flat, true);
    }
    return out;
}

SpikeTensor SpikeTensor::transpose_axes(const std::vector<std::size_t>& perm) const {
    const Shape out_shape = permuted_shape(shape_, perm);
    SpikeTensor out(out_shape);
    std::vector<std::size_t> out_idx(perm.size());
    for (std::size_t flat = 0; flat < numel(); ++flat) {
        if (!get_flat(flat)) continue;
        const auto idx = unflatten(flat, shape_);
        for (std::size_t a = 0; a < perm.size(); ++a) out_idx[a] = idx[perm[a]];
        out.set_flat(out_shape.flat_index(out_idx), true);
    }
    return out;
}

SpikeTensor SpikeTensor::select_channels(std::size_t from, std::size_t to) const {
    const std::size_t last = shape_.last();
    if (from >= to || to > last) throw ShapeMismatchError("bad channel range");
    std::vector<std::size_t> dims = shape_.dims();
    dims.back() = to - from;
    SpikeTensor out((Shape(dims)));
    const std::size_t rows = shape_.outer();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t d = from; d < to; ++d) {
            if (get_flat(r * last + d)) out.set_flat(r * (to - from) + (d - from), true);
        }
    }
    return out;
}

SpikeTensor SpikeTensor::concat_channels(const SpikeTensor& a, const SpikeTensor& b) {
    if (a.shape().rank() != b.shape().rank()) throw ShapeMismatchError("concat rank mismatch");
    for (std::size_t i = 0; i + 1 < a.shape().rank(); ++i) {
        if (a.shape().extent(i) != b.shape().extent(i)) {
            throw ShapeMismatchError("concat leading extents mismatch");
        }
    }
    std::vector<std::size_t> dims = a.shape().dims();
    const std::size_t la = a.shape().last(), lb = b.shape().last();
    dims.back() = la + lb;
    SpikeTensor out((Shape(dims)));
    const std::size_t rows = a.shape().outer();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t d = 0; d < la; ++d) {
            if (a.get_flat(r * la + d)) out.set_flat(r * (la + lb) + d, true);
        }
        for (std::size_t d = 0; d < lb; ++d) {
            if (b.get_flat(r * lb + d)) out.set_flat(r * (la + lb) + la + d, true);
        }
    }
    return out;
}

SpikeTensor SpikeTensor::rows_block(std::size_t from, std::size_t to) const {
    const std::size_t rows = shape_.outer();
    if (from >= to || to > rows) throw ShapeMismatchError("bad row range");
    SpikeTensor out(Shape{to - from, shape_.last()});
    std::copy(words_.begin() + static_cast<std::ptrdiff_t>(from * words_per_row_),
              words_.begin() + static_cast<std::ptrdiff_t>(to * words_per_row_),
              out.words_.begin());
    return out;
}

SpikeTensor SpikeTensor::gather_rows(const std::vector<std::size_t>& rows) const {
    const std::size_t total = shape_.outer();
    SpikeTensor out(Shape{rows.size(), shape_.last()});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= total) throw ShapeMismatchError("gather_rows: row index out of range");
        std::copy(words_.begin() + static_cast<std::ptrdiff_t>(rows[i] * words_per_row_),
                  words_.begin() + static_cast<std::ptrdiff_t>((rows[i] + 1) * words_per_row_),
                  out.words_.begin() + static_cast<std::ptrdiff_t>(i * words_per_row_));
    }
    return out;
}

SpikeTensor pack(const RealTensor& values) {
    SpikeTensor out(values.shape());
    for (std::size_t i = 0; i < values.numel(); ++i) {
        const double v = values[i];
        if (v == 1.0) {
            out.set_flat(i, true);
        } else if (v != 0.0) {
            throw NonBinaryInputError("pack: entry " + std::to_string(i) + " = " +
                                      std::to_string(v) + " is not in {0,1}");
        }
    }
    return out;
}

RealTensor unpack(const SpikeTensor& spikes) {
    RealTensor out(spikes.shape());
    for (std::size_t i = 0; i < spikes.numel(); ++i) {
        out[i] = spikes.get_flat(i) ? 1.0 : 0.0;
    }
    return out;
}

} // namespace svt
