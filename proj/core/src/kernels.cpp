#include "svt/kernels.hpp"

#include <bit>

namespace svt {

namespace {

void check_2d(const Shape& s, const char* name) {
    if (s.rank() != 2) throw ShapeMismatchError(std::string(name) + ": expected rank-2 tensor, got " + s.to_string());
}

void check_inner(std::size_t a_cols, std::size_t b_rows, const char* name) {
    if (a_cols != b_rows) {
        throw ShapeMismatchError(std::string(name) + ": inner extents " + std::to_string(a_cols) +
                                 " and " + std::to_string(b_rows) + " do not match");
    }
}

std::size_t popcount_and(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
    std::size_t n = 0;
    for (std::size_t w = 0; w < words; ++w) n += static_cast<std::size_t>(std::popcount(a[w] & b[w]));
    return n;
}

std::size_t popcount_xor(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
    std::size_t n = 0;
    for (std::size_t w = 0; w < words; ++w) n += static_cast<std::size_t>(std::popcount(a[w] ^ b[w]));
    return n;
}

} // namespace

RealTensor matmul_real(const RealTensor& a, const RealTensor& b) {
    check_2d(a.shape(), "matmul_real");
    check_2d(b.shape(), "matmul_real");
    const std::size_t rows = a.shape().extent(0), inner = a.shape().extent(1);
    const std::size_t cols = b.shape().extent(1);
    check_inner(inner, b.shape().extent(0), "matmul_real");
    RealTensor out(Shape{rows, cols});
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t d = 0; d < inner; ++d) {
            const double av = a[r * inner + d];
            if (av == 0.0) continue;
            for (std::size_t c = 0; c < cols; ++c) {
                out[r * cols + c] += av * b[d * cols + c];
            }
        }
    }
    return out;
}

IntTensor signed_binary_matmul(const SpikeTensor& a, const SpikeTensor& b) {
    check_2d(a.shape(), "signed_binary_matmul");
    check_2d(b.shape(), "signed_binary_matmul");
    const std::size_t rows = a.shape().extent(0), inner = a.shape().extent(1);
    const std::size_t cols = b.shape().extent(1);
    check_inner(inner, b.shape().extent(0), "signed_binary_matmul");
    const SpikeTensor bt = b.transpose_axes({1, 0});
    IntTensor out(Shape{rows, cols});
    const std::size_t words = a.words_per_row();
    for (std::size_t r = 0; r < rows; ++r) {
        const std::uint64_t* ra = a.row(r);
        for (std::size_t c = 0; c < cols; ++c) {
            const auto diff = popcount_xor(ra, bt.row(c), words);
            out[r * cols + c] = static_cast<std::int64_t>(inner) - 2 * static_cast<std::int64_t>(diff);
        }
    }
    return out;
}

IntTensor binary_matmul(const SpikeTensor& a, const SpikeTensor& b) {
    check_2d(a.shape(), "binary_matmul");
    check_2d(b.shape(), "binary_matmul");
    const std::size_t rows = a.shape().extent(0), inner = a.shape().extent(1);
    const std::size_t cols = b.shape().extent(1);
    check_inner(inner, b.shape().extent(0), "binary_matmul");
    const SpikeTensor bt = b.transpose_axes({1, 0});
    IntTensor out(Shape{rows, cols});
    const std::size_t words = a.words_per_row();
    for (std::size_t r = 0; r < rows; ++r) {
        const std::uint64_t* ra = a.row(r);
        for (std::size_t c = 0; c < cols; ++c) {
            out[r * cols + c] = static_cast<std::int64_t>(popcount_and(ra, bt.row(c), words));
        }
    }
    return out;
}

IntTensor signed_by_binary_matmul(const SpikeTensor& a, const SpikeTensor& b) {
    check_2d(a.shape(), "signed_by_binary_matmul");
    check_2d(b.shape(), "signed_by_binary_matmul");
    const std::size_t rows = a.shape().extent(0), inner = a.shape().extent(1);
    const std::size_t cols = b.shape().extent(1);
    check_inner(inner, b.shape().extent(0), "signed_by_binary_matmul");
    const SpikeTensor bt = b.transpose_axes({1, 0});
    IntTensor out(Shape{rows, cols});
    const std::size_t words = a.words_per_row();
    for (std::size_t c = 0; c < cols; ++c) {
        const std::uint64_t* rb = bt.row(c);
        std::int64_t col_ones = 0;
        for (std::size_t w = 0; w < words; ++w) col_ones += std::popcount(rb[w]);
        for (std::size_t r = 0; r < rows; ++r) {
            const auto both = popcount_and(a.row(r), rb, words);
            out[r * cols + c] = 2 * static_cast<std::int64_t>(both) - col_ones;
        }
    }
    return out;
}

IntTensor binary_by_int_matmul(const SpikeTensor& a, const IntTensor& b) {
    check_2d(a.shape(), "binary_by_int_matmul");
    check_2d(b.shape(), "binary_by_int_matmul");
    const std::size_t rows = a.shape().extent(0), inner = a.shape().extent(1);
    const std::size_t cols = b.shape().extent(1);
    check_inner(inner, b.shape().extent(0), "binary_by_int_matmul");
    IntTensor out(Shape{rows, cols});
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t d = 0; d < inner; ++d) {
            if (!a.get_flat(r * inner + d)) continue;
            for (std::size_t c = 0; c < cols; ++c) {
                out[r * cols + c] += b[d * cols + c];
            }
        }
    }
    return out;
}

IntTensor pm1_by_int_matmul(const SpikeTensor& a, const IntTensor& b) {
    check_2d(a.shape(), "pm1_by_int_matmul");
    check_2d(b.shape(), "pm1_by_int_matmul");
    const std::size_t rows = a.shape().extent(0), inner = a.shape().extent(1);
    const std::size_t cols = b.shape().extent(1);
    check_inner(inner, b.shape().extent(0), "pm1_by_int_matmul");
    std::vector<std::int64_t> colsum(cols, 0);
    for (std::size_t d = 0; d < inner; ++d) {
        for (std::size_t c = 0; c < cols; ++c) colsum[c] += b[d * cols + c];
    }
    IntTensor out(Shape{rows, cols});
    for (std::size_t r = 0; r < rows; ++r) {
        std::vector<std::int64_t> set_sum(cols, 0);
        for (std::size_t d = 0; d < inner; ++d) {
            if (!a.get_flat(r * inner + d)) continue;
            for (std::size_t c = 0; c < cols; ++c) set_sum[c] += b[d * cols + c];
        }
        for (std::size_t c = 0; c < cols; ++c) {
            out[r * cols + c] = 2 * set_sum[c] - colsum[c];
        }
    }
    return out;
}

RealTensor binary_by_real_matmul(const SpikeTensor& a, const RealTensor& b) {
    check_2d(a.shape(), "binary_by_real_matmul");
    check_2d(b.shape(), "binary_by_real_matmul");
    const std::size_t rows = a.shape().extent(0), inner = a.shape().extent(1);
    const std::size_t cols = b.shape().extent(1);
    check_inner(inner, b.shape().extent(0), "binary_by_real_matmul");
    RealTensor out(Shape{rows, cols});
    for (std::size_t r = 0; r < rows; ++r) {
        const std::uint64_t* ra = a.row(r);
        for (std::size_t w = 0; w < a.words_per_row(); ++w) {
            std::uint64_t bits = ra[w];
            while (bits) {
                const int bit = std::countr_zero(bits);
                bits &= bits - 1;
                const std::size_t d = w * 64 + static_cast<std::size_t>(bit);
                for (std::size_t c = 0; c < cols; ++c) {
                    out[r * cols + c] += b[d * cols + c];
                }
            }
        }
    }
    return out;
}

IntTensor int_by_binary_matmul(const IntTensor& a, const SpikeTensor& b) {
    check_2d(a.shape(), "int_by_binary_matmul");
    check_2d(b.shape(), "int_by_binary_matmul");
    const std::size_t rows = a.shape().extent(0), inner = a.shape().extent(1);
    const std::size_t cols = b.shape().extent(1);
    check_inner(inner, b.shape().extent(0), "int_by_binary_matmul");
    IntTensor out(Shape{rows, cols});
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t d = 0; d < inner; ++d) {
            const std::int64_t av = a[r * inner + d];
            if (av == 0) continue;
            for (std::size_t c = 0; c < cols; ++c) {
                if (b.get_flat(d * cols + c)) out[r * cols + c] += av;
            }
        }
    }
    return out;
}

} // namespace svt
