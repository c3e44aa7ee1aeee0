#pragma once

// Independent reference implementations used as test oracles. Everything
// here recomputes results by the most direct route available (triple loops,
// exhaustive enumeration, quadrature) without touching the library kernels
// under test.

#include <cmath>
#include <cstdint>
#include <vector>

#include "svt/rng.hpp"
#include "svt/tensor.hpp"

namespace oracle {

// Naive real contraction, plain triple loop.
inline svt::RealTensor matmul_naive(const svt::RealTensor& a, const svt::RealTensor& b) {
    const std::size_t rows = a.shape().extent(0), inner = a.shape().extent(1);
    const std::size_t cols = b.shape().extent(1);
    svt::RealTensor out(svt::Shape{rows, cols});
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (std::size_t d = 0; d < inner; ++d) {
                acc += a[r * inner + d] * b[d * cols + c];
            }
            out[r * cols + c] = acc;
        }
    }
    return out;
}

// Signed +-1 product via explicit mapped values.
inline svt::IntTensor signed_matmul_naive(const svt::SpikeTensor& a, const svt::SpikeTensor& b) {
    const std::size_t rows = a.shape().extent(0), inner = a.shape().extent(1);
    const std::size_t cols = b.shape().extent(1);
    svt::IntTensor out(svt::Shape{rows, cols});
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            std::int64_t acc = 0;
            for (std::size_t d = 0; d < inner; ++d) {
                const std::int64_t av = a.get_flat(r * inner + d) ? 1 : -1;
                const std::int64_t bv = b.get_flat(d * cols + c) ? 1 : -1;
                acc += av * bv;
            }
            out[r * cols + c] = acc;
        }
    }
    return out;
}

inline svt::IntTensor binary_matmul_naive(const svt::SpikeTensor& a, const svt::SpikeTensor& b) {
    const std::size_t rows = a.shape().extent(0), inner = a.shape().extent(1);
    const std::size_t cols = b.shape().extent(1);
    svt::IntTensor out(svt::Shape{rows, cols});
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            std::int64_t acc = 0;
            for (std::size_t d = 0; d < inner; ++d) {
                acc += (a.get_flat(r * inner + d) && b.get_flat(d * cols + c)) ? 1 : 0;
            }
            out[r * cols + c] = acc;
        }
    }
    return out;
}

// Integral of f over the whole real line: composite Simpson on the
// tan-substituted domain (x = tan(theta)), which squeezes the line into
// (-pi/2, pi/2) and handles the tails without truncation.
template <typename F>
double integrate_real_line(F&& f, std::size_t intervals = 200000) {
    const double a = -1.5707963267948966 + 1e-9;
    const double b = 1.5707963267948966 - 1e-9;
    const double h = (b - a) / static_cast<double>(intervals);
    auto g = [&](double theta) {
        const double x = std::tan(theta);
        const double sec = 1.0 / std::cos(theta);
        return f(x) * sec * sec;
    };
    double acc = g(a) + g(b);
    for (std::size_t i = 1; i < intervals; ++i) {
        acc += g(a + h * static_cast<double>(i)) * ((i % 2) ? 4.0 : 2.0);
    }
    return acc * h / 3.0;
}

inline svt::RealTensor random_real(svt::Shape shape, svt::Rng& rng, double scale = 1.0) {
    svt::RealTensor out(std::move(shape));
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = scale * rng.gaussian();
    return out;
}

// Normalized Hamming similarity straight from the definition.
inline double hamming_by_definition(const svt::SpikeTensor& q, const svt::SpikeTensor& k) {
    std::size_t diff = 0;
    for (std::size_t i = 0; i < q.numel(); ++i) {
        diff += q.get_flat(i) != k.get_flat(i);
    }
    return 1.0 - static_cast<double>(diff) / static_cast<double>(q.numel());
}

// Spike vector from the low bits of an integer (exhaustive enumeration).
inline svt::SpikeTensor spike_from_bits(std::uint64_t bits, std::size_t d) {
    svt::SpikeTensor out(svt::Shape{d});
    for (std::size_t i = 0; i < d; ++i) {
        if ((bits >> i) & 1u) out.set_flat(i, true);
    }
    return out;
}

} // namespace oracle
