#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "svt/rng.hpp"
#include "svt/tensor.hpp"

namespace svt {

// Gaussian projection matrix A [D x C]; b(x) = sign(Ax) mapped to {0,1}.
struct ProjectionMatrix {
    RealTensor a;        // [D x C], i.i.d. standard normal
    std::uint64_t seed;

    static ProjectionMatrix sample(std::size_t d, std::size_t c, std::uint64_t seed);
    std::size_t embedding_dim() const { return a.shape().extent(0); }
    std::size_t input_dim() const { return a.shape().extent(1); }
};

// bit d = 1 iff (A x)[d] > 0; sign(0) maps to 0. Throws ZeroVectorError when
// x is identically zero.
SpikeTensor binarize(const ProjectionMatrix& proj, const RealTensor& x);

// 1 - (differing bits)/D, via popcount(XOR). In [0,1].
double hamming_similarity(const SpikeTensor& q, const SpikeTensor& k);

// q.k / (|q||k|). Throws ZeroVectorError on a zero input.
double cosine_similarity(const RealTensor& q, const RealTensor& k);

// g(x) = 1 - arccos(x)/pi, the monotone link between cosine similarity and
// expected Hamming similarity of sign-projection embeddings. Inputs within
// 1e-12 of [-1,1] are clamped; anything further out is a DomainError.
double g_map(double x);

// 1/2 + (1/(2D)) * sum (2q-1)(2k-1). Algebraically identical to
// hamming_similarity; kept as an independent route so the identity can be
// checked rather than assumed.
double hamming_identity(const SpikeTensor& q, const SpikeTensor& k);

// One row of the embedding-error experiment.
struct ErrorCurveRow {
    std::size_t d = 0;
    std::size_t num_pairs = 0;
    double mean_error = 0.0;
    double max_error = 0.0;
    double std_error = 0.0;  // sample std of |f_H - g(f_C)|; 3-sigma slack uses this
};

struct ErrorCurve {
    std::vector<ErrorCurveRow> rows;

    // Strictly decreasing mean error across rows, allowing 3-sigma
    // Monte-Carlo slack on each comparison.
    bool mean_error_decreasing_3sigma() const;
    void write_csv(std::ostream& out) const;  // header: D,num_pairs,mean_error,max_error
};

// Draws num_pairs random unit-vector pairs in R^C once, then for each D in
// d_list binarizes with a fresh projection and records mean/max of
// |f_H - g(f_C)|. Deterministic given seed; parallel over pairs with
// pair-indexed storage so the schedule cannot change the result.
ErrorCurve jl_error_experiment(std::size_t c, const std::vector<std::size_t>& d_list,
                               std::size_t num_pairs, std::uint64_t seed);

struct ConcentrationResult {
    std::size_t num_pairs = 0;
    std::size_t violations = 0;
    double observed_rate = 0.0;
    double bound = 0.0;          // 2 * exp(-delta^2 * D)
    double slack_3sigma = 0.0;   // 3 * sqrt(bound * (1 - bound) / n), floored at 0
    bool within_bound() const { return observed_rate <= bound + slack_3sigma; }
};

// Fraction of pairs with |f_H - g(f_C)| > delta, against the analytic tail
// bound 2 e^{-delta^2 D} plus binomial slack.
ConcentrationResult concentration_check(std::size_t c, std::size_t d, std::size_t num_pairs,
                                        double delta, std::uint64_t seed);

} // namespace svt
