#include "svt/embedding.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <ostream>

#include "svt/parallel.hpp"

namespace svt {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_vectors(const SpikeTensor& q, const SpikeTensor& k, const char* what) {
    if (q.shape() != k.shape()) {
        throw ShapeMismatchError(std::string(what) + ": shapes " + q.shape().to_string() +
                                 " vs " + k.shape().to_string());
    }
}

} // namespace

ProjectionMatrix ProjectionMatrix::sample(std::size_t d, std::size_t c, std::uint64_t seed) {
    Rng rng(seed);
    RealTensor a(Shape{d, c});
    for (std::size_t i = 0; i < a.numel(); ++i) a[i] = rng.gaussian();
    return ProjectionMatrix{std::move(a), seed};
}

SpikeTensor binarize(const ProjectionMatrix& proj, const RealTensor& x) {
    if (x.shape().rank() != 1 || x.shape().extent(0) != proj.input_dim()) {
        throw ShapeMismatchError("binarize: expected input of shape [" +
                                 std::to_string(proj.input_dim()) + "], got " +
                                 x.shape().to_string());
    }
    bool any_nonzero = false;
    for (std::size_t i = 0; i < x.numel(); ++i) any_nonzero |= (x[i] != 0.0);
    if (!any_nonzero) throw ZeroVectorError("binarize: input vector is identically zero");

    const std::size_t d = proj.embedding_dim(), c = proj.input_dim();
    SpikeTensor out(Shape{d});
    for (std::size_t row = 0; row < d; ++row) {
        double dot = 0.0;
        for (std::size_t col = 0; col < c; ++col) dot += proj.a[row * c + col] * x[col];
        if (dot > 0.0) out.set_flat(row, true);
    }
    return out;
}

double hamming_similarity(const SpikeTensor& q, const SpikeTensor& k) {
    check_vectors(q, k, "hamming_similarity");
    const std::size_t d = q.numel();
    std::size_t diff = 0;
    for (std::size_t w = 0; w < q.words().size(); ++w) {
        diff += static_cast<std::size_t>(std::popcount(q.words()[w] ^ k.words()[w]));
    }
    return 1.0 - static_cast<double>(diff) / static_cast<double>(d);
}

double cosine_similarity(const RealTensor& q, const RealTensor& k) {
    if (q.shape() != k.shape()) {
        throw ShapeMismatchError("cosine_similarity: shapes " + q.shape().to_string() + " vs " +
                                 k.shape().to_string());
    }
    double dot = 0.0, qq = 0.0, kk = 0.0;
    for (std::size_t i = 0; i < q.numel(); ++i) {
        dot += q[i] * k[i];
        qq += q[i] * q[i];
        kk += k[i] * k[i];
    }
    if (qq == 0.0 || kk == 0.0) throw ZeroVectorError("cosine_similarity: zero vector");
    return dot / (std::sqrt(qq) * std::sqrt(kk));
}

double g_map(double x) {
    if (std::abs(x) > 1.0 + 1e-12) {
        throw DomainError("g_map: input " + std::to_string(x) + " outside [-1,1]");
    }
    const double clamped = std::clamp(x, -1.0, 1.0);
    return 1.0 - std::acos(clamped) / kPi;
}

double hamming_identity(const SpikeTensor& q, const SpikeTensor& k) {
    check_vectors(q, k, "hamming_identity");
    const std::size_t d = q.numel();
    // Signed dot sum (2q-1)(2k-1) = D - 2*popcount(q XOR k).
    std::size_t diff = 0;
    for (std::size_t w = 0; w < q.words().size(); ++w) {
        diff += static_cast<std::size_t>(std::popcount(q.words()[w] ^ k.words()[w]));
    }
    const std::int64_t signed_dot = static_cast<std::int64_t>(d) - 2 * static_cast<std::int64_t>(diff);
    return 0.5 + static_cast<double>(signed_dot) / (2.0 * static_cast<double>(d));
}

bool ErrorCurve::mean_error_decreasing_3sigma() const {
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        const auto& a = rows[i];
        const auto& b = rows[i + 1];
        const double se_a = a.std_error / std::sqrt(static_cast<double>(a.num_pairs));
        const double se_b = b.std_error / std::sqrt(static_cast<double>(b.num_pairs));
        const double slack = 3.0 * std::sqrt(se_a * se_a + se_b * se_b);
        if (!(b.mean_error < a.mean_error + slack)) return false;
    }
    return true;
}

void ErrorCurve::write_csv(std::ostream& out) const {
    out << "D,num_pairs,mean_error,max_error\n";
    char buf[128];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%zu,%zu,%.17g,%.17g\n", row.d, row.num_pairs,
                      row.mean_error, row.max_error);
        out << buf;
    }
}

namespace {

struct PairSample {
    RealTensor q;
    RealTensor k;
    double g_of_cosine;
};

std::vector<PairSample> draw_pairs(std::size_t c, std::size_t num_pairs, Rng& rng) {
    std::vector<PairSample> pairs;
    pairs.reserve(num_pairs);
    for (std::size_t i = 0; i < num_pairs; ++i) {
        PairSample p;
        p.q = RealTensor(Shape{c}, rng.unit_vector(c));
        p.k = RealTensor(Shape{c}, rng.unit_vector(c));
        p.g_of_cosine = g_map(std::clamp(cosine_similarity(p.q, p.k), -1.0, 1.0));
        pairs.push_back(std::move(p));
    }
    return pairs;
}

// |f_H - g(f_C)| for one pair under a shared projection.
double pair_error(const PairSample& p, const ProjectionMatrix& proj) {
    return std::abs(hamming_similarity(binarize(proj, p.q), binarize(proj, p.k)) -
                    p.g_of_cosine);
}

ErrorCurveRow measure_row(const std::vector<PairSample>& pairs, std::size_t d, std::size_t c,
                          std::uint64_t proj_seed) {
    const ProjectionMatrix proj = ProjectionMatrix::sample(d, c, proj_seed);
    std::vector<double> errors(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t i) {
        errors[i] = pair_error(pairs[i], proj);
    });
    ErrorCurveRow row;
    row.d = d;
    row.num_pairs = pairs.size();
    double sum = 0.0, max = 0.0;
    for (double e : errors) {
        sum += e;
        max = std::max(max, e);
    }
    row.mean_error = sum / static_cast<double>(pairs.size());
    row.max_error = max;
    double var = 0.0;
    for (double e : errors) var += (e - row.mean_error) * (e - row.mean_error);
    row.std_error = pairs.size() > 1 ? std::sqrt(var / static_cast<double>(pairs.size() - 1)) : 0.0;
    return row;
}

} // namespace

ErrorCurve jl_error_experiment(std::size_t c, const std::vector<std::size_t>& d_list,
                               std::size_t num_pairs, std::uint64_t seed) {
    if (c < 2) throw DomainError("jl_error_experiment: C must be >= 2");
    if (d_list.empty()) throw DomainError("jl_error_experiment: empty D list");
    if (num_pairs < 1) throw DomainError("jl_error_experiment: num_pairs must be >= 1");

    // Rows are sorted by D; the projection seed is tied to the sorted rank
    // so a permuted input list reproduces the same curve.
    std::vector<std::size_t> sorted = d_list;
    std::sort(sorted.begin(), sorted.end());

    Rng rng(seed);
    const auto pairs = draw_pairs(c, num_pairs, rng);
    ErrorCurve curve;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const std::uint64_t proj_seed = rng.child(1000 + i).next_u64();
        curve.rows.push_back(measure_row(pairs, sorted[i], c, proj_seed));
    }
    return curve;
}

ConcentrationResult concentration_check(std::size_t c, std::size_t d, std::size_t num_pairs,
                                        double delta, std::uint64_t seed) {
    if (delta <= 0.0) throw DomainError("concentration_check: delta must be > 0");
    Rng rng(seed);
    const auto pairs = draw_pairs(c, num_pairs, rng);
    const ProjectionMatrix proj = ProjectionMatrix::sample(d, c, rng.child(1).next_u64());

    std::vector<unsigned char> violated(num_pairs, 0);
    parallel_for(num_pairs, [&](std::size_t i) {
        violated[i] = pair_error(pairs[i], proj) > delta ? 1 : 0;
    });

    ConcentrationResult result;
    result.num_pairs = num_pairs;
    for (auto v : violated) result.violations += v;
    result.observed_rate = static_cast<double>(result.violations) / static_cast<double>(num_pairs);
    result.bound = 2.0 * std::exp(-delta * delta * static_cast<double>(d));
    const double p = std::min(result.bound, 1.0);
    result.slack_3sigma = 3.0 * std::sqrt(std::max(p * (1.0 - p), 0.0) /
                                          static_cast<double>(num_pairs));
    return result;
}

} // namespace svt
