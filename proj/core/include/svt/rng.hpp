#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace svt {

// xoshiro256** seeded through splitmix64.
//
// The generation algorithm is pinned by this library (never delegated to the
// standard library's distributions), so a given seed reproduces the same
// stream on every build. Frozen test values depend on this.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
        has_cached_gaussian_ = false;
        cached_gaussian_ = 0.0;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via Box-Muller, one cached value per pair.
    double gaussian() {
        if (has_cached_gaussian_) {
            has_cached_gaussian_ = false;
            return cached_gaussian_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.14159265358979323846 * u2;
        cached_gaussian_ = radius * std::sin(angle);
        has_cached_gaussian_ = true;
        return radius * std::cos(angle);
    }

    std::vector<double> gaussian_vector(std::size_t n) {
        std::vector<double> out(n);
        for (auto& v : out) v = gaussian();
        return out;
    }

    // Gaussian draw normalized to unit Euclidean length.
    std::vector<double> unit_vector(std::size_t dim) {
        std::vector<double> v;
        double norm_sq = 0.0;
        do {
            v = gaussian_vector(dim);
            norm_sq = 0.0;
            for (double x : v) norm_sq += x * x;
        } while (norm_sq == 0.0);
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (double& x : v) x *= inv;
        return v;
    }

    // Independent child stream; distinct tags give decorrelated streams.
    Rng child(std::uint64_t tag) const {
        std::uint64_t mix = state_[0] ^ rotl(state_[3], 13) ^ (tag * 0x9e3779b97f4a7c15ULL);
        return Rng(splitmix64(mix));
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    static std::uint64_t splitmix64(std::uint64_t& state) {
        state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_[4];
    bool has_cached_gaussian_;
    double cached_gaussian_;
};

} // namespace svt
