#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "svt/attention_types.hpp"
#include "svt/autodiff.hpp"
#include "svt/cost.hpp"

namespace svt {

// Synthetic drifting-bar sequences. A vertical bump drifts one column per
// step, left-to-right for class 0 and right-to-left for class 1, with the
// start column uniform. Each single frame is therefore distributed
// identically across classes (the label lives only in the temporal order).
struct ToyTask {
    std::uint64_t seed = 7;
    std::size_t t = 8;
    std::size_t height = 16;
    std::size_t width = 16;

    struct Sample {
        RealTensor frames;  // [T, H, W, 1]
        int label = 0;
    };

    Sample make_sample(Rng& rng) const;
    // Deterministic split: tag 0 = train stream, tag 1 = held-out stream.
    std::vector<Sample> make_split(std::size_t count, std::uint64_t stream_tag) const;
};

struct ToyTrainOptions {
    std::size_t train_size = 256;
    std::size_t test_size = 512;
    std::size_t batch_size = 32;
    double lr = 0.1;
    double momentum = 0.9;
    std::size_t channels = 6;  // stem width C; token width is 2C
};

struct ToyTrainResult {
    std::vector<double> train_loss;     // per epoch
    std::vector<double> test_accuracy;  // per epoch
    double final_accuracy = 0.0;
    CostReport cost;                    // instrumented forward of the trained model

    // epoch,train_loss,test_acc
    void write_csv(std::ostream& out) const;
};

// Trains the two-block model (one CNN block, one transformer block carrying
// the requested attention variant) with cross-entropy through BPTT and
// straight-through spike gradients. Deterministic given seed; throws
// DivergenceError when the loss turns non-finite.
ToyTrainResult train_toy(const AttentionSpec& attention, const ToyTask& task, std::size_t epochs,
                         std::uint64_t seed, const ToyTrainOptions& options = {});

} // namespace svt
