#pragma once

#include <map>
#include <string>

#include "svt/blocks.hpp"
#include "svt/train.hpp"

namespace svt {

// Plain-text configuration: "[section]" headers and "key = value" lines,
// '#' comments. Unknown sections or keys are rejected; every field defaults
// to the struct defaults below.
//
// Sections and keys:
//   [neuron]    beta, u_th, s, levels, surrogate (atan|rectangular), alpha
//   [attention] variant, score, T, N, D, M, score_scale
//   [backbone]  base_channels, in_channels, T, H, W, heads, mlp_ratio,
//               variant, score, seed
//   [cost]      e_mac_pj, e_ac_pj
//   [training]  epochs, seed, train_size, test_size, batch_size, lr,
//               momentum, channels
struct WorkbenchConfig {
    NeuronConfig neuron;
    AttentionSpec attention;
    BackboneConfig backbone;
    EnergyConstants cost;
    struct Training {
        std::size_t epochs = 30;
        std::uint64_t seed = 7;
        ToyTrainOptions options;
    } training;

    static WorkbenchConfig defaults() { return WorkbenchConfig{}; }
    static WorkbenchConfig load(const std::string& path);
    static WorkbenchConfig parse(const std::string& text);
};

} // namespace svt
