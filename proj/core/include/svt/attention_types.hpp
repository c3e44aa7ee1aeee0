#pragma once

#include <cstddef>
#include <string>

#include "svt/errors.hpp"
#include "svt/neuron.hpp"

namespace svt {

enum class AttentionVariant { Joint, Hierarchical, Factorized, NeuronLevel, SpatialOnly };
enum class ScoreKind { Hamming, Dot };

std::string to_string(AttentionVariant v);
std::string to_string(ScoreKind s);
AttentionVariant attention_variant_from_string(const std::string& name);
ScoreKind score_kind_from_string(const std::string& name);

// Space-time attention configuration over features shaped [B, T, N, D] with
// M heads of width D/M.
//
// score_scale multiplies the integer attention pre-activation before the
// spiking neuron: fire iff score_scale * preact > u_th. Folding the scale
// into the threshold (preact > u_th / score_scale) is the same decision on
// integer pre-activations. Defaults: 1/(2*Dh) for hamming, 1/8 for dot.
struct AttentionSpec {
    AttentionVariant variant = AttentionVariant::Joint;
    ScoreKind score = ScoreKind::Hamming;
    std::size_t t = 1;
    std::size_t n = 1;
    std::size_t d = 1;
    std::size_t heads = 1;
    double score_scale = 0.0;  // 0 selects the per-score default
    NeuronConfig neuron;

    std::size_t head_dim() const { return d / heads; }

    double effective_score_scale() const {
        if (score_scale > 0.0) return score_scale;
        if (score == ScoreKind::Hamming) return 1.0 / (2.0 * static_cast<double>(head_dim()));
        return 1.0 / 8.0;
    }

    void validate() const {
        if (t < 1 || n < 1 || d < 1 || heads < 1) {
            throw DomainError("AttentionSpec: T, N, D, M must be >= 1");
        }
        if (d % heads != 0) {
            throw DomainError("AttentionSpec: D=" + std::to_string(d) +
                              " not divisible by M=" + std::to_string(heads));
        }
        if (variant == AttentionVariant::Factorized && d % (2 * heads) != 0) {
            throw DomainError("AttentionSpec: factorized requires D divisible by 2M");
        }
        if (score_scale < 0.0) throw DomainError("AttentionSpec: score_scale must be >= 0");
        neuron.validate();
    }
};

} // namespace svt
