#pragma once

#include <cstdint>
#include <vector>

#include "svt/attention_types.hpp"
#include "svt/cost.hpp"
#include "svt/kernels.hpp"
#include "svt/rng.hpp"

namespace svt {

// ---------------------------------------------------------------------------
// Kernel-level attention ops on a single head. All accumulation is exact
// integer arithmetic; linear-order and quadratic-order evaluation agree
// spike for spike.
// ---------------------------------------------------------------------------

// Dot-product score matrix Q K^T over {0,1} spikes.
IntTensor dot_score(const SpikeTensor& q, const SpikeTensor& k);

// Signed score matrix (2Q-1)(2K-1)^T; scaled by 1/(2D) and shifted by 1/2 it
// equals the pairwise normalized Hamming similarity exactly.
IntTensor sdha_score(const SpikeTensor& q, const SpikeTensor& k);

// Spike-driven dot-product attention, linear evaluation order Q (K^T V).
// Fires where the integer pre-activation exceeds threshold_scale * u_th.
SpikeTensor sdsa_dot(const SpikeTensor& q, const SpikeTensor& k, const SpikeTensor& v,
                     double threshold_scale, const NeuronConfig& cfg = {});
// Quadratic order (Q K^T) V; exact integer equality with the linear order.
SpikeTensor sdsa_dot_quadratic(const SpikeTensor& q, const SpikeTensor& k, const SpikeTensor& v,
                               double threshold_scale, const NeuronConfig& cfg = {});

// Spike-driven Hamming attention, linear order (2Q-1) [(2K-1)^T V]. Fires
// where score_scale * preact > u_th; score_scale <= 0 selects the default
// 1/(2*Dh). V enters unmodified as {0,1}; only Q and K get the +-1 mapping.
SpikeTensor sdha(const SpikeTensor& q, const SpikeTensor& k, const SpikeTensor& v,
                 double score_scale = 0.0, const NeuronConfig& cfg = {});
SpikeTensor sdha_quadratic(const SpikeTensor& q, const SpikeTensor& k, const SpikeTensor& v,
                           double score_scale = 0.0, const NeuronConfig& cfg = {});

// Integer pre-activations of the linear-order routes (before the neuron).
IntTensor sdha_preactivation(const SpikeTensor& q, const SpikeTensor& k, const SpikeTensor& v);
IntTensor sdsa_dot_preactivation(const SpikeTensor& q, const SpikeTensor& k, const SpikeTensor& v);

// Memory read: Hamming cross-attention with the last-step tokens as query
// and the previous steps' tokens as keys/values. memory_k/memory_v hold
// (T-1)*N rows; EmptyMemoryError when the memory is empty.
SpikeTensor cross_sdha(const SpikeTensor& query, const SpikeTensor& memory_k,
                       const SpikeTensor& memory_v, double score_scale = 0.0,
                       const NeuronConfig& cfg = {});

// ---------------------------------------------------------------------------
// Space-time attention module: linear projections + normalization + spiking
// around the per-head attention core, in five layout variants.
// ---------------------------------------------------------------------------

// Trainable projection matrices for one module. Normalization is a
// per-channel affine with identity defaults, carried as statistics next to
// the weights and excluded from the parameter count (fold-able at
// inference).
//
//   joint / neuron-level / spatial-only: wq, wk, wv, wo      [D x D]  -> 4D^2
//   hierarchical: one set per pass                           -> 8D^2
//   factorized:   shared wq + per-branch wk/wv [D x D] and
//                 wo [2D x D] on the branch concatenation    -> 7D^2
struct AttentionWeights {
    AttentionVariant variant = AttentionVariant::Joint;
    std::size_t d = 0;
    std::vector<RealTensor> mats;        // layout per variant, see order_* below
    std::vector<std::string> mat_names;

    std::size_t allocated_elements() const;
    const RealTensor& mat(const std::string& name) const;

    static AttentionWeights init(const AttentionSpec& spec, Rng& rng);
};

// Table-form parameter count for the variant: 4D^2 / 8D^2 / 7D^2. Equals
// AttentionWeights::allocated_elements for every variant.
std::size_t param_count(const AttentionSpec& spec);

// Weight serialization: one SVT1 container per projection next to a
// plain-text manifest (name=relative-path per line). The variant and D are
// recovered from the projection names and shapes; the per-step layouts
// share the joint layout, so retag the variant after loading when needed.
void save_attention_weights(const AttentionWeights& weights, const std::string& directory,
                            const std::string& manifest_name = "weights.manifest");
AttentionWeights load_attention_weights(const std::string& manifest_path);

// Full module forward on spike input [B, T, N, D] -> real [B, T, N, D].
// Projection and output spiking neurons step over the T axis with carried
// state (zero-initialized); spatial-only resets all neuron state each step.
RealTensor space_time_attention(const SpikeTensor& x, const AttentionSpec& spec,
                                const AttentionWeights& weights, OpCounter* counter = nullptr);

} // namespace svt
