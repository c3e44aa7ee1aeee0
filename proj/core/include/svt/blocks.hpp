#pragma once

#include <cstdint>
#include <vector>

#include "svt/attention.hpp"

namespace svt {

// Convolution weights with a per-output-channel affine normalization
// (gamma, beta) that folds into the convolution at inference. Convolutions
// are bias-free; the affine carries the shift.
struct ConvLayer {
    RealTensor w;       // [out_c, in_c, k, k], or [c, k, k] when depthwise
    RealTensor gamma;   // [out_c]
    RealTensor beta;    // [out_c]
    std::size_t kernel = 3;
    std::size_t stride = 1;
    bool depthwise = false;

    std::size_t out_channels() const { return depthwise ? w.shape().extent(0) : w.shape().extent(0); }
    std::size_t in_channels() const { return depthwise ? w.shape().extent(0) : w.shape().extent(1); }
    std::size_t parameter_count() const { return w.numel() + gamma.numel() + beta.numel(); }

    static ConvLayer init(std::size_t in_c, std::size_t out_c, std::size_t kernel,
                          std::size_t stride, bool depthwise, Rng& rng);
};

// Spike-gated convolution on [T,H,W,C] input spikes; zero padding preserves
// the spatial dims at stride 1 and halves them at stride 2.
RealTensor spike_conv2d(const SpikeTensor& x, const ConvLayer& layer, OpCounter* counter,
                        const std::string& scope);

// CNN block of two residual sub-paths:
//   U'  = U  + pw(dw(SN(pw(SN(U)))))           (separable convolution path)
//   U'' = U' + conv(SN(conv(SN(U'))))          (channel convolution path)
// The depthwise+pointwise pair is one separable convolution unit applied to
// the spike input; residuals add on real membrane values.
struct SepConvBlockWeights {
    ConvLayer pw1;  // 1x1, C -> C
    ConvLayer dw;   // depthwise, kernel from config (7x7 by default)
    ConvLayer pw2;  // 1x1, C -> C
    ConvLayer ch1;  // 3x3, C -> C
    ConvLayer ch2;  // 3x3, C -> C
    std::size_t parameter_count() const;
    static SepConvBlockWeights init(std::size_t channels, std::size_t dw_kernel,
                                    std::size_t ch_kernel, Rng& rng);
};
RealTensor sep_conv_block(const RealTensor& u, const SepConvBlockWeights& weights,
                          const NeuronConfig& cfg, OpCounter* counter = nullptr,
                          bool reset_each_step = false, const std::string& scope = "cnn");

// Transformer block on token-form input [T,N,D]:
//   U'  = U  + Attention(SN(U))
//   U'' = U' + MLP(SN(MLP'(SN(U'))))   with hidden width ratio*D
struct TransformerBlockWeights {
    AttentionWeights attention;
    RealTensor w_mlp1;  // [D x ratio*D]
    RealTensor w_mlp2;  // [ratio*D x D]
    std::size_t mlp_ratio = 4;
    std::size_t parameter_count() const;
    static TransformerBlockWeights init(const AttentionSpec& spec, std::size_t mlp_ratio, Rng& rng);
};
RealTensor transformer_block(const RealTensor& u, const AttentionSpec& spec,
                             const TransformerBlockWeights& weights, OpCounter* counter = nullptr,
                             const std::string& scope = "tf");

// Strided (or 1x1-stride channel-mapping) convolution stage with its own
// input spiking: SN -> conv -> affine.
struct DownsampleWeights {
    ConvLayer conv;
    std::size_t parameter_count() const { return conv.parameter_count(); }
    static DownsampleWeights init(std::size_t in_c, std::size_t out_c, std::size_t kernel,
                                  std::size_t stride, Rng& rng);
};
RealTensor downsample(const RealTensor& u, const DownsampleWeights& weights,
                      const NeuronConfig& cfg, OpCounter* counter = nullptr,
                      bool reset_each_step = false, const std::string& scope = "down");

// Desk-scale backbone. Stage schedule (depths 1,1,2,6,2):
//   down 7x7/2 (in->C),  cnn x1            @ [H/2,  C]
//   down 3x3/2 (C->2C),  cnn x1            @ [H/4,  2C]
//   down 3x3/2 (2C->4C), cnn x2            @ [H/8,  4C]
//   down 3x3/2 (4C->8C), transformer x6    @ [H/16, 8C]
//   conv 3x3/1 (8C->10C), transformer x2   @ [H/16, 10C]
// The last stage changes channels only; spatial dims stay at H/16 x W/16.
struct BackboneConfig {
    std::size_t base_channels = 8;  // C
    std::size_t in_channels = 3;
    std::size_t t = 4;
    std::size_t height = 32;
    std::size_t width = 32;
    std::size_t heads = 8;
    std::size_t mlp_ratio = 4;
    AttentionVariant attention_variant = AttentionVariant::Joint;
    ScoreKind score = ScoreKind::Hamming;
    NeuronConfig neuron;
    std::uint64_t seed = 1;

    void validate() const;
};

struct Backbone {
    BackboneConfig config;
    std::vector<DownsampleWeights> downs;          // five stages
    std::vector<SepConvBlockWeights> cnn_blocks;   // depths 1,1,2
    std::vector<std::size_t> cnn_stage;            // stage index per cnn block
    std::vector<TransformerBlockWeights> tf_blocks;  // depths 6,2
    std::vector<std::size_t> tf_stage;             // 3 or 4

    std::size_t parameter_count() const;
    // Channel width at each stage: C, 2C, 4C, 8C, 10C.
    std::vector<std::size_t> stage_channels() const;

    // Input [T,H,W,in_channels] real; output [T, H/16, W/16, 10C] real.
    RealTensor forward(const RealTensor& input, OpCounter* counter = nullptr) const;
};

Backbone build_backbone(const BackboneConfig& config);

// Backbone weight serialization: one SVT1 container per tensor next to a
// name=path manifest. Loading rebuilds the structure from the config and
// fills every tensor from the manifest; shapes must match.
void save_backbone_weights(const Backbone& backbone, const std::string& directory,
                           const std::string& manifest_name = "backbone.manifest");
Backbone load_backbone_weights(const BackboneConfig& config, const std::string& manifest_path);

} // namespace svt
