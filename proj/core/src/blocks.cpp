#include "svt/blocks.hpp"

#include <cmath>

#include "svt/tensor_io.hpp"

namespace svt {

namespace {

void check_thwc(const Shape& s, const char* what) {
    if (s.rank() != 4) {
        throw ShapeMismatchError(std::string(what) + ": expected [T,H,W,C], got " + s.to_string());
    }
}

RealTensor add_tensors(const RealTensor& a, const RealTensor& b) {
    if (a.shape() != b.shape()) throw ShapeMismatchError("residual add: shape mismatch");
    RealTensor out(a.shape());
    for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i] + b[i];
    return out;
}

struct ConvCount {
    double dense = 0.0;
    double measured = 0.0;
};

} // namespace

ConvLayer ConvLayer::init(std::size_t in_c, std::size_t out_c, std::size_t kernel,
                          std::size_t stride, bool depthwise, Rng& rng) {
    ConvLayer layer;
    layer.kernel = kernel;
    layer.stride = stride;
    layer.depthwise = depthwise;
    if (depthwise && in_c != out_c) throw DomainError("depthwise conv needs in_c == out_c");
    const std::size_t fan_in = kernel * kernel * (depthwise ? 1 : in_c);
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    if (depthwise) {
        layer.w = RealTensor(Shape{out_c, kernel, kernel});
    } else {
        layer.w = RealTensor(Shape{out_c, in_c, kernel, kernel});
    }
    for (std::size_t i = 0; i < layer.w.numel(); ++i) layer.w[i] = scale * rng.gaussian();
    layer.gamma = RealTensor(Shape{out_c}, 1.0);
    layer.beta = RealTensor(Shape{out_c}, 0.0);
    return layer;
}

namespace {

// Core spike-driven convolution. Accumulates weights at set input bits only;
// measured counts exactly those accumulates plus one affine add per output
// element whose receptive field saw at least one spike.
RealTensor conv_core(const SpikeTensor& x, const ConvLayer& layer, ConvCount* count) {
    check_thwc(x.shape(), "spike_conv2d");
    const std::size_t t_steps = x.shape().extent(0);
    const std::size_t h = x.shape().extent(1), w = x.shape().extent(2);
    const std::size_t in_c = x.shape().extent(3);
    if (in_c != layer.in_channels()) {
        throw ShapeMismatchError("spike_conv2d: input channels " + std::to_string(in_c) +
                                 " vs layer " + std::to_string(layer.in_channels()));
    }
    const std::size_t k = layer.kernel, stride = layer.stride, pad = k / 2;
    const std::size_t out_c = layer.out_channels();
    const std::size_t oh = (h + 2 * pad - k) / stride + 1;
    const std::size_t ow = (w + 2 * pad - k) / stride + 1;
    RealTensor out(Shape{t_steps, oh, ow, out_c});

    double measured = 0.0;
    std::size_t active_positions = 0;
    std::vector<double> acc(out_c);
    for (std::size_t t = 0; t < t_steps; ++t) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                std::fill(acc.begin(), acc.end(), 0.0);
                bool any = false;
                for (std::size_t ky = 0; ky < k; ++ky) {
                    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                                              static_cast<std::ptrdiff_t>(pad);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                    for (std::size_t kx = 0; kx < k; ++kx) {
                        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                                  static_cast<std::ptrdiff_t>(pad);
                        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                        const std::size_t base =
                            ((t * h + static_cast<std::size_t>(iy)) * w +
                             static_cast<std::size_t>(ix)) * in_c;
                        for (std::size_t c = 0; c < in_c; ++c) {
                            if (!x.get_flat(base + c)) continue;
                            any = true;
                            if (layer.depthwise) {
                                acc[c] += layer.w[(c * k + ky) * k + kx];
                                measured += 1.0;
                            } else {
                                for (std::size_t o = 0; o < out_c; ++o) {
                                    acc[o] += layer.w[((o * in_c + c) * k + ky) * k + kx];
                                }
                                measured += static_cast<double>(out_c);
                            }
                        }
                    }
                }
                active_positions += any;
                const std::size_t out_base = ((t * oh + oy) * ow + ox) * out_c;
                for (std::size_t o = 0; o < out_c; ++o) {
                    out[out_base + o] = layer.gamma[o] * acc[o] + layer.beta[o];
                }
            }
        }
    }
    if (count) {
        const double positions = static_cast<double>(t_steps * oh * ow);
        const double taps = static_cast<double>(k * k) * (layer.depthwise ? 1.0 : static_cast<double>(in_c));
        count->dense = positions * taps * static_cast<double>(out_c) +
                       positions * static_cast<double>(out_c);
        count->measured = measured + static_cast<double>(active_positions) * static_cast<double>(out_c);
    }
    return out;
}

} // namespace

RealTensor spike_conv2d(const SpikeTensor& x, const ConvLayer& layer, OpCounter* counter,
                        const std::string& scope) {
    ConvCount count;
    RealTensor out = conv_core(x, layer, counter ? &count : nullptr);
    if (counter) {
        LayerCost row;
        row.scope = scope;
        row.dense_ops = count.dense;
        row.measured_ops = count.measured;
        row.rho = x.density();
        counter->add(row);
    }
    return out;
}

std::size_t SepConvBlockWeights::parameter_count() const {
    return pw1.parameter_count() + dw.parameter_count() + pw2.parameter_count() +
           ch1.parameter_count() + ch2.parameter_count();
}

SepConvBlockWeights SepConvBlockWeights::init(std::size_t channels, std::size_t dw_kernel,
                                              std::size_t ch_kernel, Rng& rng) {
    SepConvBlockWeights w;
    w.pw1 = ConvLayer::init(channels, channels, 1, 1, false, rng);
    w.dw = ConvLayer::init(channels, channels, dw_kernel, 1, true, rng);
    w.pw2 = ConvLayer::init(channels, channels, 1, 1, false, rng);
    w.ch1 = ConvLayer::init(channels, channels, ch_kernel, 1, false, rng);
    w.ch2 = ConvLayer::init(channels, channels, ch_kernel, 1, false, rng);
    return w;
}

namespace {

// Pointwise convolution on a real input: the second half of the separable
// depthwise+pointwise pair (one linear unit on the spike input of the
// depthwise stage, so no neuron sits between them).
RealTensor real_pointwise(const RealTensor& x, const ConvLayer& layer, ConvCount* count) {
    check_thwc(x.shape(), "real_pointwise");
    const std::size_t positions = x.shape().extent(0) * x.shape().extent(1) * x.shape().extent(2);
    const std::size_t in_c = x.shape().extent(3), out_c = layer.out_channels();
    RealTensor out(Shape{x.shape().extent(0), x.shape().extent(1), x.shape().extent(2), out_c});
    double measured = 0.0;
    std::size_t active = 0;
    for (std::size_t p = 0; p < positions; ++p) {
        bool any = false;
        for (std::size_t o = 0; o < out_c; ++o) {
            double acc = 0.0;
            for (std::size_t c = 0; c < in_c; ++c) {
                const double v = x[p * in_c + c];
                if (v == 0.0) continue;
                acc += v * layer.w[(o * in_c + c)];
                measured += 1.0;
                any = true;
            }
            out[p * out_c + o] = layer.gamma[o] * acc + layer.beta[o];
        }
        active += any;
    }
    if (count) {
        count->dense = static_cast<double>(positions) * in_c * out_c +
                       static_cast<double>(positions) * out_c;
        count->measured = measured + static_cast<double>(active) * out_c;
    }
    return out;
}

} // namespace

RealTensor sep_conv_block(const RealTensor& u, const SepConvBlockWeights& weights,
                          const NeuronConfig& cfg, OpCounter* counter, bool reset_each_step,
                          const std::string& scope) {
    check_thwc(u.shape(), "sep_conv_block");
    // U' = U + pw(dw(SN(pw(SN(U)))))
    const SpikeTensor s1 = lif_over_time(u, cfg, reset_each_step);
    const RealTensor c1 = spike_conv2d(s1, weights.pw1, counter, scope + ".pw1");
    const SpikeTensor s2 = lif_over_time(c1, cfg, reset_each_step);
    ConvCount dw_count, pw_count;
    const RealTensor c2 = conv_core(s2, weights.dw, counter ? &dw_count : nullptr);
    const RealTensor c3 = real_pointwise(c2, weights.pw2, counter ? &pw_count : nullptr);
    if (counter) {
        LayerCost row;
        row.scope = scope + ".dwpw";
        row.dense_ops = dw_count.dense + pw_count.dense;
        row.measured_ops = dw_count.measured + pw_count.measured;
        row.rho = s2.density();
        counter->add(row);
    }
    const RealTensor u1 = add_tensors(u, c3);

    // U'' = U' + conv(SN(conv(SN(U'))))
    const SpikeTensor s3 = lif_over_time(u1, cfg, reset_each_step);
    const RealTensor c4 = spike_conv2d(s3, weights.ch1, counter, scope + ".ch1");
    const SpikeTensor s4 = lif_over_time(c4, cfg, reset_each_step);
    const RealTensor c5 = spike_conv2d(s4, weights.ch2, counter, scope + ".ch2");
    return add_tensors(u1, c5);
}

std::size_t TransformerBlockWeights::parameter_count() const {
    return attention.allocated_elements() + w_mlp1.numel() + w_mlp2.numel();
}

TransformerBlockWeights TransformerBlockWeights::init(const AttentionSpec& spec,
                                                      std::size_t mlp_ratio, Rng& rng) {
    TransformerBlockWeights w;
    w.attention = AttentionWeights::init(spec, rng);
    w.mlp_ratio = mlp_ratio;
    const std::size_t hidden = mlp_ratio * spec.d;
    const double s1 = 1.0 / std::sqrt(static_cast<double>(spec.d));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    w.w_mlp1 = RealTensor(Shape{spec.d, hidden});
    for (std::size_t i = 0; i < w.w_mlp1.numel(); ++i) w.w_mlp1[i] = s1 * rng.gaussian();
    w.w_mlp2 = RealTensor(Shape{hidden, spec.d});
    for (std::size_t i = 0; i < w.w_mlp2.numel(); ++i) w.w_mlp2[i] = s2 * rng.gaussian();
    return w;
}

namespace {

// Spike-gated linear layer on [T,N,*] tokens, counted like a projection.
RealTensor spike_linear(const SpikeTensor& x, const RealTensor& w, OpCounter* counter,
                        const std::string& scope) {
    const std::size_t in = w.shape().extent(0), out_c = w.shape().extent(1);
    const std::size_t tokens = x.numel() / in;
    const SpikeTensor x2d = x.reshape(Shape{tokens, in});
    const RealTensor out = binary_by_real_matmul(x2d, w);
    if (counter) {
        LayerCost row;
        row.scope = scope;
        row.dense_ops = static_cast<double>(tokens) * in * out_c;
        row.measured_ops = static_cast<double>(x2d.count_ones()) * out_c;
        row.rho = x2d.density();
        counter->add(row);
    }
    std::vector<std::size_t> dims = x.shape().dims();
    dims.back() = out_c;
    return out.reshape(Shape{dims});
}

} // namespace

RealTensor transformer_block(const RealTensor& u, const AttentionSpec& spec,
                             const TransformerBlockWeights& weights, OpCounter* counter,
                             const std::string& scope) {
    if (u.shape().rank() != 3) {
        throw ShapeMismatchError("transformer_block: expected [T,N,D], got " + u.shape().to_string());
    }
    spec.validate();
    if (u.shape().extent(0) != spec.t || u.shape().extent(1) != spec.n ||
        u.shape().extent(2) != spec.d) {
        throw ShapeMismatchError("transformer_block: input " + u.shape().to_string() +
                                 " does not match spec");
    }
    const bool reset = spec.variant == AttentionVariant::SpatialOnly;
    const std::size_t t = spec.t, n = spec.n, d = spec.d;

    // U' = U + Attention(SN(U))
    const SpikeTensor x = lif_over_time(u, spec.neuron, reset);
    const SpikeTensor x4 = x.reshape(Shape{1, t, n, d});
    const RealTensor attn = space_time_attention(x4, spec, weights.attention, counter);
    const RealTensor u1 = add_tensors(u, attn.reshape(u.shape()));

    // U'' = U' + MLP(SN(MLP'(SN(U'))))
    const SpikeTensor m1 = lif_over_time(u1, spec.neuron, reset);
    const RealTensor h = spike_linear(m1, weights.w_mlp1, counter, scope + ".mlp1");
    const SpikeTensor m2 = lif_over_time(h, spec.neuron, reset);
    const RealTensor o = spike_linear(m2, weights.w_mlp2, counter, scope + ".mlp2");
    return add_tensors(u1, o);
}

DownsampleWeights DownsampleWeights::init(std::size_t in_c, std::size_t out_c, std::size_t kernel,
                                          std::size_t stride, Rng& rng) {
    DownsampleWeights w;
    w.conv = ConvLayer::init(in_c, out_c, kernel, stride, false, rng);
    return w;
}

RealTensor downsample(const RealTensor& u, const DownsampleWeights& weights,
                      const NeuronConfig& cfg, OpCounter* counter, bool reset_each_step,
                      const std::string& scope) {
    check_thwc(u.shape(), "downsample");
    const SpikeTensor s = lif_over_time(u, cfg, reset_each_step);
    return spike_conv2d(s, weights.conv, counter, scope);
}

void BackboneConfig::validate() const {
    if (base_channels < 1) throw ConfigError("backbone: base_channels must be >= 1");
    if (height % 16 != 0 || width % 16 != 0) {
        throw ConfigError("backbone: H and W must be divisible by 16");
    }
    if ((8 * base_channels) % heads != 0 || (10 * base_channels) % heads != 0) {
        throw ConfigError("backbone: heads must divide 8C and 10C");
    }
    if (t < 1) throw ConfigError("backbone: T must be >= 1");
    neuron.validate();
}

std::vector<std::size_t> Backbone::stage_channels() const {
    const std::size_t c = config.base_channels;
    return {c, 2 * c, 4 * c, 8 * c, 10 * c};
}

std::size_t Backbone::parameter_count() const {
    std::size_t n = 0;
    for (const auto& d : downs) n += d.parameter_count();
    for (const auto& b : cnn_blocks) n += b.parameter_count();
    for (const auto& b : tf_blocks) n += b.parameter_count();
    return n;
}

Backbone build_backbone(const BackboneConfig& config) {
    config.validate();
    Backbone bb;
    bb.config = config;
    Rng rng(config.seed);
    const std::size_t c = config.base_channels;

    bb.downs.push_back(DownsampleWeights::init(config.in_channels, c, 7, 2, rng));
    bb.downs.push_back(DownsampleWeights::init(c, 2 * c, 3, 2, rng));
    bb.downs.push_back(DownsampleWeights::init(2 * c, 4 * c, 3, 2, rng));
    bb.downs.push_back(DownsampleWeights::init(4 * c, 8 * c, 3, 2, rng));
    // Final stage keeps H/16 x W/16; channels-only map 8C -> 10C.
    bb.downs.push_back(DownsampleWeights::init(8 * c, 10 * c, 3, 1, rng));

    bb.cnn_blocks.push_back(SepConvBlockWeights::init(c, 7, 3, rng));
    bb.cnn_stage.push_back(0);
    bb.cnn_blocks.push_back(SepConvBlockWeights::init(2 * c, 7, 3, rng));
    bb.cnn_stage.push_back(1);
    for (int i = 0; i < 2; ++i) {
        bb.cnn_blocks.push_back(SepConvBlockWeights::init(4 * c, 7, 3, rng));
        bb.cnn_stage.push_back(2);
    }

    const std::size_t n_tokens = (config.height / 16) * (config.width / 16);
    for (int i = 0; i < 6; ++i) {
        AttentionSpec spec;
        spec.variant = config.attention_variant;
        spec.score = config.score;
        spec.t = config.t;
        spec.n = n_tokens;
        spec.d = 8 * c;
        spec.heads = config.heads;
        spec.neuron = config.neuron;
        bb.tf_blocks.push_back(TransformerBlockWeights::init(spec, config.mlp_ratio, rng));
        bb.tf_stage.push_back(3);
    }
    for (int i = 0; i < 2; ++i) {
        AttentionSpec spec;
        spec.variant = config.attention_variant;
        spec.score = config.score;
        spec.t = config.t;
        spec.n = n_tokens;
        spec.d = 10 * c;
        spec.heads = config.heads;
        spec.neuron = config.neuron;
        bb.tf_blocks.push_back(TransformerBlockWeights::init(spec, config.mlp_ratio, rng));
        bb.tf_stage.push_back(4);
    }
    return bb;
}

namespace {

// Visits every tensor of the backbone with a stable hierarchical name, the
// single source of truth for both save and load.
template <typename BackboneRef, typename Fn>
void for_each_backbone_tensor(BackboneRef& bb, Fn&& fn) {
    auto conv = [&](auto& layer, const std::string& prefix) {
        fn(layer.w, prefix + ".w");
        fn(layer.gamma, prefix + ".gamma");
        fn(layer.beta, prefix + ".beta");
    };
    for (std::size_t i = 0; i < bb.downs.size(); ++i) {
        conv(bb.downs[i].conv, "down" + std::to_string(i));
    }
    for (std::size_t i = 0; i < bb.cnn_blocks.size(); ++i) {
        const std::string p = "cnn" + std::to_string(i);
        conv(bb.cnn_blocks[i].pw1, p + ".pw1");
        conv(bb.cnn_blocks[i].dw, p + ".dw");
        conv(bb.cnn_blocks[i].pw2, p + ".pw2");
        conv(bb.cnn_blocks[i].ch1, p + ".ch1");
        conv(bb.cnn_blocks[i].ch2, p + ".ch2");
    }
    for (std::size_t i = 0; i < bb.tf_blocks.size(); ++i) {
        const std::string p = "tf" + std::to_string(i);
        auto& block = bb.tf_blocks[i];
        for (std::size_t m = 0; m < block.attention.mats.size(); ++m) {
            fn(block.attention.mats[m], p + ".attn." + block.attention.mat_names[m]);
        }
        fn(block.w_mlp1, p + ".mlp1");
        fn(block.w_mlp2, p + ".mlp2");
    }
}

} // namespace

void save_backbone_weights(const Backbone& backbone, const std::string& directory,
                           const std::string& manifest_name) {
    Manifest manifest;
    for_each_backbone_tensor(backbone, [&](const RealTensor& tensor, const std::string& name) {
        std::string file = name;
        for (char& c : file) {
            if (c == '.') c = '_';
        }
        file += ".svt1";
        save_svt1(directory + "/" + file, tensor);
        manifest[name] = file;
    });
    write_manifest(directory + "/" + manifest_name, manifest);
}

Backbone load_backbone_weights(const BackboneConfig& config, const std::string& manifest_path) {
    const Manifest manifest = read_manifest(manifest_path);
    const auto slash = manifest_path.find_last_of('/');
    const std::string dir = slash == std::string::npos ? "." : manifest_path.substr(0, slash);

    Backbone bb = build_backbone(config);
    std::size_t filled = 0;
    for_each_backbone_tensor(bb, [&](RealTensor& tensor, const std::string& name) {
        const auto it = manifest.find(name);
        if (it == manifest.end()) throw IoError("backbone manifest missing tensor: " + name);
        RealTensor loaded = load_svt1_real(dir + "/" + it->second);
        if (loaded.shape() != tensor.shape()) {
            throw IoError("backbone tensor " + name + " has shape " + loaded.shape().to_string() +
                          ", expected " + tensor.shape().to_string());
        }
        tensor = std::move(loaded);
        ++filled;
    });
    if (filled != manifest.size()) {
        throw IoError("backbone manifest has " + std::to_string(manifest.size()) +
                      " entries, structure uses " + std::to_string(filled));
    }
    return bb;
}

RealTensor Backbone::forward(const RealTensor& input, OpCounter* counter) const {
    check_thwc(input.shape(), "backbone");
    if (input.shape().extent(0) != config.t || input.shape().extent(1) != config.height ||
        input.shape().extent(2) != config.width || input.shape().extent(3) != config.in_channels) {
        throw ShapeMismatchError("backbone: input " + input.shape().to_string() +
                                 " does not match config");
    }
    const bool reset = config.attention_variant == AttentionVariant::SpatialOnly;
    const NeuronConfig& cfg = config.neuron;

    RealTensor u = downsample(input, downs[0], cfg, counter, reset, "stage0.down");
    u = sep_conv_block(u, cnn_blocks[0], cfg, counter, reset, "stage0.cnn0");
    u = downsample(u, downs[1], cfg, counter, reset, "stage1.down");
    u = sep_conv_block(u, cnn_blocks[1], cfg, counter, reset, "stage1.cnn0");
    u = downsample(u, downs[2], cfg, counter, reset, "stage2.down");
    u = sep_conv_block(u, cnn_blocks[2], cfg, counter, reset, "stage2.cnn0");
    u = sep_conv_block(u, cnn_blocks[3], cfg, counter, reset, "stage2.cnn1");
    u = downsample(u, downs[3], cfg, counter, reset, "stage3.down");

    const std::size_t h16 = config.height / 16, w16 = config.width / 16;
    const std::size_t n_tokens = h16 * w16;
    RealTensor tokens = u.reshape(Shape{config.t, n_tokens, 8 * config.base_channels});
    for (std::size_t i = 0; i < tf_blocks.size(); ++i) {
        if (tf_stage[i] != 3) continue;
        AttentionSpec spec;
        spec.variant = config.attention_variant;
        spec.score = config.score;
        spec.t = config.t;
        spec.n = n_tokens;
        spec.d = 8 * config.base_channels;
        spec.heads = config.heads;
        spec.neuron = cfg;
        tokens = transformer_block(tokens, spec, tf_blocks[i], counter,
                                   "stage3.tf" + std::to_string(i));
    }

    RealTensor grid = tokens.reshape(Shape{config.t, h16, w16, 8 * config.base_channels});
    grid = downsample(grid, downs[4], cfg, counter, reset, "stage4.proj");
    tokens = grid.reshape(Shape{config.t, n_tokens, 10 * config.base_channels});
    for (std::size_t i = 0; i < tf_blocks.size(); ++i) {
        if (tf_stage[i] != 4) continue;
        AttentionSpec spec;
        spec.variant = config.attention_variant;
        spec.score = config.score;
        spec.t = config.t;
        spec.n = n_tokens;
        spec.d = 10 * config.base_channels;
        spec.heads = config.heads;
        spec.neuron = cfg;
        tokens = transformer_block(tokens, spec, tf_blocks[i], counter,
                                   "stage4.tf" + std::to_string(i));
    }
    return tokens.reshape(Shape{config.t, h16, w16, 10 * config.base_channels});
}

} // namespace svt
