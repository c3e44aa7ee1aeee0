#include "svt/attention.hpp"

#include <algorithm>
#include <cmath>

#include "svt/tensor_io.hpp"

namespace svt {

namespace {

void check_qkv(const SpikeTensor& q, const SpikeTensor& k, const SpikeTensor& v,
               const char* what) {
    if (q.shape().rank() != 2 || k.shape().rank() != 2 || v.shape().rank() != 2) {
        throw ShapeMismatchError(std::string(what) + ": Q/K/V must be rank-2 [tokens x channels]");
    }
    const std::size_t d = q.shape().extent(1);
    if (k.shape().extent(1) != d || v.shape().extent(1) != d) {
        throw ShapeMismatchError(std::string(what) + ": channel extents differ");
    }
    if (k.shape().extent(0) != v.shape().extent(0)) {
        throw ShapeMismatchError(std::string(what) + ": K and V token counts differ");
    }
}

SpikeTensor threshold_spikes(const IntTensor& preact, double scale, double u_th) {
    SpikeTensor out(preact.shape());
    for (std::size_t i = 0; i < preact.numel(); ++i) {
        if (scale * static_cast<double>(preact[i]) > u_th) out.set_flat(i, true);
    }
    return out;
}

double default_hamming_scale(const SpikeTensor& q) {
    return 1.0 / (2.0 * static_cast<double>(q.shape().extent(1)));
}

} // namespace

IntTensor dot_score(const SpikeTensor& q, const SpikeTensor& k) {
    check_qkv(q, k, k, "dot_score");
    return binary_matmul(q, k.transpose_axes({1, 0}));
}

IntTensor sdha_score(const SpikeTensor& q, const SpikeTensor& k) {
    check_qkv(q, k, k, "sdha_score");
    return signed_binary_matmul(q, k.transpose_axes({1, 0}));
}

IntTensor sdsa_dot_preactivation(const SpikeTensor& q, const SpikeTensor& k,
                                 const SpikeTensor& v) {
    check_qkv(q, k, v, "sdsa_dot");
    const IntTensor kv = binary_matmul(k.transpose_axes({1, 0}), v);
    return binary_by_int_matmul(q, kv);
}

IntTensor sdha_preactivation(const SpikeTensor& q, const SpikeTensor& k, const SpikeTensor& v) {
    check_qkv(q, k, v, "sdha");
    const IntTensor kv = signed_by_binary_matmul(k.transpose_axes({1, 0}), v);
    return pm1_by_int_matmul(q, kv);
}

SpikeTensor sdsa_dot(const SpikeTensor& q, const SpikeTensor& k, const SpikeTensor& v,
                     double threshold_scale, const NeuronConfig& cfg) {
    if (threshold_scale <= 0.0) throw DomainError("sdsa_dot: threshold scale must be > 0");
    // Eq-form SN_s: fire iff preact > s * u_th.
    return threshold_spikes(sdsa_dot_preactivation(q, k, v), 1.0, threshold_scale * cfg.u_th);
}

SpikeTensor sdsa_dot_quadratic(const SpikeTensor& q, const SpikeTensor& k, const SpikeTensor& v,
                               double threshold_scale, const NeuronConfig& cfg) {
    if (threshold_scale <= 0.0) throw DomainError("sdsa_dot: threshold scale must be > 0");
    const IntTensor preact = int_by_binary_matmul(dot_score(q, k), v);
    return threshold_spikes(preact, 1.0, threshold_scale * cfg.u_th);
}

SpikeTensor sdha(const SpikeTensor& q, const SpikeTensor& k, const SpikeTensor& v,
                 double score_scale, const NeuronConfig& cfg) {
    const double scale = score_scale > 0.0 ? score_scale : default_hamming_scale(q);
    return threshold_spikes(sdha_preactivation(q, k, v), scale, cfg.threshold());
}

SpikeTensor sdha_quadratic(const SpikeTensor& q, const SpikeTensor& k, const SpikeTensor& v,
                           double score_scale, const NeuronConfig& cfg) {
    const double scale = score_scale > 0.0 ? score_scale : default_hamming_scale(q);
    const IntTensor preact = int_by_binary_matmul(sdha_score(q, k), v);
    return threshold_spikes(preact, scale, cfg.threshold());
}

SpikeTensor cross_sdha(const SpikeTensor& query, const SpikeTensor& memory_k,
                       const SpikeTensor& memory_v, double score_scale,
                       const NeuronConfig& cfg) {
    if (memory_k.shape().rank() != 2 || memory_k.shape().extent(0) == 0) {
        throw EmptyMemoryError("cross_sdha: memory must hold at least one step of tokens");
    }
    return sdha(query, memory_k, memory_v, score_scale, cfg);
}

// ---------------------------------------------------------------------------
// Module
// ---------------------------------------------------------------------------

std::string to_string(AttentionVariant v) {
    switch (v) {
    case AttentionVariant::Joint: return "joint";
    case AttentionVariant::Hierarchical: return "hierarchical";
    case AttentionVariant::Factorized: return "factorized";
    case AttentionVariant::NeuronLevel: return "neuron_level";
    case AttentionVariant::SpatialOnly: return "spatial_only";
    }
    return "?";
}

std::string to_string(ScoreKind s) {
    return s == ScoreKind::Hamming ? "hamming" : "dot";
}

AttentionVariant attention_variant_from_string(const std::string& name) {
    if (name == "joint") return AttentionVariant::Joint;
    if (name == "hierarchical") return AttentionVariant::Hierarchical;
    if (name == "factorized") return AttentionVariant::Factorized;
    if (name == "neuron_level") return AttentionVariant::NeuronLevel;
    if (name == "spatial_only") return AttentionVariant::SpatialOnly;
    throw ConfigError("unknown attention variant: " + name);
}

ScoreKind score_kind_from_string(const std::string& name) {
    if (name == "hamming") return ScoreKind::Hamming;
    if (name == "dot") return ScoreKind::Dot;
    throw ConfigError("unknown score kind: " + name);
}

std::size_t param_count(const AttentionSpec& spec) {
    spec.validate();
    const std::size_t dd = spec.d * spec.d;
    switch (spec.variant) {
    case AttentionVariant::Hierarchical: return 8 * dd;
    case AttentionVariant::Factorized: return 7 * dd;
    default: return 4 * dd;
    }
}

std::size_t AttentionWeights::allocated_elements() const {
    std::size_t n = 0;
    for (const auto& m : mats) n += m.numel();
    return n;
}

const RealTensor& AttentionWeights::mat(const std::string& name) const {
    for (std::size_t i = 0; i < mats.size(); ++i) {
        if (mat_names[i] == name) return mats[i];
    }
    throw VariantWeightMismatchError("no projection named " + name);
}

AttentionWeights AttentionWeights::init(const AttentionSpec& spec, Rng& rng) {
    spec.validate();
    AttentionWeights w;
    w.variant = spec.variant;
    w.d = spec.d;
    const double scale = 1.0 / std::sqrt(static_cast<double>(spec.d));
    auto gaussian_mat = [&](std::size_t rows, std::size_t cols) {
        RealTensor m(Shape{rows, cols});
        for (std::size_t i = 0; i < m.numel(); ++i) m[i] = scale * rng.gaussian();
        return m;
    };
    auto push = [&](const std::string& name, std::size_t rows, std::size_t cols) {
        w.mat_names.push_back(name);
        w.mats.push_back(gaussian_mat(rows, cols));
    };
    switch (spec.variant) {
    case AttentionVariant::Joint:
    case AttentionVariant::NeuronLevel:
    case AttentionVariant::SpatialOnly:
        push("wq", spec.d, spec.d);
        push("wk", spec.d, spec.d);
        push("wv", spec.d, spec.d);
        push("wo", spec.d, spec.d);
        break;
    case AttentionVariant::Hierarchical:
        for (const char* pass : {"spatial", "temporal"}) {
            push(std::string(pass) + ".wq", spec.d, spec.d);
            push(std::string(pass) + ".wk", spec.d, spec.d);
            push(std::string(pass) + ".wv", spec.d, spec.d);
            push(std::string(pass) + ".wo", spec.d, spec.d);
        }
        break;
    case AttentionVariant::Factorized:
        push("wq", spec.d, spec.d);
        push("wk_time", spec.d, spec.d);
        push("wv_time", spec.d, spec.d);
        push("wk_space", spec.d, spec.d);
        push("wv_space", spec.d, spec.d);
        push("wo", 2 * spec.d, spec.d);
        break;
    }
    return w;
}

void save_attention_weights(const AttentionWeights& weights, const std::string& directory,
                            const std::string& manifest_name) {
    Manifest manifest;
    for (std::size_t i = 0; i < weights.mats.size(); ++i) {
        std::string file = weights.mat_names[i];
        for (char& c : file) {
            if (c == '.') c = '_';
        }
        file += ".svt1";
        save_svt1(directory + "/" + file, weights.mats[i]);
        manifest[weights.mat_names[i]] = file;
    }
    write_manifest(directory + "/" + manifest_name, manifest);
}

AttentionWeights load_attention_weights(const std::string& manifest_path) {
    const Manifest manifest = read_manifest(manifest_path);
    const auto slash = manifest_path.find_last_of('/');
    const std::string dir = slash == std::string::npos ? "." : manifest_path.substr(0, slash);

    AttentionWeights w;
    for (const auto& [name, file] : manifest) {
        w.mat_names.push_back(name);
        w.mats.push_back(load_svt1_real(dir + "/" + file));
    }
    if (w.mats.empty()) throw IoError("empty weight manifest: " + manifest_path);
    w.d = w.mats.front().shape().extent(1);
    if (manifest.count("spatial.wq")) {
        w.variant = AttentionVariant::Hierarchical;
    } else if (manifest.count("wk_time")) {
        w.variant = AttentionVariant::Factorized;
    } else if (manifest.count("wq")) {
        w.variant = AttentionVariant::Joint;
    } else {
        throw IoError("manifest does not name a known projection layout");
    }
    return w;
}

namespace {

enum class Grouping { SpaceTime, Spatial, Temporal };

struct Dims {
    std::size_t b, t, n, d;
    std::size_t tokens() const { return b * t * n; }
};

// Row indices (into the [B*T*N x D] view) of each attention group.
std::vector<std::vector<std::size_t>> group_rows(const Dims& dims, Grouping g) {
    std::vector<std::vector<std::size_t>> groups;
    switch (g) {
    case Grouping::SpaceTime:
        for (std::size_t b = 0; b < dims.b; ++b) {
            std::vector<std::size_t> rows(dims.t * dims.n);
            for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = b * dims.t * dims.n + i;
            groups.push_back(std::move(rows));
        }
        break;
    case Grouping::Spatial:
        for (std::size_t b = 0; b < dims.b; ++b) {
            for (std::size_t t = 0; t < dims.t; ++t) {
                std::vector<std::size_t> rows(dims.n);
                for (std::size_t n = 0; n < dims.n; ++n) rows[n] = (b * dims.t + t) * dims.n + n;
                groups.push_back(std::move(rows));
            }
        }
        break;
    case Grouping::Temporal:
        for (std::size_t b = 0; b < dims.b; ++b) {
            for (std::size_t n = 0; n < dims.n; ++n) {
                std::vector<std::size_t> rows(dims.t);
                for (std::size_t t = 0; t < dims.t; ++t) rows[t] = (b * dims.t + t) * dims.n + n;
                groups.push_back(std::move(rows));
            }
        }
        break;
    }
    return groups;
}

// LIF over the T axis of a [B,T,N,D] tensor; independent state per (b,n,d).
// reset_each_step zeroes the state before every step (the spatial-only mode).
SpikeTensor lif_over_time(const RealTensor& x, const Dims& dims, const NeuronConfig& cfg,
                          bool reset_each_step) {
    SpikeTensor out(x.shape());
    const std::size_t frame = dims.n * dims.d;
    const double threshold = cfg.threshold();
    for (std::size_t b = 0; b < dims.b; ++b) {
        std::vector<double> membrane(frame, 0.0);
        for (std::size_t t = 0; t < dims.t; ++t) {
            const std::size_t base = (b * dims.t + t) * frame;
            for (std::size_t i = 0; i < frame; ++i) {
                const double prev = reset_each_step ? 0.0 : membrane[i];
                const double h = cfg.beta * prev + x[base + i];
                const bool fired = h > threshold;
                if (fired) out.set_flat(base + i, true);
                membrane[i] = fired ? h - threshold : h;
            }
        }
    }
    return out;
}

// Number of [outer-row] tokens of a 2-D-viewed spike tensor with >= 1 bit.
std::size_t active_tokens(const SpikeTensor& x) {
    const std::size_t rows = x.shape().outer();
    std::size_t active = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        bool any = false;
        for (std::size_t w = 0; w < x.words_per_row(); ++w) any |= (x.row(r)[w] != 0);
        active += any;
    }
    return active;
}

// Linear projection + per-channel affine + LIF spiking, counted as one
// fused layer: dense = tokens*(in*out + out).
SpikeTensor project_spike(const SpikeTensor& x, const Dims& dims, const RealTensor& w,
                          const NeuronConfig& cfg, bool reset_each_step, OpCounter* counter,
                          const std::string& scope) {
    const std::size_t in = w.shape().extent(0), out_c = w.shape().extent(1);
    const SpikeTensor x2d = x.reshape(Shape{dims.tokens(), in});
    // Affine normalization is identity (gamma=1, beta=0) here; its adds are
    // still part of the layer's modeled cost (the +out term below).
    const RealTensor pre = binary_by_real_matmul(x2d, w);
    if (counter) {
        const double tokens = static_cast<double>(dims.tokens());
        LayerCost row;
        row.scope = scope;
        row.dense_ops = tokens * (static_cast<double>(in) * out_c + out_c);
        row.measured_ops = static_cast<double>(x2d.count_ones()) * out_c +
                           static_cast<double>(active_tokens(x2d)) * out_c;
        row.rho = x2d.density();
        counter->add(row);
    }
    const RealTensor shaped = pre.reshape(Shape{dims.b, dims.t, dims.n, out_c});
    Dims out_dims{dims.b, dims.t, dims.n, out_c};
    return lif_over_time(shaped, out_dims, cfg, reset_each_step);
}

// Output linear + affine on attention spikes; stays real (no trailing neuron).
RealTensor project_real_out(const SpikeTensor& spikes, const Dims& dims, std::size_t in,
                            std::size_t out_c, const RealTensor& w, OpCounter* counter,
                            const std::string& scope) {
    const SpikeTensor x2d = spikes.reshape(Shape{dims.tokens(), in});
    const RealTensor out = binary_by_real_matmul(x2d, w);
    if (counter) {
        const double tokens = static_cast<double>(dims.tokens());
        LayerCost row;
        row.scope = scope;
        row.dense_ops = tokens * (static_cast<double>(in) * out_c + out_c);
        row.measured_ops = static_cast<double>(x2d.count_ones()) * out_c +
                           static_cast<double>(active_tokens(x2d)) * out_c;
        row.rho = x2d.density();
        counter->add(row);
    }
    return out.reshape(Shape{dims.b, dims.t, dims.n, out_c});
}

// Per-head attention core over the given grouping. Returns the real
// pre-activation scaled by score_scale, laid out as [B,T,N,D].
RealTensor attention_core(const SpikeTensor& q, const SpikeTensor& k, const SpikeTensor& v,
                          const Dims& dims, Grouping grouping, ScoreKind score,
                          double score_scale, std::size_t heads, OpCounter* counter,
                          const std::string& scope) {
    const std::size_t d_h = dims.d / heads;
    const SpikeTensor q2d = q.reshape(Shape{dims.tokens(), dims.d});
    const SpikeTensor k2d = k.reshape(Shape{dims.tokens(), dims.d});
    const SpikeTensor v2d = v.reshape(Shape{dims.tokens(), dims.d});
    RealTensor out(Shape{dims.b, dims.t, dims.n, dims.d});

    double qw_pm1_measured = 0.0;
    const auto groups = group_rows(dims, grouping);
    for (const auto& rows : groups) {
        const SpikeTensor qg = q2d.gather_rows(rows);
        const SpikeTensor kg = k2d.gather_rows(rows);
        const SpikeTensor vg = v2d.gather_rows(rows);
        for (std::size_t h = 0; h < heads; ++h) {
            const SpikeTensor qh = qg.select_channels(h * d_h, (h + 1) * d_h);
            const SpikeTensor kh = kg.select_channels(h * d_h, (h + 1) * d_h);
            const SpikeTensor vh = vg.select_channels(h * d_h, (h + 1) * d_h);
            const IntTensor kv = score == ScoreKind::Hamming
                                     ? signed_by_binary_matmul(kh.transpose_axes({1, 0}), vh)
                                     : binary_matmul(kh.transpose_axes({1, 0}), vh);
            const IntTensor preact = score == ScoreKind::Hamming ? pm1_by_int_matmul(qh, kv)
                                                                 : binary_by_int_matmul(qh, kv);
            if (counter && score == ScoreKind::Hamming) {
                // The +-1 side cannot gate the work, so the count is one
                // accumulate per position; a head whose integer operand is
                // identically zero (nothing spiked upstream) does nothing.
                bool any = false;
                for (std::size_t i = 0; i < kv.numel() && !any; ++i) any = kv[i] != 0;
                if (any) qw_pm1_measured += static_cast<double>(rows.size()) * kv.numel();
            }
            for (std::size_t l = 0; l < rows.size(); ++l) {
                const std::size_t base = rows[l] * dims.d + h * d_h;
                for (std::size_t e = 0; e < d_h; ++e) {
                    out[base + e] = score_scale * static_cast<double>(preact[l * d_h + e]);
                }
            }
        }
    }

    if (counter) {
        const double dense = static_cast<double>(dims.tokens()) * d_h * d_h * heads;
        LayerCost kv;
        kv.scope = scope + ".att_kv";
        kv.dense_ops = dense;
        kv.measured_ops = static_cast<double>(v2d.count_ones()) * d_h;
        kv.rho = v2d.density();
        counter->add(kv);
        LayerCost qw;
        qw.scope = scope + ".att_qw";
        qw.dense_ops = dense;
        qw.measured_ops = score == ScoreKind::Hamming
                              ? qw_pm1_measured
                              : static_cast<double>(q2d.count_ones()) * d_h;
        qw.rho = q2d.density();
        counter->add(qw);
    }
    return out;
}

// One full attention pass: QKV projections, core, output spiking, output
// projection. The shared machinery behind joint / hierarchical passes /
// per-step layouts.
RealTensor attention_pass(const SpikeTensor& x, const Dims& dims, Grouping grouping,
                          const AttentionSpec& spec, const RealTensor& wq, const RealTensor& wk,
                          const RealTensor& wv, const RealTensor& wo, bool reset_each_step,
                          OpCounter* counter, const std::string& scope) {
    const SpikeTensor qs = project_spike(x, dims, wq, spec.neuron, reset_each_step, counter, scope + ".q");
    const SpikeTensor ks = project_spike(x, dims, wk, spec.neuron, reset_each_step, counter, scope + ".k");
    const SpikeTensor vs = project_spike(x, dims, wv, spec.neuron, reset_each_step, counter, scope + ".v");
    const RealTensor pre = attention_core(qs, ks, vs, dims, grouping, spec.score,
                                          spec.effective_score_scale(), spec.heads, counter, scope);
    const SpikeTensor att = lif_over_time(pre, dims, spec.neuron, reset_each_step);
    return project_real_out(att, dims, dims.d, dims.d, wo, counter, scope + ".out");
}

} // namespace

RealTensor space_time_attention(const SpikeTensor& x, const AttentionSpec& spec,
                                const AttentionWeights& weights, OpCounter* counter) {
    spec.validate();
    if (x.shape().rank() != 4) {
        throw ShapeMismatchError("space_time_attention: input must be [B,T,N,D], got " +
                                 x.shape().to_string());
    }
    const Dims dims{x.shape().extent(0), x.shape().extent(1), x.shape().extent(2),
                    x.shape().extent(3)};
    if (dims.t != spec.t || dims.n != spec.n || dims.d != spec.d) {
        throw ShapeMismatchError("space_time_attention: input " + x.shape().to_string() +
                                 " does not match spec [T=" + std::to_string(spec.t) +
                                 ",N=" + std::to_string(spec.n) + ",D=" + std::to_string(spec.d) + "]");
    }
    if (weights.variant != spec.variant || weights.d != spec.d) {
        throw VariantWeightMismatchError("weights built for " + to_string(weights.variant) +
                                         " D=" + std::to_string(weights.d));
    }

    switch (spec.variant) {
    case AttentionVariant::Joint:
        return attention_pass(x, dims, Grouping::SpaceTime, spec, weights.mat("wq"),
                              weights.mat("wk"), weights.mat("wv"), weights.mat("wo"),
                              /*reset_each_step=*/false, counter, "joint");
    case AttentionVariant::NeuronLevel:
        return attention_pass(x, dims, Grouping::Spatial, spec, weights.mat("wq"),
                              weights.mat("wk"), weights.mat("wv"), weights.mat("wo"),
                              /*reset_each_step=*/false, counter, "neuron_level");
    case AttentionVariant::SpatialOnly:
        return attention_pass(x, dims, Grouping::Spatial, spec, weights.mat("wq"),
                              weights.mat("wk"), weights.mat("wv"), weights.mat("wo"),
                              /*reset_each_step=*/true, counter, "spatial_only");
    case AttentionVariant::Hierarchical: {
        const RealTensor spatial =
            attention_pass(x, dims, Grouping::Spatial, spec, weights.mat("spatial.wq"),
                           weights.mat("spatial.wk"), weights.mat("spatial.wv"),
                           weights.mat("spatial.wo"), false, counter, "spatial");
        // A temporal pass over a single step would attend each token to
        // itself only; skipped so T=1 coincides with the other layouts.
        if (dims.t == 1) return spatial;
        const SpikeTensor respike = lif_over_time(spatial, dims, spec.neuron, false);
        return attention_pass(respike, dims, Grouping::Temporal, spec, weights.mat("temporal.wq"),
                              weights.mat("temporal.wk"), weights.mat("temporal.wv"),
                              weights.mat("temporal.wo"), false, counter, "temporal");
    }
    case AttentionVariant::Factorized: {
        const SpikeTensor qs = project_spike(x, dims, weights.mat("wq"), spec.neuron, false,
                                             counter, "fact.q");
        const SpikeTensor kt = project_spike(x, dims, weights.mat("wk_time"), spec.neuron, false,
                                             counter, "fact.k_time");
        const SpikeTensor vt = project_spike(x, dims, weights.mat("wv_time"), spec.neuron, false,
                                             counter, "fact.v_time");
        const SpikeTensor ks = project_spike(x, dims, weights.mat("wk_space"), spec.neuron, false,
                                             counter, "fact.k_space");
        const SpikeTensor vs = project_spike(x, dims, weights.mat("wv_space"), spec.neuron, false,
                                             counter, "fact.v_space");
        const double scale = spec.effective_score_scale();
        const RealTensor pre_t = attention_core(qs, kt, vt, dims, Grouping::Temporal, spec.score,
                                                scale, spec.heads, counter, "fact.time");
        const RealTensor pre_s = attention_core(qs, ks, vs, dims, Grouping::Spatial, spec.score,
                                                scale, spec.heads, counter, "fact.space");
        const SpikeTensor att_t = lif_over_time(pre_t, dims, spec.neuron, false);
        const SpikeTensor att_s = lif_over_time(pre_s, dims, spec.neuron, false);
        const SpikeTensor cat = SpikeTensor::concat_channels(att_t, att_s);
        Dims cat_dims{dims.b, dims.t, dims.n, 2 * dims.d};
        return project_real_out(cat, cat_dims, 2 * dims.d, dims.d, weights.mat("wo"), counter,
                                "fact.out");
    }
    }
    throw VariantWeightMismatchError("unreachable variant");
}

} // namespace svt
