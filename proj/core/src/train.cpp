#include "svt/train.hpp"

#include "svt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace svt {

// ---------------------------------------------------------------------------
// Task
// ---------------------------------------------------------------------------

ToyTask::Sample ToyTask::make_sample(Rng& rng) const {
    Sample sample;
    sample.label = rng.bernoulli(0.5) ? 1 : 0;
    const int dir = sample.label == 0 ? 1 : -1;
    const int start = static_cast<int>(rng.next_below(width));
    const double amp = rng.uniform(1.2, 2.0);
    const double bar_width = 2.0 + rng.uniform(0.0, 1.0);
    std::vector<double> profile(height);
    for (auto& p : profile) p = rng.uniform(0.6, 1.0);

    sample.frames = RealTensor(Shape{t, height, width, 1});
    const int w = static_cast<int>(width);
    for (std::size_t step = 0; step < t; ++step) {
        const int pos = ((start + dir * static_cast<int>(step)) % w + w) % w;
        for (std::size_t y = 0; y < height; ++y) {
            for (std::size_t x = 0; x < width; ++x) {
                int dist = std::abs(static_cast<int>(x) - pos);
                dist = std::min(dist, w - dist);  // circular
                const double bump = std::max(0.0, 1.0 - static_cast<double>(dist) / bar_width);
                const double noise = 0.05 * rng.gaussian();
                sample.frames[((step * height + y) * width + x)] = profile[y] * amp * bump + noise;
            }
        }
    }
    return sample;
}

std::vector<ToyTask::Sample> ToyTask::make_split(std::size_t count, std::uint64_t stream_tag) const {
    Rng rng = Rng(seed).child(stream_tag);
    std::vector<Sample> samples;
    samples.reserve(count);
    for (std::size_t i = 0; i < count; ++i) samples.push_back(make_sample(rng));
    return samples;
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

namespace {

struct ToyWeights {
    AttentionSpec spec;  // t/n/d filled from the model dims
    std::size_t c = 6;   // stem channels; token width d = 2c
    std::size_t grid = 4;

    // Named tensors in a flat list so the optimizer can walk them uniformly.
    std::vector<std::string> names;
    std::vector<RealTensor> values;

    std::size_t index(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (names[i] == name) return i;
        }
        throw GraphError("toy model: no parameter " + name);
    }

    std::size_t total_params() const {
        std::size_t n = 0;
        for (const auto& v : values) n += v.numel();
        return n;
    }
};

ToyWeights init_toy_weights(const AttentionSpec& attention, const ToyTask& task,
                            std::size_t channels, std::uint64_t seed) {
    ToyWeights w;
    w.c = channels;
    w.grid = task.width / 4;
    const std::size_t c = channels, d = 2 * channels;
    w.spec = attention;
    w.spec.t = task.t;
    w.spec.n = w.grid * w.grid;
    w.spec.d = d;
    if (w.spec.heads == 0 || d % w.spec.heads != 0 ||
        (w.spec.variant == AttentionVariant::Factorized && d % (2 * w.spec.heads) != 0)) {
        w.spec.heads = 2;
    }
    w.spec.validate();

    Rng rng(seed);
    auto push = [&](const std::string& name, Shape shape, double scale) {
        RealTensor tensor(shape);
        for (std::size_t i = 0; i < tensor.numel(); ++i) tensor[i] = scale * rng.gaussian();
        w.names.push_back(name);
        w.values.push_back(std::move(tensor));
    };
    auto push_affine = [&](const std::string& name, std::size_t ch) {
        w.names.push_back(name + ".gamma");
        w.values.push_back(RealTensor(Shape{ch}, 1.0));
        w.names.push_back(name + ".beta");
        w.values.push_back(RealTensor(Shape{ch}, 0.0));
    };

    // Spike activations are sparse, so unit-variance pre-activations need
    // init scales of roughly 1/sqrt(fan_in * expected_rate) rather than the
    // dense 1/sqrt(fan_in).
    const double gain = 3.0;
    push("stem.w", Shape{c, 1, 3, 3}, gain / 3.0);
    push_affine("stem", c);
    push("pw1.w", Shape{c, c, 1, 1}, gain / std::sqrt(static_cast<double>(c)));
    push_affine("pw1", c);
    push("dw.w", Shape{c, 7, 7}, gain / 7.0);
    push("pw2.w", Shape{c, c, 1, 1}, gain / std::sqrt(static_cast<double>(c)));
    push_affine("pw2", c);
    push("ch1.w", Shape{c, c, 3, 3}, gain / (3.0 * std::sqrt(static_cast<double>(c))));
    push_affine("ch1", c);
    push("ch2.w", Shape{c, c, 3, 3}, gain / (3.0 * std::sqrt(static_cast<double>(c))));
    push_affine("ch2", c);
    push("ds.w", Shape{d, c, 3, 3}, gain / (3.0 * std::sqrt(static_cast<double>(c))));
    push_affine("ds", d);

    const double ws = 2.0 * gain / std::sqrt(static_cast<double>(d));
    switch (w.spec.variant) {
    case AttentionVariant::Hierarchical:
        for (const char* pass : {"spatial", "temporal"}) {
            push(std::string(pass) + ".wq", Shape{d, d}, ws);
            push(std::string(pass) + ".wk", Shape{d, d}, ws);
            push(std::string(pass) + ".wv", Shape{d, d}, ws);
            push(std::string(pass) + ".wo", Shape{d, d}, ws);
        }
        break;
    case AttentionVariant::Factorized:
        push("wq", Shape{d, d}, ws);
        push("wk_time", Shape{d, d}, ws);
        push("wv_time", Shape{d, d}, ws);
        push("wk_space", Shape{d, d}, ws);
        push("wv_space", Shape{d, d}, ws);
        push("wo", Shape{2 * d, d}, ws);
        break;
    default:
        push("wq", Shape{d, d}, ws);
        push("wk", Shape{d, d}, ws);
        push("wv", Shape{d, d}, ws);
        push("wo", Shape{d, d}, ws);
        break;
    }
    push("mlp1", Shape{d, 4 * d}, 2.0 * gain / std::sqrt(static_cast<double>(d)));
    push("mlp2", Shape{4 * d, d}, gain / std::sqrt(static_cast<double>(4 * d)));
    push("head.w", Shape{d, 2}, 0.1 / std::sqrt(static_cast<double>(d)));
    w.names.push_back("head.b");
    w.values.push_back(RealTensor(Shape{1, 2}, 0.0));
    return w;
}

// Border-aware event count of a conv on a 0/1-valued frame, matching the
// spike_conv2d rule: one accumulate per in-bounds tap per output channel.
double conv_event_ops(const RealTensor& x, std::size_t k, std::size_t stride, std::size_t out_c,
                      bool depthwise) {
    const std::size_t h = x.shape().extent(0), w = x.shape().extent(1), in_c = x.shape().extent(2);
    const std::size_t pad = k / 2;
    const std::size_t oh = (h + 2 * pad - k) / stride + 1, ow = (w + 2 * pad - k) / stride + 1;
    double ops = 0.0;
    for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
            for (std::size_t ky = 0; ky < k; ++ky) {
                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                                          static_cast<std::ptrdiff_t>(pad);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                for (std::size_t kx = 0; kx < k; ++kx) {
                    const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                              static_cast<std::ptrdiff_t>(pad);
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                    const std::size_t base = (static_cast<std::size_t>(iy) * w +
                                              static_cast<std::size_t>(ix)) * in_c;
                    for (std::size_t ci = 0; ci < in_c; ++ci) {
                        if (x[base + ci] != 0.0) ops += depthwise ? 1.0 : static_cast<double>(out_c);
                    }
                }
            }
        }
    }
    return ops;
}

double nnz(const RealTensor& x) {
    double n = 0.0;
    for (std::size_t i = 0; i < x.numel(); ++i) n += (x[i] != 0.0) ? 1.0 : 0.0;
    return n;
}

struct ToyModel {
    const ToyWeights* weights = nullptr;
    Tape* tape = nullptr;
    SpikeMode mode = SpikeMode::HardSurrogate;
    OpCounter* counter = nullptr;
    std::vector<Var> params;  // aligned with weights->values

    Var p(const std::string& name) const { return params[weights->index(name)]; }

    void count_linear(const std::string& scope, const std::vector<Var>& spike_inputs,
                      std::size_t in, std::size_t out) const {
        if (!counter) return;
        double ones = 0.0, tokens = 0.0;
        for (Var v : spike_inputs) {
            ones += nnz(tape->value(v));
            tokens += static_cast<double>(tape->value(v).numel()) / static_cast<double>(in);
        }
        LayerCost row;
        row.scope = scope;
        row.dense_ops = tokens * static_cast<double>(in) * out;
        row.measured_ops = ones * static_cast<double>(out);
        row.rho = ones / (tokens * static_cast<double>(in));
        counter->add(row);
    }

    void count_conv(const std::string& scope, const std::vector<Var>& spike_inputs, std::size_t k,
                    std::size_t stride, std::size_t out_c, bool depthwise) const {
        if (!counter) return;
        LayerCost row;
        row.scope = scope;
        double in_elems = 0.0, ones = 0.0;
        for (Var v : spike_inputs) {
            const RealTensor& x = tape->value(v);
            const std::size_t h = x.shape().extent(0), w = x.shape().extent(1);
            const std::size_t in_c = x.shape().extent(2), pad = k / 2;
            const std::size_t oh = (h + 2 * pad - k) / stride + 1;
            const std::size_t ow = (w + 2 * pad - k) / stride + 1;
            row.dense_ops += static_cast<double>(oh * ow) * k * k * (depthwise ? 1.0 : in_c) * out_c;
            row.measured_ops += conv_event_ops(x, k, stride, out_c, depthwise);
            in_elems += static_cast<double>(x.numel());
            ones += nnz(x);
        }
        row.rho = in_elems > 0.0 ? ones / in_elems : 0.0;
        counter->add(row);
    }

    // Conv + affine on each step of a spike sequence.
    std::vector<Var> conv_stage(const std::vector<Var>& spikes, const std::string& wname,
                                std::size_t stride, bool depthwise, bool affine,
                                const std::string& scope) const {
        Tape& t = *tape;
        std::vector<Var> out;
        out.reserve(spikes.size());
        const RealTensor& wt = weights->values[weights->index(wname + ".w")];
        const std::size_t k = depthwise ? wt.shape().extent(1) : wt.shape().extent(2);
        const std::size_t out_c = wt.shape().extent(0);
        for (Var s : spikes) {
            Var y = depthwise ? t.dwconv2d(s, p(wname + ".w"), stride)
                              : t.conv2d(s, p(wname + ".w"), stride);
            if (affine) y = t.affine_channels(y, p(wname + ".gamma"), p(wname + ".beta"));
            out.push_back(y);
        }
        count_conv(scope, spikes, k, stride, out_c, depthwise);
        return out;
    }

    std::vector<Var> lif(const std::vector<Var>& xs) const {
        const bool reset = weights->spec.variant == AttentionVariant::SpatialOnly;
        return tape_lif_chain(*tape, xs, weights->spec.neuron, mode, reset);
    }

    static std::vector<Var> residual(Tape& t, const std::vector<Var>& a, const std::vector<Var>& b) {
        std::vector<Var> out;
        out.reserve(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) out.push_back(t.add(a[i], b[i]));
        return out;
    }

    Var pm1(Var x) const { return tape->add_scalar(tape->scale(x, 2.0), -1.0); }

    void count_attention_core(const std::string& scope, const std::vector<Var>& qs,
                              const std::vector<Var>& vs, double qw_pm1_measured) const {
        if (!counter) return;
        Tape& t = *tape;
        const AttentionSpec& spec = weights->spec;
        const std::size_t d_h = spec.d / spec.heads;
        const double tokens = static_cast<double>(qs.size()) * spec.n;
        const double dense = tokens * d_h * d_h * spec.heads;
        double v_ones = 0.0, q_ones = 0.0;
        for (std::size_t s = 0; s < qs.size(); ++s) {
            v_ones += nnz(t.value(vs[s]));
            q_ones += nnz(t.value(qs[s]));
        }
        LayerCost kv_row;
        kv_row.scope = scope + ".att_kv";
        kv_row.dense_ops = dense;
        kv_row.measured_ops = v_ones * d_h;
        kv_row.rho = v_ones / (tokens * spec.d);
        counter->add(kv_row);
        LayerCost qw_row;
        qw_row.scope = scope + ".att_qw";
        qw_row.dense_ops = dense;
        qw_row.measured_ops = spec.score == ScoreKind::Hamming ? qw_pm1_measured : q_ones * d_h;
        qw_row.rho = q_ones / (tokens * spec.d);
        counter->add(qw_row);
    }

    // Per-head linear-order attention over a fixed token grouping.
    // qs/ks/vs are per-step [N x D] spike token matrices. qw_ops_out, when
    // set, accumulates the measured +-1-route accumulate count (rows times
    // nonzero K^T V entries).
    std::vector<Var> attention_preact(const std::vector<Var>& qs, const std::vector<Var>& ks,
                                      const std::vector<Var>& vs, bool per_step,
                                      const std::string& scope, bool count = true,
                                      double* qw_ops_out = nullptr) const {
        Tape& t = *tape;
        const AttentionSpec& spec = weights->spec;
        const std::size_t heads = spec.heads, d_h = spec.d / spec.heads;
        const std::size_t steps = qs.size();
        const bool hamming = spec.score == ScoreKind::Hamming;
        const std::size_t rows_per_step = t.value(qs[0]).shape().extent(0);

        double qw_ops = 0.0;
        auto note_qw = [&](Var kv, std::size_t rows) {
            if (!counter && !qw_ops_out) return;
            const RealTensor& m = t.value(kv);
            bool any = false;
            for (std::size_t i = 0; i < m.numel() && !any; ++i) any = m[i] != 0.0;
            if (any) qw_ops += static_cast<double>(rows) * m.numel();
        };

        std::vector<std::vector<Var>> head_out(steps);  // per step, per head
        for (std::size_t h = 0; h < heads; ++h) {
            std::vector<Var> qh(steps), kh(steps), vh(steps);
            for (std::size_t s = 0; s < steps; ++s) {
                qh[s] = t.slice_cols(qs[s], h * d_h, (h + 1) * d_h);
                kh[s] = t.slice_cols(ks[s], h * d_h, (h + 1) * d_h);
                vh[s] = t.slice_cols(vs[s], h * d_h, (h + 1) * d_h);
            }
            if (per_step) {
                for (std::size_t s = 0; s < steps; ++s) {
                    const Var kv = t.matmul(t.transpose2d(hamming ? pm1(kh[s]) : kh[s]), vh[s]);
                    note_qw(kv, rows_per_step);
                    head_out[s].push_back(t.matmul(hamming ? pm1(qh[s]) : qh[s], kv));
                }
            } else {
                // Joint space-time tokens: K^T V decomposes over steps.
                Var kv;
                for (std::size_t s = 0; s < steps; ++s) {
                    const Var part = t.matmul(t.transpose2d(hamming ? pm1(kh[s]) : kh[s]), vh[s]);
                    kv = kv.valid() ? t.add(kv, part) : part;
                }
                note_qw(kv, rows_per_step * steps);
                for (std::size_t s = 0; s < steps; ++s) {
                    head_out[s].push_back(t.matmul(hamming ? pm1(qh[s]) : qh[s], kv));
                }
            }
        }
        std::vector<Var> preact(steps);
        for (std::size_t s = 0; s < steps; ++s) {
            Var acc = head_out[s][0];
            for (std::size_t h = 1; h < heads; ++h) acc = t.concat_cols(acc, head_out[s][h]);
            preact[s] = t.scale(acc, spec.effective_score_scale());
        }
        if (qw_ops_out) *qw_ops_out += qw_ops;
        if (count) count_attention_core(scope, qs, vs, qw_ops);
        return preact;
    }

    // Temporal-axis attention: regroup tokens so each spatial site attends
    // over its own time sequence.
    std::vector<Var> attention_preact_temporal(const std::vector<Var>& qs,
                                               const std::vector<Var>& ks,
                                               const std::vector<Var>& vs,
                                               const std::string& scope) const {
        Tape& t = *tape;
        const AttentionSpec& spec = weights->spec;
        const std::size_t steps = qs.size(), n = spec.n;
        // Gather per-site sequences [T x D], run the joint core per site,
        // then scatter rows back to per-step [N x D] matrices.
        std::vector<std::vector<Var>> site_rows(steps, std::vector<Var>(n));
        double qw_ops = 0.0;
        for (std::size_t site = 0; site < n; ++site) {
            std::vector<Var> q_seq(steps), k_seq(steps), v_seq(steps);
            for (std::size_t s = 0; s < steps; ++s) {
                q_seq[s] = t.slice_rows(qs[s], site, site + 1);
                k_seq[s] = t.slice_rows(ks[s], site, site + 1);
                v_seq[s] = t.slice_rows(vs[s], site, site + 1);
            }
            const auto pre = attention_preact(q_seq, k_seq, v_seq, /*per_step=*/false, scope,
                                              /*count=*/false, &qw_ops);
            for (std::size_t s = 0; s < steps; ++s) site_rows[s][site] = pre[s];
        }
        count_attention_core(scope, qs, vs, qw_ops);
        std::vector<Var> out(steps);
        for (std::size_t s = 0; s < steps; ++s) out[s] = t.concat_rows(site_rows[s]);
        return out;
    }

    std::vector<Var> project_tokens(const std::vector<Var>& spikes, const std::string& wname,
                                    const std::string& scope) const {
        Tape& t = *tape;
        std::vector<Var> out;
        out.reserve(spikes.size());
        for (Var s : spikes) out.push_back(t.matmul(s, p(wname)));
        const RealTensor& w = weights->values[weights->index(wname)];
        count_linear(scope, spikes, w.shape().extent(0), w.shape().extent(1));
        return out;
    }

    // One attention pass (projections + core + output) on per-step token
    // spikes; returns per-step real outputs.
    std::vector<Var> attention_pass(const std::vector<Var>& x_spikes, const std::string& prefix,
                                    const std::string& wq, const std::string& wk,
                                    const std::string& wv, const std::string& wo,
                                    bool per_step, bool temporal) const {
        const auto q = lif(project_tokens(x_spikes, wq, prefix + ".q"));
        const auto k = lif(project_tokens(x_spikes, wk, prefix + ".k"));
        const auto v = lif(project_tokens(x_spikes, wv, prefix + ".v"));
        const auto pre = temporal ? attention_preact_temporal(q, k, v, prefix)
                                  : attention_preact(q, k, v, per_step, prefix);
        const auto att = lif(pre);
        return project_tokens(att, wo, prefix + ".out");
    }

    std::vector<Var> attention_module(const std::vector<Var>& x_spikes) const {
        const AttentionSpec& spec = weights->spec;
        switch (spec.variant) {
        case AttentionVariant::Joint:
            return attention_pass(x_spikes, "attn", "wq", "wk", "wv", "wo", false, false);
        case AttentionVariant::NeuronLevel:
        case AttentionVariant::SpatialOnly:
            return attention_pass(x_spikes, "attn", "wq", "wk", "wv", "wo", true, false);
        case AttentionVariant::Hierarchical: {
            const auto spatial = attention_pass(x_spikes, "attn.spatial", "spatial.wq",
                                                "spatial.wk", "spatial.wv", "spatial.wo", true,
                                                false);
            if (spatial.size() == 1) return spatial;
            const auto respike = lif(spatial);
            return attention_pass(respike, "attn.temporal", "temporal.wq", "temporal.wk",
                                  "temporal.wv", "temporal.wo", false, true);
        }
        case AttentionVariant::Factorized: {
            Tape& t = *tape;
            const auto q = lif(project_tokens(x_spikes, "wq", "attn.q"));
            const auto kt = lif(project_tokens(x_spikes, "wk_time", "attn.k_time"));
            const auto vt = lif(project_tokens(x_spikes, "wv_time", "attn.v_time"));
            const auto ks = lif(project_tokens(x_spikes, "wk_space", "attn.k_space"));
            const auto vs = lif(project_tokens(x_spikes, "wv_space", "attn.v_space"));
            const auto att_t = lif(attention_preact_temporal(q, kt, vt, "attn.time"));
            const auto att_s = lif(attention_preact(q, ks, vs, true, "attn.space"));
            std::vector<Var> cat(att_t.size());
            for (std::size_t s = 0; s < att_t.size(); ++s) {
                cat[s] = t.concat_cols(att_t[s], att_s[s]);
            }
            return project_tokens(cat, "wo", "attn.out");
        }
        }
        throw GraphError("unknown variant");
    }

    // Full forward for one sequence; returns the [1 x 2] logits var.
    Var forward(const RealTensor& frames) {
        Tape& t = *tape;
        const ToyWeights& w = *weights;
        const std::size_t steps = w.spec.t;
        const std::size_t h = frames.shape().extent(1), wd = frames.shape().extent(2);

        params.clear();
        params.reserve(w.values.size());
        for (std::size_t i = 0; i < w.values.size(); ++i) {
            params.push_back(t.parameter(w.values[i], w.names[i]));
        }

        std::vector<Var> frame_vars(steps);
        for (std::size_t s = 0; s < steps; ++s) {
            RealTensor frame(Shape{h, wd, 1});
            for (std::size_t i = 0; i < frame.numel(); ++i) {
                frame[i] = frames[s * frame.numel() + i];
            }
            frame_vars[s] = t.input(std::move(frame));
        }

        // Input temporal spiking, then stem.
        const auto s0 = lif(frame_vars);
        const auto stem = conv_stage(s0, "stem", 2, false, true, "stem");

        // CNN block: U' = U + pw(dw(SN(pw(SN(U))))); U'' = U' + ch(SN(ch(SN(U')))).
        const auto s1 = lif(stem);
        const auto p1 = conv_stage(s1, "pw1", 1, false, true, "cnn.pw1");
        const auto s2 = lif(p1);
        const auto dw = conv_stage(s2, "dw", 1, true, false, "cnn.dw");
        std::vector<Var> p2(steps);
        {
            // Pointwise half of the separable pair runs on the depthwise
            // output (real); gradients flow through both. Its cost is gated
            // by the pair's spike input, like the dw half.
            double pw_measured = 0.0, pw_dense = 0.0;
            for (std::size_t s = 0; s < steps; ++s) {
                Var y = t.conv2d(dw[s], p("pw2.w"), 1);
                p2[s] = t.affine_channels(y, p("pw2.gamma"), p("pw2.beta"));
                if (counter) {
                    const RealTensor& in = t.value(dw[s]);
                    const std::size_t out_c = t.value(y).shape().last();
                    pw_dense += static_cast<double>(in.numel()) * out_c;
                    pw_measured += nnz(in) * out_c;
                }
            }
            if (counter) {
                LayerCost row;
                row.scope = "cnn.pw2";
                row.dense_ops = pw_dense;
                row.measured_ops = pw_measured;
                double s2_ones = 0.0, s2_elems = 0.0;
                for (Var v : s2) {
                    s2_ones += nnz(t.value(v));
                    s2_elems += static_cast<double>(t.value(v).numel());
                }
                row.rho = s2_elems > 0.0 ? s2_ones / s2_elems : 0.0;
                counter->add(row);
            }
        }
        const auto u1 = residual(t, stem, p2);
        const auto s3 = lif(u1);
        const auto c1 = conv_stage(s3, "ch1", 1, false, true, "cnn.ch1");
        const auto s4 = lif(c1);
        const auto c2 = conv_stage(s4, "ch2", 1, false, true, "cnn.ch2");
        const auto u2 = residual(t, u1, c2);

        // Downsample to the token grid.
        const auto s5 = lif(u2);
        const auto ds = conv_stage(s5, "ds", 2, false, true, "ds");

        // Tokens [N x D] per step.
        std::vector<Var> tokens(steps);
        for (std::size_t s = 0; s < steps; ++s) {
            tokens[s] = t.reshape(ds[s], Shape{w.spec.n, w.spec.d});
        }

        // Transformer block.
        const auto x_spikes = lif(tokens);
        const auto attn = attention_module(x_spikes);
        const auto v1 = residual(t, tokens, attn);
        const auto m1 = lif(v1);
        const auto h1 = project_tokens(m1, "mlp1", "mlp1");
        const auto m2 = lif(h1);
        const auto h2 = project_tokens(m2, "mlp2", "mlp2");
        const auto v2 = residual(t, v1, h2);

        // Head: time-and-token mean of the final membrane, then linear.
        Var pooled;
        for (std::size_t s = 0; s < steps; ++s) {
            const Var m = t.mean_rows(v2[s]);
            pooled = pooled.valid() ? t.add(pooled, m) : m;
        }
        pooled = t.scale(pooled, 1.0 / static_cast<double>(steps));
        return t.add(t.matmul(pooled, p("head.w")), p("head.b"));
    }
};

} // namespace

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

void ToyTrainResult::write_csv(std::ostream& out) const {
    out << "epoch,train_loss,test_acc\n";
    char buf[128];
    for (std::size_t e = 0; e < train_loss.size(); ++e) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", e + 1, train_loss[e],
                      test_accuracy[e]);
        out << buf;
    }
}

namespace {

int predict(const ToyWeights& weights, const RealTensor& frames, OpCounter* counter = nullptr) {
    Tape tape;
    ToyModel model;
    model.weights = &weights;
    model.tape = &tape;
    model.mode = SpikeMode::HardSurrogate;
    model.counter = counter;
    const Var logits = model.forward(frames);
    const RealTensor& v = tape.value(logits);
    return v[1] > v[0] ? 1 : 0;
}

double evaluate(const ToyWeights& weights, const std::vector<ToyTask::Sample>& samples) {
    std::size_t correct = 0;
    for (const auto& sample : samples) {
        correct += predict(weights, sample.frames) == sample.label;
    }
    return static_cast<double>(correct) / static_cast<double>(samples.size());
}

} // namespace

ToyTrainResult train_toy(const AttentionSpec& attention, const ToyTask& task, std::size_t epochs,
                         std::uint64_t seed, const ToyTrainOptions& options) {
    ToyWeights weights = init_toy_weights(attention, task, options.channels, seed);
    const auto train_set = task.make_split(options.train_size, 0);
    const auto test_set = task.make_split(options.test_size, 1);

    std::vector<RealTensor> velocity;
    velocity.reserve(weights.values.size());
    for (const auto& v : weights.values) velocity.push_back(RealTensor(v.shape()));

    Rng shuffle_rng = Rng(seed).child(2);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    ToyTrainResult result;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        // Cosine-annealed learning rate; a fixed step keeps oscillating
        // once the spike rates settle.
        const double lr = options.lr * 0.5 *
                          (1.0 + std::cos(3.14159265358979323846 * static_cast<double>(epoch) /
                                          static_cast<double>(epochs)));
        // Fisher-Yates with the pinned stream keeps runs bit-reproducible.
        for (std::size_t i = order.size(); i-- > 1;) {
            std::swap(order[i], order[shuffle_rng.next_below(i + 1)]);
        }
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
            const std::size_t end = std::min(order.size(), start + options.batch_size);
            std::vector<RealTensor> grad_accum;
            grad_accum.reserve(weights.values.size());
            for (const auto& v : weights.values) grad_accum.push_back(RealTensor(v.shape()));

            double batch_loss = 0.0;
            for (std::size_t i = start; i < end; ++i) {
                const auto& sample = train_set[order[i]];
                Tape tape;
                ToyModel model;
                model.weights = &weights;
                model.tape = &tape;
                model.mode = SpikeMode::HardSurrogate;
                const Var logits = model.forward(sample.frames);
                const Var loss = tape.cross_entropy(logits, {sample.label});
                const double loss_value = tape.value(loss)[0];
                if (!std::isfinite(loss_value)) {
                    throw DivergenceError("train_toy: loss diverged at epoch " +
                                          std::to_string(epoch + 1));
                }
                batch_loss += loss_value;
                tape.backward(loss);
                const double inv = 1.0 / static_cast<double>(end - start);
                for (std::size_t pi = 0; pi < weights.values.size(); ++pi) {
                    const RealTensor& g = tape.grad(model.params[pi]);
                    for (std::size_t j = 0; j < g.numel(); ++j) grad_accum[pi][j] += inv * g[j];
                }
            }
            // Global-norm clipping keeps straight-through BPTT steps sane.
            double norm_sq = 0.0;
            for (const auto& g : grad_accum) {
                for (std::size_t j = 0; j < g.numel(); ++j) norm_sq += g[j] * g[j];
            }
            const double clip = 1.0;
            const double scale = norm_sq > clip * clip ? clip / std::sqrt(norm_sq) : 1.0;
            for (std::size_t pi = 0; pi < weights.values.size(); ++pi) {
                for (std::size_t j = 0; j < weights.values[pi].numel(); ++j) {
                    velocity[pi][j] = options.momentum * velocity[pi][j] -
                                      lr * scale * grad_accum[pi][j];
                    weights.values[pi][j] += velocity[pi][j];
                }
            }
            epoch_loss += batch_loss / static_cast<double>(end - start);
            ++batches;
        }
        result.train_loss.push_back(epoch_loss / static_cast<double>(std::max<std::size_t>(1, batches)));
        result.test_accuracy.push_back(evaluate(weights, test_set));
    }

    result.final_accuracy = epochs > 0 ? result.test_accuracy.back() : evaluate(weights, test_set);

    OpCounter counter;
    predict(weights, test_set.front().frames, &counter);
    result.cost = CostReport::from_counter(counter);
    return result;
}

} // namespace svt
