#include "svt/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace svt {

namespace {

enum class OpKind : std::uint8_t {
    Input,
    Parameter,
    Add,
    Sub,
    Mul,
    Scale,
    AddScalar,
    MatMul,
    Transpose2D,
    Reshape,
    ConcatRows,
    ConcatCols,
    SliceCols,
    SliceRows,
    AffineChannels,
    SumAll,
    MeanAll,
    MeanRows,
    Spike,
    Conv2D,
    DwConv2D,
    CrossEntropy,
};

} // namespace

struct Tape::Node {
    OpKind kind = OpKind::Input;
    std::vector<int> inputs;
    RealTensor value;
    double scalar = 0.0;
    std::size_t kernel = 0, stride = 1, pad = 0;
    std::size_t from = 0, to = 0;
    NeuronConfig neuron;
    SpikeMode spike_mode = SpikeMode::HardSurrogate;
    std::vector<int> labels;
    std::string name;
};

Tape::Tape() = default;
Tape::~Tape() = default;
Tape::Tape(Tape&&) noexcept = default;
Tape& Tape::operator=(Tape&&) noexcept = default;

std::size_t Tape::size() const { return nodes_.size(); }

Var Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    grads_ready_ = false;
    return Var{static_cast<int>(nodes_.size()) - 1};
}

const RealTensor& Tape::value(Var v) const {
    if (v.id < 0 || v.id >= static_cast<int>(nodes_.size())) throw GraphError("bad var id");
    return nodes_[static_cast<std::size_t>(v.id)].value;
}

Var Tape::input(RealTensor value) {
    Node n;
    n.kind = OpKind::Input;
    n.value = std::move(value);
    return push(std::move(n));
}

Var Tape::parameter(RealTensor value, std::string name) {
    Node n;
    n.kind = OpKind::Parameter;
    n.value = std::move(value);
    n.name = std::move(name);
    return push(std::move(n));
}

namespace {

void check_same(const RealTensor& a, const RealTensor& b, const char* what) {
    if (a.shape() != b.shape()) {
        throw ShapeMismatchError(std::string(what) + ": " + a.shape().to_string() + " vs " +
                                 b.shape().to_string());
    }
}

} // namespace

Var Tape::add(Var a, Var b) {
    const RealTensor& va = value(a);
    const RealTensor& vb = value(b);
    check_same(va, vb, "tape add");
    Node n;
    n.kind = OpKind::Add;
    n.inputs = {a.id, b.id};
    n.value = RealTensor(va.shape());
    for (std::size_t i = 0; i < va.numel(); ++i) n.value[i] = va[i] + vb[i];
    return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
    const RealTensor& va = value(a);
    const RealTensor& vb = value(b);
    check_same(va, vb, "tape sub");
    Node n;
    n.kind = OpKind::Sub;
    n.inputs = {a.id, b.id};
    n.value = RealTensor(va.shape());
    for (std::size_t i = 0; i < va.numel(); ++i) n.value[i] = va[i] - vb[i];
    return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
    const RealTensor& va = value(a);
    const RealTensor& vb = value(b);
    check_same(va, vb, "tape mul");
    Node n;
    n.kind = OpKind::Mul;
    n.inputs = {a.id, b.id};
    n.value = RealTensor(va.shape());
    for (std::size_t i = 0; i < va.numel(); ++i) n.value[i] = va[i] * vb[i];
    return push(std::move(n));
}

Var Tape::scale(Var a, double c) {
    const RealTensor& va = value(a);
    Node n;
    n.kind = OpKind::Scale;
    n.inputs = {a.id};
    n.scalar = c;
    n.value = RealTensor(va.shape());
    for (std::size_t i = 0; i < va.numel(); ++i) n.value[i] = c * va[i];
    return push(std::move(n));
}

Var Tape::add_scalar(Var a, double c) {
    const RealTensor& va = value(a);
    Node n;
    n.kind = OpKind::AddScalar;
    n.inputs = {a.id};
    n.scalar = c;
    n.value = RealTensor(va.shape());
    for (std::size_t i = 0; i < va.numel(); ++i) n.value[i] = va[i] + c;
    return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
    const RealTensor& va = value(a);
    const RealTensor& vb = value(b);
    if (va.shape().rank() != 2 || vb.shape().rank() != 2 ||
        va.shape().extent(1) != vb.shape().extent(0)) {
        throw ShapeMismatchError("tape matmul: " + va.shape().to_string() + " x " +
                                 vb.shape().to_string());
    }
    const std::size_t rows = va.shape().extent(0), inner = va.shape().extent(1);
    const std::size_t cols = vb.shape().extent(1);
    Node n;
    n.kind = OpKind::MatMul;
    n.inputs = {a.id, b.id};
    n.value = RealTensor(Shape{rows, cols});
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t d = 0; d < inner; ++d) {
            const double av = va[r * inner + d];
            if (av == 0.0) continue;
            for (std::size_t c = 0; c < cols; ++c) {
                n.value[r * cols + c] += av * vb[d * cols + c];
            }
        }
    }
    return push(std::move(n));
}

Var Tape::transpose2d(Var a) {
    const RealTensor& va = value(a);
    if (va.shape().rank() != 2) throw ShapeMismatchError("tape transpose2d: need rank-2");
    Node n;
    n.kind = OpKind::Transpose2D;
    n.inputs = {a.id};
    n.value = va.transpose_axes({1, 0});
    return push(std::move(n));
}

Var Tape::reshape(Var a, const Shape& shape) {
    const RealTensor& va = value(a);
    Node n;
    n.kind = OpKind::Reshape;
    n.inputs = {a.id};
    n.value = va.reshape(shape);
    return push(std::move(n));
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw GraphError("concat_rows: empty");
    const std::size_t cols = value(parts[0]).shape().extent(1);
    std::size_t rows = 0;
    for (Var p : parts) {
        const RealTensor& v = value(p);
        if (v.shape().rank() != 2 || v.shape().extent(1) != cols) {
            throw ShapeMismatchError("concat_rows: column mismatch");
        }
        rows += v.shape().extent(0);
    }
    Node n;
    n.kind = OpKind::ConcatRows;
    for (Var p : parts) n.inputs.push_back(p.id);
    n.value = RealTensor(Shape{rows, cols});
    std::size_t r0 = 0;
    for (Var p : parts) {
        const RealTensor& v = value(p);
        for (std::size_t i = 0; i < v.numel(); ++i) n.value[r0 * cols + i] = v[i];
        r0 += v.shape().extent(0);
    }
    return push(std::move(n));
}

Var Tape::concat_cols(Var a, Var b) {
    const RealTensor& va = value(a);
    const RealTensor& vb = value(b);
    if (va.shape().rank() != 2 || vb.shape().rank() != 2 ||
        va.shape().extent(0) != vb.shape().extent(0)) {
        throw ShapeMismatchError("concat_cols: row mismatch");
    }
    const std::size_t rows = va.shape().extent(0);
    const std::size_t ca = va.shape().extent(1), cb = vb.shape().extent(1);
    Node n;
    n.kind = OpKind::ConcatCols;
    n.inputs = {a.id, b.id};
    n.value = RealTensor(Shape{rows, ca + cb});
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < ca; ++c) n.value[r * (ca + cb) + c] = va[r * ca + c];
        for (std::size_t c = 0; c < cb; ++c) n.value[r * (ca + cb) + ca + c] = vb[r * cb + c];
    }
    return push(std::move(n));
}

Var Tape::slice_cols(Var a, std::size_t from, std::size_t to) {
    const RealTensor& va = value(a);
    if (va.shape().rank() != 2 || from >= to || to > va.shape().extent(1)) {
        throw ShapeMismatchError("slice_cols: bad range");
    }
    const std::size_t rows = va.shape().extent(0), cols = va.shape().extent(1);
    Node n;
    n.kind = OpKind::SliceCols;
    n.inputs = {a.id};
    n.from = from;
    n.to = to;
    n.value = RealTensor(Shape{rows, to - from});
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = from; c < to; ++c) {
            n.value[r * (to - from) + (c - from)] = va[r * cols + c];
        }
    }
    return push(std::move(n));
}

Var Tape::slice_rows(Var a, std::size_t from, std::size_t to) {
    const RealTensor& va = value(a);
    if (va.shape().rank() != 2 || from >= to || to > va.shape().extent(0)) {
        throw ShapeMismatchError("slice_rows: bad range");
    }
    const std::size_t cols = va.shape().extent(1);
    Node n;
    n.kind = OpKind::SliceRows;
    n.inputs = {a.id};
    n.from = from;
    n.to = to;
    n.value = RealTensor(Shape{to - from, cols});
    for (std::size_t i = 0; i < n.value.numel(); ++i) n.value[i] = va[from * cols + i];
    return push(std::move(n));
}

Var Tape::affine_channels(Var x, Var gamma, Var beta) {
    const RealTensor& vx = value(x);
    const RealTensor& vg = value(gamma);
    const RealTensor& vb = value(beta);
    const std::size_t channels = vx.shape().last();
    if (vg.numel() != channels || vb.numel() != channels) {
        throw ShapeMismatchError("affine_channels: gamma/beta must match last axis");
    }
    Node n;
    n.kind = OpKind::AffineChannels;
    n.inputs = {x.id, gamma.id, beta.id};
    n.value = RealTensor(vx.shape());
    for (std::size_t i = 0; i < vx.numel(); ++i) {
        const std::size_t c = i % channels;
        n.value[i] = vx[i] * vg[c] + vb[c];
    }
    return push(std::move(n));
}

Var Tape::sum_all(Var a) {
    const RealTensor& va = value(a);
    Node n;
    n.kind = OpKind::SumAll;
    n.inputs = {a.id};
    n.value = RealTensor(Shape{1});
    double acc = 0.0;
    for (std::size_t i = 0; i < va.numel(); ++i) acc += va[i];
    n.value[0] = acc;
    return push(std::move(n));
}

Var Tape::mean_all(Var a) {
    const RealTensor& va = value(a);
    Node n;
    n.kind = OpKind::MeanAll;
    n.inputs = {a.id};
    n.value = RealTensor(Shape{1});
    double acc = 0.0;
    for (std::size_t i = 0; i < va.numel(); ++i) acc += va[i];
    n.value[0] = acc / static_cast<double>(va.numel());
    return push(std::move(n));
}

Var Tape::mean_rows(Var a) {
    const RealTensor& va = value(a);
    if (va.shape().rank() != 2) throw ShapeMismatchError("mean_rows: need rank-2");
    const std::size_t rows = va.shape().extent(0), cols = va.shape().extent(1);
    Node n;
    n.kind = OpKind::MeanRows;
    n.inputs = {a.id};
    n.value = RealTensor(Shape{1, cols});
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) n.value[c] += va[r * cols + c];
    }
    for (std::size_t c = 0; c < cols; ++c) n.value[c] /= static_cast<double>(rows);
    return push(std::move(n));
}

Var Tape::spike(Var h_minus_threshold, const NeuronConfig& cfg, SpikeMode mode) {
    const RealTensor& vx = value(h_minus_threshold);
    Node n;
    n.kind = OpKind::Spike;
    n.inputs = {h_minus_threshold.id};
    n.neuron = cfg;
    n.spike_mode = mode;
    n.value = RealTensor(vx.shape());
    for (std::size_t i = 0; i < vx.numel(); ++i) {
        n.value[i] = mode == SpikeMode::HardSurrogate ? (vx[i] > 0.0 ? 1.0 : 0.0)
                                                      : surrogate_forward(vx[i], cfg);
    }
    return push(std::move(n));
}

namespace {

struct ConvDims {
    std::size_t h, w, in_c, k, stride, pad, oh, ow, out_c;
};

ConvDims conv_dims(const RealTensor& x, const RealTensor& w, std::size_t stride, bool depthwise) {
    if (x.shape().rank() != 3) throw ShapeMismatchError("tape conv: x must be [H,W,C]");
    ConvDims d;
    d.h = x.shape().extent(0);
    d.w = x.shape().extent(1);
    d.in_c = x.shape().extent(2);
    d.stride = stride;
    if (depthwise) {
        if (w.shape().rank() != 3 || w.shape().extent(0) != d.in_c ||
            w.shape().extent(1) != w.shape().extent(2)) {
            throw ShapeMismatchError("tape dwconv: w must be [C,k,k]");
        }
        d.k = w.shape().extent(1);
        d.out_c = d.in_c;
    } else {
        if (w.shape().rank() != 4 || w.shape().extent(1) != d.in_c ||
            w.shape().extent(2) != w.shape().extent(3)) {
            throw ShapeMismatchError("tape conv: w must be [Cout,Cin,k,k]");
        }
        d.k = w.shape().extent(2);
        d.out_c = w.shape().extent(0);
    }
    d.pad = d.k / 2;
    d.oh = (d.h + 2 * d.pad - d.k) / d.stride + 1;
    d.ow = (d.w + 2 * d.pad - d.k) / d.stride + 1;
    return d;
}

// Walks every (output position, tap) pair; visit(out_index_base, in_index_base, ky, kx).
template <typename Visit>
void for_each_tap(const ConvDims& d, Visit&& visit) {
    for (std::size_t oy = 0; oy < d.oh; ++oy) {
        for (std::size_t ox = 0; ox < d.ow; ++ox) {
            for (std::size_t ky = 0; ky < d.k; ++ky) {
                const std::ptrdiff_t iy =
                    static_cast<std::ptrdiff_t>(oy * d.stride + ky) - static_cast<std::ptrdiff_t>(d.pad);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) continue;
                for (std::size_t kx = 0; kx < d.k; ++kx) {
                    const std::ptrdiff_t ix =
                        static_cast<std::ptrdiff_t>(ox * d.stride + kx) - static_cast<std::ptrdiff_t>(d.pad);
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(d.w)) continue;
                    visit((oy * d.ow + ox) * d.out_c,
                          (static_cast<std::size_t>(iy) * d.w + static_cast<std::size_t>(ix)) * d.in_c,
                          ky, kx);
                }
            }
        }
    }
}

} // namespace

Var Tape::conv2d(Var x, Var w, std::size_t stride) {
    const RealTensor& vx = value(x);
    const RealTensor& vw = value(w);
    const ConvDims d = conv_dims(vx, vw, stride, /*depthwise=*/false);
    Node n;
    n.kind = OpKind::Conv2D;
    n.inputs = {x.id, w.id};
    n.stride = stride;
    n.kernel = d.k;
    n.value = RealTensor(Shape{d.oh, d.ow, d.out_c});
    for_each_tap(d, [&](std::size_t out_base, std::size_t in_base, std::size_t ky, std::size_t kx) {
        for (std::size_t c = 0; c < d.in_c; ++c) {
            const double xv = vx[in_base + c];
            if (xv == 0.0) continue;
            for (std::size_t o = 0; o < d.out_c; ++o) {
                n.value[out_base + o] += xv * vw[((o * d.in_c + c) * d.k + ky) * d.k + kx];
            }
        }
    });
    return push(std::move(n));
}

Var Tape::dwconv2d(Var x, Var w, std::size_t stride) {
    const RealTensor& vx = value(x);
    const RealTensor& vw = value(w);
    const ConvDims d = conv_dims(vx, vw, stride, /*depthwise=*/true);
    Node n;
    n.kind = OpKind::DwConv2D;
    n.inputs = {x.id, w.id};
    n.stride = stride;
    n.kernel = d.k;
    n.value = RealTensor(Shape{d.oh, d.ow, d.out_c});
    for_each_tap(d, [&](std::size_t out_base, std::size_t in_base, std::size_t ky, std::size_t kx) {
        for (std::size_t c = 0; c < d.in_c; ++c) {
            const double xv = vx[in_base + c];
            if (xv == 0.0) continue;
            n.value[out_base + c] += xv * vw[(c * d.k + ky) * d.k + kx];
        }
    });
    return push(std::move(n));
}

Var Tape::cross_entropy(Var logits, std::vector<int> labels) {
    const RealTensor& vl = value(logits);
    if (vl.shape().rank() != 2 || vl.shape().extent(0) != labels.size()) {
        throw ShapeMismatchError("cross_entropy: logits rows must match labels");
    }
    const std::size_t batch = labels.size(), classes = vl.shape().extent(1);
    Node n;
    n.kind = OpKind::CrossEntropy;
    n.inputs = {logits.id};
    n.labels = std::move(labels);
    n.value = RealTensor(Shape{1});
    double loss = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
        const int label = n.labels[b];
        if (label < 0 || static_cast<std::size_t>(label) >= classes) {
            throw DomainError("cross_entropy: label out of range");
        }
        double max_logit = vl[b * classes];
        for (std::size_t k = 1; k < classes; ++k) max_logit = std::max(max_logit, vl[b * classes + k]);
        double lse = 0.0;
        for (std::size_t k = 0; k < classes; ++k) lse += std::exp(vl[b * classes + k] - max_logit);
        loss += std::log(lse) + max_logit - vl[b * classes + static_cast<std::size_t>(label)];
    }
    n.value[0] = loss / static_cast<double>(batch);
    return push(std::move(n));
}

void Tape::backward(Var loss) {
    if (loss.id < 0 || loss.id >= static_cast<int>(nodes_.size())) {
        throw GraphError("backward: loss is not on this tape");
    }
    if (nodes_[static_cast<std::size_t>(loss.id)].value.numel() != 1) {
        throw GraphError("backward: loss must be scalar");
    }
    grads_.assign(nodes_.size(), RealTensor());
    for (std::size_t i = 0; i < nodes_.size(); ++i) grads_[i] = RealTensor(nodes_[i].value.shape());
    grads_[static_cast<std::size_t>(loss.id)][0] = 1.0;

    for (std::size_t idx = static_cast<std::size_t>(loss.id) + 1; idx-- > 0;) {
        const Node& n = nodes_[idx];
        const RealTensor& g = grads_[idx];
        switch (n.kind) {
        case OpKind::Input:
        case OpKind::Parameter:
            break;
        case OpKind::Add: {
            RealTensor& ga = grads_[n.inputs[0]];
            RealTensor& gb = grads_[n.inputs[1]];
            for (std::size_t i = 0; i < g.numel(); ++i) {
                ga[i] += g[i];
                gb[i] += g[i];
            }
            break;
        }
        case OpKind::Sub: {
            RealTensor& ga = grads_[n.inputs[0]];
            RealTensor& gb = grads_[n.inputs[1]];
            for (std::size_t i = 0; i < g.numel(); ++i) {
                ga[i] += g[i];
                gb[i] -= g[i];
            }
            break;
        }
        case OpKind::Mul: {
            const RealTensor& va = nodes_[n.inputs[0]].value;
            const RealTensor& vb = nodes_[n.inputs[1]].value;
            RealTensor& ga = grads_[n.inputs[0]];
            RealTensor& gb = grads_[n.inputs[1]];
            for (std::size_t i = 0; i < g.numel(); ++i) {
                ga[i] += g[i] * vb[i];
                gb[i] += g[i] * va[i];
            }
            break;
        }
        case OpKind::Scale: {
            RealTensor& ga = grads_[n.inputs[0]];
            for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += n.scalar * g[i];
            break;
        }
        case OpKind::AddScalar: {
            RealTensor& ga = grads_[n.inputs[0]];
            for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i];
            break;
        }
        case OpKind::MatMul: {
            const RealTensor& va = nodes_[n.inputs[0]].value;
            const RealTensor& vb = nodes_[n.inputs[1]].value;
            RealTensor& ga = grads_[n.inputs[0]];
            RealTensor& gb = grads_[n.inputs[1]];
            const std::size_t rows = va.shape().extent(0), inner = va.shape().extent(1);
            const std::size_t cols = vb.shape().extent(1);
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t d = 0; d < inner; ++d) {
                    double acc = 0.0;
                    for (std::size_t c = 0; c < cols; ++c) acc += g[r * cols + c] * vb[d * cols + c];
                    ga[r * inner + d] += acc;
                }
            }
            for (std::size_t d = 0; d < inner; ++d) {
                for (std::size_t r = 0; r < rows; ++r) {
                    const double av = va[r * inner + d];
                    if (av == 0.0) continue;
                    for (std::size_t c = 0; c < cols; ++c) {
                        gb[d * cols + c] += av * g[r * cols + c];
                    }
                }
            }
            break;
        }
        case OpKind::Transpose2D: {
            RealTensor& ga = grads_[n.inputs[0]];
            const std::size_t rows = ga.shape().extent(0), cols = ga.shape().extent(1);
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += g[c * rows + r];
            }
            break;
        }
        case OpKind::Reshape: {
            RealTensor& ga = grads_[n.inputs[0]];
            for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i];
            break;
        }
        case OpKind::ConcatRows: {
            std::size_t offset = 0;
            for (int in_id : n.inputs) {
                RealTensor& ga = grads_[in_id];
                for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += g[offset + i];
                offset += ga.numel();
            }
            break;
        }
        case OpKind::ConcatCols: {
            RealTensor& ga = grads_[n.inputs[0]];
            RealTensor& gb = grads_[n.inputs[1]];
            const std::size_t rows = ga.shape().extent(0);
            const std::size_t ca = ga.shape().extent(1), cb = gb.shape().extent(1);
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < ca; ++c) ga[r * ca + c] += g[r * (ca + cb) + c];
                for (std::size_t c = 0; c < cb; ++c) gb[r * cb + c] += g[r * (ca + cb) + ca + c];
            }
            break;
        }
        case OpKind::SliceCols: {
            RealTensor& ga = grads_[n.inputs[0]];
            const std::size_t rows = ga.shape().extent(0), cols = ga.shape().extent(1);
            const std::size_t width = n.to - n.from;
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < width; ++c) {
                    ga[r * cols + n.from + c] += g[r * width + c];
                }
            }
            break;
        }
        case OpKind::SliceRows: {
            RealTensor& ga = grads_[n.inputs[0]];
            const std::size_t cols = ga.shape().extent(1);
            for (std::size_t i = 0; i < g.numel(); ++i) ga[n.from * cols + i] += g[i];
            break;
        }
        case OpKind::AffineChannels: {
            const RealTensor& vx = nodes_[n.inputs[0]].value;
            const RealTensor& vg = nodes_[n.inputs[1]].value;
            RealTensor& gx = grads_[n.inputs[0]];
            RealTensor& ggamma = grads_[n.inputs[1]];
            RealTensor& gbeta = grads_[n.inputs[2]];
            const std::size_t channels = vg.numel();
            for (std::size_t i = 0; i < g.numel(); ++i) {
                const std::size_t c = i % channels;
                gx[i] += g[i] * vg[c];
                ggamma[c] += g[i] * vx[i];
                gbeta[c] += g[i];
            }
            break;
        }
        case OpKind::SumAll: {
            RealTensor& ga = grads_[n.inputs[0]];
            for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += g[0];
            break;
        }
        case OpKind::MeanAll: {
            RealTensor& ga = grads_[n.inputs[0]];
            const double inv = 1.0 / static_cast<double>(ga.numel());
            for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += g[0] * inv;
            break;
        }
        case OpKind::MeanRows: {
            RealTensor& ga = grads_[n.inputs[0]];
            const std::size_t rows = ga.shape().extent(0), cols = ga.shape().extent(1);
            const double inv = 1.0 / static_cast<double>(rows);
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += g[c] * inv;
            }
            break;
        }
        case OpKind::Spike: {
            const RealTensor& vx = nodes_[n.inputs[0]].value;
            RealTensor& ga = grads_[n.inputs[0]];
            for (std::size_t i = 0; i < g.numel(); ++i) {
                ga[i] += g[i] * surrogate_derivative(vx[i], n.neuron);
            }
            break;
        }
        case OpKind::Conv2D: {
            const RealTensor& vx = nodes_[n.inputs[0]].value;
            const RealTensor& vw = nodes_[n.inputs[1]].value;
            RealTensor& gx = grads_[n.inputs[0]];
            RealTensor& gw = grads_[n.inputs[1]];
            const ConvDims d = conv_dims(vx, vw, n.stride, false);
            for_each_tap(d, [&](std::size_t out_base, std::size_t in_base, std::size_t ky,
                                std::size_t kx) {
                for (std::size_t c = 0; c < d.in_c; ++c) {
                    const double xv = vx[in_base + c];
                    double acc = 0.0;
                    for (std::size_t o = 0; o < d.out_c; ++o) {
                        const double gv = g[out_base + o];
                        const std::size_t wi = ((o * d.in_c + c) * d.k + ky) * d.k + kx;
                        acc += gv * vw[wi];
                        gw[wi] += gv * xv;
                    }
                    gx[in_base + c] += acc;
                }
            });
            break;
        }
        case OpKind::DwConv2D: {
            const RealTensor& vx = nodes_[n.inputs[0]].value;
            const RealTensor& vw = nodes_[n.inputs[1]].value;
            RealTensor& gx = grads_[n.inputs[0]];
            RealTensor& gw = grads_[n.inputs[1]];
            const ConvDims d = conv_dims(vx, vw, n.stride, true);
            for_each_tap(d, [&](std::size_t out_base, std::size_t in_base, std::size_t ky,
                                std::size_t kx) {
                for (std::size_t c = 0; c < d.in_c; ++c) {
                    const double gv = g[out_base + c];
                    const std::size_t wi = (c * d.k + ky) * d.k + kx;
                    gx[in_base + c] += gv * vw[wi];
                    gw[wi] += gv * vx[in_base + c];
                }
            });
            break;
        }
        case OpKind::CrossEntropy: {
            const RealTensor& vl = nodes_[n.inputs[0]].value;
            RealTensor& gl = grads_[n.inputs[0]];
            const std::size_t batch = n.labels.size(), classes = vl.shape().extent(1);
            const double inv = g[0] / static_cast<double>(batch);
            for (std::size_t b = 0; b < batch; ++b) {
                double max_logit = vl[b * classes];
                for (std::size_t k = 1; k < classes; ++k) {
                    max_logit = std::max(max_logit, vl[b * classes + k]);
                }
                double lse = 0.0;
                for (std::size_t k = 0; k < classes; ++k) {
                    lse += std::exp(vl[b * classes + k] - max_logit);
                }
                for (std::size_t k = 0; k < classes; ++k) {
                    const double softmax = std::exp(vl[b * classes + k] - max_logit) / lse;
                    const double onehot = static_cast<std::size_t>(n.labels[b]) == k ? 1.0 : 0.0;
                    gl[b * classes + k] += inv * (softmax - onehot);
                }
            }
            break;
        }
        }
    }
    grads_ready_ = true;
}

const RealTensor& Tape::grad(Var v) const {
    if (!grads_ready_) throw GraphError("grad: run backward first");
    if (v.id < 0 || static_cast<std::size_t>(v.id) >= grads_.size()) throw GraphError("bad var id");
    return grads_[static_cast<std::size_t>(v.id)];
}

GradCheckResult finite_diff_check(
    const std::function<double(const std::vector<RealTensor>&, std::vector<RealTensor>*)>& f,
    const std::vector<RealTensor>& params, double eps) {
    std::vector<RealTensor> analytic;
    f(params, &analytic);
    if (analytic.size() != params.size()) {
        throw GraphError("finite_diff_check: gradient count mismatch");
    }
    GradCheckResult result;
    std::vector<RealTensor> probe = params;
    for (std::size_t p = 0; p < params.size(); ++p) {
        for (std::size_t i = 0; i < params[p].numel(); ++i) {
            const double saved = probe[p][i];
            probe[p][i] = saved + eps;
            const double up = f(probe, nullptr);
            probe[p][i] = saved - eps;
            const double down = f(probe, nullptr);
            probe[p][i] = saved;
            const double fd = (up - down) / (2.0 * eps);
            const double ad = analytic[p][i];
            const double denom = std::max({std::abs(fd), std::abs(ad), 1e-12});
            const double rel = std::abs(fd - ad) / denom;
            if (rel > result.max_rel_error) {
                result.max_rel_error = rel;
                result.worst_param = p;
                result.worst_coord = i;
            }
        }
    }
    return result;
}

std::vector<Var> tape_lif_chain(Tape& tape, const std::vector<Var>& step_inputs,
                                const NeuronConfig& cfg, SpikeMode mode, bool reset_each_step) {
    if (step_inputs.empty()) throw GraphError("tape_lif_chain: no steps");
    const double threshold = cfg.threshold();
    std::vector<Var> spikes;
    spikes.reserve(step_inputs.size());
    Var membrane;  // invalid until the first step contributes state
    for (std::size_t t = 0; t < step_inputs.size(); ++t) {
        Var h = step_inputs[t];
        if (membrane.valid() && !reset_each_step && cfg.beta != 0.0) {
            h = tape.add(tape.scale(membrane, cfg.beta), step_inputs[t]);
        }
        const Var s = tape.spike(tape.add_scalar(h, -threshold), cfg, mode);
        spikes.push_back(s);
        membrane = tape.sub(h, tape.scale(s, threshold));
    }
    return spikes;
}

} // namespace svt
