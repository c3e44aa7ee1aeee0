#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "svt/neuron.hpp"

namespace svt {

// Spike node behavior on the tape: the hard mode runs the exact Heaviside
// forward and substitutes the surrogate derivative on the way back
// (straight-through); the smooth mode runs the surrogate sigmoid in the
// forward too, so finite differences are well-defined.
enum class SpikeMode { HardSurrogate, Smooth };

struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode tape over dense real tensors. Forward values are computed
// eagerly as ops are recorded; backward() walks the topological order in
// reverse. One tape per training instance; not shared across threads.
class Tape {
public:
    Tape();
    ~Tape();
    Tape(Tape&&) noexcept;
    Tape& operator=(Tape&&) noexcept;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var input(RealTensor value);
    Var parameter(RealTensor value, std::string name = {});

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double c);
    Var add_scalar(Var a, double c);
    Var matmul(Var a, Var b);
    Var transpose2d(Var a);
    Var reshape(Var a, const Shape& shape);
    Var concat_rows(const std::vector<Var>& parts);
    Var concat_cols(Var a, Var b);
    Var slice_cols(Var a, std::size_t from, std::size_t to);
    Var slice_rows(Var a, std::size_t from, std::size_t to);
    // Per-last-axis-channel affine y = x * gamma[c] + beta[c].
    Var affine_channels(Var x, Var gamma, Var beta);
    Var sum_all(Var a);    // -> [1]
    Var mean_all(Var a);   // -> [1]
    Var mean_rows(Var a);  // [R x C] -> [1 x C]
    Var spike(Var h_minus_threshold, const NeuronConfig& cfg, SpikeMode mode);
    // Channels-last conv on one frame: x [H,W,Cin], w [Cout,Cin,k,k].
    Var conv2d(Var x, Var w, std::size_t stride);
    // Depthwise: x [H,W,C], w [C,k,k].
    Var dwconv2d(Var x, Var w, std::size_t stride);
    // Mean cross-entropy of logits [B x K] against integer labels.
    Var cross_entropy(Var logits, std::vector<int> labels);

    const RealTensor& value(Var v) const;
    std::size_t size() const;

    // Reverse pass from a scalar loss; GraphError if loss is not scalar or
    // refers outside this tape.
    void backward(Var loss);
    const RealTensor& grad(Var v) const;

private:
    struct Node;
    Var push(Node node);
    std::vector<Node> nodes_;
    std::vector<RealTensor> grads_;
    bool grads_ready_ = false;
};

// Max relative error between tape gradients and central finite differences.
//
// f receives the parameter values and must rebuild its computation; when
// grads_out is non-null it must also report d loss / d param via the tape.
// Relative error uses a 1e-12 denominator floor.
struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t worst_param = 0;
    std::size_t worst_coord = 0;
};
GradCheckResult finite_diff_check(
    const std::function<double(const std::vector<RealTensor>&, std::vector<RealTensor>*)>& f,
    const std::vector<RealTensor>& params, double eps = 1e-5);

// LIF recurrence unrolled on the tape: per step H = beta*U + x, spike at
// H - threshold, soft reset. Returns the per-step spike vars.
std::vector<Var> tape_lif_chain(Tape& tape, const std::vector<Var>& step_inputs,
                                const NeuronConfig& cfg, SpikeMode mode,
                                bool reset_each_step = false);

} // namespace svt
