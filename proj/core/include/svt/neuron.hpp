#pragma once

#include "svt/tensor.hpp"

namespace svt {

enum class Surrogate { Atan, Rectangular };

// Leaky integrate-and-fire parameters. The effective firing threshold is
// s * u_th; firing is strict (H > threshold), so exact equality never fires.
struct NeuronConfig {
    double beta = 0.5;   // leak constant in [0,1]
    double u_th = 1.0;   // base threshold, > 0
    double s = 1.0;      // threshold multiplier, > 0
    int levels = 2;      // integer-LIF level count k >= 2; k=2 is binary LIF
    Surrogate surrogate = Surrogate::Atan;
    double alpha = 2.0;  // surrogate width, > 0

    double threshold() const { return s * u_th; }
    void validate() const;
};

// Per-neuron membrane potential carried across time steps.
struct LifState {
    RealTensor membrane;

    LifState() = default;
    explicit LifState(Shape shape) : membrane(std::move(shape)) {}
    static LifState zeros(Shape shape) { return LifState(std::move(shape)); }
};

// One step of the soft-reset LIF recurrence:
//   H = beta * U_prev + x
//   S = 1 iff H > s * u_th
//   U = H - s * u_th * S
struct LifStepResult {
    LifState state;
    SpikeTensor spikes;
};
LifStepResult lif_step(const LifState& state, const RealTensor& x, const NeuronConfig& cfg);

// Folds lif_step over the leading time axis of x ([T, ...]); state carried
// across steps, initial membrane zero unless supplied.
SpikeTensor lif_sequence(const RealTensor& x, const NeuronConfig& cfg);
SpikeTensor lif_sequence(const RealTensor& x, const NeuronConfig& cfg, LifState initial);

// LIF over the leading axis with a module-level switch: reset_each_step
// zeroes the membrane before every step (the spatial-only ablation mode);
// otherwise identical to lif_sequence.
SpikeTensor lif_over_time(const RealTensor& x, const NeuronConfig& cfg, bool reset_each_step);

// Integer-LIF step: emits level m = #{ j in 1..k-1 : H > j * s * u_th }
// (strict at every multiple, so k=2 reproduces binary lif_step exactly) and
// soft-resets by m * s * u_th.
struct IntegerLifStepResult {
    LifState state;
    IntTensor levels;
};
IntegerLifStepResult integer_lif_step(const LifState& state, const RealTensor& x,
                                      const NeuronConfig& cfg);
IntTensor integer_lif_sequence(const RealTensor& x, const NeuronConfig& cfg);

// Derivative of the smoothed spike at h - threshold:
//   atan:        alpha / (2 * (1 + (pi*alpha*x/2)^2))
//   rectangular: 1/(2*alpha) for |x| < alpha, else 0
double surrogate_derivative(double h_minus_threshold, const NeuronConfig& cfg);

// Smoothed Heaviside matching the surrogate derivative; used by gradient
// checks and the smoothed forward mode.
double surrogate_forward(double h_minus_threshold, const NeuronConfig& cfg);

} // namespace svt
