#include "svt/neuron.hpp"

#include <algorithm>
#include <cmath>

namespace svt {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_same_shape(const Shape& a, const Shape& b, const char* what) {
    if (a != b) {
        throw ShapeMismatchError(std::string(what) + ": state shape " + a.to_string() +
                                 " vs input shape " + b.to_string());
    }
}

} // namespace

void NeuronConfig::validate() const {
    if (beta < 0.0 || beta > 1.0) throw DomainError("NeuronConfig: beta must be in [0,1]");
    if (u_th <= 0.0) throw DomainError("NeuronConfig: u_th must be > 0");
    if (s <= 0.0) throw DomainError("NeuronConfig: s must be > 0");
    if (levels < 2) throw DomainError("NeuronConfig: levels must be >= 2");
    if (alpha <= 0.0) throw DomainError("NeuronConfig: alpha must be > 0");
}

LifStepResult lif_step(const LifState& state, const RealTensor& x, const NeuronConfig& cfg) {
    check_same_shape(state.membrane.shape(), x.shape(), "lif_step");
    const double threshold = cfg.threshold();
    LifStepResult result;
    result.state = LifState(x.shape());
    result.spikes = SpikeTensor(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const double h = cfg.beta * state.membrane[i] + x[i];
        const bool fired = h > threshold;
        if (fired) result.spikes.set_flat(i, true);
        result.state.membrane[i] = fired ? h - threshold : h;
    }
    return result;
}

namespace {

template <typename StepFn>
void fold_time(const RealTensor& x, StepFn&& step) {
    if (x.shape().rank() < 1) throw ShapeMismatchError("lif_sequence: need a leading time axis");
    const std::size_t steps = x.shape().extent(0);
    std::vector<std::size_t> frame_dims(x.shape().dims().begin() + 1, x.shape().dims().end());
    if (frame_dims.empty()) frame_dims.push_back(1);
    const Shape frame_shape{frame_dims};
    const std::size_t frame = frame_shape.numel();
    RealTensor slice(frame_shape);
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t i = 0; i < frame; ++i) slice[i] = x[t * frame + i];
        step(t, slice, frame);
    }
}

} // namespace

SpikeTensor lif_sequence(const RealTensor& x, const NeuronConfig& cfg, LifState initial) {
    SpikeTensor out(x.shape());
    LifState state = std::move(initial);
    fold_time(x, [&](std::size_t t, const RealTensor& slice, std::size_t frame) {
        auto step = lif_step(state, slice, cfg);
        state = std::move(step.state);
        for (std::size_t i = 0; i < frame; ++i) {
            if (step.spikes.get_flat(i)) out.set_flat(t * frame + i, true);
        }
    });
    return out;
}

SpikeTensor lif_sequence(const RealTensor& x, const NeuronConfig& cfg) {
    if (x.shape().rank() < 1) throw ShapeMismatchError("lif_sequence: need a leading time axis");
    std::vector<std::size_t> frame_dims(x.shape().dims().begin() + 1, x.shape().dims().end());
    if (frame_dims.empty()) frame_dims.push_back(1);
    return lif_sequence(x, cfg, LifState(Shape{frame_dims}));
}

SpikeTensor lif_over_time(const RealTensor& x, const NeuronConfig& cfg, bool reset_each_step) {
    if (!reset_each_step) return lif_sequence(x, cfg);
    if (x.shape().rank() < 1) throw ShapeMismatchError("lif_over_time: need a leading time axis");
    SpikeTensor out(x.shape());
    const double threshold = cfg.threshold();
    for (std::size_t i = 0; i < x.numel(); ++i) {
        if (x[i] > threshold) out.set_flat(i, true);
    }
    return out;
}

IntegerLifStepResult integer_lif_step(const LifState& state, const RealTensor& x,
                                      const NeuronConfig& cfg) {
    check_same_shape(state.membrane.shape(), x.shape(), "integer_lif_step");
    cfg.validate();
    const double threshold = cfg.threshold();
    IntegerLifStepResult result;
    result.state = LifState(x.shape());
    result.levels = IntTensor(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const double h = cfg.beta * state.membrane[i] + x[i];
        std::int64_t level = 0;
        for (int j = 1; j < cfg.levels; ++j) {
            if (h > static_cast<double>(j) * threshold) level = j;
        }
        result.levels[i] = level;
        result.state.membrane[i] = h - static_cast<double>(level) * threshold;
    }
    return result;
}

IntTensor integer_lif_sequence(const RealTensor& x, const NeuronConfig& cfg) {
    if (x.shape().rank() < 1) throw ShapeMismatchError("integer_lif_sequence: need a leading time axis");
    IntTensor out(x.shape());
    std::vector<std::size_t> frame_dims(x.shape().dims().begin() + 1, x.shape().dims().end());
    if (frame_dims.empty()) frame_dims.push_back(1);
    LifState state = LifState(Shape{frame_dims});
    fold_time(x, [&](std::size_t t, const RealTensor& slice, std::size_t frame) {
        auto step = integer_lif_step(state, slice, cfg);
        state = std::move(step.state);
        for (std::size_t i = 0; i < frame; ++i) out[t * frame + i] = step.levels[i];
    });
    return out;
}

double surrogate_derivative(double x, const NeuronConfig& cfg) {
    switch (cfg.surrogate) {
    case Surrogate::Atan: {
        const double z = kPi * cfg.alpha * x / 2.0;
        return cfg.alpha / (2.0 * (1.0 + z * z));
    }
    case Surrogate::Rectangular:
        return std::abs(x) < cfg.alpha ? 1.0 / (2.0 * cfg.alpha) : 0.0;
    }
    return 0.0;
}

double surrogate_forward(double x, const NeuronConfig& cfg) {
    switch (cfg.surrogate) {
    case Surrogate::Atan:
        return std::atan(kPi * cfg.alpha * x / 2.0) / kPi + 0.5;
    case Surrogate::Rectangular:
        return std::clamp((x + cfg.alpha) / (2.0 * cfg.alpha), 0.0, 1.0);
    }
    return 0.0;
}

} // namespace svt
