#include "doctest.h"

#include <cmath>

#include "svt/autodiff.hpp"

#include "support/oracles.hpp"

using namespace svt;

TEST_CASE("polynomial gradient: d(w^2)/dw = 2w") {
    Tape tape;
    RealTensor w0(Shape{1});
    w0[0] = 3.0;
    const Var w = tape.parameter(w0);
    const Var loss = tape.sum_all(tape.mul(w, w));
    tape.backward(loss);
    CHECK(tape.grad(w)[0] == doctest::Approx(6.0).epsilon(1e-15));
}

TEST_CASE("gradient of a constant w.r.t. parameters is zero") {
    Tape tape;
    const Var w = tape.parameter(RealTensor(Shape{3}, 2.0));
    const Var c = tape.input(RealTensor(Shape{1}, 5.0));
    tape.backward(c);
    for (std::size_t i = 0; i < 3; ++i) CHECK(tape.grad(w)[i] == 0.0);
}

TEST_CASE("matmul gradients against finite differences") {
    Rng rng(3);
    const RealTensor a0 = oracle::random_real(Shape{3, 4}, rng);
    const RealTensor b0 = oracle::random_real(Shape{4, 2}, rng);
    auto f = [&](const std::vector<RealTensor>& params, std::vector<RealTensor>* grads) {
        Tape tape;
        const Var a = tape.parameter(params[0]);
        const Var b = tape.parameter(params[1]);
        const Var y = tape.matmul(a, b);
        const Var loss = tape.sum_all(tape.mul(y, y));
        if (grads) {
            tape.backward(loss);
            *grads = {tape.grad(a), tape.grad(b)};
        }
        return tape.value(loss)[0];
    };
    const auto check = finite_diff_check(f, {a0, b0});
    CHECK(check.max_rel_error < 1e-6);
}

TEST_CASE("linear map gradient is exact to 1e-9") {
    Rng rng(5);
    const RealTensor w0 = oracle::random_real(Shape{4, 3}, rng);
    const RealTensor x = oracle::random_real(Shape{2, 4}, rng);
    auto f = [&](const std::vector<RealTensor>& params, std::vector<RealTensor>* grads) {
        Tape tape;
        const Var w = tape.parameter(params[0]);
        const Var loss = tape.sum_all(tape.matmul(tape.input(x), w));
        if (grads) {
            tape.backward(loss);
            *grads = {tape.grad(w)};
        }
        return tape.value(loss)[0];
    };
    CHECK(finite_diff_check(f, {w0}).max_rel_error < 1e-9);
}

TEST_CASE("zero function has zero error") {
    auto f = [&](const std::vector<RealTensor>& params, std::vector<RealTensor>* grads) {
        Tape tape;
        const Var w = tape.parameter(params[0]);
        const Var loss = tape.sum_all(tape.scale(w, 0.0));
        if (grads) {
            tape.backward(loss);
            *grads = {tape.grad(w)};
        }
        return tape.value(loss)[0];
    };
    CHECK(finite_diff_check(f, {RealTensor(Shape{4}, 1.0)}).max_rel_error == 0.0);
}

TEST_CASE("elementwise, affine, slicing and pooling ops differentiate correctly") {
    Rng rng(7);
    const RealTensor x = oracle::random_real(Shape{3, 6}, rng);
    std::vector<RealTensor> params{oracle::random_real(Shape{3, 6}, rng),
                                   oracle::random_real(Shape{6}, rng),
                                   oracle::random_real(Shape{6}, rng)};
    auto f = [&](const std::vector<RealTensor>& p, std::vector<RealTensor>* grads) {
        Tape tape;
        const Var a = tape.parameter(p[0]);
        const Var gamma = tape.parameter(p[1]);
        const Var beta = tape.parameter(p[2]);
        const Var xa = tape.mul(tape.input(x), a);
        const Var y = tape.affine_channels(xa, gamma, beta);
        const Var left = tape.slice_cols(y, 0, 3);
        const Var right = tape.slice_cols(y, 3, 6);
        const Var cat = tape.concat_cols(tape.transpose2d(left), tape.transpose2d(right));
        const Var pooled = tape.mean_rows(cat);
        const Var top = tape.slice_rows(cat, 0, 2);
        const Var loss = tape.add(tape.mean_all(tape.mul(pooled, pooled)),
                                  tape.mean_all(top));
        if (grads) {
            tape.backward(loss);
            *grads = {tape.grad(a), tape.grad(gamma), tape.grad(beta)};
        }
        return tape.value(loss)[0];
    };
    CHECK(finite_diff_check(f, params).max_rel_error < 1e-6);
}

TEST_CASE("conv2d and dwconv2d gradients") {
    Rng rng(9);
    const RealTensor x = oracle::random_real(Shape{6, 6, 2}, rng);
    std::vector<RealTensor> params{oracle::random_real(Shape{3, 2, 3, 3}, rng),
                                   oracle::random_real(Shape{3, 3, 3}, rng)};
    auto f = [&](const std::vector<RealTensor>& p, std::vector<RealTensor>* grads) {
        Tape tape;
        const Var w = tape.parameter(p[0]);
        const Var dw = tape.parameter(p[1]);
        const Var c1 = tape.conv2d(tape.input(x), w, 2);   // [3,3,3]
        const Var c2 = tape.dwconv2d(c1, dw, 1);           // [3,3,3]
        const Var loss = tape.sum_all(tape.mul(c2, c2));
        if (grads) {
            tape.backward(loss);
            *grads = {tape.grad(w), tape.grad(dw)};
        }
        return tape.value(loss)[0];
    };
    CHECK(finite_diff_check(f, params).max_rel_error < 1e-6);
}

TEST_CASE("cross entropy value and gradient") {
    Tape tape;
    RealTensor logits0(Shape{1, 2});
    logits0[0] = 0.0;
    logits0[1] = 0.0;
    const Var logits = tape.parameter(logits0);
    const Var loss = tape.cross_entropy(logits, {1});
    CHECK(tape.value(loss)[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    tape.backward(loss);
    CHECK(tape.grad(logits)[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(tape.grad(logits)[1] == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("smoothed LIF chain matches finite differences across T=8") {
    Rng rng(11);
    NeuronConfig cfg;
    cfg.beta = 0.5;
    const std::size_t t_steps = 8, width = 5;
    std::vector<RealTensor> params{oracle::random_real(Shape{width, width}, rng, 0.8)};
    std::vector<RealTensor> frames;
    for (std::size_t t = 0; t < t_steps; ++t) {
        frames.push_back(oracle::random_real(Shape{1, width}, rng, 1.2));
    }
    auto f = [&](const std::vector<RealTensor>& p, std::vector<RealTensor>* grads) {
        Tape tape;
        const Var w = tape.parameter(p[0]);
        std::vector<Var> inputs;
        for (const auto& frame : frames) inputs.push_back(tape.matmul(tape.input(frame), w));
        const auto spikes = tape_lif_chain(tape, inputs, cfg, SpikeMode::Smooth);
        Var acc = spikes[0];
        for (std::size_t t = 1; t < spikes.size(); ++t) acc = tape.add(acc, spikes[t]);
        const Var loss = tape.mean_all(tape.mul(acc, acc));
        if (grads) {
            tape.backward(loss);
            *grads = {tape.grad(w)};
        }
        return tape.value(loss)[0];
    };
    CHECK(finite_diff_check(f, params).max_rel_error < 1e-4);
}

TEST_CASE("graph errors") {
    Tape tape;
    const Var w = tape.parameter(RealTensor(Shape{2}, 1.0));
    CHECK_THROWS_AS(tape.backward(w), GraphError);  // non-scalar loss
    CHECK_THROWS_AS(tape.grad(w), GraphError);      // before backward
    CHECK_THROWS_AS(tape.value(Var{99}), GraphError);
}

TEST_CASE("hard spike forward matches the exact Heaviside") {
    Tape tape;
    RealTensor x(Shape{3});
    x[0] = -0.5;
    x[1] = 0.0;
    x[2] = 0.5;
    NeuronConfig cfg;
    const Var s = tape.spike(tape.input(x), cfg, SpikeMode::HardSurrogate);
    CHECK(tape.value(s)[0] == 0.0);
    CHECK(tape.value(s)[1] == 0.0);  // strict threshold
    CHECK(tape.value(s)[2] == 1.0);
}
