// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exits nonzero if any fail.
//
// Usage: acceptance_suite [--cli /path/to/svt] [--only N]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "svt/attention.hpp"
#include "svt/autodiff.hpp"
#include "svt/blocks.hpp"
#include "svt/cost.hpp"
#include "svt/embedding.hpp"
#include "svt/tensor_io.hpp"
#include "svt/train.hpp"

using namespace svt;

namespace {

std::string g_cli_path;

struct Outcome {
    bool pass = false;
    std::string detail;
};

// --------------------------------------------------------------------------
// 1. Hamming identity (exhaustive D=6 plus 1e5 random pairs at D=64, 256)
// --------------------------------------------------------------------------

Outcome criterion_hamming_identity() {
    double worst = 0.0;
    for (std::uint64_t qb = 0; qb < 64; ++qb) {
        for (std::uint64_t kb = 0; kb < 64; ++kb) {
            SpikeTensor q(Shape{6}), k(Shape{6});
            for (std::size_t i = 0; i < 6; ++i) {
                q.set_flat(i, (qb >> i) & 1u);
                k.set_flat(i, (kb >> i) & 1u);
            }
            worst = std::max(worst, std::abs(hamming_identity(q, k) - hamming_similarity(q, k)));
        }
    }
    Rng rng(2024);
    for (const std::size_t d : {64u, 256u}) {
        for (int i = 0; i < 100000; ++i) {
            const SpikeTensor q = SpikeTensor::random(Shape{d}, rng);
            const SpikeTensor k = SpikeTensor::random(Shape{d}, rng);
            worst = std::max(worst, std::abs(hamming_identity(q, k) - hamming_similarity(q, k)));
        }
    }
    char buf[96];
    std::snprintf(buf, sizeof(buf), "max |identity - similarity| = %.3g (tol 1e-12)", worst);
    return {worst <= 1e-12, buf};
}

// --------------------------------------------------------------------------
// 2. SDHA rearrangement: quadratic vs linear, spike for spike
// --------------------------------------------------------------------------

Outcome criterion_sdha_rearrangement() {
    Rng rng(2025);
    NeuronConfig cfg;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t l = 1 + rng.next_below(64);
        const std::size_t d = 1 + rng.next_below(64);
        SpikeTensor q = SpikeTensor::random(Shape{l, d}, rng);
        const SpikeTensor k = SpikeTensor::random(Shape{l, d}, rng);
        const SpikeTensor v = SpikeTensor::random(Shape{l, d}, rng);
        if (l >= 2) {
            // Degenerate rows: one all-zero and one all-one query row.
            for (std::size_t i = 0; i < d; ++i) {
                q.set_flat(i, false);
                q.set_flat(d + i, true);
            }
        }
        if (!(sdha(q, k, v, 0.0, cfg) == sdha_quadratic(q, k, v, 0.0, cfg))) {
            return {false, "mismatch at trial " + std::to_string(trial) + " L=" +
                               std::to_string(l) + " D=" + std::to_string(d)};
        }
    }
    return {true, "100 random instances up to L=64, Dh=64, exact"};
}

// --------------------------------------------------------------------------
// 3. Degenerate-query separation
// --------------------------------------------------------------------------

Outcome criterion_fig2_separation() {
    const std::size_t d = 6;
    SpikeTensor q(Shape{1, d});  // all-zero query
    SpikeTensor k(Shape{4, d});  // four distinct keys
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t b = 0; b <= i; ++b) k.set_flat(i * d + b, true);
    }
    const IntTensor dot = dot_score(q, k);
    const IntTensor ham = sdha_score(q, k);
    std::set<std::int64_t> dot_values, ham_values;
    for (std::size_t i = 0; i < 4; ++i) {
        dot_values.insert(dot[i]);
        ham_values.insert(ham[i]);
    }
    const bool pass = dot_values.size() == 1 && ham_values.size() >= 2;
    return {pass, "dot distinct=" + std::to_string(dot_values.size()) +
                      " signed distinct=" + std::to_string(ham_values.size())};
}

// --------------------------------------------------------------------------
// 4. JL bound: error curve decreasing, tail bound at delta=0.1, D=1024
// --------------------------------------------------------------------------

Outcome criterion_jl_bound() {
    const ErrorCurve curve = jl_error_experiment(64, {16, 64, 256, 1024}, 10000, 7);
    std::ostringstream detail;
    detail << "means:";
    for (const auto& row : curve.rows) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), " %.4f", row.mean_error);
        detail << buf;
    }
    bool pass = curve.mean_error_decreasing_3sigma();
    // Strict decrease of the point estimates on top of the 3-sigma guard.
    for (std::size_t i = 0; i + 1 < curve.rows.size(); ++i) {
        pass = pass && curve.rows[i + 1].mean_error < curve.rows[i].mean_error;
    }
    // Pinned-seed value at D=1024 stays under 0.03.
    pass = pass && curve.rows.back().mean_error < 0.03;
    const auto conc = concentration_check(64, 1024, 10000, 0.1, 8);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "; rate %.2g vs bound %.2g+%.2g", conc.observed_rate,
                  conc.bound, conc.slack_3sigma);
    detail << buf;
    pass = pass && conc.within_bound();
    return {pass, detail.str()};
}

// --------------------------------------------------------------------------
// 5. Complexity: measured slope 1.0 +- 0.05, baseline 2.0 +- 0.1,
//    analytic == instrumented dense for 5 random configs per variant
// --------------------------------------------------------------------------

Outcome criterion_complexity() {
    AttentionSpec probe_spec;
    probe_spec.variant = AttentionVariant::Joint;
    probe_spec.score = ScoreKind::Hamming;
    probe_spec.n = 16;
    probe_spec.d = 32;
    probe_spec.heads = 4;
    const ScalingProbeResult probe = scaling_probe(probe_spec, {4, 8, 16, 32, 64}, 2026);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "spike slope %.3f, ann slope %.3f", probe.spike_slope,
                  probe.ann_slope);
    bool pass = std::abs(probe.spike_slope - 1.0) <= 0.05 && std::abs(probe.ann_slope - 2.0) <= 0.1;

    Rng rng(2027);
    for (const auto variant :
         {AttentionVariant::Joint, AttentionVariant::Hierarchical, AttentionVariant::Factorized,
          AttentionVariant::NeuronLevel, AttentionVariant::SpatialOnly}) {
        for (int trial = 0; trial < 5; ++trial) {
            AttentionSpec spec;
            spec.variant = variant;
            spec.t = 1 + rng.next_below(5);
            spec.n = 1 + rng.next_below(8);
            spec.heads = 1 + rng.next_below(3);
            spec.d = spec.heads * 2 * (1 + rng.next_below(5));
            Rng wrng(trial + 10);
            const AttentionWeights weights = AttentionWeights::init(spec, wrng);
            const SpikeTensor x = SpikeTensor::random(Shape{1, spec.t, spec.n, spec.d}, rng);
            OpCounter counter;
            space_time_attention(x, spec, weights, &counter);
            const double analytic = flops_attention(variant, spec.t, spec.n, spec.d, spec.heads);
            if (counter.total_dense() != analytic) {
                return {false, "analytic/dense mismatch for " + to_string(variant)};
            }
        }
    }
    return {pass, std::string(buf) + "; analytic == dense for 5 configs x 5 variants"};
}

// --------------------------------------------------------------------------
// 6. Parameter counts
// --------------------------------------------------------------------------

Outcome criterion_parameters() {
    for (const std::size_t d : {8u, 32u, 64u}) {
        for (const auto& [variant, factor] :
             std::initializer_list<std::pair<AttentionVariant, std::size_t>>{
                 {AttentionVariant::Joint, 4},
                 {AttentionVariant::Hierarchical, 8},
                 {AttentionVariant::Factorized, 7}}) {
            AttentionSpec spec;
            spec.variant = variant;
            spec.t = 2;
            spec.n = 2;
            spec.d = d;
            spec.heads = 2;
            Rng rng(1);
            const AttentionWeights weights = AttentionWeights::init(spec, rng);
            if (weights.allocated_elements() != factor * d * d ||
                param_count(spec) != factor * d * d) {
                return {false, to_string(variant) + " at D=" + std::to_string(d)};
            }
        }
    }
    return {true, "allocated == 4D^2 / 8D^2 / 7D^2 at D in {8,32,64}"};
}

// --------------------------------------------------------------------------
// 7. Energy model identities
// --------------------------------------------------------------------------

Outcome criterion_energy() {
    // Instrumented backbone on random input: ratio identity on every row.
    BackboneConfig cfg;
    cfg.base_channels = 4;
    cfg.t = 2;
    cfg.heads = 4;
    cfg.seed = 3;
    const Backbone backbone = build_backbone(cfg);
    Rng rng(2028);
    RealTensor input(Shape{2, 32, 32, 3});
    for (std::size_t i = 0; i < input.numel(); ++i) input[i] = rng.uniform(0.0, 2.0);
    OpCounter counter;
    backbone.forward(input, &counter);
    const CostReport report = CostReport::from_counter(counter);
    double worst = 0.0;
    for (const auto& row : report.rows) {
        if (row.e_ann_pj == 0.0) continue;
        worst = std::max(worst, std::abs(row.e_snn_pj / row.e_ann_pj - row.rho * 0.9 / 4.6));
    }

    // All-zero input gives exactly zero SNN energy.
    OpCounter zero_counter;
    backbone.forward(RealTensor(Shape{2, 32, 32, 3}), &zero_counter);
    const CostReport zero_report = CostReport::from_counter(zero_counter);
    double zero_energy = 0.0;
    for (const auto& row : zero_report.rows) zero_energy += std::abs(row.e_snn_pj);

    char buf[96];
    std::snprintf(buf, sizeof(buf), "worst ratio error %.3g, zero-input e_snn %.3g", worst,
                  zero_energy);
    return {worst <= 1e-12 && zero_energy == 0.0, buf};
}

// --------------------------------------------------------------------------
// 8. Neuron contracts
// --------------------------------------------------------------------------

Outcome criterion_neuron() {
    Rng rng(2029);
    // Threshold-scale equivalence, 1000 random sequences, exact.
    for (int trial = 0; trial < 1000; ++trial) {
        const double sigma = std::ldexp(1.0, static_cast<int>(rng.next_below(17)) - 8);
        NeuronConfig scaled;
        scaled.beta = 0.5;
        scaled.s = sigma;
        NeuronConfig unit;
        unit.beta = 0.5;
        RealTensor x(Shape{8, 8});
        for (std::size_t i = 0; i < x.numel(); ++i) x[i] = 2.0 * sigma * rng.gaussian();
        RealTensor x_over(Shape{8, 8});
        for (std::size_t i = 0; i < x.numel(); ++i) x_over[i] = x[i] / sigma;
        if (!(lif_sequence(x, scaled) == lif_sequence(x_over, unit))) {
            return {false, "threshold-scale mismatch at trial " + std::to_string(trial)};
        }
    }
    // Soft-reset conservation within 1e-12.
    NeuronConfig cfg;
    cfg.beta = 0.8;
    cfg.s = 1.5;
    LifState state(Shape{64});
    double worst = 0.0;
    for (int step = 0; step < 100; ++step) {
        RealTensor x(Shape{64});
        for (std::size_t i = 0; i < 64; ++i) x[i] = 1.4 * rng.gaussian();
        const auto r = lif_step(state, x, cfg);
        for (std::size_t i = 0; i < 64; ++i) {
            const double lhs =
                r.state.membrane[i] + cfg.threshold() * (r.spikes.get_flat(i) ? 1.0 : 0.0);
            worst = std::max(worst, std::abs(lhs - (cfg.beta * state.membrane[i] + x[i])));
        }
        state = r.state;
    }
    if (worst > 1e-12) {
        return {false, "soft-reset conservation error " + std::to_string(worst)};
    }
    // Integer-LIF with k=2 equals binary LIF exactly.
    NeuronConfig k2;
    k2.beta = 0.5;
    k2.levels = 2;
    for (int trial = 0; trial < 200; ++trial) {
        RealTensor x(Shape{10, 8});
        for (std::size_t i = 0; i < x.numel(); ++i) x[i] = 1.5 * rng.gaussian();
        const SpikeTensor spikes = lif_sequence(x, k2);
        const IntTensor levels = integer_lif_sequence(x, k2);
        for (std::size_t i = 0; i < x.numel(); ++i) {
            if (levels[i] != (spikes.get_flat(i) ? 1 : 0)) {
                return {false, "integer-LIF k=2 mismatch at trial " + std::to_string(trial)};
            }
        }
    }
    char buf[96];
    std::snprintf(buf, sizeof(buf), "scale equivalence exact; conservation %.3g; k=2 exact", worst);
    return {true, buf};
}

// --------------------------------------------------------------------------
// 9. Gradient checks (smoothed forward, central differences, eps = 1e-5)
// --------------------------------------------------------------------------

double lif_chain_check() {
    Rng rng(2030);
    NeuronConfig cfg;
    cfg.beta = 0.5;
    const std::size_t t_steps = 8, width = 6;
    std::vector<RealTensor> frames;
    for (std::size_t t = 0; t < t_steps; ++t) {
        RealTensor f(Shape{1, width});
        for (std::size_t i = 0; i < f.numel(); ++i) f[i] = 1.2 * rng.gaussian();
        frames.push_back(f);
    }
    RealTensor w0(Shape{width, width});
    for (std::size_t i = 0; i < w0.numel(); ++i) w0[i] = 0.8 * rng.gaussian();
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
    return finite_diff_check(f, {w0}, 1e-5).max_rel_error;
}

double sdha_block_check() {
    Rng rng(2031);
    const std::size_t n = 5, d = 8;
    NeuronConfig cfg;
    RealTensor x(Shape{n, d});
    for (std::size_t i = 0; i < x.numel(); ++i) x[i] = 1.3 * rng.gaussian();
    std::vector<RealTensor> params;
    for (int m = 0; m < 4; ++m) {
        RealTensor w(Shape{d, d});
        for (std::size_t i = 0; i < w.numel(); ++i) w[i] = 0.6 * rng.gaussian();
        params.push_back(w);
    }
    const double scale = 1.0 / (2.0 * d);
    auto f = [&](const std::vector<RealTensor>& p, std::vector<RealTensor>* grads) {
        Tape tape;
        const Var wq = tape.parameter(p[0]);
        const Var wk = tape.parameter(p[1]);
        const Var wv = tape.parameter(p[2]);
        const Var wo = tape.parameter(p[3]);
        const Var xin = tape.input(x);
        auto smooth = [&](Var h) {
            return tape.spike(tape.add_scalar(h, -cfg.threshold()), cfg, SpikeMode::Smooth);
        };
        auto pm1 = [&](Var s) { return tape.add_scalar(tape.scale(s, 2.0), -1.0); };
        const Var q = smooth(tape.matmul(xin, wq));
        const Var k = smooth(tape.matmul(xin, wk));
        const Var v = smooth(tape.matmul(xin, wv));
        const Var kv = tape.matmul(tape.transpose2d(pm1(k)), v);
        const Var pre = tape.scale(tape.matmul(pm1(q), kv), scale);
        const Var att = smooth(pre);
        const Var out = tape.matmul(att, wo);
        const Var loss = tape.mean_all(tape.mul(out, out));
        if (grads) {
            tape.backward(loss);
            *grads = {tape.grad(wq), tape.grad(wk), tape.grad(wv), tape.grad(wo)};
        }
        return tape.value(loss)[0];
    };
    return finite_diff_check(f, params, 1e-5).max_rel_error;
}

double channel_mlp_check() {
    Rng rng(2032);
    const std::size_t n = 6, d = 8;
    NeuronConfig cfg;
    RealTensor x(Shape{n, d});
    for (std::size_t i = 0; i < x.numel(); ++i) x[i] = 1.4 * rng.gaussian();
    std::vector<RealTensor> params;
    RealTensor w1(Shape{d, 4 * d});
    for (std::size_t i = 0; i < w1.numel(); ++i) w1[i] = 0.7 * rng.gaussian();
    RealTensor w2(Shape{4 * d, d});
    for (std::size_t i = 0; i < w2.numel(); ++i) w2[i] = 0.4 * rng.gaussian();
    params.push_back(w1);
    params.push_back(w2);
    auto f = [&](const std::vector<RealTensor>& p, std::vector<RealTensor>* grads) {
        Tape tape;
        const Var m1 = tape.parameter(p[0]);
        const Var m2 = tape.parameter(p[1]);
        auto smooth = [&](Var h) {
            return tape.spike(tape.add_scalar(h, -cfg.threshold()), cfg, SpikeMode::Smooth);
        };
        const Var s1 = smooth(tape.input(x));
        const Var h = tape.matmul(s1, m1);
        const Var s2 = smooth(h);
        const Var out = tape.matmul(s2, m2);
        const Var loss = tape.mean_all(tape.mul(out, out));
        if (grads) {
            tape.backward(loss);
            *grads = {tape.grad(m1), tape.grad(m2)};
        }
        return tape.value(loss)[0];
    };
    return finite_diff_check(f, params, 1e-5).max_rel_error;
}

Outcome criterion_gradients() {
    const double lif_err = lif_chain_check();
    const double sdha_err = sdha_block_check();
    const double mlp_err = channel_mlp_check();
    char buf[128];
    std::snprintf(buf, sizeof(buf), "rel err: LIF chain %.2g, SDHA %.2g, MLP %.2g (tol 1e-4)",
                  lif_err, sdha_err, mlp_err);
    return {lif_err < 1e-4 && sdha_err < 1e-4 && mlp_err < 1e-4, buf};
}

// --------------------------------------------------------------------------
// 10. Ablation-direction proxy on the toy task
// --------------------------------------------------------------------------

Outcome criterion_ablation() {
    ToyTask task;
    task.seed = 7;
    ToyTrainOptions options;
    AttentionSpec joint;
    joint.variant = AttentionVariant::Joint;
    joint.heads = 2;
    const std::size_t epochs = 25;
    const auto joint_run = train_toy(joint, task, epochs, 7, options);

    AttentionSpec spatial;
    spatial.variant = AttentionVariant::SpatialOnly;
    spatial.heads = 2;
    const auto spatial_run = train_toy(spatial, task, epochs, 7, options);

    char buf[96];
    std::snprintf(buf, sizeof(buf), "joint %.3f, spatial-only %.3f",
                  joint_run.final_accuracy, spatial_run.final_accuracy);
    const bool pass = joint_run.final_accuracy >= 0.90 && spatial_run.final_accuracy <= 0.60 &&
                      joint_run.final_accuracy - spatial_run.final_accuracy >= 0.10;
    return {pass, buf};
}

// --------------------------------------------------------------------------
// 11. CLI determinism: byte-identical CSV across reruns
// --------------------------------------------------------------------------

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

Outcome criterion_determinism() {
    if (g_cli_path.empty()) return {false, "no --cli path provided"};
    struct Case {
        std::string name;
        std::string args;
    };
    const std::vector<Case> cases = {
        {"jl-verify", "jl-verify --dims 16,64 --pairs 500 --C 16 --seed 11 --out {out}"},
        {"attn-bench", "attn-bench --variant joint --T-list 4,8 --N 4 --D 16 --M 2 --seed 11 --out {out}"},
        {"train-toy",
         "train-toy --variant joint --epochs 1 --seed 11 --train-size 8 --test-size 16 --out {out}"},
    };
    for (const auto& c : cases) {
        std::string first, second;
        for (int run = 0; run < 2; ++run) {
            const std::string out_path = "determinism_" + c.name + (run ? "_b.csv" : "_a.csv");
            std::string args = c.args;
            args.replace(args.find("{out}"), 5, out_path);
            const std::string cmd = g_cli_path + " " + args + " > /dev/null 2>&1";
            const int status = std::system(cmd.c_str());
            if (status == -1) return {false, c.name + ": could not launch the CLI"};
            (run ? second : first) = slurp(out_path);
            std::remove(out_path.c_str());
        }
        if (first.empty() || first != second) {
            return {false, c.name + " reruns differ or produced no CSV"};
        }
    }
    return {true, "jl-verify, attn-bench, train-toy reruns byte-identical"};
}

} // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--cli" && i + 1 < argc) g_cli_path = argv[++i];
        if (arg == "--only" && i + 1 < argc) only = std::atoi(argv[++i]);
    }

    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {"hamming identity exact (Eq. 7 route)", criterion_hamming_identity},
        {"SDHA linear == quadratic rearrangement", criterion_sdha_rearrangement},
        {"degenerate-query separation (signed vs dot scores)", criterion_fig2_separation},
        {"embedding error curve decreasing + tail bound", criterion_jl_bound},
        {"complexity slopes and analytic==dense counts", criterion_complexity},
        {"attention parameter counts 4/8/7 D^2", criterion_parameters},
        {"energy model identities", criterion_energy},
        {"neuron contracts (scale, soft reset, integer-LIF)", criterion_neuron},
        {"gradient checks vs finite differences", criterion_gradients},
        {"ablation direction proxy (joint vs spatial-only)", criterion_ablation},
        {"CLI determinism (byte-identical CSV)", criterion_determinism},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (only != 0 && static_cast<int>(i + 1) != only) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = criteria[i].run();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s  %2zu. %-52s %7.2fs  %s\n", outcome.pass ? "PASS" : "FAIL", i + 1,
                    criteria[i].name, seconds, outcome.detail.c_str());
        std::fflush(stdout);
        failures += outcome.pass ? 0 : 1;
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
