// svt: spiking attention verification workbench.
//
// Subcommands run the library's verification suites and experiments and
// write CSV reports. Exit codes: 0 success, 1 usage or I/O error,
// 2 verification failure, 3 numerical divergence.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "svt/attention.hpp"
#include "svt/blocks.hpp"
#include "svt/config.hpp"
#include "svt/cost.hpp"
#include "svt/embedding.hpp"
#include "svt/tensor_io.hpp"
#include "svt/train.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitVerificationFailed = 2;
constexpr int kExitDiverged = 3;

std::vector<std::size_t> parse_size_list(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(static_cast<std::size_t>(std::stoull(item)));
    }
    return out;
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw svt::IoError("cannot open for writing: " + path);
    out << contents;
    if (!out) throw svt::IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// jl-verify
// ---------------------------------------------------------------------------

int cmd_jl_verify(std::size_t c, const std::vector<std::size_t>& dims, std::size_t pairs,
                  std::uint64_t seed, double delta, const std::string& out_path) {
    if (pairs == 0 || dims.empty() || c < 2) {
        std::cerr << "jl-verify: need --pairs >= 1, a nonempty --dims list and C >= 2\n";
        return kExitUsage;
    }
    const svt::ErrorCurve curve = svt::jl_error_experiment(c, dims, pairs, seed);
    if (!out_path.empty()) {
        std::ostringstream csv;
        curve.write_csv(csv);
        write_file(out_path, csv.str());
    }
    char line[160];
    for (const auto& row : curve.rows) {
        std::snprintf(line, sizeof(line), "D=%-6zu mean|f_H - g(f_C)| = %.6f   max = %.6f\n",
                      row.d, row.mean_error, row.max_error);
        std::cout << line;
    }

    bool ok = curve.mean_error_decreasing_3sigma();
    if (!ok) std::cout << "FAIL: mean error is not decreasing in D (3-sigma slack)\n";

    const std::size_t d_largest = dims.back();
    const auto conc = svt::concentration_check(c, d_largest, pairs, delta, seed + 1);
    std::snprintf(line, sizeof(line),
                  "concentration at D=%zu, delta=%g: observed %.3g vs bound %.3g (+%.3g slack)\n",
                  d_largest, delta, conc.observed_rate, conc.bound, conc.slack_3sigma);
    std::cout << line;
    if (!conc.within_bound()) {
        std::cout << "FAIL: observed violation rate exceeds the tail bound\n";
        ok = false;
    }
    std::cout << (ok ? "jl-verify: PASS\n" : "jl-verify: FAIL\n");
    return ok ? kExitOk : kExitVerificationFailed;
}

// ---------------------------------------------------------------------------
// equiv-check
// ---------------------------------------------------------------------------

struct EquivFailure {
    std::string what;
};

bool check_hamming_identity(std::size_t trials, std::size_t max_dims, svt::Rng& rng,
                            std::vector<EquivFailure>& failures, bool inject_fault) {
    using namespace svt;
    // Exhaustive tier at D <= 6.
    const std::size_t d_small = std::min<std::size_t>(6, max_dims);
    for (std::uint64_t qb = 0; qb < (1ull << d_small); ++qb) {
        for (std::uint64_t kb = 0; kb < (1ull << d_small); ++kb) {
            SpikeTensor q(Shape{d_small}), k(Shape{d_small});
            for (std::size_t i = 0; i < d_small; ++i) {
                q.set_flat(i, (qb >> i) & 1u);
                k.set_flat(i, (kb >> i) & 1u);
            }
            double identity = hamming_identity(q, k);
            if (inject_fault && qb == 1 && kb == 0) identity += 1.0 / (2.0 * d_small);
            if (std::abs(identity - hamming_similarity(q, k)) > 1e-12) {
                failures.push_back({"hamming identity mismatch at D=" + std::to_string(d_small) +
                                    " q=" + std::to_string(qb) + " k=" + std::to_string(kb)});
                return false;
            }
        }
    }
    // Random tier.
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const std::size_t d = 1 + rng.next_below(std::max<std::size_t>(1, max_dims));
        const SpikeTensor q = SpikeTensor::random(Shape{d}, rng);
        const SpikeTensor k = SpikeTensor::random(Shape{d}, rng);
        if (std::abs(hamming_identity(q, k) - hamming_similarity(q, k)) > 1e-12) {
            failures.push_back({"hamming identity mismatch at random D=" + std::to_string(d) +
                                " trial=" + std::to_string(trial)});
            return false;
        }
    }
    return true;
}

bool check_rearrangement(std::size_t trials, std::size_t max_dims, svt::Rng& rng,
                         std::vector<EquivFailure>& failures) {
    using namespace svt;
    NeuronConfig cfg;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const std::size_t l = 1 + rng.next_below(std::max<std::size_t>(1, max_dims));
        const std::size_t d = 1 + rng.next_below(std::max<std::size_t>(1, max_dims));
        SpikeTensor q = SpikeTensor::random(Shape{l, d}, rng);
        const SpikeTensor k = SpikeTensor::random(Shape{l, d}, rng);
        const SpikeTensor v = SpikeTensor::random(Shape{l, d}, rng);
        if (l >= 2) {
            for (std::size_t i = 0; i < d; ++i) {
                q.set_flat(i, false);
                q.set_flat(d + i, true);
            }
        }
        if (!(sdha(q, k, v, 0.0, cfg) == sdha_quadratic(q, k, v, 0.0, cfg))) {
            failures.push_back({"sdha linear/quadratic mismatch at L=" + std::to_string(l) +
                                " D=" + std::to_string(d) + " trial=" + std::to_string(trial)});
            return false;
        }
        if (!(sdsa_dot(q, k, v, 0.125, cfg) == sdsa_dot_quadratic(q, k, v, 0.125, cfg))) {
            failures.push_back({"sdsa linear/quadratic mismatch at L=" + std::to_string(l) +
                                " D=" + std::to_string(d)});
            return false;
        }
    }
    return true;
}

bool check_threshold_scaling(std::size_t trials, svt::Rng& rng,
                             std::vector<EquivFailure>& failures) {
    using namespace svt;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const double sigma = std::ldexp(1.0, static_cast<int>(rng.next_below(17)) - 8);
        NeuronConfig scaled;
        scaled.s = sigma;
        NeuronConfig unit;
        RealTensor x(Shape{8, 4});
        for (std::size_t i = 0; i < x.numel(); ++i) x[i] = 2.0 * sigma * rng.gaussian();
        RealTensor x_over(Shape{8, 4});
        for (std::size_t i = 0; i < x.numel(); ++i) x_over[i] = x[i] / sigma;
        if (!(lif_sequence(x, scaled) == lif_sequence(x_over, unit))) {
            failures.push_back({"threshold-scale mismatch at sigma=" + std::to_string(sigma) +
                                " trial=" + std::to_string(trial)});
            return false;
        }
    }
    return true;
}

int cmd_equiv_check(std::size_t trials, std::size_t max_dims, std::uint64_t seed,
                    bool self_test) {
    if (trials == 0 || max_dims == 0) {
        std::cerr << "equiv-check: --trials and --max-dims must be >= 1\n";
        return kExitUsage;
    }
    svt::Rng rng(seed);
    std::vector<EquivFailure> failures;
    const bool identity_ok = check_hamming_identity(trials, max_dims, rng, failures, self_test);
    std::cout << "hamming identity (exhaustive D<=6 + random): "
              << (identity_ok ? "ok" : "MISMATCH") << "\n";
    const bool rearrange_ok = check_rearrangement(trials, max_dims, rng, failures);
    std::cout << "linear vs quadratic evaluation (sdha, sdsa): "
              << (rearrange_ok ? "ok" : "MISMATCH") << "\n";
    const bool scaling_ok = check_threshold_scaling(trials, rng, failures);
    std::cout << "LIF threshold-scale equivalence: " << (scaling_ok ? "ok" : "MISMATCH") << "\n";
    const bool ok = identity_ok && rearrange_ok && scaling_ok;

    for (const auto& failure : failures) {
        std::cout << "reproducer: seed=" << seed << " " << failure.what << "\n";
    }
    std::cout << (ok ? "equiv-check: PASS\n" : "equiv-check: FAIL\n");
    return ok ? kExitOk : kExitVerificationFailed;
}

// ---------------------------------------------------------------------------
// attn-bench
// ---------------------------------------------------------------------------

int cmd_attn_bench(const std::string& variant, const std::string& score,
                   const std::vector<std::size_t>& t_list, std::size_t n, std::size_t d,
                   std::size_t m, double score_scale, std::uint64_t seed,
                   const std::string& out_path) {
    svt::AttentionSpec spec;
    spec.variant = svt::attention_variant_from_string(variant);
    spec.score = svt::score_kind_from_string(score);
    spec.n = n;
    spec.d = d;
    spec.heads = m;
    spec.score_scale = score_scale;
    spec.t = t_list.empty() ? 1 : t_list.front();
    spec.validate();

    const svt::ScalingProbeResult probe = svt::scaling_probe(spec, t_list, seed);
    if (!out_path.empty()) {
        std::ostringstream csv;
        probe.write_csv(csv);
        write_file(out_path, csv.str());
    }
    char line[160];
    std::snprintf(line, sizeof(line),
                  "spike measured-op slope: %.4f   quadratic baseline slope: %.4f\n",
                  probe.spike_slope, probe.ann_slope);
    std::cout << line;
    std::snprintf(line, sizeof(line), "params(%s, D=%zu) = %zu\n", variant.c_str(), d,
                  svt::param_count(spec));
    std::cout << line;
    return kExitOk;
}

// ---------------------------------------------------------------------------
// energy-report
// ---------------------------------------------------------------------------

int cmd_energy_report(const std::string& config_path, const std::string& input_path,
                      const std::string& out_path) {
    svt::WorkbenchConfig cfg =
        config_path.empty() ? svt::WorkbenchConfig::defaults() : svt::WorkbenchConfig::load(config_path);
    const svt::RealTensor input = svt::load_svt1_real(input_path);
    const svt::Backbone backbone = svt::build_backbone(cfg.backbone);

    svt::OpCounter counter;
    backbone.forward(input, &counter);
    const svt::CostReport report = svt::CostReport::from_counter(counter, cfg.cost);
    std::ostringstream csv;
    report.write_csv(csv);
    if (!out_path.empty()) {
        write_file(out_path, csv.str());
    } else {
        std::cout << csv.str();
    }
    char line[160];
    std::snprintf(line, sizeof(line),
                  "total: %.0f dense ops, %.0f measured, e_ann %.1f pJ, e_snn %.1f pJ\n",
                  report.total().analytic_flops, report.total().measured_ops,
                  report.total().e_ann_pj, report.total().e_snn_pj);
    std::cout << line;
    return kExitOk;
}

// ---------------------------------------------------------------------------
// train-toy
// ---------------------------------------------------------------------------

int cmd_train_toy(const std::string& variant, const std::string& score, double score_scale,
                  std::size_t epochs, std::uint64_t seed, std::size_t train_size,
                  std::size_t test_size, const std::string& out_path) {
    svt::AttentionSpec spec;
    spec.variant = svt::attention_variant_from_string(variant);
    spec.score = svt::score_kind_from_string(score);
    spec.score_scale = score_scale;
    spec.heads = 2;

    svt::ToyTask task;
    task.seed = seed;
    svt::ToyTrainOptions options;
    if (train_size > 0) options.train_size = train_size;
    if (test_size > 0) options.test_size = test_size;

    const svt::ToyTrainResult result = svt::train_toy(spec, task, epochs, seed, options);
    if (!out_path.empty()) {
        std::ostringstream csv;
        result.write_csv(csv);
        write_file(out_path, csv.str());
    }
    char line[160];
    std::snprintf(line, sizeof(line), "final accuracy: %.4f over %zu held-out sequences\n",
                  result.final_accuracy, options.test_size);
    std::cout << line;

    // Pass bars: joint must reach 0.90; spatial-only must stay at or below
    // 0.60 (the temporal signal is unreachable by construction); the other
    // variants must clear 0.70.
    bool ok = false;
    switch (spec.variant) {
    case svt::AttentionVariant::Joint:
        ok = result.final_accuracy >= 0.90;
        break;
    case svt::AttentionVariant::SpatialOnly:
        ok = result.final_accuracy <= 0.60;
        break;
    default:
        ok = result.final_accuracy >= 0.70;
        break;
    }
    std::cout << (ok ? "train-toy: PASS\n" : "train-toy: FAIL (threshold missed)\n");
    return ok ? kExitOk : kExitVerificationFailed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"spiking attention kernels and verification workbench"};
    app.require_subcommand(1);

    // jl-verify
    auto* jl = app.add_subcommand("jl-verify", "binary-embedding error curve and tail bound");
    std::string jl_dims = "16,64,256,1024";
    std::size_t jl_pairs = 10000, jl_c = 64;
    std::uint64_t jl_seed = 7;
    double jl_delta = 0.1;
    std::string jl_out;
    jl->add_option("--dims", jl_dims, "comma-separated embedding sizes");
    jl->add_option("--pairs", jl_pairs, "random unit-vector pairs");
    jl->add_option("--seed", jl_seed, "rng seed");
    jl->add_option("--C", jl_c, "input dimension");
    jl->add_option("--delta", jl_delta, "tail bound threshold");
    jl->add_option("--out", jl_out, "output CSV path");

    // equiv-check
    auto* equiv = app.add_subcommand("equiv-check", "exact identity and rearrangement checks");
    std::size_t eq_trials = 100, eq_max_dims = 64;
    std::uint64_t eq_seed = 7;
    bool eq_self_test = false;
    equiv->add_option("--trials", eq_trials, "random instances per check");
    equiv->add_option("--max-dims", eq_max_dims, "maximum token/channel extent");
    equiv->add_option("--seed", eq_seed, "rng seed");
    equiv->add_flag("--self-test", eq_self_test, "inject a fault; the run must fail");

    // attn-bench
    auto* bench = app.add_subcommand("attn-bench", "attention scaling probe");
    std::string bench_variant = "joint", bench_score = "hamming", bench_tlist = "4,8,16,32,64";
    std::size_t bench_n = 16, bench_d = 32, bench_m = 4;
    double bench_scale = 0.0;
    std::uint64_t bench_seed = 7;
    std::string bench_out;
    bench->add_option("--variant", bench_variant, "joint|hierarchical|factorized|neuron_level|spatial_only");
    bench->add_option("--score", bench_score, "hamming|dot");
    bench->add_option("--T-list", bench_tlist, "comma-separated time extents");
    bench->add_option("--N", bench_n, "spatial tokens");
    bench->add_option("--D", bench_d, "channels");
    bench->add_option("--M", bench_m, "heads");
    bench->add_option("--score-scale", bench_scale,
                      "pre-activation scale s (0 = default: 1/(2*Dh) hamming, 1/8 dot)");
    bench->add_option("--seed", bench_seed, "rng seed");
    bench->add_option("--out", bench_out, "output CSV path");

    // energy-report
    auto* energy = app.add_subcommand("energy-report", "instrumented backbone cost report");
    std::string energy_config, energy_input, energy_out;
    energy->add_option("--config", energy_config, "workbench config file");
    energy->add_option("--input", energy_input, "input tensor (SVT1, f64)")->required();
    energy->add_option("--out", energy_out, "output CSV path");

    // train-toy
    auto* train = app.add_subcommand("train-toy", "train the two-block model on the drifting-bar task");
    std::string train_variant = "joint", train_score = "hamming", train_out;
    std::size_t train_epochs = 30, train_train_size = 0, train_test_size = 0;
    double train_scale = 0.0;
    std::uint64_t train_seed = 7;
    train->add_option("--variant", train_variant, "attention variant");
    train->add_option("--score", train_score, "hamming|dot");
    train->add_option("--score-scale", train_scale,
                      "pre-activation scale s (0 = default: 1/(2*Dh) hamming, 1/8 dot)");
    train->add_option("--epochs", train_epochs, "training epochs");
    train->add_option("--seed", train_seed, "rng seed");
    train->add_option("--train-size", train_train_size, "training sequences (default 256)");
    train->add_option("--test-size", train_test_size, "held-out sequences (default 512)");
    train->add_option("--out", train_out, "training log CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (jl->parsed()) {
            return cmd_jl_verify(jl_c, parse_size_list(jl_dims), jl_pairs, jl_seed, jl_delta, jl_out);
        }
        if (equiv->parsed()) {
            return cmd_equiv_check(eq_trials, eq_max_dims, eq_seed, eq_self_test);
        }
        if (bench->parsed()) {
            return cmd_attn_bench(bench_variant, bench_score, parse_size_list(bench_tlist),
                                  bench_n, bench_d, bench_m, bench_scale, bench_seed, bench_out);
        }
        if (energy->parsed()) {
            return cmd_energy_report(energy_config, energy_input, energy_out);
        }
        if (train->parsed()) {
            return cmd_train_toy(train_variant, train_score, train_scale, train_epochs,
                                 train_seed, train_train_size, train_test_size, train_out);
        }
    } catch (const svt::DivergenceError& e) {
        std::cerr << "diverged: " << e.what() << "\n";
        return kExitDiverged;
    } catch (const svt::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const svt::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const svt::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
