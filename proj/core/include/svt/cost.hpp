#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "svt/attention_types.hpp"

namespace svt {

// 45nm per-operation energies; configuration values, not constants baked
// into formulas.
struct EnergyConstants {
    double e_mac_pj = 4.6;
    double e_ac_pj = 0.9;
};

// One instrumented layer.
//
// dense_ops     modeled accumulate count of the layer at full density
// measured_ops  accumulates actually performed. {0,1}-operand kernels skip
//               zeros of their gating spike operand (nnz * fanout). Kernels
//               whose spike operand carries the {-1,+1} mapping cannot skip
//               on it and count one accumulate per position, except that a
//               head whose integer operand is identically zero (nothing
//               spiked upstream) performs no work at all.
// rho           fraction of ones in the gating spike operand
struct LayerCost {
    std::string scope;
    double dense_ops = 0.0;
    double measured_ops = 0.0;
    double rho = 0.0;
    bool spike_operand = true;  // every contraction input was {0,1} or {-1,+1}
};

// Per-invocation accumulator threaded through forwards; never global, safe
// under parallel test execution.
class OpCounter {
public:
    void add(LayerCost layer) { layers_.push_back(std::move(layer)); }
    const std::vector<LayerCost>& layers() const { return layers_; }
    bool empty() const { return layers_.empty(); }

    double total_dense() const;
    double total_measured() const;
    // Dense-weighted average rho, so e_snn identities hold on the total row.
    double total_rho() const;

    // Sums rows whose scope contains the substring.
    double dense_matching(const std::string& needle) const;
    double measured_matching(const std::string& needle) const;

private:
    std::vector<LayerCost> layers_;
};

// Energy summary rows; e_ann = flops * e_mac, e_snn = rho * flops * e_ac.
struct CostReportRow {
    std::string scope;
    double analytic_flops = 0.0;
    double measured_ops = 0.0;
    double rho = 0.0;
    double e_ann_pj = 0.0;
    double e_snn_pj = 0.0;
};

struct CostReport {
    std::vector<CostReportRow> rows;  // per layer, then a "total" row
    EnergyConstants constants;

    const CostReportRow& total() const { return rows.back(); }
    void write_csv(std::ostream& out) const;  // scope,analytic_flops,measured_ops,rho,e_ann_pj,e_snn_pj

    static CostReport from_counter(const OpCounter& counter, EnergyConstants constants = {});
};

// Single-row report from an analytic count and a spiking rate; DomainError
// when rho is outside [0,1].
CostReport energy_report(double analytic_flops, double rho, EnergyConstants constants = {});

// Dense accumulate count of one spike-driven space-time attention module,
// exactly what the instrumented forward performs at full density:
//   joint (and the per-step neuron-level / spatial-only layouts):
//       2*T*N*(D/M)^2*M + 4*T*N*(D^2 + D)
//   hierarchical: twice the joint count (one pass at T=1, where the
//       temporal pass is skipped)
//   factorized:   4*T*N*(D/M)^2*M + 7*T*N*D^2 + 6*T*N*D
// Linear in T and in N for every variant.
double flops_attention(AttentionVariant variant, std::size_t t, std::size_t n, std::size_t d,
                       std::size_t m);

// Real-valued joint space-time attention core (scores then weighting),
// 2*(T*N)^2*D accumulates: the quadratic-in-T baseline.
double ann_joint_attention_flops(std::size_t t, std::size_t n, std::size_t d);

struct ScalingProbeRow {
    std::size_t t = 0;
    double analytic_flops = 0.0;
    double measured_attention_ops = 0.0;  // attention-core measured accumulates
    double ann_baseline_ops = 0.0;
    std::size_t params = 0;
};

struct ScalingProbeResult {
    std::vector<ScalingProbeRow> rows;
    double spike_slope = 0.0;  // log-log fit of measured attention ops vs T
    double ann_slope = 0.0;    // log-log fit of the quadratic baseline vs T
    void write_csv(std::ostream& out) const;
};

// Runs the attention forward at each T on seeded random spike input,
// counting attention-core accumulates, and fits log-log slopes. The probe
// forces leak-free neurons so spike statistics do not drift with T.
ScalingProbeResult scaling_probe(const AttentionSpec& base_spec,
                                 const std::vector<std::size_t>& t_list, std::uint64_t seed);

// Least-squares slope of log(y) against log(x).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace svt
