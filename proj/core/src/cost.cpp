#include "svt/cost.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "svt/attention.hpp"

namespace svt {

double OpCounter::total_dense() const {
    double n = 0.0;
    for (const auto& l : layers_) n += l.dense_ops;
    return n;
}

double OpCounter::total_measured() const {
    double n = 0.0;
    for (const auto& l : layers_) n += l.measured_ops;
    return n;
}

double OpCounter::total_rho() const {
    double dense = 0.0, weighted = 0.0;
    for (const auto& l : layers_) {
        dense += l.dense_ops;
        weighted += l.rho * l.dense_ops;
    }
    return dense > 0.0 ? weighted / dense : 0.0;
}

double OpCounter::dense_matching(const std::string& needle) const {
    double n = 0.0;
    for (const auto& l : layers_) {
        if (l.scope.find(needle) != std::string::npos) n += l.dense_ops;
    }
    return n;
}

double OpCounter::measured_matching(const std::string& needle) const {
    double n = 0.0;
    for (const auto& l : layers_) {
        if (l.scope.find(needle) != std::string::npos) n += l.measured_ops;
    }
    return n;
}

namespace {

CostReportRow make_row(const std::string& scope, double flops, double measured, double rho,
                       const EnergyConstants& constants) {
    CostReportRow row;
    row.scope = scope;
    row.analytic_flops = flops;
    row.measured_ops = measured;
    row.rho = rho;
    row.e_ann_pj = flops * constants.e_mac_pj;
    row.e_snn_pj = rho * flops * constants.e_ac_pj;
    return row;
}

} // namespace

CostReport CostReport::from_counter(const OpCounter& counter, EnergyConstants constants) {
    CostReport report;
    report.constants = constants;
    for (const auto& layer : counter.layers()) {
        report.rows.push_back(make_row(layer.scope, layer.dense_ops, layer.measured_ops,
                                       layer.rho, constants));
    }
    report.rows.push_back(make_row("total", counter.total_dense(), counter.total_measured(),
                                   counter.total_rho(), constants));
    return report;
}

void CostReport::write_csv(std::ostream& out) const {
    out << "scope,analytic_flops,measured_ops,rho,e_ann_pj,e_snn_pj\n";
    char buf[256];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g,%.17g\n", row.scope.c_str(),
                      row.analytic_flops, row.measured_ops, row.rho, row.e_ann_pj, row.e_snn_pj);
        out << buf;
    }
}

CostReport energy_report(double analytic_flops, double rho, EnergyConstants constants) {
    if (rho < 0.0 || rho > 1.0) {
        throw DomainError("energy_report: rho = " + std::to_string(rho) + " outside [0,1]");
    }
    if (analytic_flops < 0.0) throw DomainError("energy_report: negative flops");
    CostReport report;
    report.constants = constants;
    report.rows.push_back(make_row("total", analytic_flops, rho * analytic_flops, rho, constants));
    return report;
}

double flops_attention(AttentionVariant variant, std::size_t t, std::size_t n, std::size_t d,
                       std::size_t m) {
    if (t < 1 || n < 1 || d < 1 || m < 1 || d % m != 0) {
        throw DomainError("flops_attention: invalid dims");
    }
    const double tn = static_cast<double>(t) * static_cast<double>(n);
    const double dd = static_cast<double>(d) * static_cast<double>(d);
    const double d_h = static_cast<double>(d / m);
    const double att = 2.0 * tn * d_h * d_h * static_cast<double>(m);
    const double proj4 = 4.0 * tn * (dd + static_cast<double>(d));
    switch (variant) {
    case AttentionVariant::Joint:
    case AttentionVariant::NeuronLevel:
    case AttentionVariant::SpatialOnly:
        return att + proj4;
    case AttentionVariant::Hierarchical:
        // The temporal pass is skipped at T=1 (it would attend each token
        // to itself only), so a single pass remains.
        return t == 1 ? att + proj4 : 2.0 * (att + proj4);
    case AttentionVariant::Factorized:
        // Shared query + two full-width branch attentions + 2D->D output:
        // 4TN(D/M)^2 M + 5TN(D^2+D) + TN(2D^2+D).
        return 2.0 * att + 5.0 * tn * (dd + static_cast<double>(d)) +
               tn * (2.0 * dd + static_cast<double>(d));
    }
    throw DomainError("flops_attention: unknown variant");
}

double ann_joint_attention_flops(std::size_t t, std::size_t n, std::size_t d) {
    const double l = static_cast<double>(t) * static_cast<double>(n);
    return 2.0 * l * l * static_cast<double>(d);
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw DomainError("log_log_slope: need >= 2 points");
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (lx[i] - mx) * (ly[i] - my);
        den += (lx[i] - mx) * (lx[i] - mx);
    }
    return num / den;
}

void ScalingProbeResult::write_csv(std::ostream& out) const {
    out << "T,analytic_flops,measured_attention_ops,ann_baseline_ops,params\n";
    char buf[256];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%zu\n", row.t, row.analytic_flops,
                      row.measured_attention_ops, row.ann_baseline_ops, row.params);
        out << buf;
    }
}

ScalingProbeResult scaling_probe(const AttentionSpec& base_spec,
                                 const std::vector<std::size_t>& t_list, std::uint64_t seed) {
    if (t_list.size() < 2) throw DomainError("scaling_probe: need at least two T values");
    for (std::size_t i = 0; i + 1 < t_list.size(); ++i) {
        if (t_list[i] >= t_list[i + 1]) throw DomainError("scaling_probe: T list must increase");
    }
    ScalingProbeResult result;
    std::vector<double> ts, spike_ops, ann_ops;
    for (std::size_t t : t_list) {
        AttentionSpec spec = base_spec;
        spec.t = t;
        // Leak-free neurons make the per-step spike statistics identical
        // across T, so the count isolates the complexity scaling instead of
        // the membrane warm-up transient.
        spec.neuron.beta = 0.0;
        spec.validate();
        Rng rng(seed);
        const AttentionWeights weights = AttentionWeights::init(spec, rng);
        Rng input_rng = rng.child(t);
        const SpikeTensor x = SpikeTensor::random(Shape{1, spec.t, spec.n, spec.d}, input_rng);
        OpCounter counter;
        space_time_attention(x, spec, weights, &counter);

        ScalingProbeRow row;
        row.t = t;
        row.analytic_flops = flops_attention(spec.variant, spec.t, spec.n, spec.d, spec.heads);
        row.measured_attention_ops = counter.measured_matching(".att_");
        row.ann_baseline_ops = ann_joint_attention_flops(spec.t, spec.n, spec.d);
        row.params = param_count(spec);
        result.rows.push_back(row);

        ts.push_back(static_cast<double>(t));
        spike_ops.push_back(row.measured_attention_ops);
        ann_ops.push_back(row.ann_baseline_ops);
    }
    result.spike_slope = log_log_slope(ts, spike_ops);
    result.ann_slope = log_log_slope(ts, ann_ops);
    return result;
}

} // namespace svt
