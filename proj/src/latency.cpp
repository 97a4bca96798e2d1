#include "cmec/latency.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cmec/channel.hpp"

namespace cmec {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

OffloadPlan::OffloadPlan(int ues, int cns)
    : n_ues(ues),
      n_cns(cns),
      ratios_cn(static_cast<std::size_t>(ues) * cns, 0.0),
      ratio_es(static_cast<std::size_t>(ues), 0.0),
      es_share(static_cast<std::size_t>(ues), 0.0) {}

double OffloadPlan::offloaded_fraction(int m) const {
    double s = ratio_es[m];
    for (double l : lambdas(m)) s += l;
    return s;
}

PlanRow row_of(const OffloadPlan& plan, int m) {
    return {plan.lambdas(m), plan.ratio_es[m], plan.es_share[m]};
}

double cn_estimated_latency(double lambda, double cycles, double f_cn) {
    if (!(f_cn > 0.0)) throw std::invalid_argument("cn_estimated_latency: f_cn must be positive");
    return lambda * cycles / f_cn;
}

double cn_estimated_latency(std::span<const double> lambdas, double cycles,
                            std::span<const double> f_cn) {
    double worst = 0.0;
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        worst = std::max(worst, cn_estimated_latency(lambdas[k], cycles, f_cn[k]));
    }
    return worst;
}

double cn_latency_gap(double lambda, double cycles, double f_cn, double f_dev) {
    if (!(f_cn - f_dev > 0.0) || f_dev < 0.0) {
        throw std::invalid_argument("cn_latency_gap: requires f_cn > f_dev >= 0");
    }
    return lambda * cycles * f_dev / (f_cn * (f_cn - f_dev));
}

EsLatency es_latency(double aleph, double cycles, double beta, double es_capacity_hz,
                     double deviation_fraction) {
    if (aleph <= 0.0) return {};
    const double rate = beta * es_capacity_hz;
    const double dev = deviation_fraction * rate;
    if (!(rate - dev > 0.0)) return {kInf, kInf, kInf, false};
    EsLatency out;
    out.est = aleph * cycles / rate;
    out.gap = aleph * cycles * dev / (rate * (rate - dev));
    out.total = out.est + out.gap;
    return out;
}

LatencyBreakdown e2e_latency(const PlanRow& row, const TaskSpec& task, double rate_bps,
                             std::span<const ComputeNode> nodes) {
    const std::size_t k_count = row.ratios_cn.size();
    if (nodes.size() != k_count + 1) {
        throw std::invalid_argument("e2e_latency: node list must be ES + one entry per CN ratio");
    }
    LatencyBreakdown lb;

    std::vector<double> bits(k_count + 1);
    std::vector<double> rates(k_count + 1, rate_bps);
    bits[0] = row.ratio_es * task.input_bits;
    for (std::size_t k = 0; k < k_count; ++k) bits[k + 1] = row.ratios_cn[k] * task.input_bits;
    lb.t_tx = transmission_latency(bits, rates);

    for (std::size_t k = 0; k < k_count; ++k) {
        const double lambda = row.ratios_cn[k];
        if (lambda <= 0.0) continue;
        const auto& node = nodes[k + 1];
        const double est = cn_estimated_latency(lambda, task.cycles, node.capacity_hz);
        const double gap = cn_latency_gap(lambda, task.cycles, node.capacity_hz, node.twin_deviation_hz);
        lb.t_cn_est = std::max(lb.t_cn_est, est);
        lb.t_cn = std::max(lb.t_cn, est + gap);
    }
    lb.t_cn_gap = lb.t_cn - lb.t_cn_est;

    const auto& es = nodes[0];
    const auto es_part = es_latency(row.ratio_es, task.cycles, row.es_share, es.capacity_hz,
                                    es.deviation_fraction());
    lb.t_es_est = es_part.est;
    lb.t_es_gap = es_part.gap;
    lb.t_es = es_part.total;

    lb.t_e2e = lb.t_cn + lb.t_tx + lb.t_es;
    lb.feasible = std::isfinite(lb.t_e2e) && es_part.feasible && lb.t_e2e <= task.max_latency_s;
    return lb;
}

double full_es_reference_latency(const TaskSpec& task, double rate_bps, const ComputeNode& es,
                                 double beta) {
    const double t_tx = rate_bps > 0.0 ? task.input_bits / rate_bps : kInf;
    const auto es_part = es_latency(1.0, task.cycles, beta, es.capacity_hz, es.deviation_fraction());
    return t_tx + es_part.total;
}

double local_latency(const TaskSpec& task, const UeState& ue) {
    return task.cycles / ue.local_rate_hz;
}

}  // namespace cmec
