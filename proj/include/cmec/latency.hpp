#pragma once

#include <span>
#include <vector>

#include "cmec/scenario.hpp"

namespace cmec {

/// Offloading ratios and ES shares for all UEs.
///   ratios_cn[m * K + k]  fraction of UE m's task run on COIN node k+1 (lambda)
///   ratio_es[m]           fraction run on the ES (aleph)
///   es_share[m]           fraction of ES capacity granted to UE m (beta)
struct OffloadPlan {
    int n_ues = 0;
    int n_cns = 0;
    std::vector<double> ratios_cn;
    std::vector<double> ratio_es;
    std::vector<double> es_share;

    OffloadPlan() = default;
    OffloadPlan(int ues, int cns);

    double& lambda(int m, int k) { return ratios_cn[static_cast<std::size_t>(m) * n_cns + k]; }
    double lambda(int m, int k) const { return ratios_cn[static_cast<std::size_t>(m) * n_cns + k]; }
    std::span<const double> lambdas(int m) const {
        return {ratios_cn.data() + static_cast<std::size_t>(m) * n_cns, static_cast<std::size_t>(n_cns)};
    }
    double offloaded_fraction(int m) const;
};

/// Per-UE slice of a plan.
struct PlanRow {
    std::span<const double> ratios_cn;
    double ratio_es = 0.0;
    double es_share = 0.0;
};

PlanRow row_of(const OffloadPlan& plan, int m);

struct LatencyBreakdown {
    double t_tx = 0.0;
    double t_cn_est = 0.0;
    double t_cn_gap = 0.0;
    double t_cn = 0.0;
    double t_es_est = 0.0;
    double t_es_gap = 0.0;
    double t_es = 0.0;
    double t_e2e = 0.0;
    bool feasible = true;
};

/// lambda * C / f for a single CN.
double cn_estimated_latency(double lambda, double cycles, double f_cn);
/// Slowest of several CN portions; 0 when every lambda is 0.
double cn_estimated_latency(std::span<const double> lambdas, double cycles, std::span<const double> f_cn);
/// Twin gap lambda C f~ / (f (f - f~)).
double cn_latency_gap(double lambda, double cycles, double f_cn, double f_dev);

struct EsLatency {
    double est = 0.0;
    double gap = 0.0;
    double total = 0.0;
    bool feasible = true;
};

/// ES portion executed at rate beta * F_es with deviation
/// `deviation_fraction` of that rate.
EsLatency es_latency(double aleph, double cycles, double beta, double es_capacity_hz,
                     double deviation_fraction);

/// End-to-end latency: CN compute + uplink + ES compute, each with the twin
/// correction. Every destination shares the UE's single uplink rate.
LatencyBreakdown e2e_latency(const PlanRow& row, const TaskSpec& task, double rate_bps,
                             std::span<const ComputeNode> nodes);

/// Latency of sending the whole task to the ES with share `beta`.
double full_es_reference_latency(const TaskSpec& task, double rate_bps, const ComputeNode& es,
                                 double beta);

/// Latency of executing the whole task on the UE itself.
double local_latency(const TaskSpec& task, const UeState& ue);

}  // namespace cmec
