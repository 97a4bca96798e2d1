#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "cmec/latency.hpp"

using namespace cmec;

namespace {

ComputeNode node(NodeKind kind, double f, double dev_pct, double cost) {
    return {kind, f, f * dev_pct / 100.0, cost};
}

}  // namespace

TEST_CASE("CN estimated latency") {
    CHECK(cn_estimated_latency(1.0, 1e8, 5e9) == doctest::Approx(0.02));
    const std::vector<double> lambdas{0.5, 1.0};
    const std::vector<double> caps{5e9, 5e9};
    CHECK(cn_estimated_latency(lambdas, 1e8, caps) == doctest::Approx(0.02));
    const std::vector<double> zeros{0.0, 0.0};
    CHECK(cn_estimated_latency(zeros, 1e8, caps) == 0.0);
    CHECK_THROWS(cn_estimated_latency(1.0, 1e8, 0.0));
}

TEST_CASE("CN twin gap and the corrected total") {
    const double gap = cn_latency_gap(0.5, 1e8, 5e9, 5e8);
    CHECK(gap == doctest::Approx(1.1111e-3).epsilon(1e-4));
    const double total = cn_estimated_latency(0.5, 1e8, 5e9) + gap;
    CHECK(total == doctest::Approx(0.5 * 1e8 / 4.5e9).epsilon(1e-12));
    CHECK(total == doctest::Approx(0.011111).epsilon(1e-4));
    CHECK(cn_latency_gap(0.5, 1e8, 5e9, 0.0) == 0.0);
    CHECK_THROWS(cn_latency_gap(0.5, 1e8, 5e9, 5e9));
}

TEST_CASE("ES latency") {
    auto es = es_latency(1.0, 1e8, 1.0, 3e10, 0.0);
    CHECK(es.total == doctest::Approx(3.333e-3).epsilon(1e-3));
    CHECK(es.gap == 0.0);
    es = es_latency(1.0, 1e8, 1.0, 3e10, 0.05);
    CHECK(es.total == doctest::Approx(1e8 / 2.85e10).epsilon(1e-12));
    CHECK(es.total == doctest::Approx(3.509e-3).epsilon(1e-3));
    es = es_latency(0.0, 1e8, 0.0, 3e10, 0.05);
    CHECK(es.total == 0.0);
    CHECK(es.feasible);
    es = es_latency(0.5, 1e8, 0.0, 3e10, 0.05);
    CHECK_FALSE(es.feasible);
    CHECK(std::isinf(es.total));
}

TEST_CASE("full-ES reference latency") {
    const auto task = TaskSpec::make(8e6, 1e8, 1.0);
    const auto es = node(NodeKind::EdgeServer, 3e10, 5.0, 0.3);
    // 1 ms uplink plus the corrected ES time.
    const double ref = full_es_reference_latency(task, 8e6 / 1e-3, es, 1.0);
    CHECK(ref == doctest::Approx(4.509e-3).epsilon(1e-3));
    CHECK(std::isinf(full_es_reference_latency(task, 0.0, es, 1.0)));
}

TEST_CASE("e2e latency is CN + uplink + ES for random plans") {
    Rng rng = make_rng(99, 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        const int k_count = 1 + trial % 5;
        std::vector<ComputeNode> nodes{node(NodeKind::EdgeServer, 3e10, 5.0, 0.3)};
        for (int k = 0; k < k_count; ++k) nodes.push_back(node(NodeKind::CoinNode, 1e9 + 9e9 * u(rng), 5.0, 0.05));
        const auto task = TaskSpec::make(8e6 + 7.2e7 * u(rng), 1e6 + 9.9e7 * u(rng), 1e9);
        const double rate = 1e6 + 1e8 * u(rng);

        std::vector<double> w(k_count + 1);
        for (auto& x : w) x = u(rng) < 0.3 ? 0.0 : u(rng);
        double s = std::accumulate(w.begin(), w.end(), 0.0);
        if (s == 0.0) {
            w[0] = 1.0;
            s = 1.0;
        }
        for (auto& x : w) x /= s;
        std::vector<double> lambdas(w.begin() + 1, w.end());
        const double beta = 0.05 + 0.95 * u(rng);
        const PlanRow row{lambdas, w[0], beta};
        const auto lb = e2e_latency(row, task, rate, nodes);

        double t_cn = 0.0;
        double t_tx = 0.0;
        for (int k = 0; k < k_count; ++k) {
            if (lambdas[k] <= 0.0) continue;
            t_cn = std::max(t_cn, lambdas[k] * task.cycles / nodes[k + 1].effective_rate_hz());
            t_tx = std::max(t_tx, lambdas[k] * task.input_bits / rate);
        }
        double t_es = 0.0;
        if (w[0] > 0.0) {
            t_es = w[0] * task.cycles / (beta * 3e10 * 0.95);
            t_tx = std::max(t_tx, w[0] * task.input_bits / rate);
        }
        REQUIRE(lb.t_cn == doctest::Approx(t_cn).epsilon(1e-12));
        REQUIRE(lb.t_tx == doctest::Approx(t_tx).epsilon(1e-12));
        REQUIRE(lb.t_es == doctest::Approx(t_es).epsilon(1e-12));
        REQUIRE(lb.t_e2e == doctest::Approx(t_cn + t_tx + t_es).epsilon(1e-12));
        REQUIRE(lb.t_e2e >= lb.t_tx);
        REQUIRE(lb.t_cn_est + lb.t_cn_gap == doctest::Approx(lb.t_cn).epsilon(1e-12));
        REQUIRE(lb.t_es_est + lb.t_es_gap == doctest::Approx(lb.t_es).epsilon(1e-12));
    }
}

TEST_CASE("latency falls as resources grow") {
    const std::vector<ComputeNode> nodes{node(NodeKind::EdgeServer, 3e10, 5.0, 0.3),
                                         node(NodeKind::CoinNode, 5e9, 5.0, 0.05)};
    const auto task = TaskSpec::make(4e7, 5e8, 1e9);
    const std::vector<double> lambdas{0.5};
    double prev = 1e300;
    for (double beta = 0.1; beta <= 1.0; beta += 0.1) {
        const double t = e2e_latency({lambdas, 0.5, beta}, task, 5e7, nodes).t_e2e;
        CHECK(t < prev);
        prev = t;
    }
    prev = 1e300;
    for (double rate = 1e6; rate <= 1e9; rate *= 2) {
        const double t = e2e_latency({lambdas, 0.5, 0.5}, task, rate, nodes).t_e2e;
        CHECK(t < prev);
        prev = t;
    }
}

TEST_CASE("deadline and infeasibility flags") {
    const std::vector<ComputeNode> nodes{node(NodeKind::EdgeServer, 3e10, 5.0, 0.3),
                                         node(NodeKind::CoinNode, 5e9, 5.0, 0.05)};
    const std::vector<double> none{0.0};
    auto lb = e2e_latency({none, 1.0, 1.0}, TaskSpec::make(8e6, 1e8, 0.5), 1e7, nodes);
    CHECK_FALSE(lb.feasible);
    lb = e2e_latency({none, 1.0, 1.0}, TaskSpec::make(8e6, 1e8, 1.0), 1e7, nodes);
    CHECK(lb.feasible);
    lb = e2e_latency({none, 1.0, 1.0}, TaskSpec::make(8e6, 1e8, 1.0), 0.0, nodes);
    CHECK_FALSE(lb.feasible);
    const std::vector<double> wrong{0.0, 0.0};
    CHECK_THROWS(e2e_latency({wrong, 1.0, 1.0}, TaskSpec::make(8e6, 1e8, 1.0), 1e7, nodes));
}

TEST_CASE("local latency") {
    UeState ue;
    ue.local_rate_hz = 1e9;
    CHECK(local_latency(TaskSpec::make(8e6, 5e8, 1.0), ue) == doctest::Approx(0.5));
}

TEST_CASE("offload plan accessors") {
    OffloadPlan p(2, 3);
    p.lambda(1, 2) = 0.25;
    p.ratio_es[1] = 0.75;
    CHECK(p.offloaded_fraction(1) == doctest::Approx(1.0));
    CHECK(p.offloaded_fraction(0) == 0.0);
    const auto row = row_of(p, 1);
    CHECK(row.ratios_cn.size() == 3);
    CHECK(row.ratios_cn[2] == 0.25);
}
