#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "cmec/orra.hpp"

using namespace cmec;

namespace {

ScenarioState hand_scenario(int ues, int cns) {
    SystemConfig c;
    c.n_ues = ues;
    c.n_cns = cns;
    c.n_tasks = 1;
    c.gain_latency_reduction = 2.5;
    auto s = generate_scenario(validate_config(c), 1);
    s.nodes.clear();
    s.nodes.push_back({NodeKind::EdgeServer, 3e10, 1.5e9, 0.3});
    for (int k = 1; k <= cns; ++k) s.nodes.push_back({NodeKind::CoinNode, 5e9, 2.5e8, 0.05});
    s.catalog = TaskCatalog({TaskSpec::make(8e6, 1e8, 5.0)});
    for (auto& ue : s.ues) ue.local_rate_hz = 1e9;
    return s;
}

}  // namespace

TEST_CASE("state encoding") {
    const std::vector<int> mu{0, 1};
    CHECK(encode_state(mu, 1) == std::vector<double>{1, 0, 0, 1});
    const std::vector<int> none{0, 0, 0};
    const auto z = encode_state(none, 2);
    CHECK(z == std::vector<double>{1, 0, 0, 1, 0, 0, 1, 0, 0});
    const std::vector<int> bad{0, 3};
    CHECK_THROWS_AS(encode_state(bad, 2), std::out_of_range);

    Rng rng = make_rng(2, 2);
    std::uniform_int_distribution<int> req(0, 4);
    for (int i = 0; i < 100; ++i) {
        std::vector<int> r(6);
        for (auto& x : r) x = req(rng);
        const auto s = encode_state(r, 4);
        CHECK(s.size() == 30);
        CHECK(std::accumulate(s.begin(), s.end(), 0.0) == 6.0);
        CHECK(decode_state(s, 4) == r);
    }
}

TEST_CASE("action codec") {
    const ActionCodec c(11);
    CHECK(c.actions_per_ue() == 121);
    CHECK(c.level_value(0) == 0.0);
    CHECK(c.level_value(10) == 1.0);
    CHECK(c.level_value(3) == doctest::Approx(0.3));
    CHECK(c.encode(2, 7) == 29);
    CHECK(c.decode(29) == std::pair<int, int>{2, 7});
    for (int a = 0; a < 121; ++a) CHECK(c.encode(c.decode(a).first, c.decode(a).second) == a);
    CHECK_THROWS(c.decode(121));
    CHECK_THROWS(ActionCodec(1));

    const std::vector<int> acts{29, 120, 0};
    const auto heads = c.to_heads(acts);
    CHECK(heads == std::vector<int>{2, 7, 10, 10, 0, 0});
    CHECK(c.from_heads(heads) == acts);
}

TEST_CASE("proposal shares are rescaled to fit the ES") {
    const ActionCodec c(11);
    std::vector<int> acts{c.encode(5, 10), c.encode(3, 10), c.encode(0, 5)};
    const auto p = c.to_proposal(acts);
    CHECK(p.es_ratio == std::vector<double>{0.5, 0.3, 0.0});
    CHECK(std::accumulate(p.es_share.begin(), p.es_share.end(), 0.0) <= 1.0);
    CHECK(p.es_share[0] == doctest::Approx(1.0 / 2.5));
    CHECK(p.es_share[2] == doctest::Approx(0.5 / 2.5));

    acts = {c.encode(1, 3), c.encode(1, 4)};
    const auto q = c.to_proposal(acts);
    CHECK(q.es_share[0] == doctest::Approx(0.3));
    CHECK(q.es_share[1] == doctest::Approx(0.4));
}

TEST_CASE("full exploration picks actions uniformly") {
    const ActionCodec c(3);
    QLearnerConfig cfg;
    cfg.hidden = {4};
    const QLearner q(2, 2, 3, cfg, 1);
    Rng rng = make_rng(4, 4);
    const std::vector<double> state{1.0, 0.0};
    const int draws = 9000;
    std::vector<int> counts(9, 0);
    for (int i = 0; i < draws; ++i) ++counts[select_action(q, c, state, rng, 1.0)[0]];
    const double expected = draws / 9.0;
    double chi2 = 0.0;
    for (int n : counts) chi2 += (n - expected) * (n - expected) / expected;
    // Chi-square upper 0.001 point at 8 degrees of freedom.
    CHECK(chi2 < 26.12);
}

TEST_CASE("no exploration takes the greedy levels") {
    const ActionCodec c(3);
    QLearnerConfig cfg;
    cfg.hidden = {4};
    QLearner q(4, 4, 3, cfg, 1);
    for (auto& p : q.online().params()) p = 0.0;
    const auto b = q.online().bias_offset(1);
    // UE0: ratio level 2, share level 1; UE1: ratio 0, share 2.
    q.online().params()[b + 2] = 1.0;
    q.online().params()[b + 3 + 1] = 1.0;
    q.online().params()[b + 6 + 0] = 1.0;
    q.online().params()[b + 9 + 2] = 1.0;
    Rng rng = make_rng(1, 1);
    const std::vector<double> state{1.0, 0.0, 0.0, 1.0};
    CHECK(select_action(q, c, state, rng, 0.0) == std::vector<int>{c.encode(2, 1), c.encode(0, 2)});

    const ActionCodec wrong(4);
    CHECK_THROWS(select_action(q, wrong, state, rng, 0.0));
}

TEST_CASE("action selection is deterministic per seed") {
    const ActionCodec c(11);
    QLearnerConfig cfg;
    cfg.hidden = {8};
    const QLearner q(6, 6, 11, cfg, 2);
    const std::vector<double> state{1, 0, 0, 1, 1, 0};
    Rng a = make_rng(7, 7);
    Rng b = make_rng(7, 7);
    for (int i = 0; i < 50; ++i) CHECK(select_action(q, c, state, a, 0.4) == select_action(q, c, state, b, 0.4));
}

TEST_CASE("random ORRA invariants and level histogram") {
    const ActionCodec c(11);
    Rng rng = make_rng(5, 5);
    const int draws = 5000;
    const int ues = 4;
    std::vector<int> ratio_hist(11, 0);
    std::vector<int> share_hist(11, 0);
    for (int i = 0; i < draws; ++i) {
        const auto acts = random_actions(rng, ues, c);
        for (int a : acts) {
            ++ratio_hist[c.decode(a).first];
            ++share_hist[c.decode(a).second];
        }
        const auto p = c.to_proposal(acts);
        REQUIRE(std::accumulate(p.es_share.begin(), p.es_share.end(), 0.0) <= 1.0);
        for (int m = 0; m < ues; ++m) {
            REQUIRE(p.es_ratio[m] >= 0.0);
            REQUIRE(p.es_ratio[m] <= 1.0);
            REQUIRE(p.es_share[m] >= 0.0);
            REQUIRE(p.es_share[m] <= 1.0);
        }
        const auto r = random_orra(rng, ues, c);
        REQUIRE(std::accumulate(r.es_share.begin(), r.es_share.end(), 0.0) <= 1.0);
    }
    const double n = draws * ues;
    const double expected = n / 11.0;
    const double sigma = std::sqrt(n * (1.0 / 11.0) * (10.0 / 11.0));
    for (int l = 0; l < 11; ++l) {
        CHECK(std::abs(ratio_hist[l] - expected) <= 3.0 * sigma);
        CHECK(std::abs(share_hist[l] - expected) <= 3.0 * sigma);
    }
}

TEST_CASE("full offloading splits the ES among active UEs") {
    std::vector<int> r{1, 1};
    auto p = full_offload_orra(r);
    CHECK(p.es_ratio == std::vector<double>{1.0, 1.0});
    CHECK(p.es_share == std::vector<double>{0.5, 0.5});
    r = {2};
    CHECK(full_offload_orra(r).es_share == std::vector<double>{1.0});
    r = {0, 3, 0, 1};
    p = full_offload_orra(r);
    CHECK(p.es_share == std::vector<double>{0.0, 0.5, 0.0, 0.5});
    r = {1, 2, 3};
    p = full_offload_orra(r);
    CHECK(std::accumulate(p.es_share.begin(), p.es_share.end(), 0.0) == doctest::Approx(1.0));
}

TEST_CASE("reward against full offloading") {
    const auto s = hand_scenario(2, 1);
    const std::vector<int> req{1, 1};
    const std::vector<double> rates{1e8, 5e7};

    SUBCASE("the reference proposal earns nothing") {
        const OffloadingGame g(s, req, rates, full_offload_orra(req));
        for (const auto& prof : {StrategyProfile{{0, 0}}, StrategyProfile{{1, 0}}, StrategyProfile{{kLocal, 1}}}) {
            CHECK(compute_reward(g, prof).reward == doctest::Approx(0.0).epsilon(1e-12));
        }
    }

    SUBCASE("hand-computed split with one UE on the CN") {
        const OffloadingGame g(s, req, rates, {{0.5, 0.5}, {0.5, 0.5}});
        const StrategyProfile prof{{1, kEdgeServer}};
        const double es_half = 0.5 * 3e10 * 0.95;
        const double ref0 = 8e6 / 1e8 + 1e8 / es_half;
        const double t_cn0 = 0.5e8 / (5e9 * 0.95) + 0.5 * 8e6 / 1e8 + 0.5e8 / es_half;
        const double u0 = 2.5 * (ref0 - t_cn0) - 0.05 * 0.5 * 0.1;
        const double u1 = -0.3 * 0.1;
        // Under full offloading the CN holder sends nothing to the CN: no
        // gain and no cost. The ES user is unchanged.
        const double ref_u0 = 0.0;
        const double ref_u1 = -0.3 * 0.1;
        const auto rb = compute_reward(g, prof);
        CHECK(rb.feasible);
        CHECK(rb.chosen_utility == doctest::Approx(u0 + u1));
        CHECK(rb.reference_utility == doctest::Approx(ref_u0 + ref_u1));
        CHECK(rb.reward == doctest::Approx(u0 - ref_u0));
        CHECK(rb.reward > 0.0);
    }

    SUBCASE("an infeasible plan earns the penalty") {
        // Zero ES share for a UE on the ES.
        const OffloadingGame g(s, req, rates, {{0.5, 1.0}, {0.5, 0.0}});
        const auto rb = compute_reward(g, StrategyProfile{{kLocal, kEdgeServer}}, -7.0);
        CHECK_FALSE(rb.feasible);
        CHECK(rb.reward == -7.0);
    }
}
