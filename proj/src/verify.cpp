#include "cmec/verify.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "cmec/channel.hpp"
#include "cmec/harness.hpp"
#include "cmec/orra.hpp"

namespace cmec {

GameInstance random_game_instance(std::uint64_t seed, int min_ues, int max_ues, int max_cns, int levels,
                                  const SystemConfig& base) {
    Rng rng = make_rng(seed, 0x6A3E);
    SystemConfig cfg = base;
    cfg.n_ues = std::uniform_int_distribution<int>(min_ues, max_ues)(rng);
    cfg.n_cns = std::uniform_int_distribution<int>(1, max_cns)(rng);
    cfg.rng_seed = seed;
    GameInstance inst{generate_scenario(validate_config(cfg), seed), {}, {}, {}};
    inst.requests = sample_requests(inst.scenario, {}, rng);
    inst.rates = realize_channel(inst.scenario, inst.requests, rng).rate_bps;
    inst.proposal = random_orra(rng, cfg.n_ues, ActionCodec(levels));
    return inst;
}

namespace {

double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

std::string profile_text(const StrategyProfile& p) {
    std::string s = "(";
    for (std::size_t i = 0; i < p.decision.size(); ++i) s += (i ? "," : "") + decision_label(p.decision[i]);
    return s + ")";
}

}  // namespace

SuiteResult verify_ne_containment(int instances, std::uint64_t seed) {
    SuiteResult r{"NE containment", true, {}};
    int contained = 0;
    for (int i = 0; i < instances; ++i) {
        const auto inst = random_game_instance(seed * 1000003u + i, 1, 3, 2, 3);
        const auto game = inst.game();
        Rng rng = make_rng(seed, 0xC0FFEE, i);
        const auto pco = run_pco(game, 50 * game.n_ues(), rng);
        const auto ne = brute_force_ne(game);
        if (pco.converged && std::find(ne.begin(), ne.end(), pco.profile) != ne.end()) {
            ++contained;
        } else if (r.detail.size() < 400) {
            r.detail += fmt::format(" instance {}: {} not in equilibrium set;", i, profile_text(pco.profile));
        }
    }
    r.passed = contained == instances;
    r.detail = fmt::format("{}/{}", contained, instances) + r.detail;
    return r;
}

SuiteResult verify_latency_identities(int draws, std::uint64_t seed) {
    Rng rng = make_rng(seed, 0x1A7E);
    std::uniform_real_distribution<double> portion(0.0, 1.0);
    std::uniform_real_distribution<double> cycles(1e6, 2e9);
    std::uniform_real_distribution<double> cap(1e9, 3e10);
    std::uniform_real_distribution<double> pct(0.0, 0.5);
    double worst_cn = 0.0;
    double worst_es = 0.0;
    for (int i = 0; i < draws; ++i) {
        const double lam = portion(rng);
        const double c = cycles(rng);
        const double f = cap(rng);
        const double dev = pct(rng);
        const double want = lam * c / (f - dev * f);
        const double got_cn = cn_estimated_latency(lam, c, f) + cn_latency_gap(lam, c, f, dev * f);
        worst_cn = std::max(worst_cn, rel_err(got_cn, want));

        const double beta = 1.0 - portion(rng) * 0.99;
        const double want_es = lam * c / (beta * f - dev * beta * f);
        const auto es = es_latency(lam, c, beta, f, dev);
        if (lam > 0.0) worst_es = std::max(worst_es, rel_err(es.est + es.gap, want_es));
    }
    SuiteResult r{"latency identities", worst_cn <= 1e-12 && worst_es <= 1e-12, {}};
    r.detail = fmt::format("{} draws, max relative error CN {:.3g}, ES {:.3g}", draws, worst_cn, worst_es);
    return r;
}

SuiteResult verify_rate_bounds(int draws, std::uint64_t seed) {
    Rng rng = make_rng(seed, 0x5A7E);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto log_uniform = [&](double lo, double hi) { return lo * std::pow(hi / lo, u01(rng)); };
    int above = 0;
    double worst_long = 0.0;
    double worst_q = 0.0;
    for (int i = 0; i < draws; ++i) {
        const double gamma = log_uniform(1e-3, 1e3);
        const double b = log_uniform(1e5, 1e8);
        const double n = log_uniform(50.0, 1e5);
        const double eps = log_uniform(1e-12, 0.1);
        const double shannon = b * std::log2(1.0 + gamma);
        if (urllc_rate(gamma, b, n, eps) > shannon) ++above;

        const double g2 = log_uniform(1e-2, 1e3);
        const double s2 = b * std::log2(1.0 + g2);
        worst_long = std::max(worst_long, rel_err(urllc_rate(g2, b, 1e12, 1e-9), s2));

        const double e = log_uniform(1e-12, 0.5);
        worst_q = std::max(worst_q, rel_err(q_function(q_inverse(e)), e));
    }
    SuiteResult r{"finite-blocklength bounds", above == 0 && worst_long <= 1e-4 && worst_q <= 1e-6, {}};
    r.detail = fmt::format("{} draws, {} above Shannon, long-block error {:.3g}, Q round trip {:.3g}", draws, above,
                           worst_long, worst_q);
    return r;
}

SuiteResult verify_finite_improvement(int runs, std::uint64_t seed) {
    int unconverged = 0;
    int bad_traces = 0;
    int max_rounds_seen = 0;
    for (int i = 0; i < runs; ++i) {
        const auto inst = random_game_instance(seed * 7919u + i, 1, 6, 5, 11);
        const auto game = inst.game();
        Rng rng = make_rng(seed, 0xF1F0, i);
        const auto pco = run_pco(game, 50 * game.n_ues(), rng);
        if (!pco.converged) ++unconverged;
        max_rounds_seen = std::max(max_rounds_seen, pco.rounds);

        // Moves out of an infeasible start leave the feasible sum unchanged, so
        // the system check orders profiles by (infeasible UEs, feasible sum).
        auto standing = [&](const StrategyProfile& p) {
            int infeasible = 0;
            double su = 0.0;
            for (int m = 0; m < game.n_ues(); ++m) {
                const auto u = utility(game, m, p);
                if (u) su += *u;
                else ++infeasible;
            }
            return std::pair<int, double>{infeasible, su};
        };
        auto profile = initial_profile(game);
        auto prev = standing(profile);
        bool ok = true;
        for (const auto& row : pco.trace) {
            profile.decision[row.ue] = row.new_decision;
            const auto now = standing(profile);
            const bool better = now.first < prev.first || (now.first == prev.first && now.second > prev.second);
            ok = ok && row.utility_after > row.utility_before && better;
            prev = now;
        }
        if (!ok) ++bad_traces;
    }
    SuiteResult r{"finite improvement", unconverged == 0 && bad_traces == 0, {}};
    r.detail = fmt::format("{} runs, {} not converged, {} non-increasing traces, at most {} rounds", runs, unconverged,
                           bad_traces, max_rounds_seen);
    return r;
}

DeviationTable epg_deviation_table(int instances, std::uint64_t seed) {
    DeviationTable t;
    SystemConfig base;
    base.request_model = RequestModel::AlwaysActive;
    for (int i = 0; i < instances; ++i) {
        const auto inst = random_game_instance(seed * 104729u + i, 2, 2, 1, 11, base);
        const auto game = inst.game();
        auto system_utility = [&](const StrategyProfile& p) {
            double s = 0.0;
            for (int m = 0; m < game.n_ues(); ++m) s += game.outcome(m, p.decision[m]).utility;
            return s;
        };
        for (int a = kLocal; a <= game.n_cns(); ++a) {
            for (int b = kLocal; b <= game.n_cns(); ++b) {
                const StrategyProfile from{{a, b}};
                if (!profile_feasible(game, from)) continue;
                for (int m = 0; m < 2; ++m) {
                    for (int d = kLocal; d <= game.n_cns(); ++d) {
                        if (d == from.decision[m]) continue;
                        StrategyProfile to = from;
                        to.decision[m] = d;
                        if (!profile_feasible(game, to)) continue;
                        DeviationRow row;
                        row.instance = i;
                        row.from = from.decision;
                        row.ue = m;
                        row.to = d;
                        row.delta_utility = game.outcome(m, d).utility - game.outcome(m, from.decision[m]).utility;
                        row.delta_potential = potential(game, to) - potential(game, from);
                        row.delta_system_utility = system_utility(to) - system_utility(from);
                        const double tol = 1e-9 * std::max(1.0, std::abs(row.delta_utility));
                        if (std::abs(row.delta_potential - row.delta_utility) <= tol) ++t.potential_matches;
                        if (std::abs(row.delta_system_utility - row.delta_utility) <= tol) ++t.system_utility_matches;
                        t.rows.push_back(row);
                    }
                }
            }
        }
    }
    return t;
}

SuiteResult verify_epg_table(int instances, std::uint64_t seed) {
    const auto t = epg_deviation_table(instances, seed);
    const int n = static_cast<int>(t.rows.size());
    // Reported, not gated: the literal potential is expected to disagree on
    // moves that involve the COIN node. The summed utility must always agree.
    SuiteResult r{"EPG deviation table", n > 0 && t.system_utility_matches == n, {}};
    r.detail = fmt::format("{} deviations; literal potential matches {}/{}, summed utility matches {}/{}", n,
                           t.potential_matches, n, t.system_utility_matches, n);
    return r;
}

SuiteResult verify_constraint_audit(const std::filesystem::path& work_dir, std::uint64_t seed) {
    SystemConfig cfg;
    cfg.rng_seed = seed;
    ExperimentSpec spec;
    spec.seed = seed;
    spec.episodes = 2;
    spec.slots_per_episode = 25;
    spec.replications = 2;
    spec.ddqn.batch_size = 16;
    run_experiment(cfg, spec, ExperimentOutputs{work_dir, false});
    const auto audit = audit_slots_csv(work_dir / "slots.csv");
    SuiteResult r{"constraint audit", audit.violations == 0 && audit.slots > 0, {}};
    r.detail = fmt::format("{} slots, {} UE rows, {} violations", audit.slots, audit.rows, audit.violations);
    for (const auto& m : audit.messages) r.detail += "; " + m;
    return r;
}

}  // namespace cmec
