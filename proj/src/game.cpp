#include "cmec/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cmec {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kRatioTol = 1e-9;

std::uint64_t profile_count(int decisions, int ues) {
    std::uint64_t n = 1;
    for (int m = 0; m < ues; ++m) {
        n *= static_cast<std::uint64_t>(decisions);
        if (n > kBruteForceBudget) return kBruteForceBudget + 1;
    }
    return n;
}

StrategyProfile decode_profile(std::uint64_t index, int decisions, int ues) {
    StrategyProfile p;
    p.decision.resize(static_cast<std::size_t>(ues));
    for (int m = 0; m < ues; ++m) {
        p.decision[m] = static_cast<int>(index % decisions) - 1;
        index /= decisions;
    }
    return p;
}

double current_utility_or_floor(const OffloadingGame& game, int m, const StrategyProfile& profile) {
    const auto u = utility(game, m, profile);
    return u ? *u : kNegInf;
}

}  // namespace

std::string decision_label(int d) {
    if (d == kLocal) return "local";
    if (d == kEdgeServer) return "ES";
    return "CN" + std::to_string(d);
}

OffloadingGame::OffloadingGame(const ScenarioState& scn, std::vector<int> requests,
                               std::vector<double> rate_bps, OrraProposal proposal)
    : scn_(&scn),
      n_ues_(scn.n_ues()),
      n_cns_(scn.n_cns()),
      requests_(std::move(requests)),
      rates_(std::move(rate_bps)),
      proposal_(std::move(proposal)) {
    const auto m_count = static_cast<std::size_t>(n_ues_);
    if (requests_.size() != m_count || rates_.size() != m_count ||
        proposal_.es_ratio.size() != m_count || proposal_.es_share.size() != m_count) {
        throw std::invalid_argument("OffloadingGame: per-UE vectors must have one entry per UE");
    }
    for (int r : requests_) {
        if (r < 0 || r > scn.catalog.size()) {
            throw std::invalid_argument("OffloadingGame: request index outside catalog");
        }
    }

    const int n_active = active_count();
    const double beta_ref = n_active > 0 ? 1.0 / n_active : 0.0;
    reference_.assign(m_count, 0.0);
    for (int m = 0; m < n_ues_; ++m) {
        if (!active(m)) continue;
        reference_[m] = full_es_reference_latency(scn.catalog.at(requests_[m]), rates_[m],
                                                  scn.edge_server(), beta_ref);
    }

    table_.resize(m_count * static_cast<std::size_t>(n_decisions()));
    for (int m = 0; m < n_ues_; ++m) {
        for (int d = kLocal; d <= n_cns_; ++d) {
            table_[static_cast<std::size_t>(m) * n_decisions() + (d + 1)] = evaluate(m, d);
        }
    }
}

int OffloadingGame::active_count() const {
    return static_cast<int>(std::count_if(requests_.begin(), requests_.end(), [](int r) { return r != 0; }));
}

const CandidateOutcome& OffloadingGame::outcome(int m, int d) const {
    if (m < 0 || m >= n_ues_ || d < kLocal || d > n_cns_) {
        throw std::out_of_range("OffloadingGame::outcome: bad UE or decision");
    }
    return table_[static_cast<std::size_t>(m) * n_decisions() + (d + 1)];
}

CandidatePlan OffloadingGame::candidate_plan(int m, int d) const {
    CandidatePlan row;
    row.ratios_cn.assign(static_cast<std::size_t>(n_cns_), 0.0);
    if (d == kLocal || !active(m)) return row;
    row.es_share = proposal_.es_share[m];
    if (d == kEdgeServer) {
        row.ratio_es = 1.0;
    } else {
        row.ratio_es = proposal_.es_ratio[m];
        row.ratios_cn[static_cast<std::size_t>(d - 1)] = 1.0 - proposal_.es_ratio[m];
    }
    return row;
}

CandidateOutcome OffloadingGame::evaluate(int m, int d) const {
    CandidateOutcome out;
    if (!active(m)) {
        // No task: only the empty decision row is meaningful.
        out.feasible = (d == kLocal);
        return out;
    }
    const auto& scn = *scn_;
    const TaskSpec& task = scn.catalog.at(requests_[m]);
    const double g_t = scn.config.raw().gain_latency_reduction;

    if (d == kLocal) {
        const double t_local = local_latency(task, scn.ues[m]);
        out.latency.t_e2e = t_local;
        out.latency.feasible = t_local <= task.max_latency_s;
        // An all-zero decision row satisfies the latency constraint trivially.
        out.feasible = true;
        out.utility = 0.0;
        return out;
    }

    const CandidatePlan row = candidate_plan(m, d);
    out.latency = e2e_latency({row.ratios_cn, row.ratio_es, row.es_share}, task, rates_[m], scn.nodes);
    out.feasible = out.latency.feasible;

    const auto& node = scn.nodes[static_cast<std::size_t>(d)];
    const double share = d == kEdgeServer ? row.ratio_es : row.ratios_cn[static_cast<std::size_t>(d - 1)];
    const double cost = node.cost_per_gigacycle * share * task.cycles / kCyclesPerGigacycle;
    out.utility = g_t * (reference_[m] - out.latency.t_e2e) - cost;
    out.potential_term = g_t * (out.latency.t_es - out.latency.t_cn) - cost;
    return out;
}

bool OffloadingGame::available(int m, int d, const StrategyProfile& profile) const {
    if (!outcome(m, d).feasible) return false;
    if (d <= kEdgeServer) return true;
    for (int other = 0; other < n_ues_; ++other) {
        if (other != m && profile.decision[static_cast<std::size_t>(other)] == d) return false;
    }
    return true;
}

StrategyProfile initial_profile(const OffloadingGame& game) {
    StrategyProfile p;
    p.decision.resize(static_cast<std::size_t>(game.n_ues()));
    for (int m = 0; m < game.n_ues(); ++m) p.decision[m] = game.active(m) ? kEdgeServer : kLocal;
    return p;
}

bool profile_feasible(const OffloadingGame& game, const StrategyProfile& profile) {
    if (static_cast<int>(profile.decision.size()) != game.n_ues()) return false;
    for (int m = 0; m < game.n_ues(); ++m) {
        const int d = profile.decision[m];
        if (d < kLocal || d > game.n_cns()) return false;
        if (!game.available(m, d, profile)) return false;
    }
    return true;
}

std::optional<double> utility(const OffloadingGame& game, int m, const StrategyProfile& profile) {
    const int d = profile.decision.at(static_cast<std::size_t>(m));
    if (!game.available(m, d, profile)) return std::nullopt;
    return game.outcome(m, d).utility;
}

double potential(const OffloadingGame& game, const StrategyProfile& profile) {
    const int m_count = game.n_ues();
    auto r = [&](int m, int j) { return game.outcome(m, j).potential_term; };
    double phi = 0.0;
    for (int m = 0; m < m_count; ++m) {
        const int s_m0 = profile.s(m, 0);
        if (s_m0 == 0) continue;  // the whole bracket is scaled by s_m0
        double bracket = r(m, 0);
        if (1 - s_m0 != 0) {
            double inner = 0.0;
            for (int j = 1; j <= game.n_cns(); ++j) {
                if (profile.s(m, j) != 0) inner += r(m, j);
            }
            for (int other = 0; other < m_count; ++other) {
                if (other != m) inner += r(other, 0);
            }
            bracket += (1 - s_m0) * inner;
        }
        phi += s_m0 * bracket;
    }
    return phi;
}

OffloadPlan build_plan(const OffloadingGame& game, const StrategyProfile& profile) {
    OffloadPlan plan(game.n_ues(), game.n_cns());
    for (int m = 0; m < game.n_ues(); ++m) {
        plan.es_share[m] = game.proposal().es_share[m];
        const auto row = game.candidate_plan(m, profile.decision[m]);
        plan.ratio_es[m] = row.ratio_es;
        std::copy(row.ratios_cn.begin(), row.ratios_cn.end(),
                  plan.ratios_cn.begin() + static_cast<std::ptrdiff_t>(m) * game.n_cns());
    }
    return plan;
}

ConstraintAudit audit_constraints(const OffloadingGame& game, const StrategyProfile& profile,
                                  const OffloadPlan& plan) {
    ConstraintAudit a;
    auto fail = [&](bool& flag, std::string what) {
        flag = false;
        a.violations.push_back(std::move(what));
    };
    const int m_count = game.n_ues();
    const int k_count = game.n_cns();

    std::vector<int> cn_users(static_cast<std::size_t>(k_count) + 1, 0);
    double beta_sum = 0.0;
    for (int m = 0; m < m_count; ++m) {
        const int d = profile.decision[m];
        const std::string ue = "UE" + std::to_string(m);
        if (d < kLocal || d > k_count) {
            fail(a.c10a, ue + ": decision outside {local, ES, CN1..CNK}");
            continue;
        }
        if (d >= 1) ++cn_users[static_cast<std::size_t>(d)];

        // 10a: offloaded work may only go where the decision points.
        for (int k = 1; k <= k_count; ++k) {
            if (plan.lambda(m, k - 1) > 0.0 && d != k) fail(a.c10a, ue + ": lambda on unchosen CN" + std::to_string(k));
        }
        if (d == kLocal && plan.ratio_es[m] > 0.0) fail(a.c10a, ue + ": local UE has ES work");

        // 10e: variable ranges and the ratio partition.
        auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
        bool ranges = in_unit(plan.ratio_es[m]) && in_unit(plan.es_share[m]);
        for (double l : plan.lambdas(m)) ranges = ranges && in_unit(l);
        if (!ranges) fail(a.c10e, ue + ": ratio or share outside [0,1]");
        if (d != kLocal && std::abs(plan.offloaded_fraction(m) - 1.0) > kRatioTol) {
            fail(a.c10e, ue + ": offloading ratios do not sum to 1");
        }
        beta_sum += plan.es_share[m];

        // 10c: recompute latency from the plan, independent of the outcome table.
        if (d != kLocal) {
            if (!game.active(m)) {
                fail(a.c10c, ue + ": offloads without a task");
                continue;
            }
            const TaskSpec& task = game.scenario().catalog.at(game.requests()[m]);
            const auto lb = e2e_latency(row_of(plan, m), task, game.rates()[m], game.scenario().nodes);
            if (!(lb.t_e2e <= task.max_latency_s)) fail(a.c10c, ue + ": e2e latency exceeds T_max");
        }
    }
    for (int k = 1; k <= k_count; ++k) {
        if (cn_users[k] > 1) fail(a.c10b, "CN" + std::to_string(k) + ": shared by several UEs");
    }
    if (beta_sum > 1.0 + 1e-12) fail(a.c10d, "ES shares sum above 1");
    return a;
}

UtilityReport utility_report(const OffloadingGame& game, const StrategyProfile& profile) {
    UtilityReport rep;
    rep.per_ue.resize(static_cast<std::size_t>(game.n_ues()));
    for (int m = 0; m < game.n_ues(); ++m) {
        rep.per_ue[m] = utility(game, m, profile);
        if (rep.per_ue[m]) rep.system_utility += *rep.per_ue[m];
    }
    rep.potential = potential(game, profile);
    rep.audit = audit_constraints(game, profile, build_plan(game, profile));
    for (int m = 0; m < game.n_ues(); ++m) {
        if (!rep.per_ue[m] && game.active(m)) {
            rep.audit.c10c = false;
            rep.audit.violations.push_back("UE" + std::to_string(m) + ": decision infeasible");
        }
    }
    return rep;
}

int best_response(const OffloadingGame& game, int m, const StrategyProfile& profile) {
    int best = kLocal;
    double best_u = kNegInf;
    bool found = false;
    for (int d = kLocal; d <= game.n_cns(); ++d) {
        if (!game.available(m, d, profile)) continue;
        const double u = game.outcome(m, d).utility;
        if (!found || u > best_u) {
            best = d;
            best_u = u;
            found = true;
        }
    }
    return found ? best : kLocal;
}

bool is_nash_equilibrium(const OffloadingGame& game, const StrategyProfile& profile) {
    if (!profile_feasible(game, profile)) return false;
    for (int m = 0; m < game.n_ues(); ++m) {
        const double current = game.outcome(m, profile.decision[m]).utility;
        for (int d = kLocal; d <= game.n_cns(); ++d) {
            if (d == profile.decision[m] || !game.available(m, d, profile)) continue;
            if (game.outcome(m, d).utility > current + kImprovementTol) return false;
        }
    }
    return true;
}

PcoResult run_pco(const OffloadingGame& game, int max_rounds, Rng& rng) {
    if (max_rounds < 1) throw std::invalid_argument("run_pco: max_rounds must be >= 1");
    PcoResult res;
    res.profile = initial_profile(game);

    StrategyProfile best_seen;
    double best_seen_utility = kNegInf;
    auto remember = [&](const StrategyProfile& p) {
        if (!profile_feasible(game, p)) return;
        double su = 0.0;
        for (int m = 0; m < game.n_ues(); ++m) su += game.outcome(m, p.decision[m]).utility;
        if (su > best_seen_utility) {
            best_seen_utility = su;
            best_seen = p;
        }
    };
    remember(res.profile);

    struct Want {
        int ue;
        int decision;
    };
    std::vector<Want> wanting;
    for (int round = 1; round <= max_rounds; ++round) {
        res.rounds = round;
        wanting.clear();
        for (int m = 0; m < game.n_ues(); ++m) {
            const int br = best_response(game, m, res.profile);
            if (br == res.profile.decision[m]) continue;
            const double now = current_utility_or_floor(game, m, res.profile);
            if (game.outcome(m, br).utility > now + kImprovementTol) {
                wanting.push_back({m, br});
            }
        }
        if (wanting.empty()) {
            res.converged = true;
            break;
        }
        std::uniform_int_distribution<std::size_t> pick(0, wanting.size() - 1);
        const Want w = wanting[pick(rng)];

        PcoTraceRow row;
        row.round = round;
        row.ue = w.ue;
        row.old_decision = res.profile.decision[w.ue];
        row.new_decision = w.decision;
        row.utility_before = current_utility_or_floor(game, w.ue, res.profile);
        res.profile.decision[w.ue] = w.decision;
        row.utility_after = game.outcome(w.ue, w.decision).utility;
        row.potential = potential(game, res.profile);
        for (int m = 0; m < game.n_ues(); ++m) {
            const auto u = utility(game, m, res.profile);
            if (u) row.system_utility += *u;
        }
        res.trace.push_back(row);
        remember(res.profile);
    }
    if (!res.converged && !best_seen.decision.empty()) res.profile = best_seen;
    return res;
}

std::vector<StrategyProfile> brute_force_ne_serial(const OffloadingGame& game) {
    const std::uint64_t total = profile_count(game.n_decisions(), game.n_ues());
    if (total > kBruteForceBudget) {
        throw std::length_error("brute_force_ne: (K+2)^M = " + std::to_string(game.n_decisions()) + "^" +
                                std::to_string(game.n_ues()) + " exceeds the 10^6 profile budget");
    }
    std::vector<StrategyProfile> out;
    for (std::uint64_t i = 0; i < total; ++i) {
        auto p = decode_profile(i, game.n_decisions(), game.n_ues());
        if (is_nash_equilibrium(game, p)) out.push_back(std::move(p));
    }
    return out;
}

std::vector<StrategyProfile> brute_force_ne(const OffloadingGame& game) {
    const std::uint64_t total = profile_count(game.n_decisions(), game.n_ues());
    if (total > kBruteForceBudget) {
        throw std::length_error("brute_force_ne: (K+2)^M = " + std::to_string(game.n_decisions()) + "^" +
                                std::to_string(game.n_ues()) + " exceeds the 10^6 profile budget");
    }
    const auto n = static_cast<std::int64_t>(total);
    std::vector<char> is_ne(static_cast<std::size_t>(n), 0);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto p = decode_profile(static_cast<std::uint64_t>(i), game.n_decisions(), game.n_ues());
        is_ne[static_cast<std::size_t>(i)] = is_nash_equilibrium(game, p) ? 1 : 0;
    }
    std::vector<StrategyProfile> out;
    for (std::int64_t i = 0; i < n; ++i) {
        if (is_ne[static_cast<std::size_t>(i)]) {
            out.push_back(decode_profile(static_cast<std::uint64_t>(i), game.n_decisions(), game.n_ues()));
        }
    }
    return out;
}

}  // namespace cmec
