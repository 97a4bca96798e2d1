#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cmec/latency.hpp"
#include "cmec/scenario.hpp"

namespace cmec {

/// Decision of one UE: kLocal (all-zero row), 0 for the ES, 1..K for a COIN node.
inline constexpr int kLocal = -1;
inline constexpr int kEdgeServer = 0;

/// Strictness margin for "strictly better" utility comparisons.
inline constexpr double kImprovementTol = 1e-9;

struct StrategyProfile {
    std::vector<int> decision;

    /// s_mj of the binary decision matrix (j = 0 is the ES).
    int s(int m, int j) const { return decision[static_cast<std::size_t>(m)] == j ? 1 : 0; }
    bool operator==(const StrategyProfile&) const = default;
};

std::string decision_label(int d);

/// Per-UE ES fraction (aleph) and ES share (beta) proposed for one slot. The
/// plan for UE m under decision j is derived from it: ES -> aleph = 1; CN j ->
/// lambda_mj = 1 - aleph_m, rest on the ES.
struct OrraProposal {
    std::vector<double> es_ratio;
    std::vector<double> es_share;
};

/// Plan row a UE would run under decision `d`.
struct CandidatePlan {
    std::vector<double> ratios_cn;
    double ratio_es = 0.0;
    double es_share = 0.0;
};

struct CandidateOutcome {
    bool feasible = false;
    /// Gain minus cost; defined even when infeasible (may be non-finite).
    double utility = 0.0;
    /// R_mj term of the potential function.
    double potential_term = 0.0;
    LatencyBreakdown latency;
};

/// One slot's game: scenario, requests, channel rates and the ORRA proposal.
/// Every UE's utility depends on its own decision only; the coupling between
/// UEs is the one-UE-per-COIN-node constraint.
class OffloadingGame {
public:
    OffloadingGame(const ScenarioState& scn, std::vector<int> requests, std::vector<double> rate_bps,
                   OrraProposal proposal);

    int n_ues() const { return n_ues_; }
    int n_cns() const { return n_cns_; }
    int n_decisions() const { return n_cns_ + 2; }
    const ScenarioState& scenario() const { return *scn_; }
    const std::vector<int>& requests() const { return requests_; }
    const std::vector<double>& rates() const { return rates_; }
    const OrraProposal& proposal() const { return proposal_; }
    bool active(int m) const { return requests_[static_cast<std::size_t>(m)] != 0; }
    int active_count() const;

    /// Full-ES latency against which the gain term is measured.
    double reference_latency(int m) const { return reference_[static_cast<std::size_t>(m)]; }
    const CandidateOutcome& outcome(int m, int d) const;
    CandidatePlan candidate_plan(int m, int d) const;

    /// Feasible for m given the other UEs' CN occupancy.
    bool available(int m, int d, const StrategyProfile& profile) const;

private:
    CandidateOutcome evaluate(int m, int d) const;

    const ScenarioState* scn_;
    int n_ues_;
    int n_cns_;
    std::vector<int> requests_;
    std::vector<double> rates_;
    OrraProposal proposal_;
    std::vector<double> reference_;
    std::vector<CandidateOutcome> table_;
};

struct ConstraintAudit {
    bool c10a = true;
    bool c10b = true;
    bool c10c = true;
    bool c10d = true;
    bool c10e = true;
    std::vector<std::string> violations;

    bool ok() const { return c10a && c10b && c10c && c10d && c10e; }
    int count() const { return static_cast<int>(violations.size()); }
};

struct UtilityReport {
    std::vector<std::optional<double>> per_ue;
    double system_utility = 0.0;
    double potential = 0.0;
    ConstraintAudit audit;
    bool feasible() const { return audit.ok(); }
};

StrategyProfile initial_profile(const OffloadingGame& game);
bool profile_feasible(const OffloadingGame& game, const StrategyProfile& profile);

/// U_m of the profile, or nullopt when UE m's decision is infeasible.
std::optional<double> utility(const OffloadingGame& game, int m, const StrategyProfile& profile);
UtilityReport utility_report(const OffloadingGame& game, const StrategyProfile& profile);

/// Potential function evaluated term by term, with the leading
/// s_m0 bound by the sum over m.
double potential(const OffloadingGame& game, const StrategyProfile& profile);

/// Plan realised by `profile` under the game's proposal.
OffloadPlan build_plan(const OffloadingGame& game, const StrategyProfile& profile);
ConstraintAudit audit_constraints(const OffloadingGame& game, const StrategyProfile& profile,
                                  const OffloadPlan& plan);

/// Highest-utility available decision for m with the others held fixed.
/// Local execution is always admissible and wins ties, then the lowest node
/// index.
int best_response(const OffloadingGame& game, int m, const StrategyProfile& profile);

bool is_nash_equilibrium(const OffloadingGame& game, const StrategyProfile& profile);

struct PcoTraceRow {
    int round = 0;
    int ue = 0;
    int old_decision = kLocal;
    int new_decision = kLocal;
    double utility_before = 0.0;
    double utility_after = 0.0;
    double potential = 0.0;
    double system_utility = 0.0;
};

struct PcoResult {
    StrategyProfile profile;
    int rounds = 0;
    bool converged = false;
    std::vector<PcoTraceRow> trace;
};

/// Asynchronous best-response dynamics: every UE starts on the ES, each
/// round collects the UEs with a strictly better response and lets one
/// uniformly drawn winner switch.
PcoResult run_pco(const OffloadingGame& game, int max_rounds, Rng& rng);

/// Number of profiles brute_force_ne would visit; refuses above 10^6.
inline constexpr std::uint64_t kBruteForceBudget = 1'000'000;

/// All pure Nash equilibria, in enumeration order. Throws std::length_error
/// with the profile count when (K+2)^M exceeds the budget.
std::vector<StrategyProfile> brute_force_ne(const OffloadingGame& game);
/// Single-threaded reference for brute_force_ne.
std::vector<StrategyProfile> brute_force_ne_serial(const OffloadingGame& game);

}  // namespace cmec
