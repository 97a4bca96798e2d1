#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cmec/game.hpp"

namespace cmec {

/// A randomly drawn single-slot game: scenario, requests, rates and an ORRA
/// proposal on a `levels`-point grid.
struct GameInstance {
    ScenarioState scenario;
    std::vector<int> requests;
    std::vector<double> rates;
    OrraProposal proposal;

    OffloadingGame game() const { return OffloadingGame(scenario, requests, rates, proposal); }
};

/// M uniform in [min_ues, max_ues], K uniform in [1, max_cns].
GameInstance random_game_instance(std::uint64_t seed, int min_ues, int max_ues, int max_cns, int levels,
                                  const SystemConfig& base = {});

struct SuiteResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// run_pco output lies in the brute-force equilibrium set.
SuiteResult verify_ne_containment(int instances, std::uint64_t seed);
/// Estimated latency plus twin gap equals the corrected-rate latency.
SuiteResult verify_latency_identities(int draws, std::uint64_t seed);
/// Finite-blocklength rate never exceeds Shannon capacity and approaches it
/// for long blocks; Q and its inverse round-trip.
SuiteResult verify_rate_bounds(int draws, std::uint64_t seed);
/// PCO converges within 50 M rounds and every accepted move strictly raises
/// the mover's utility; the profile improves by (fewer infeasible UEs, higher feasible sum).
SuiteResult verify_finite_improvement(int runs, std::uint64_t seed);

struct DeviationRow {
    int instance = 0;
    std::vector<int> from;
    int ue = 0;
    int to = kLocal;
    double delta_utility = 0.0;
    double delta_potential = 0.0;
    double delta_system_utility = 0.0;
};

struct DeviationTable {
    std::vector<DeviationRow> rows;
    int potential_matches = 0;
    int system_utility_matches = 0;
};

/// Every feasible unilateral deviation on two-UE, one-CN instances, with the
/// change of the literal potential and of the summed utility beside the
/// deviator's utility change.
DeviationTable epg_deviation_table(int instances, std::uint64_t seed);
SuiteResult verify_epg_table(int instances, std::uint64_t seed);

/// Short experiment with every scheme and an audit of its slots.csv.
SuiteResult verify_constraint_audit(const std::filesystem::path& work_dir, std::uint64_t seed);

}  // namespace cmec
