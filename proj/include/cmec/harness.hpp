#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmec/ddqn.hpp"
#include "cmec/game.hpp"
#include "cmec/orra.hpp"

namespace cmec {

enum class Scheme { DdqnEpg, EpgRand, Mec };
enum class SweepAxis { None, UeCount, CnCount, TaskType };

std::string to_string(Scheme s);
std::string to_string(SweepAxis a);
/// Accepts the canonical names (DDQN-EPG, EPG-Rand, MEC) and the short
/// forms ddqn, rand, mec, case-insensitively.
Scheme parse_scheme(const std::string& s);
/// none, ue, cn or task.
SweepAxis parse_sweep_axis(const std::string& s);

struct ExperimentSpec {
    std::vector<Scheme> schemes{Scheme::DdqnEpg, Scheme::EpgRand, Scheme::Mec};
    int episodes = 50;
    int slots_per_episode = 100;
    int replications = 5;
    SweepAxis sweep = SweepAxis::None;
    /// Numbers for ue/cn sweeps, suite names (data, compute, table1) for task sweeps.
    std::vector<std::string> sweep_values;
    std::uint64_t seed = 1;
    int action_levels = 11;
    double infeasible_penalty = -10.0;
    /// run_pco budget is this times the UE count.
    int pco_rounds_per_ue = 50;
    QLearnerConfig ddqn;
    /// Wall-clock budget in seconds; 0 disables it.
    double time_budget_s = 0.0;
    /// Write slots.csv with one row per UE and slot.
    bool detail = true;
    /// Write trace.csv with every accepted best-response move.
    bool trace = false;
    /// Write the final DDQN network of every DDQN-EPG job.
    bool checkpoint = false;
    /// Episodes at the end of a run used by the summary; 0 means all.
    int summary_tail = 10;
};

/// Throws ConfigError naming the offending field.
void validate_spec(const ExperimentSpec& spec);
ExperimentSpec experiment_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentSpec& spec);

/// Default sweep values for an axis: UEs {4,6,8,10,12}, CNs {1..10},
/// tasks {data, compute}.
std::vector<std::string> default_sweep_values(SweepAxis axis);

/// System config with one sweep value applied.
SystemConfig apply_sweep(SystemConfig cfg, SweepAxis axis, const std::string& value);

struct UeSlotRecord {
    int request = 0;
    int decision = kLocal;
    double ratio_es = 0.0;
    double es_share = 0.0;
    /// Ratio on the chosen COIN node (0 unless the decision is a CN).
    double ratio_cn = 0.0;
    double rate_bps = 0.0;
    double t_e2e = 0.0;
    double max_latency_s = 0.0;
    double utility = 0.0;
};

struct SlotResult {
    StrategyProfile profile;
    OffloadPlan plan;
    std::vector<int> requests;
    std::vector<UeSlotRecord> ues;
    double system_utility = 0.0;
    double mean_latency_s = 0.0;
    int active = 0;
    int ne_rounds = 0;
    bool converged = true;
    int violations = 0;
    /// Reward of the ORRA applied this slot (DDQN-EPG only).
    std::optional<double> reward;
    std::optional<double> loss;
    std::vector<PcoTraceRow> trace;
};

/// State kept by one (scheme, sweep value, replication) job across slots.
class SchemeRunner {
public:
    SchemeRunner(const ScenarioState& scn, const ExperimentSpec& spec, Scheme scheme,
                 std::uint64_t job_seed);

    Scheme scheme() const { return scheme_; }
    const ActionCodec& codec() const { return codec_; }
    QLearner* learner() { return learner_ ? &*learner_ : nullptr; }
    const QLearner* learner() const { return learner_ ? &*learner_ : nullptr; }
    const std::vector<int>& last_actions() const { return pending_actions_; }

    /// Starts an episode with a fresh request vector; DDQN-EPG picks the
    /// ORRA for the first slot from it.
    void begin_episode(double explore);
    /// One decision slot. `explore` is used by DDQN-EPG only.
    SlotResult run_slot(double explore, bool last_slot);

private:
    SlotResult play(const std::vector<int>& requests, const std::vector<double>& rates,
                    const OrraProposal* proposal);

    const ScenarioState* scn_;
    const ExperimentSpec* spec_;
    Scheme scheme_;
    ActionCodec codec_;
    Rng env_rng_;
    Rng orra_rng_;
    Rng pco_rng_;
    Rng explore_rng_;
    std::optional<QLearner> learner_;
    std::vector<int> requests_;
    std::vector<double> state_;
    std::vector<int> pending_actions_;
};

struct EpisodeRow {
    Scheme scheme = Scheme::DdqnEpg;
    std::string sweep_value;
    int replication = 0;
    int episode = 0;
    double mean_system_utility = 0.0;
    double mean_latency_s = 0.0;
    double mean_ne_rounds = 0.0;
    int violations = 0;
    int unconverged = 0;
    double mean_reward = 0.0;
    double mean_loss = 0.0;
    double explore_rate = 0.0;
};

struct ExperimentResult {
    std::vector<EpisodeRow> rows;
    bool truncated = false;
    std::string version;
};

struct ExperimentOutputs {
    std::filesystem::path dir;
    bool plots = false;
};

/// Runs every (scheme, sweep value, replication) job. Jobs run in parallel;
/// output is assembled in job order so files do not depend on thread count.
/// With `scenario` set, that scenario replaces generation (sweep must be none).
ExperimentResult run_experiment(const SystemConfig& cfg, const ExperimentSpec& spec,
                                const std::optional<ExperimentOutputs>& out = std::nullopt,
                                const ScenarioState* scenario = nullptr);

struct SummaryRow {
    Scheme scheme = Scheme::DdqnEpg;
    std::string sweep_value;
    int replications = 0;
    double mean_utility = 0.0;
    double std_utility = 0.0;
    double mean_latency_s = 0.0;
};

struct Improvement {
    std::string sweep_value;
    Scheme baseline = Scheme::EpgRand;
    /// (DDQN - baseline) / |baseline| * 100; nullopt when the baseline is 0.
    std::optional<double> percent;
};

struct Summary {
    std::vector<SummaryRow> rows;
    std::vector<Improvement> improvements;
};

/// Per replication, the mean of the last `tail` episodes (all when 0); then
/// mean and sample standard deviation over replications.
Summary aggregate(const std::vector<EpisodeRow>& rows, int tail);
nlohmann::json to_json(const Summary& s);

std::string metrics_csv_header();
std::vector<EpisodeRow> read_metrics_csv(const std::filesystem::path& path);

struct CsvAudit {
    long long rows = 0;
    long long slots = 0;
    long long violations = 0;
    std::vector<std::string> messages;
};

/// Re-checks every slot of a slots.csv against the offloading constraints.
CsvAudit audit_slots_csv(const std::filesystem::path& path);

}  // namespace cmec
