#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <json.hpp>

#include "cmec/config.hpp"

namespace cmec {

using Rng = std::mt19937_64;

/// Independent, reproducible stream derived from a base seed and stream tags.
Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0);

/// One computation task: I_m bits carrying C_m cycles, due within T_m^max.
struct TaskSpec {
    double input_bits = 0.0;
    double cycles = 0.0;
    double max_latency_s = 0.0;

    /// Cycles per bit.
    double complexity() const { return cycles / input_bits; }

    static TaskSpec make(double input_bits, double cycles, double max_latency_s);
};

/// Tasks a UE may request. Request index 0 means "no task this slot";
/// indices 1..F address `tasks[index - 1]`.
class TaskCatalog {
public:
    TaskCatalog() = default;
    explicit TaskCatalog(std::vector<TaskSpec> tasks);

    int size() const { return static_cast<int>(tasks_.size()); }
    const TaskSpec& at(int request) const;
    const std::vector<TaskSpec>& tasks() const { return tasks_; }

private:
    std::vector<TaskSpec> tasks_;
};

enum class NodeKind { EdgeServer, CoinNode };

struct ComputeNode {
    NodeKind kind = NodeKind::CoinNode;
    double capacity_hz = 0.0;
    double twin_deviation_hz = 0.0;
    /// Offloading price in utility units per 10^9 cycles.
    double cost_per_gigacycle = 0.0;

    /// Rate the twin-corrected latency model divides by: f - f~.
    double effective_rate_hz() const { return capacity_hz - twin_deviation_hz; }
    double deviation_fraction() const { return twin_deviation_hz / capacity_hz; }
};

struct UeState {
    std::array<double, 2> position_m{0.0, 0.0};
    double tx_power_w = 0.0;
    double local_rate_hz = 0.0;
    int current_request = 0;
};

/// Estimated processing rate and its deviation from the physical node.
struct TwinEstimate {
    double rate_hz;
    double deviation_hz;
};

/// Rejects deviation_pct outside [0, 100).
TwinEstimate twin_estimate(double actual_hz, double deviation_pct);

/// Price per gigacycle proportional to the node's capacity relative to 10 GHz.
double node_cost_per_gigacycle(double capacity_hz, double cost_coefficient);

/// One simulated network: a single AP at the arena centre, node 0 is the ES
/// and nodes 1..K are COIN nodes.
struct ScenarioState {
    ValidatedConfig config;
    std::vector<UeState> ues;
    std::vector<ComputeNode> nodes;
    TaskCatalog catalog;
    int slot = 0;

    int n_ues() const { return static_cast<int>(ues.size()); }
    int n_cns() const { return static_cast<int>(nodes.size()) - 1; }
    const ComputeNode& edge_server() const { return nodes.front(); }
    std::array<double, 2> ap_position() const;
    double distance_to_ap(int ue) const;
};

ScenarioState generate_scenario(const ValidatedConfig& cfg, std::uint64_t seed);

/// Next-slot request vector mu_t in {0..F}^M. `previous` is consulted only by
/// the Markov request model.
std::vector<int> sample_requests(const ScenarioState& scn, std::span<const int> previous, Rng& rng);

nlohmann::json scenario_to_json(const ScenarioState& scn);
/// Throws ConfigError on schema mismatch.
ScenarioState scenario_from_json(const nlohmann::json& j);

}  // namespace cmec
