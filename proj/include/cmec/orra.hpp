#pragma once

#include <span>
#include <vector>

#include "cmec/ddqn.hpp"
#include "cmec/game.hpp"

namespace cmec {

/// Flattened M x (F+1) one-hot encoding of the request vector.
std::vector<double> encode_state(std::span<const int> requests, int n_tasks);
std::vector<int> decode_state(std::span<const double> state, int n_tasks);

/// Discretises a UE's (ES ratio, ES share) pair onto a `levels`-point grid
/// {0, 1/(levels-1), ..., 1}. A UE's action index is ratio_level * levels +
/// share_level; the learner sees the two levels as separate value heads.
class ActionCodec {
public:
    explicit ActionCodec(int levels);

    int levels() const { return levels_; }
    int actions_per_ue() const { return levels_ * levels_; }
    double level_value(int level) const;

    int encode(int ratio_level, int share_level) const;
    std::pair<int, int> decode(int action) const;

    /// Proposal for all UEs; shares rescaled by 1 / max(1, sum) so they fit the ES.
    OrraProposal to_proposal(std::span<const int> actions) const;
    /// Per-UE actions -> per-head indices (2 heads per UE) and back.
    std::vector<int> to_heads(std::span<const int> actions) const;
    std::vector<int> from_heads(std::span<const int> heads) const;

private:
    int levels_;
};

/// Per-UE epsilon-greedy: each UE independently explores a uniform action
/// with probability `explore`, otherwise takes its greedy ratio and share levels.
std::vector<int> select_action(const QLearner& learner, const ActionCodec& codec,
                               std::span<const double> state, Rng& rng, double explore);

OrraProposal random_orra(Rng& rng, int n_ues, const ActionCodec& codec);
std::vector<int> random_actions(Rng& rng, int n_ues, const ActionCodec& codec);

/// Everything on the ES, capacity split equally among UEs with a task.
OrraProposal full_offload_orra(std::span<const int> requests);

struct RewardBreakdown {
    double reward = 0.0;
    double chosen_utility = 0.0;
    double reference_utility = 0.0;
    bool feasible = true;
};

/// Utility saving of the chosen proposal over full offloading, both scored
/// on the same decision profile. An infeasible chosen plan earns `penalty`.
RewardBreakdown compute_reward(const OffloadingGame& chosen, const StrategyProfile& profile,
                               double penalty = -10.0);

}  // namespace cmec
