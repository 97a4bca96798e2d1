#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "cmec/nn.hpp"
#include "cmec/scenario.hpp"

namespace cmec {

struct Transition {
    std::vector<double> state;
    /// One action index per value head.
    std::vector<int> action;
    double reward = 0.0;
    std::vector<double> next_state;
    bool terminal = false;
};

/// Fixed-capacity FIFO experience memory.
class ReplayMemory {
public:
    explicit ReplayMemory(std::size_t capacity);

    void push(Transition t);
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& operator[](std::size_t i) const { return items_[i]; }
    /// Uniform sample with replacement.
    std::vector<const Transition*> sample(std::size_t n, Rng& rng) const;

private:
    std::size_t capacity_;
    std::deque<Transition> items_;
};

struct QLearnerConfig {
    std::vector<int> hidden{128, 128};
    std::size_t replay_capacity = 10000;
    double discount = 0.9;
    double learn_rate = 1e-3;
    int batch_size = 64;
    int target_sync_period = 200;
    nn::OptimizerKind optimizer = nn::OptimizerKind::Adam;
    double explore_start = 1.0;
    double explore_end = 0.05;
    /// Fraction of the run over which exploration decays linearly.
    double explore_decay_fraction = 0.8;
};

nlohmann::json to_json(const QLearnerConfig& c);
QLearnerConfig qlearner_config_from_json(const nlohmann::json& j);

/// Linear decay from explore_start to explore_end over the first
/// explore_decay_fraction of `total_steps`.
double explore_rate(const QLearnerConfig& cfg, long long step, long long total_steps);

/// Double DQN with several independent value heads sharing one trunk. Each
/// head has `actions_per_head` outputs; the output layer is laid out head
/// by head.
class QLearner {
public:
    QLearner(int input_size, int heads, int actions_per_head, QLearnerConfig cfg, std::uint64_t seed);

    int input_size() const { return online_.input_size(); }
    int heads() const { return heads_; }
    int actions_per_head() const { return actions_; }
    const QLearnerConfig& config() const { return cfg_; }

    std::vector<double> q_online(std::span<const double> state) const;
    std::vector<double> q_target(std::span<const double> state) const;
    /// Lowest-index argmax of each head of the online network.
    std::vector<int> greedy(std::span<const double> state) const;

    ReplayMemory& replay() { return replay_; }
    const ReplayMemory& replay() const { return replay_; }

    /// Samples a batch and takes one gradient step; nullopt (and a warning)
    /// when the memory holds fewer transitions than the batch size.
    std::optional<double> train_step();
    /// One gradient step on the given transitions; returns the batch loss
    /// before the step. Syncs the target network every target_sync_period steps.
    double train_on(std::span<const Transition* const> batch);
    /// Double-Q regression targets for one transition, one per head.
    std::vector<double> td_targets(const Transition& t) const;

    void update_target();
    long long train_steps() const { return steps_; }
    long long sync_count() const { return syncs_; }

    nn::Mlp& online() { return online_; }
    const nn::Mlp& online() const { return online_; }
    const nn::Mlp& target() const { return target_; }

    nlohmann::json checkpoint(const nlohmann::json& meta = nlohmann::json::object()) const;
    /// Restores parameters and step counter; throws std::invalid_argument on
    /// a schema or shape mismatch.
    void restore(const nlohmann::json& ckpt);

private:
    QLearnerConfig cfg_;
    int heads_;
    int actions_;
    nn::Mlp online_;
    nn::Mlp target_;
    nn::Optimizer opt_;
    ReplayMemory replay_;
    Rng rng_;
    long long steps_ = 0;
    long long syncs_ = 0;
    nn::Workspace ws_;
    std::vector<double> grad_;
};

}  // namespace cmec
