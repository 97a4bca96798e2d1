#include "cmec/ddqn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <spdlog/spdlog.h>

namespace cmec {

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw std::invalid_argument("ReplayMemory: capacity must be positive");
}

void ReplayMemory::push(Transition t) {
    if (!std::isfinite(t.reward)) throw std::invalid_argument("ReplayMemory: reward must be finite");
    if (items_.size() == capacity_) items_.pop_front();
    items_.push_back(std::move(t));
}

std::vector<const Transition*> ReplayMemory::sample(std::size_t n, Rng& rng) const {
    std::vector<const Transition*> out;
    if (items_.empty()) return out;
    std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(&items_[pick(rng)]);
    return out;
}

nlohmann::json to_json(const QLearnerConfig& c) {
    return {{"hidden", c.hidden},
            {"replay_capacity", c.replay_capacity},
            {"discount", c.discount},
            {"learn_rate", c.learn_rate},
            {"batch_size", c.batch_size},
            {"target_sync_period", c.target_sync_period},
            {"optimizer", nn::to_string(c.optimizer)},
            {"explore_start", c.explore_start},
            {"explore_end", c.explore_end},
            {"explore_decay_fraction", c.explore_decay_fraction}};
}

QLearnerConfig qlearner_config_from_json(const nlohmann::json& j) {
    QLearnerConfig c;
    for (const auto& [key, v] : j.items()) {
        if (key == "hidden") c.hidden = v.get<std::vector<int>>();
        else if (key == "replay_capacity") c.replay_capacity = v.get<std::size_t>();
        else if (key == "discount") c.discount = v.get<double>();
        else if (key == "learn_rate") c.learn_rate = v.get<double>();
        else if (key == "batch_size") c.batch_size = v.get<int>();
        else if (key == "target_sync_period") c.target_sync_period = v.get<int>();
        else if (key == "optimizer") c.optimizer = nn::parse_optimizer(v.get<std::string>());
        else if (key == "explore_start") c.explore_start = v.get<double>();
        else if (key == "explore_end") c.explore_end = v.get<double>();
        else if (key == "explore_decay_fraction") c.explore_decay_fraction = v.get<double>();
        else throw std::invalid_argument("unknown ddqn field '" + key + "'");
    }
    if (!(c.discount >= 0.0 && c.discount < 1.0)) throw std::invalid_argument("ddqn field 'discount': must lie in [0, 1)");
    if (c.batch_size < 1) throw std::invalid_argument("ddqn field 'batch_size': must be >= 1");
    if (c.target_sync_period < 1) throw std::invalid_argument("ddqn field 'target_sync_period': must be >= 1");
    if (c.replay_capacity < 1) throw std::invalid_argument("ddqn field 'replay_capacity': must be >= 1");
    return c;
}

double explore_rate(const QLearnerConfig& cfg, long long step, long long total_steps) {
    const double horizon = cfg.explore_decay_fraction * static_cast<double>(total_steps);
    if (horizon <= 0.0) return cfg.explore_end;
    const double frac = std::min(1.0, static_cast<double>(step) / horizon);
    return cfg.explore_start + frac * (cfg.explore_end - cfg.explore_start);
}

namespace {

std::vector<int> layer_sizes(int input, const std::vector<int>& hidden, int output) {
    std::vector<int> s{input};
    s.insert(s.end(), hidden.begin(), hidden.end());
    s.push_back(output);
    return s;
}

}  // namespace

QLearner::QLearner(int input_size, int heads, int actions_per_head, QLearnerConfig cfg,
                   std::uint64_t seed)
    : cfg_(std::move(cfg)),
      heads_(heads),
      actions_(actions_per_head),
      online_(layer_sizes(input_size, cfg_.hidden, heads * actions_per_head)),
      target_(online_),
      opt_(cfg_.optimizer, cfg_.learn_rate, online_.param_count()),
      replay_(cfg_.replay_capacity),
      rng_(make_rng(seed, 0xD0B1E)) {
    if (!(cfg_.discount >= 0.0 && cfg_.discount < 1.0)) {
        throw std::invalid_argument("QLearner: discount must lie in [0, 1)");
    }
    online_.init(rng_);
    update_target();
    syncs_ = 0;
    grad_.assign(online_.param_count(), 0.0);
}

std::vector<double> QLearner::q_online(std::span<const double> state) const {
    return nn::serial::forward(online_, state);
}

std::vector<double> QLearner::q_target(std::span<const double> state) const {
    return nn::serial::forward(target_, state);
}

namespace {

int argmax_lowest(std::span<const double> v) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

}  // namespace

std::vector<int> QLearner::greedy(std::span<const double> state) const {
    const auto q = q_online(state);
    std::vector<int> a(static_cast<std::size_t>(heads_));
    for (int h = 0; h < heads_; ++h) {
        a[h] = argmax_lowest(std::span<const double>(q).subspan(static_cast<std::size_t>(h) * actions_, actions_));
    }
    return a;
}

std::vector<double> QLearner::td_targets(const Transition& t) const {
    std::vector<double> y(static_cast<std::size_t>(heads_), t.reward);
    if (t.terminal) return y;
    const auto q_next_online = q_online(t.next_state);
    const auto q_next_target = q_target(t.next_state);
    for (int h = 0; h < heads_; ++h) {
        const auto off = static_cast<std::size_t>(h) * actions_;
        const int a_star = argmax_lowest(std::span<const double>(q_next_online).subspan(off, actions_));
        y[h] += cfg_.discount * q_next_target[off + a_star];
    }
    return y;
}

std::optional<double> QLearner::train_step() {
    if (replay_.size() < static_cast<std::size_t>(cfg_.batch_size) || replay_.size() == 0) {
        spdlog::warn("train_step skipped: replay holds {} transitions, batch needs {}", replay_.size(),
                     cfg_.batch_size);
        return std::nullopt;
    }
    const auto batch = replay_.sample(static_cast<std::size_t>(cfg_.batch_size), rng_);
    return train_on(batch);
}

double QLearner::train_on(std::span<const Transition* const> batch) {
    const int n = static_cast<int>(batch.size());
    if (n == 0) throw std::invalid_argument("train_on: empty batch");
    const int in = online_.input_size();
    const int out = online_.output_size();

    std::vector<double> inputs(static_cast<std::size_t>(n) * in);
    std::vector<double> next_inputs(static_cast<std::size_t>(n) * in, 0.0);
    for (int b = 0; b < n; ++b) {
        const Transition& t = *batch[b];
        if (static_cast<int>(t.state.size()) != in || static_cast<int>(t.action.size()) != heads_ ||
            (!t.terminal && static_cast<int>(t.next_state.size()) != in)) {
            throw std::invalid_argument("train_on: transition shape does not match the network");
        }
        std::copy(t.state.begin(), t.state.end(), inputs.begin() + static_cast<std::ptrdiff_t>(b) * in);
        if (!t.terminal) {
            std::copy(t.next_state.begin(), t.next_state.end(),
                      next_inputs.begin() + static_cast<std::ptrdiff_t>(b) * in);
        }
    }

    // Double-Q targets: the online net picks the bootstrap action, the
    // target net scores it.
    nn::forward_batch(online_, next_inputs, n, ws_);
    const std::vector<double> q_next_online(nn::outputs(ws_).begin(), nn::outputs(ws_).end());
    nn::forward_batch(target_, next_inputs, n, ws_);
    const auto q_next_target = nn::outputs(ws_);
    std::vector<double> targets(static_cast<std::size_t>(n) * heads_);
    for (int b = 0; b < n; ++b) {
        const Transition& t = *batch[b];
        for (int h = 0; h < heads_; ++h) {
            double y = t.reward;
            if (!t.terminal) {
                const auto off = static_cast<std::size_t>(b) * out + static_cast<std::size_t>(h) * actions_;
                const int a_star = argmax_lowest(std::span<const double>(q_next_online).subspan(off, actions_));
                y += cfg_.discount * q_next_target[off + a_star];
            }
            targets[static_cast<std::size_t>(b) * heads_ + h] = y;
        }
    }

    nn::forward_batch(online_, inputs, n, ws_);
    const auto q = nn::outputs(ws_);
    std::vector<double> d_out(static_cast<std::size_t>(n) * out, 0.0);
    const double scale = 1.0 / (static_cast<double>(n) * heads_);
    double loss = 0.0;
    for (int b = 0; b < n; ++b) {
        for (int h = 0; h < heads_; ++h) {
            const int a = batch[b]->action[h];
            if (a < 0 || a >= actions_) throw std::invalid_argument("train_on: action index out of range");
            const std::size_t idx = static_cast<std::size_t>(b) * out + static_cast<std::size_t>(h) * actions_ + a;
            const double err = q[idx] - targets[static_cast<std::size_t>(b) * heads_ + h];
            loss += err * err * scale;
            d_out[idx] = 2.0 * err * scale;
        }
    }
    nn::backward_batch(online_, ws_, d_out, grad_);
    opt_.step(online_.params(), grad_);

    ++steps_;
    if (steps_ % cfg_.target_sync_period == 0) update_target();
    return loss;
}

void QLearner::update_target() {
    std::copy(online_.params().begin(), online_.params().end(), target_.params().begin());
    ++syncs_;
}

nlohmann::json QLearner::checkpoint(const nlohmann::json& meta) const {
    return {{"format", "cmec-qnet"},
            {"version", 1},
            {"layer_sizes", online_.layer_sizes()},
            {"heads", heads_},
            {"actions_per_head", actions_},
            {"step", steps_},
            {"meta", meta},
            {"online", std::vector<double>(online_.params().begin(), online_.params().end())},
            {"target", std::vector<double>(target_.params().begin(), target_.params().end())}};
}

void QLearner::restore(const nlohmann::json& ckpt) {
    try {
        if (ckpt.at("format") != "cmec-qnet" || ckpt.at("version") != 1) {
            throw std::invalid_argument("checkpoint: unsupported format or version");
        }
        if (ckpt.at("layer_sizes").get<std::vector<int>>() != online_.layer_sizes() ||
            ckpt.at("heads").get<int>() != heads_ || ckpt.at("actions_per_head").get<int>() != actions_) {
            throw std::invalid_argument("checkpoint: network shape mismatch");
        }
        const auto on = ckpt.at("online").get<std::vector<double>>();
        const auto tg = ckpt.at("target").get<std::vector<double>>();
        if (on.size() != online_.param_count() || tg.size() != target_.param_count()) {
            throw std::invalid_argument("checkpoint: parameter count mismatch");
        }
        std::copy(on.begin(), on.end(), online_.params().begin());
        std::copy(tg.begin(), tg.end(), target_.params().begin());
        steps_ = ckpt.at("step").get<long long>();
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("checkpoint: schema mismatch: ") + e.what());
    }
}

}  // namespace cmec
