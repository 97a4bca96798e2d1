#include "cmec/orra.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cmec {

std::vector<double> encode_state(std::span<const int> requests, int n_tasks) {
    const int width = n_tasks + 1;
    std::vector<double> s(requests.size() * static_cast<std::size_t>(width), 0.0);
    for (std::size_t m = 0; m < requests.size(); ++m) {
        if (requests[m] < 0 || requests[m] > n_tasks) {
            throw std::out_of_range("encode_state: request index outside 0..F");
        }
        s[m * width + static_cast<std::size_t>(requests[m])] = 1.0;
    }
    return s;
}

std::vector<int> decode_state(std::span<const double> state, int n_tasks) {
    const std::size_t width = static_cast<std::size_t>(n_tasks) + 1;
    if (state.size() % width != 0) throw std::invalid_argument("decode_state: bad state length");
    std::vector<int> mu(state.size() / width);
    for (std::size_t m = 0; m < mu.size(); ++m) {
        const auto row = state.subspan(m * width, width);
        mu[m] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return mu;
}

ActionCodec::ActionCodec(int levels) : levels_(levels) {
    if (levels_ < 2) throw std::invalid_argument("ActionCodec: need at least 2 levels");
}

double ActionCodec::level_value(int level) const {
    if (level < 0 || level >= levels_) throw std::out_of_range("ActionCodec: level out of range");
    return static_cast<double>(level) / (levels_ - 1);
}

int ActionCodec::encode(int ratio_level, int share_level) const {
    if (ratio_level < 0 || ratio_level >= levels_ || share_level < 0 || share_level >= levels_) {
        throw std::out_of_range("ActionCodec: level out of range");
    }
    return ratio_level * levels_ + share_level;
}

std::pair<int, int> ActionCodec::decode(int action) const {
    if (action < 0 || action >= actions_per_ue()) throw std::out_of_range("ActionCodec: action out of range");
    return {action / levels_, action % levels_};
}

OrraProposal ActionCodec::to_proposal(std::span<const int> actions) const {
    OrraProposal p;
    p.es_ratio.resize(actions.size());
    p.es_share.resize(actions.size());
    for (std::size_t m = 0; m < actions.size(); ++m) {
        const auto [r, s] = decode(actions[m]);
        p.es_ratio[m] = level_value(r);
        p.es_share[m] = level_value(s);
    }
    const double total = std::accumulate(p.es_share.begin(), p.es_share.end(), 0.0);
    if (total > 1.0) {
        for (auto& b : p.es_share) b /= total;
        // Rounding can leave the sum a few ulps above 1.
        while (std::accumulate(p.es_share.begin(), p.es_share.end(), 0.0) > 1.0) {
            for (auto& b : p.es_share) b = std::nextafter(b, 0.0);
        }
    }
    return p;
}

std::vector<int> ActionCodec::to_heads(std::span<const int> actions) const {
    std::vector<int> heads;
    heads.reserve(actions.size() * 2);
    for (int a : actions) {
        const auto [r, s] = decode(a);
        heads.push_back(r);
        heads.push_back(s);
    }
    return heads;
}

std::vector<int> ActionCodec::from_heads(std::span<const int> heads) const {
    if (heads.size() % 2 != 0) throw std::invalid_argument("ActionCodec: head count must be even");
    std::vector<int> actions(heads.size() / 2);
    for (std::size_t m = 0; m < actions.size(); ++m) actions[m] = encode(heads[2 * m], heads[2 * m + 1]);
    return actions;
}

std::vector<int> select_action(const QLearner& learner, const ActionCodec& codec,
                               std::span<const double> state, Rng& rng, double explore) {
    if (learner.actions_per_head() != codec.levels() || learner.heads() % 2 != 0) {
        throw std::invalid_argument("select_action: learner heads do not match the codec");
    }
    const int n_ues = learner.heads() / 2;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_int_distribution<int> any(0, codec.actions_per_ue() - 1);
    std::vector<int> actions(static_cast<std::size_t>(n_ues));
    std::vector<bool> explored(static_cast<std::size_t>(n_ues));
    for (int m = 0; m < n_ues; ++m) {
        explored[m] = u01(rng) < explore;
        if (explored[m]) actions[m] = any(rng);
    }
    if (std::find(explored.begin(), explored.end(), false) != explored.end()) {
        const auto greedy = codec.from_heads(learner.greedy(state));
        for (int m = 0; m < n_ues; ++m) {
            if (!explored[m]) actions[m] = greedy[m];
        }
    }
    return actions;
}

std::vector<int> random_actions(Rng& rng, int n_ues, const ActionCodec& codec) {
    std::uniform_int_distribution<int> level(0, codec.levels() - 1);
    std::vector<int> actions(static_cast<std::size_t>(n_ues));
    for (auto& a : actions) {
        const int r = level(rng);
        const int s = level(rng);
        a = codec.encode(r, s);
    }
    return actions;
}

OrraProposal random_orra(Rng& rng, int n_ues, const ActionCodec& codec) {
    return codec.to_proposal(random_actions(rng, n_ues, codec));
}

OrraProposal full_offload_orra(std::span<const int> requests) {
    const auto active = std::count_if(requests.begin(), requests.end(), [](int r) { return r != 0; });
    OrraProposal p;
    p.es_ratio.assign(requests.size(), 1.0);
    p.es_share.assign(requests.size(), 0.0);
    for (std::size_t m = 0; m < requests.size(); ++m) {
        if (requests[m] != 0) p.es_share[m] = 1.0 / static_cast<double>(active);
    }
    return p;
}

RewardBreakdown compute_reward(const OffloadingGame& chosen, const StrategyProfile& profile,
                               double penalty) {
    RewardBreakdown r;
    const auto report = utility_report(chosen, profile);
    r.chosen_utility = report.system_utility;

    const OffloadingGame reference(chosen.scenario(), chosen.requests(), chosen.rates(),
                                   full_offload_orra(chosen.requests()));
    for (int m = 0; m < chosen.n_ues(); ++m) {
        const double u = reference.outcome(m, profile.decision[m]).utility;
        if (std::isfinite(u)) r.reference_utility += u;
    }
    r.feasible = report.feasible();
    r.reward = r.feasible ? r.chosen_utility - r.reference_utility : penalty;
    return r;
}

}  // namespace cmec
