#include "cmec/scenario.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cmec {

Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      static_cast<std::uint32_t>(substream),
                      static_cast<std::uint32_t>(substream >> 32)};
    return Rng(seq);
}

TaskSpec TaskSpec::make(double input_bits, double cycles, double max_latency_s) {
    if (!(input_bits > 0.0) || !(cycles > 0.0) || !(max_latency_s > 0.0)) {
        throw std::invalid_argument("TaskSpec: input_bits, cycles and max_latency_s must be > 0");
    }
    return TaskSpec{input_bits, cycles, max_latency_s};
}

TaskCatalog::TaskCatalog(std::vector<TaskSpec> tasks) : tasks_(std::move(tasks)) {
    if (tasks_.empty()) {
        throw std::invalid_argument("TaskCatalog: at least one task is required");
    }
}

const TaskSpec& TaskCatalog::at(int request) const {
    if (request < 1 || request > size()) {
        throw std::out_of_range("TaskCatalog: request index " + std::to_string(request) +
                                " outside 1.." + std::to_string(size()));
    }
    return tasks_[static_cast<std::size_t>(request - 1)];
}

TwinEstimate twin_estimate(double actual_hz, double deviation_pct) {
    if (!(deviation_pct >= 0.0) || deviation_pct >= 100.0) {
        throw std::invalid_argument("twin_estimate: deviation_pct must lie in [0, 100)");
    }
    if (!(actual_hz > 0.0)) {
        throw std::invalid_argument("twin_estimate: actual_hz must be positive");
    }
    return {actual_hz, deviation_pct / 100.0 * actual_hz};
}

double node_cost_per_gigacycle(double capacity_hz, double cost_coefficient) {
    return cost_coefficient * capacity_hz / 10e9;
}

std::array<double, 2> ScenarioState::ap_position() const {
    const double half = config.raw().arena_m / 2.0;
    return {half, half};
}

double ScenarioState::distance_to_ap(int ue) const {
    const auto ap = ap_position();
    const auto& p = ues.at(static_cast<std::size_t>(ue)).position_m;
    return std::hypot(p[0] - ap[0], p[1] - ap[1]);
}

ScenarioState generate_scenario(const ValidatedConfig& cfg, std::uint64_t seed) {
    const SystemConfig& raw = cfg.raw();
    Rng rng = make_rng(seed, 0x5CE4A210);

    std::uniform_real_distribution<double> coord(0.0, raw.arena_m);
    std::vector<UeState> ues(static_cast<std::size_t>(raw.n_ues));
    for (auto& ue : ues) {
        ue.position_m = {coord(rng), coord(rng)};
        ue.tx_power_w = raw.ue_tx_power_w;
        ue.local_rate_hz = raw.ue_local_rate_hz;
    }

    std::vector<ComputeNode> nodes;
    nodes.reserve(static_cast<std::size_t>(raw.n_cns) + 1);
    const auto es_twin = twin_estimate(raw.es_capacity_hz, raw.twin_deviation_pct);
    nodes.push_back({NodeKind::EdgeServer, es_twin.rate_hz, es_twin.deviation_hz,
                     node_cost_per_gigacycle(raw.es_capacity_hz, raw.cost_coefficient)});
    std::uniform_real_distribution<double> cn_cap(raw.cn_capacity_min_hz, raw.cn_capacity_max_hz);
    for (int k = 0; k < raw.n_cns; ++k) {
        const auto twin = twin_estimate(cn_cap(rng), raw.twin_deviation_pct);
        nodes.push_back({NodeKind::CoinNode, twin.rate_hz, twin.deviation_hz,
                         node_cost_per_gigacycle(twin.rate_hz, raw.cost_coefficient)});
    }

    std::uniform_real_distribution<double> bits(cfg.input_bits_min(), cfg.input_bits_max());
    std::uniform_real_distribution<double> cycles(cfg.cycles_min(), cfg.cycles_max());
    std::vector<TaskSpec> tasks;
    for (int f = 0; f < raw.n_tasks; ++f) {
        const double b = bits(rng);
        const double c = cycles(rng);
        tasks.push_back(TaskSpec::make(b, c, raw.max_latency_s));
    }

    ScenarioState scn{cfg, std::move(ues), std::move(nodes), TaskCatalog(std::move(tasks)), 0};
    // Requests for slot 0; later slots come from sample_requests.
    Rng req_rng = make_rng(seed, 0x5CE4A210, 1);
    const auto mu = sample_requests(scn, {}, req_rng);
    for (std::size_t m = 0; m < mu.size(); ++m) {
        scn.ues[m].current_request = mu[m];
    }
    return scn;
}

std::vector<int> sample_requests(const ScenarioState& scn, std::span<const int> previous,
                                  Rng& rng) {
    const int f = scn.catalog.size();
    const auto& raw = scn.config.raw();
    std::vector<int> mu(static_cast<std::size_t>(scn.n_ues()));
    std::uniform_int_distribution<int> any(0, f);
    std::uniform_int_distribution<int> active(1, f);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (std::size_t m = 0; m < mu.size(); ++m) {
        switch (raw.request_model) {
            case RequestModel::Uniform:
                mu[m] = any(rng);
                break;
            case RequestModel::AlwaysActive:
                mu[m] = active(rng);
                break;
            case RequestModel::Markov: {
                const double stay = u01(rng);
                const int redraw = any(rng);
                mu[m] = (previous.size() == mu.size() && stay < raw.request_stay_prob)
                            ? previous[m]
                            : redraw;
                break;
            }
        }
    }
    return mu;
}

namespace {

const char* kind_name(NodeKind k) { return k == NodeKind::EdgeServer ? "ES" : "CN"; }

NodeKind parse_kind(const std::string& s) {
    if (s == "ES") return NodeKind::EdgeServer;
    if (s == "CN") return NodeKind::CoinNode;
    throw ConfigError("scenario: unknown node kind '" + s + "'");
}

}  // namespace

nlohmann::json scenario_to_json(const ScenarioState& scn) {
    nlohmann::json j;
    j["format"] = "cmec-scenario";
    j["version"] = 1;
    j["config"] = to_json(scn.config.raw());
    j["slot"] = scn.slot;
    auto& ues = j["ues"] = nlohmann::json::array();
    for (const auto& ue : scn.ues) {
        ues.push_back({{"x_m", ue.position_m[0]},
                       {"y_m", ue.position_m[1]},
                       {"tx_power_w", ue.tx_power_w},
                       {"local_rate_hz", ue.local_rate_hz},
                       {"current_request", ue.current_request}});
    }
    auto& nodes = j["nodes"] = nlohmann::json::array();
    for (const auto& n : scn.nodes) {
        nodes.push_back({{"kind", kind_name(n.kind)},
                         {"capacity_hz", n.capacity_hz},
                         {"twin_deviation_hz", n.twin_deviation_hz},
                         {"cost_per_gigacycle", n.cost_per_gigacycle}});
    }
    auto& tasks = j["catalog"] = nlohmann::json::array();
    for (const auto& t : scn.catalog.tasks()) {
        tasks.push_back({{"input_bits", t.input_bits},
                         {"cycles", t.cycles},
                         {"max_latency_s", t.max_latency_s}});
    }
    return j;
}

ScenarioState scenario_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "cmec-scenario" || j.at("version").get<int>() != 1) {
            throw ConfigError("scenario: unsupported format or version");
        }
        const ValidatedConfig cfg = validate_config(system_config_from_json(j.at("config")));

        std::vector<UeState> ues;
        for (const auto& u : j.at("ues")) {
            UeState ue;
            ue.position_m = {u.at("x_m").get<double>(), u.at("y_m").get<double>()};
            ue.tx_power_w = u.at("tx_power_w").get<double>();
            ue.local_rate_hz = u.at("local_rate_hz").get<double>();
            ue.current_request = u.at("current_request").get<int>();
            ues.push_back(ue);
        }
        std::vector<ComputeNode> nodes;
        for (const auto& n : j.at("nodes")) {
            nodes.push_back({parse_kind(n.at("kind").get<std::string>()),
                             n.at("capacity_hz").get<double>(),
                             n.at("twin_deviation_hz").get<double>(),
                             n.at("cost_per_gigacycle").get<double>()});
        }
        std::vector<TaskSpec> tasks;
        for (const auto& t : j.at("catalog")) {
            tasks.push_back(TaskSpec::make(t.at("input_bits").get<double>(),
                                           t.at("cycles").get<double>(),
                                           t.at("max_latency_s").get<double>()));
        }

        if (static_cast<int>(ues.size()) != cfg.raw().n_ues) {
            throw ConfigError("scenario: ue count does not match config n_ues");
        }
        if (static_cast<int>(nodes.size()) != cfg.raw().n_cns + 1 || nodes.empty() ||
            nodes.front().kind != NodeKind::EdgeServer) {
            throw ConfigError("scenario: node list must be the ES followed by n_cns COIN nodes");
        }
        for (std::size_t i = 1; i < nodes.size(); ++i) {
            if (nodes[i].kind != NodeKind::CoinNode) {
                throw ConfigError("scenario: exactly one ES is allowed, at index 0");
            }
        }
        for (const auto& n : nodes) {
            if (!(n.capacity_hz > n.twin_deviation_hz) || n.twin_deviation_hz < 0.0 ||
                n.cost_per_gigacycle < 0.0) {
                throw ConfigError("scenario: node requires capacity_hz > twin_deviation_hz >= 0");
            }
        }
        ScenarioState scn{cfg, std::move(ues), std::move(nodes), TaskCatalog(std::move(tasks)),
                          j.at("slot").get<int>()};
        for (const auto& ue : scn.ues) {
            if (ue.current_request < 0 || ue.current_request > scn.catalog.size()) {
                throw ConfigError("scenario: current_request outside catalog range");
            }
        }
        return scn;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("scenario: schema mismatch: ") + e.what());
    } catch (const std::invalid_argument& e) {
        if (dynamic_cast<const ConfigError*>(&e)) throw;
        throw ConfigError(std::string("scenario: ") + e.what());
    }
}

}  // namespace cmec
