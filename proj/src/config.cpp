#include "cmec/config.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace cmec {

namespace {

void require(bool ok, const std::string& field, const std::string& why) {
    if (!ok) {
        throw ConfigError("config field '" + field + "': " + why);
    }
}

void require_positive(double v, const std::string& field) {
    require(std::isfinite(v) && v > 0.0, field, "must be a positive finite number");
}

}  // namespace

std::string to_string(TaskSuite s) {
    switch (s) {
        case TaskSuite::Table1: return "table1";
        case TaskSuite::DataIntensive: return "data";
        case TaskSuite::ComputeIntensive: return "compute";
    }
    return "?";
}

std::string to_string(RequestModel m) {
    switch (m) {
        case RequestModel::Uniform: return "uniform";
        case RequestModel::AlwaysActive: return "always";
        case RequestModel::Markov: return "markov";
    }
    return "?";
}

std::string to_string(BandwidthMode m) {
    return m == BandwidthMode::Shared ? "shared" : "split";
}

TaskSuite parse_task_suite(const std::string& s) {
    if (s == "table1") return TaskSuite::Table1;
    if (s == "data") return TaskSuite::DataIntensive;
    if (s == "compute") return TaskSuite::ComputeIntensive;
    throw ConfigError("config field 'task_suite': unknown value '" + s +
                      "' (expected table1, data or compute)");
}

RequestModel parse_request_model(const std::string& s) {
    if (s == "uniform") return RequestModel::Uniform;
    if (s == "always") return RequestModel::AlwaysActive;
    if (s == "markov") return RequestModel::Markov;
    throw ConfigError("config field 'request_model': unknown value '" + s +
                      "' (expected uniform, always or markov)");
}

BandwidthMode parse_bandwidth_mode(const std::string& s) {
    if (s == "shared") return BandwidthMode::Shared;
    if (s == "split") return BandwidthMode::Split;
    throw ConfigError("config field 'bandwidth_mode': unknown value '" + s +
                      "' (expected shared or split)");
}

TaskRanges task_ranges(TaskSuite suite) {
    switch (suite) {
        case TaskSuite::Table1: return {1.0, 10.0, 0.001, 0.1};
        case TaskSuite::DataIntensive: return {10.0, 20.0, 0.1, 0.5};
        case TaskSuite::ComputeIntensive: return {1.0, 5.0, 1.0, 2.0};
    }
    return {1.0, 10.0, 0.001, 0.1};
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double ValidatedConfig::link_bandwidth_hz() const {
    if (raw_.bandwidth_mode == BandwidthMode::Split) {
        return raw_.bandwidth_hz / raw_.n_ues;
    }
    return raw_.bandwidth_hz;
}

double ValidatedConfig::link_noise_power_w() const {
    return dbm_to_watts(raw_.noise_density_dbm_hz) * link_bandwidth_hz();
}

ValidatedConfig validate_config(const SystemConfig& cfg) {
    require_positive(cfg.arena_m, "arena_m");
    require(cfg.n_ues >= 1, "n_ues", "must be at least 1");
    require(cfg.n_cns >= 0, "n_cns", "must be nonnegative");
    require(cfg.n_antennas >= 1, "n_antennas", "must be at least 1");
    require_positive(cfg.bandwidth_hz, "bandwidth_hz");
    require(std::isfinite(cfg.blocklength) && cfg.blocklength >= 1.0, "blocklength",
            "must be at least 1 channel use");
    require(cfg.decode_error_prob > 0.0 && cfg.decode_error_prob < 0.5, "decode_error_prob",
            "must lie in (0, 0.5)");
    require(std::isfinite(cfg.noise_density_dbm_hz), "noise_density_dbm_hz", "must be finite");
    require_positive(cfg.es_capacity_hz, "es_capacity_hz");
    require_positive(cfg.cn_capacity_min_hz, "cn_capacity_min_hz");
    require_positive(cfg.cn_capacity_max_hz, "cn_capacity_max_hz");
    require(cfg.cn_capacity_min_hz <= cfg.cn_capacity_max_hz, "cn_capacity_max_hz",
            "must be >= cn_capacity_min_hz");
    require_positive(cfg.ue_tx_power_w, "ue_tx_power_w");
    require_positive(cfg.ue_local_rate_hz, "ue_local_rate_hz");
    require(std::isfinite(cfg.gain_latency_reduction) && cfg.gain_latency_reduction >= 0.0,
            "gain_latency_reduction", "must be nonnegative");
    require(std::isfinite(cfg.cost_coefficient) && cfg.cost_coefficient >= 0.0,
            "cost_coefficient", "must be nonnegative");
    require(cfg.twin_deviation_pct >= 0.0 && cfg.twin_deviation_pct < 100.0,
            "twin_deviation_pct", "must lie in [0, 100)");
    require(cfg.n_tasks >= 1, "n_tasks", "catalog needs at least one task");
    require_positive(cfg.max_latency_s, "max_latency_s");
    require(cfg.request_stay_prob >= 0.0 && cfg.request_stay_prob <= 1.0, "request_stay_prob",
            "must lie in [0, 1]");

    ValidatedConfig out;
    out.raw_ = cfg;
    out.noise_power_w_ = dbm_to_watts(cfg.noise_density_dbm_hz) * cfg.bandwidth_hz;
    const TaskRanges r = task_ranges(cfg.task_suite);
    out.input_bits_min_ = r.input_mb_min * kBitsPerMegabyte;
    out.input_bits_max_ = r.input_mb_max * kBitsPerMegabyte;
    out.cycles_min_ = r.gigacycles_min * kCyclesPerGigacycle;
    out.cycles_max_ = r.gigacycles_max * kCyclesPerGigacycle;
    return out;
}

SystemConfig system_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw ConfigError("config: expected a JSON object for the system section");
    }
    static const std::set<std::string> known = {
        "arena_m", "n_ues", "n_cns", "n_antennas", "bandwidth_hz", "bandwidth_mode",
        "blocklength", "decode_error_prob", "noise_density_dbm_hz", "es_capacity_hz",
        "cn_capacity_min_hz", "cn_capacity_max_hz", "ue_tx_power_w", "ue_local_rate_hz",
        "gain_latency_reduction", "cost_coefficient", "twin_deviation_pct", "n_tasks",
        "task_suite", "max_latency_s", "request_model", "request_stay_prob", "rng_seed"};
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) {
            throw ConfigError("config: unknown system field '" + key + "'");
        }
    }

    SystemConfig c;
    auto num = [&](const char* key, auto& dst) {
        if (!j.contains(key)) return;
        const auto& v = j.at(key);
        if (!v.is_number()) {
            throw ConfigError(std::string("config field '") + key + "': expected a number");
        }
        dst = v.get<std::remove_reference_t<decltype(dst)>>();
    };
    auto str = [&](const char* key) -> std::string {
        const auto& v = j.at(key);
        if (!v.is_string()) {
            throw ConfigError(std::string("config field '") + key + "': expected a string");
        }
        return v.get<std::string>();
    };
    num("arena_m", c.arena_m);
    num("n_ues", c.n_ues);
    num("n_cns", c.n_cns);
    num("n_antennas", c.n_antennas);
    num("bandwidth_hz", c.bandwidth_hz);
    if (j.contains("bandwidth_mode")) c.bandwidth_mode = parse_bandwidth_mode(str("bandwidth_mode"));
    num("blocklength", c.blocklength);
    num("decode_error_prob", c.decode_error_prob);
    num("noise_density_dbm_hz", c.noise_density_dbm_hz);
    num("es_capacity_hz", c.es_capacity_hz);
    num("cn_capacity_min_hz", c.cn_capacity_min_hz);
    num("cn_capacity_max_hz", c.cn_capacity_max_hz);
    num("ue_tx_power_w", c.ue_tx_power_w);
    num("ue_local_rate_hz", c.ue_local_rate_hz);
    num("gain_latency_reduction", c.gain_latency_reduction);
    num("cost_coefficient", c.cost_coefficient);
    num("twin_deviation_pct", c.twin_deviation_pct);
    num("n_tasks", c.n_tasks);
    if (j.contains("task_suite")) c.task_suite = parse_task_suite(str("task_suite"));
    num("max_latency_s", c.max_latency_s);
    if (j.contains("request_model")) c.request_model = parse_request_model(str("request_model"));
    num("request_stay_prob", c.request_stay_prob);
    num("rng_seed", c.rng_seed);
    return c;
}

nlohmann::json to_json(const SystemConfig& c) {
    return {
        {"arena_m", c.arena_m},
        {"n_ues", c.n_ues},
        {"n_cns", c.n_cns},
        {"n_antennas", c.n_antennas},
        {"bandwidth_hz", c.bandwidth_hz},
        {"bandwidth_mode", to_string(c.bandwidth_mode)},
        {"blocklength", c.blocklength},
        {"decode_error_prob", c.decode_error_prob},
        {"noise_density_dbm_hz", c.noise_density_dbm_hz},
        {"es_capacity_hz", c.es_capacity_hz},
        {"cn_capacity_min_hz", c.cn_capacity_min_hz},
        {"cn_capacity_max_hz", c.cn_capacity_max_hz},
        {"ue_tx_power_w", c.ue_tx_power_w},
        {"ue_local_rate_hz", c.ue_local_rate_hz},
        {"gain_latency_reduction", c.gain_latency_reduction},
        {"cost_coefficient", c.cost_coefficient},
        {"twin_deviation_pct", c.twin_deviation_pct},
        {"n_tasks", c.n_tasks},
        {"task_suite", to_string(c.task_suite)},
        {"max_latency_s", c.max_latency_s},
        {"request_model", to_string(c.request_model)},
        {"request_stay_prob", c.request_stay_prob},
        {"rng_seed", c.rng_seed},
    };
}

}  // namespace cmec
