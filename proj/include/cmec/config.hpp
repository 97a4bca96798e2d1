#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace cmec {

/// Thrown for any configuration that violates a field invariant. The message
/// always names the offending field.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class TaskSuite { Table1, DataIntensive, ComputeIntensive };
enum class RequestModel { Uniform, AlwaysActive, Markov };
enum class BandwidthMode { Shared, Split };

std::string to_string(TaskSuite s);
std::string to_string(RequestModel m);
std::string to_string(BandwidthMode m);
TaskSuite parse_task_suite(const std::string& s);
RequestModel parse_request_model(const std::string& s);
BandwidthMode parse_bandwidth_mode(const std::string& s);

/// Task sampling ranges in user-facing units (megabytes, gigacycles).
struct TaskRanges {
    double input_mb_min;
    double input_mb_max;
    double gigacycles_min;
    double gigacycles_max;
};

TaskRanges task_ranges(TaskSuite suite);

/// Raw, user-facing system parameters. Units are the ones a config file is
/// written in; `validate_config` converts to canonical SI units.
struct SystemConfig {
    double arena_m = 200.0;
    int n_ues = 6;
    int n_cns = 5;
    int n_antennas = 8;
    double bandwidth_hz = 10e6;
    BandwidthMode bandwidth_mode = BandwidthMode::Shared;
    double blocklength = 512.0;
    double decode_error_prob = 1e-9;
    double noise_density_dbm_hz = -174.0;
    double es_capacity_hz = 30e9;
    double cn_capacity_min_hz = 1e9;
    double cn_capacity_max_hz = 10e9;
    double ue_tx_power_w = 0.2;
    double ue_local_rate_hz = 1e9;
    double gain_latency_reduction = 2.5;
    double cost_coefficient = 0.1;
    double twin_deviation_pct = 5.0;
    int n_tasks = 3;
    TaskSuite task_suite = TaskSuite::Table1;
    double max_latency_s = 5.0;
    RequestModel request_model = RequestModel::Uniform;
    double request_stay_prob = 0.8;
    std::uint64_t rng_seed = 1;
};

/// A SystemConfig that passed validation, together with the derived SI
/// quantities. Only `validate_config` can produce one.
class ValidatedConfig {
public:
    const SystemConfig& raw() const { return raw_; }

    /// Noise power over the full band, watts.
    double noise_power_w() const { return noise_power_w_; }
    /// Bandwidth seen by one UE's link (B, or B/M in split mode).
    double link_bandwidth_hz() const;
    /// Noise power over `link_bandwidth_hz()`, watts.
    double link_noise_power_w() const;
    double input_bits_min() const { return input_bits_min_; }
    double input_bits_max() const { return input_bits_max_; }
    double cycles_min() const { return cycles_min_; }
    double cycles_max() const { return cycles_max_; }

private:
    friend ValidatedConfig validate_config(const SystemConfig& cfg);
    ValidatedConfig() = default;

    SystemConfig raw_;
    double noise_power_w_ = 0.0;
    double input_bits_min_ = 0.0;
    double input_bits_max_ = 0.0;
    double cycles_min_ = 0.0;
    double cycles_max_ = 0.0;
};

ValidatedConfig validate_config(const SystemConfig& cfg);

constexpr double kBitsPerMegabyte = 8e6;
constexpr double kCyclesPerGigacycle = 1e9;

double dbm_to_watts(double dbm);

/// Parses a config object; absent keys keep their defaults, unknown keys are
/// rejected so typos surface.
SystemConfig system_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SystemConfig& cfg);

}  // namespace cmec
