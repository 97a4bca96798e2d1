#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <algorithm>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "cmec/harness.hpp"
#include "cmec/verify.hpp"

namespace fs = std::filesystem;
using namespace cmec;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kFailed = 1, kUsage = 2, kConfigMissing = 3, kConfigInvalid = 4, kOutputError = 5 };

struct CliError {
    int code;
    std::string message;
};

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> episodes;
    std::string schemes;
    std::string sweep;
    std::string out = "cmec_out";
    bool plots = false;
    int small_instances = 100;
    std::string scenario_path;
};

json read_json_file(const std::string& path, const char* what) {
    if (!fs::exists(path)) throw CliError{kConfigMissing, fmt::format("{} not found: {}", what, path)};
    std::ifstream f(path);
    if (!f) throw CliError{kConfigMissing, fmt::format("{} not readable: {}", what, path)};
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw CliError{kConfigInvalid, fmt::format("{} is not valid JSON: {}: {}", what, path, e.what())};
    }
}

struct Loaded {
    SystemConfig system;
    ExperimentSpec experiment;
    json raw = json::object();
};

Loaded load_config(const Options& o) {
    Loaded l;
    if (!o.config_path.empty()) {
        l.raw = read_json_file(o.config_path, "config");
        if (!l.raw.is_object()) throw CliError{kConfigInvalid, "config schema error: top level must be an object"};
        try {
            for (const auto& [key, v] : l.raw.items()) {
                if (key == "system") l.system = system_config_from_json(v);
                else if (key == "experiment") l.experiment = experiment_spec_from_json(v);
                else throw ConfigError("unknown top-level section '" + key + "' (expected system, experiment)");
            }
        } catch (const ConfigError& e) {
            throw CliError{kConfigInvalid, std::string("config schema error: ") + e.what()};
        }
    }
    try {
        if (o.seed) {
            l.system.rng_seed = *o.seed;
            l.experiment.seed = *o.seed;
        }
        if (o.episodes) l.experiment.episodes = *o.episodes;
        if (!o.schemes.empty()) {
            l.experiment.schemes.clear();
            std::stringstream ss(o.schemes);
            std::string name;
            while (std::getline(ss, name, ',')) l.experiment.schemes.push_back(parse_scheme(name));
        }
        validate_spec(l.experiment);
        validate_config(l.system);
    } catch (const ConfigError& e) {
        throw CliError{kConfigInvalid, std::string("invalid option: ") + e.what()};
    }
    return l;
}

fs::path prepare_out(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw CliError{kOutputError, fmt::format("output directory not writable: {} ({})", dir, ec.message())};
    const fs::path probe = fs::path(dir) / ".write_probe";
    std::ofstream f(probe);
    if (!f) throw CliError{kOutputError, "output directory not writable: " + dir};
    f.close();
    fs::remove(probe, ec);
    return dir;
}

void write_manifest(const fs::path& out, const std::string& command, const std::vector<std::string>& argv,
                    const Options& o, const Loaded& l, const std::vector<std::string>& outputs) {
    json m;
    m["tool"] = "cmec";
    m["version"] = CMEC_VERSION;
    m["command"] = command;
    m["argv"] = argv;
    m["inputs"] = {{"config", o.config_path.empty() ? json(nullptr) : json(o.config_path)},
                   {"scenario", o.scenario_path.empty() ? json(nullptr) : json(o.scenario_path)}};
    m["seed"] = l.experiment.seed;
    m["scenario_seed"] = l.system.rng_seed;
    m["system"] = to_json(l.system);
    m["experiment"] = to_json(l.experiment);
    m["outputs"] = outputs;
    std::ofstream f(out / "manifest.json");
    f << m.dump(2) << "\n";
}

std::vector<std::string> listing(const fs::path& dir) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().filename() != "manifest.json") names.push_back(e.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    return names;
}

void print_summary(const fs::path& out) {
    std::ifstream f(out / "summary.json");
    const auto s = json::parse(f);
    for (const auto& r : s["rows"]) {
        std::cout << fmt::format("{:<9} {:>8}  utility {:>10.4f} +- {:<8.4f} latency {:.4f} s ({} reps)\n",
                                 r["scheme"].get<std::string>(), r["sweep_value"].get<std::string>(),
                                 r["mean_utility"].get<double>(), r["std_utility"].get<double>(),
                                 r["mean_latency_s"].get<double>(), r["replications"].get<int>());
    }
    for (const auto& i : s["improvements"]) {
        const auto& pct = i["improvement_pct"];
        std::cout << fmt::format("DDQN-EPG vs {:<8} {:>8}: {}\n", i["baseline"].get<std::string>(),
                                 i["sweep_value"].get<std::string>(),
                                 pct.is_null() ? std::string("n/a (baseline 0)") : fmt::format("{:+.1f}%", pct.get<double>()));
    }
    if (s["truncated"].get<bool>()) std::cout << "note: time budget exhausted, results are partial\n";
}

int cmd_run(const Options& o, const std::vector<std::string>& argv, bool sweep) {
    Loaded l = load_config(o);
    try {
        if (sweep) {
            l.experiment.sweep = parse_sweep_axis(o.sweep);
            if (l.experiment.sweep == SweepAxis::None) throw ConfigError("sweep needs an axis: ue, cn or task");
            l.experiment.sweep_values = default_sweep_values(l.experiment.sweep);
        } else {
            l.experiment.sweep = SweepAxis::None;
            l.experiment.sweep_values.clear();
        }
    } catch (const ConfigError& e) {
        throw CliError{kConfigInvalid, std::string("invalid option: ") + e.what()};
    }
    const auto out = prepare_out(o.out);
    std::optional<ScenarioState> scenario;
    if (!o.scenario_path.empty()) {
        const auto j = read_json_file(o.scenario_path, "scenario");
        try {
            scenario.emplace(scenario_from_json(j));
        } catch (const ConfigError& e) {
            throw CliError{kConfigInvalid, std::string("scenario schema error: ") + e.what()};
        }
        l.system = scenario->config.raw();
        if (o.seed) l.system.rng_seed = *o.seed;
    }
    run_experiment(l.system, l.experiment, ExperimentOutputs{out, o.plots}, scenario ? &*scenario : nullptr);
    write_manifest(out, sweep ? "sweep" : (scenario ? "replay" : "run"), argv, o, l, listing(out));
    print_summary(out);
    std::cout << "outputs written to " << out.string() << "\n";
    return kOk;
}

int cmd_dump(const Options& o, const std::vector<std::string>& argv) {
    Loaded l = load_config(o);
    const auto out = prepare_out(o.out);
    const auto scn = generate_scenario(validate_config(l.system), l.system.rng_seed);
    std::ofstream f(out / "scenario.json");
    f << scenario_to_json(scn).dump(2) << "\n";
    if (!f) throw CliError{kOutputError, "cannot write " + (out / "scenario.json").string()};
    f.close();
    write_manifest(out, "dump-scenario", argv, o, l, listing(out));
    std::cout << "scenario written to " << (out / "scenario.json").string() << "\n";
    return kOk;
}

int cmd_verify(const Options& o, const std::vector<std::string>& argv) {
    Loaded l = load_config(o);
    const std::uint64_t seed = o.seed.value_or(l.experiment.seed);
    if (o.small_instances < 1) throw CliError{kConfigInvalid, "invalid option: --small-instances must be >= 1"};
    const auto out = prepare_out(o.out);
    std::vector<SuiteResult> results;
    results.push_back(verify_ne_containment(o.small_instances, seed));
    results.push_back(verify_latency_identities(1000, seed));
    results.push_back(verify_rate_bounds(10000, seed));
    results.push_back(verify_finite_improvement(10 * o.small_instances, seed));
    results.push_back(verify_epg_table(20, seed));
    results.push_back(verify_constraint_audit(out / "audit_run", seed));
    bool all = true;
    json report = json::array();
    for (const auto& r : results) {
        std::cout << fmt::format("[{}] {}: {}\n", r.passed ? "PASS" : "FAIL", r.name, r.detail);
        all = all && r.passed;
        report.push_back({{"suite", r.name}, {"passed", r.passed}, {"detail", r.detail}});
    }
    std::ofstream(out / "verify.json") << report.dump(2) << "\n";
    write_manifest(out, "verify", argv, o, l, listing(out));
    return all ? kOk : kFailed;
}

void setup_logging() {
    const char* env = std::getenv("CMEC_LOG_LEVEL");
    spdlog::set_level(spdlog::level::warn);
    if (env && *env) {
        const auto level = spdlog::level::from_str(env);
        if (level == spdlog::level::off && std::string(env) != "off") {
            spdlog::warn("CMEC_LOG_LEVEL '{}' not recognised; using warn", env);
        } else {
            spdlog::set_level(level);
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"Cooperative edge computing offloading simulator (DDQN + potential game)", "cmec"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(CMEC_VERSION));
    app.footer("Environment: CMEC_LOG_LEVEL=trace|debug|info|warn|error|off sets log verbosity (default warn).");
    Options o;

    auto common = [&](CLI::App* sub, bool experiment) {
        sub->add_option("--config", o.config_path, "JSON config with optional 'system' and 'experiment' sections");
        sub->add_option("--seed", o.seed, "Seed for scenario generation and the experiment (overrides the config)");
        sub->add_option("--out", o.out, "Output directory")->capture_default_str();
        if (experiment) {
            sub->add_option("--episodes", o.episodes, "Episodes per replication (overrides the config)")
                ->check(CLI::PositiveNumber);
            sub->add_option("--scheme", o.schemes, "Comma-separated schemes: DDQN-EPG, EPG-Rand, MEC (default all)");
            sub->add_flag("--plots", o.plots, "Also write SVG line charts");
        }
    };

    auto* run = app.add_subcommand("run", "Run one experiment and write metrics.csv, slots.csv and summary.json");
    common(run, true);
    auto* sweep = app.add_subcommand("sweep", "Run an experiment across UE counts, COIN node counts or task types");
    common(sweep, true);
    sweep->add_option("--sweep", o.sweep, "Sweep axis")->required()->check(CLI::IsMember({"ue", "cn", "task"}));
    auto* verify = app.add_subcommand("verify", "Run the oracle suites and print one PASS/FAIL line per suite");
    common(verify, false);
    verify->add_option("--small-instances", o.small_instances, "Instances for the NE containment suite")
        ->capture_default_str();
    auto* dump = app.add_subcommand("dump-scenario", "Write the generated scenario to <out>/scenario.json");
    common(dump, false);
    auto* replay = app.add_subcommand("replay", "Run an experiment on a scenario written by dump-scenario");
    common(replay, true);
    replay->add_option("--scenario", o.scenario_path, "Scenario JSON file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    const std::vector<std::string> args(argv, argv + argc);
    try {
        if (*run) return cmd_run(o, args, false);
        if (*sweep) return cmd_run(o, args, true);
        if (*replay) return cmd_run(o, args, false);
        if (*verify) return cmd_verify(o, args);
        if (*dump) return cmd_dump(o, args);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.code;
    } catch (const ConfigError& e) {
        std::cerr << "error: invalid configuration: " << e.what() << "\n";
        return kConfigInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailed;
    }
    return kUsage;
}
