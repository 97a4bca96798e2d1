#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "cmec/harness.hpp"
#include "cmec/report.hpp"

using namespace cmec;
namespace fs = std::filesystem;

namespace {

ScenarioState default_scenario(std::uint64_t seed, int ues = 6, int cns = 5) {
    SystemConfig c;
    c.n_ues = ues;
    c.n_cns = cns;
    return generate_scenario(validate_config(c), seed);
}

ExperimentSpec small_spec() {
    ExperimentSpec s;
    s.episodes = 2;
    s.slots_per_episode = 12;
    s.replications = 2;
    s.ddqn.batch_size = 8;
    s.ddqn.hidden = {32};
    return s;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("cmec_test_harness_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

EpisodeRow row(Scheme s, int rep, int ep, double u) {
    EpisodeRow r;
    r.scheme = s;
    r.replication = rep;
    r.episode = ep;
    r.mean_system_utility = u;
    return r;
}

}  // namespace

TEST_CASE("scheme and axis names") {
    CHECK(parse_scheme("ddqn") == Scheme::DdqnEpg);
    CHECK(parse_scheme("EPG-Rand") == Scheme::EpgRand);
    CHECK(parse_scheme("mEc") == Scheme::Mec);
    CHECK_THROWS_AS(parse_scheme("greedy"), ConfigError);
    CHECK(parse_sweep_axis("cn") == SweepAxis::CnCount);
    CHECK_THROWS_AS(parse_sweep_axis("bandwidth"), ConfigError);
    for (auto s : {Scheme::DdqnEpg, Scheme::EpgRand, Scheme::Mec}) CHECK(parse_scheme(to_string(s)) == s);
}

TEST_CASE("spec validation") {
    ExperimentSpec s;
    CHECK_NOTHROW(validate_spec(s));
    s.episodes = 0;
    CHECK_THROWS_AS(validate_spec(s), ConfigError);
    s = {};
    s.schemes.clear();
    CHECK_THROWS_AS(validate_spec(s), ConfigError);
    s = {};
    s.schemes = {Scheme::Mec, Scheme::Mec};
    CHECK_THROWS_AS(validate_spec(s), ConfigError);
    s = {};
    s.sweep = SweepAxis::UeCount;
    s.sweep_values = {"13"};
    CHECK_THROWS_AS(validate_spec(s), ConfigError);
    s.sweep_values = {"4", "12"};
    CHECK_NOTHROW(validate_spec(s));
    s.sweep = SweepAxis::TaskType;
    s.sweep_values = {"video"};
    CHECK_THROWS_AS(validate_spec(s), ConfigError);
}

TEST_CASE("spec JSON") {
    ExperimentSpec s = small_spec();
    s.schemes = {Scheme::Mec};
    s.sweep = SweepAxis::CnCount;
    s.sweep_values = {"1", "3"};
    const auto back = experiment_spec_from_json(to_json(s));
    CHECK(to_json(back) == to_json(s));
    CHECK_THROWS_AS(experiment_spec_from_json({{"episode", 3}}), ConfigError);
    CHECK_THROWS_AS(experiment_spec_from_json({{"episodes", "three"}}), ConfigError);
}

TEST_CASE("sweep values and their effect on the config") {
    CHECK(default_sweep_values(SweepAxis::UeCount) == std::vector<std::string>{"4", "6", "8", "10", "12"});
    CHECK(default_sweep_values(SweepAxis::CnCount).size() == 10);
    CHECK(default_sweep_values(SweepAxis::TaskType) == std::vector<std::string>{"data", "compute"});
    CHECK(apply_sweep({}, SweepAxis::UeCount, "8").n_ues == 8);
    CHECK(apply_sweep({}, SweepAxis::CnCount, "3").n_cns == 3);
    const auto data = validate_config(apply_sweep({}, SweepAxis::TaskType, "data"));
    CHECK(data.raw().task_suite == TaskSuite::DataIntensive);
    CHECK(data.input_bits_min() == doctest::Approx(80e6));
    CHECK(data.cycles_max() == doctest::Approx(5e8));
    const auto comp = validate_config(apply_sweep({}, SweepAxis::TaskType, "compute"));
    CHECK(comp.input_bits_max() == doctest::Approx(40e6));
    CHECK(comp.cycles_min() == doctest::Approx(1e9));
}

TEST_CASE("MEC never touches a COIN node") {
    const auto scn = default_scenario(3);
    const auto spec = small_spec();
    SchemeRunner r(scn, spec, Scheme::Mec, 77);
    r.begin_episode(0.0);
    for (int t = 0; t < 60; ++t) {
        const auto res = r.run_slot(0.0, false);
        for (int d : res.profile.decision) REQUIRE(d <= kEdgeServer);
        for (double l : res.plan.ratios_cn) REQUIRE(l == 0.0);
        CHECK_FALSE(res.reward.has_value());
    }
}

TEST_CASE("DDQN-EPG stores one transition per slot") {
    const auto scn = default_scenario(4);
    const auto spec = small_spec();
    SchemeRunner r(scn, spec, Scheme::DdqnEpg, 78);
    REQUIRE(r.learner() != nullptr);
    r.begin_episode(1.0);
    for (int t = 1; t <= 20; ++t) {
        const auto res = r.run_slot(1.0, t == 20);
        CHECK(r.learner()->replay().size() == static_cast<std::size_t>(t));
        CHECK(res.reward.has_value());
        CHECK(res.loss.has_value() == (t >= spec.ddqn.batch_size));
    }
    CHECK(r.learner()->replay()[19].terminal);
    CHECK_FALSE(r.learner()->replay()[18].terminal);
}

TEST_CASE("EPG-Rand is deterministic for a job seed") {
    const auto scn = default_scenario(5);
    const auto spec = small_spec();
    SchemeRunner a(scn, spec, Scheme::EpgRand, 91);
    SchemeRunner b(scn, spec, Scheme::EpgRand, 91);
    a.begin_episode(0.0);
    b.begin_episode(0.0);
    for (int t = 0; t < 30; ++t) {
        const auto x = a.run_slot(0.0, false);
        const auto y = b.run_slot(0.0, false);
        REQUIRE(x.profile == y.profile);
        REQUIRE(x.system_utility == y.system_utility);
        REQUIRE(x.plan.es_share == y.plan.es_share);
    }
}

TEST_CASE("stored reward equals a recomputation from the slot record") {
    const auto scn = default_scenario(6);
    const auto spec = small_spec();
    SchemeRunner r(scn, spec, Scheme::DdqnEpg, 5);
    r.begin_episode(0.5);
    for (int t = 0; t < 40; ++t) {
        const auto actions = r.last_actions();
        const auto res = r.run_slot(0.5, false);
        REQUIRE(res.reward.has_value());

        std::vector<double> rates;
        for (const auto& u : res.ues) rates.push_back(u.rate_bps);
        const OffloadingGame chosen(scn, res.requests, rates, r.codec().to_proposal(actions));
        const OffloadingGame full(scn, res.requests, rates, full_offload_orra(res.requests));
        bool feasible = true;
        double su_chosen = 0.0;
        double su_full = 0.0;
        for (int m = 0; m < scn.n_ues(); ++m) {
            const int d = res.profile.decision[m];
            const auto& oc = chosen.outcome(m, d);
            feasible = feasible && (oc.feasible || (d == kLocal));
            su_chosen += oc.utility;
            if (std::isfinite(full.outcome(m, d).utility)) su_full += full.outcome(m, d).utility;
        }
        const double want = feasible && res.violations == 0 ? su_chosen - su_full : spec.infeasible_penalty;
        REQUIRE(*res.reward == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("aggregation") {
    SUBCASE("a single replication has zero spread") {
        std::vector<EpisodeRow> rows{row(Scheme::Mec, 0, 0, 1.0), row(Scheme::Mec, 0, 1, 3.0)};
        const auto s = aggregate(rows, 0);
        REQUIRE(s.rows.size() == 1);
        CHECK(s.rows[0].mean_utility == doctest::Approx(2.0));
        CHECK(s.rows[0].std_utility == 0.0);
    }
    SUBCASE("improvement over the baseline") {
        std::vector<EpisodeRow> rows{row(Scheme::DdqnEpg, 0, 0, 12.0), row(Scheme::EpgRand, 0, 0, 10.0),
                                     row(Scheme::Mec, 0, 0, 0.0)};
        const auto s = aggregate(rows, 0);
        bool saw_rand = false;
        for (const auto& imp : s.improvements) {
            if (imp.baseline == Scheme::EpgRand) {
                saw_rand = true;
                REQUIRE(imp.percent.has_value());
                CHECK(*imp.percent == doctest::Approx(20.0));
            } else {
                CHECK_FALSE(imp.percent.has_value());
            }
        }
        CHECK(saw_rand);
    }
    SUBCASE("tail window and sample deviation") {
        std::vector<EpisodeRow> rows;
        // Rep r: episodes 0..3 with utilities 100, 100, r, r + 2.
        for (int rep = 0; rep < 3; ++rep) {
            rows.push_back(row(Scheme::EpgRand, rep, 0, 100.0));
            rows.push_back(row(Scheme::EpgRand, rep, 1, 100.0));
            rows.push_back(row(Scheme::EpgRand, rep, 2, rep));
            rows.push_back(row(Scheme::EpgRand, rep, 3, rep + 2.0));
        }
        const auto s = aggregate(rows, 2);
        // Per-rep tail means 1, 2, 3.
        CHECK(s.rows[0].mean_utility == doctest::Approx(2.0));
        CHECK(s.rows[0].std_utility == doctest::Approx(1.0));
        CHECK(s.rows[0].replications == 3);
    }
}

TEST_CASE("experiment outputs: byte-identical reruns, audit and recomputed summary") {
    SystemConfig cfg;
    cfg.rng_seed = 12;
    auto spec = small_spec();
    spec.seed = 12;
    spec.trace = true;
    spec.checkpoint = true;
    const auto a = scratch("a");
    const auto b = scratch("b");
    const auto ra = run_experiment(cfg, spec, ExperimentOutputs{a, true});
    run_experiment(cfg, spec, ExperimentOutputs{b, false});

    for (const char* f : {"metrics.csv", "slots.csv", "trace.csv"}) {
        REQUIRE(fs::exists(a / f));
        CHECK(slurp(a / f) == slurp(b / f));
    }
    CHECK(fs::exists(a / "utility_vs_episode.svg"));
    CHECK(fs::exists(a / "checkpoint_base_rep0.json"));
    CHECK(fs::exists(a / "summary.json"));

    const auto audit = audit_slots_csv(a / "slots.csv");
    CHECK(audit.slots == 3 * 2 * 2 * 12);
    CHECK(audit.rows == audit.slots * 6);
    CHECK(audit.violations == 0);

    const auto rows = read_metrics_csv(a / "metrics.csv");
    REQUIRE(rows.size() == ra.rows.size());
    CHECK(rows.size() == 3 * 2 * 2);
    // Double entry: recompute per-scheme means straight from the CSV rows.
    std::map<Scheme, std::vector<double>> per_rep;
    for (int rep = 0; rep < 2; ++rep) {
        for (auto sc : spec.schemes) {
            double sum = 0.0;
            int n = 0;
            for (const auto& r : rows) {
                if (r.scheme == sc && r.replication == rep) {
                    sum += r.mean_system_utility;
                    ++n;
                }
            }
            per_rep[sc].push_back(sum / n);
        }
    }
    const auto summary = nlohmann::json::parse(slurp(a / "summary.json"));
    int checked = 0;
    for (const auto& r : summary.at("rows")) {
        const auto sc = parse_scheme(r.at("scheme").get<std::string>());
        const auto& v = per_rep[sc];
        const double mean = (v[0] + v[1]) / 2.0;
        const double sd = std::abs(v[0] - v[1]) / std::sqrt(2.0);
        CHECK(r.at("mean_utility").get<double>() == doctest::Approx(mean).epsilon(1e-9));
        CHECK(r.at("std_utility").get<double>() == doctest::Approx(sd).epsilon(1e-9));
        ++checked;
    }
    CHECK(checked == 3);

    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("audit flags a tampered slots file") {
    SystemConfig cfg;
    auto spec = small_spec();
    spec.schemes = {Scheme::EpgRand};
    spec.replications = 1;
    spec.episodes = 1;
    const auto dir = scratch("tamper");
    run_experiment(cfg, spec, ExperimentOutputs{dir, false});
    auto text = slurp(dir / "slots.csv");
    // Push one ES share out of range.
    std::istringstream in(text);
    std::string line;
    std::string out;
    bool done = false;
    while (std::getline(in, line)) {
        if (!done && !line.empty() && line[0] != '#' && line.rfind("scheme", 0) != 0) {
            std::vector<std::string> cols;
            std::stringstream ls(line);
            std::string c;
            while (std::getline(ls, c, ',')) cols.push_back(c);
            cols[9] = "1.5";
            line.clear();
            for (std::size_t i = 0; i < cols.size(); ++i) line += (i ? "," : "") + cols[i];
            done = true;
        }
        out += line + "\n";
    }
    std::ofstream(dir / "slots.csv", std::ios::binary) << out;
    CHECK(audit_slots_csv(dir / "slots.csv").violations > 0);
    fs::remove_all(dir);
}

TEST_CASE("a fixed scenario cannot be swept") {
    SystemConfig cfg;
    auto spec = small_spec();
    spec.sweep = SweepAxis::UeCount;
    spec.sweep_values = {"4"};
    const auto scn = generate_scenario(validate_config(cfg), 1);
    CHECK_THROWS_AS(run_experiment(cfg, spec, std::nullopt, &scn), ConfigError);
}
