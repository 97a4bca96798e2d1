#include "cmec/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <exception>
#include <fstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "cmec/channel.hpp"
#include "cmec/report.hpp"

namespace cmec {

std::string to_string(Scheme s) {
    switch (s) {
        case Scheme::DdqnEpg: return "DDQN-EPG";
        case Scheme::EpgRand: return "EPG-Rand";
        case Scheme::Mec: return "MEC";
    }
    return "?";
}

std::string to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::None: return "none";
        case SweepAxis::UeCount: return "ue";
        case SweepAxis::CnCount: return "cn";
        case SweepAxis::TaskType: return "task";
    }
    return "?";
}

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

}  // namespace

Scheme parse_scheme(const std::string& s) {
    const auto l = lower(s);
    if (l == "ddqn-epg" || l == "ddqn") return Scheme::DdqnEpg;
    if (l == "epg-rand" || l == "rand") return Scheme::EpgRand;
    if (l == "mec") return Scheme::Mec;
    throw ConfigError("unknown scheme '" + s + "' (expected DDQN-EPG, EPG-Rand or MEC)");
}

SweepAxis parse_sweep_axis(const std::string& s) {
    const auto l = lower(s);
    if (l == "none") return SweepAxis::None;
    if (l == "ue") return SweepAxis::UeCount;
    if (l == "cn") return SweepAxis::CnCount;
    if (l == "task") return SweepAxis::TaskType;
    throw ConfigError("unknown sweep axis '" + s + "' (expected ue, cn or task)");
}

std::vector<std::string> default_sweep_values(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::None: return {};
        case SweepAxis::UeCount: return {"4", "6", "8", "10", "12"};
        case SweepAxis::CnCount: return {"1", "2", "3", "4", "5", "6", "7", "8", "9", "10"};
        case SweepAxis::TaskType: return {"data", "compute"};
    }
    return {};
}

namespace {

int parse_count(const std::string& value, const char* field) {
    std::size_t used = 0;
    int n = 0;
    try {
        n = std::stoi(value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != value.size()) {
        throw ConfigError(std::string("experiment field 'sweep_values': '") + value + "' is not an integer " + field);
    }
    return n;
}

}  // namespace

SystemConfig apply_sweep(SystemConfig cfg, SweepAxis axis, const std::string& value) {
    switch (axis) {
        case SweepAxis::None: break;
        case SweepAxis::UeCount: cfg.n_ues = parse_count(value, "UE count"); break;
        case SweepAxis::CnCount: cfg.n_cns = parse_count(value, "CN count"); break;
        case SweepAxis::TaskType: cfg.task_suite = parse_task_suite(value); break;
    }
    return cfg;
}

void validate_spec(const ExperimentSpec& spec) {
    auto bad = [](const std::string& field, const std::string& why) {
        throw ConfigError("experiment field '" + field + "': " + why);
    };
    if (spec.schemes.empty()) bad("schemes", "at least one scheme is required");
    for (std::size_t i = 0; i < spec.schemes.size(); ++i) {
        for (std::size_t j = i + 1; j < spec.schemes.size(); ++j) {
            if (spec.schemes[i] == spec.schemes[j]) bad("schemes", "duplicate scheme " + to_string(spec.schemes[i]));
        }
    }
    if (spec.episodes < 1) bad("episodes", "must be >= 1");
    if (spec.slots_per_episode < 1) bad("slots_per_episode", "must be >= 1");
    if (spec.replications < 1) bad("replications", "must be >= 1");
    if (spec.action_levels < 2) bad("action_levels", "must be >= 2");
    if (spec.pco_rounds_per_ue < 1) bad("pco_rounds_per_ue", "must be >= 1");
    if (!(spec.infeasible_penalty <= 0.0)) bad("infeasible_penalty", "must be <= 0");
    if (!(spec.time_budget_s >= 0.0)) bad("time_budget_s", "must be >= 0");
    if (spec.summary_tail < 0) bad("summary_tail", "must be >= 0");
    if (spec.sweep == SweepAxis::None && !spec.sweep_values.empty()) {
        bad("sweep_values", "given without a sweep axis");
    }
    for (const auto& v : spec.sweep_values) {
        if (spec.sweep == SweepAxis::UeCount) {
            const int n = parse_count(v, "UE count");
            if (n < 4 || n > 12) bad("sweep_values", "UE count " + v + " outside [4, 12]");
        } else if (spec.sweep == SweepAxis::CnCount) {
            const int n = parse_count(v, "CN count");
            if (n < 1 || n > 10) bad("sweep_values", "CN count " + v + " outside [1, 10]");
        } else if (spec.sweep == SweepAxis::TaskType) {
            parse_task_suite(v);
        }
    }
}

ExperimentSpec experiment_spec_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("experiment section must be an object");
    ExperimentSpec s;
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "schemes") {
                s.schemes.clear();
                for (const auto& name : v) s.schemes.push_back(parse_scheme(name.get<std::string>()));
            } else if (key == "episodes") s.episodes = v.get<int>();
            else if (key == "slots_per_episode") s.slots_per_episode = v.get<int>();
            else if (key == "replications") s.replications = v.get<int>();
            else if (key == "sweep") s.sweep = parse_sweep_axis(v.get<std::string>());
            else if (key == "sweep_values") {
                s.sweep_values.clear();
                for (const auto& x : v) {
                    s.sweep_values.push_back(x.is_string() ? x.get<std::string>() : std::to_string(x.get<int>()));
                }
            } else if (key == "seed") s.seed = v.get<std::uint64_t>();
            else if (key == "action_levels") s.action_levels = v.get<int>();
            else if (key == "infeasible_penalty") s.infeasible_penalty = v.get<double>();
            else if (key == "pco_rounds_per_ue") s.pco_rounds_per_ue = v.get<int>();
            else if (key == "time_budget_s") s.time_budget_s = v.get<double>();
            else if (key == "detail") s.detail = v.get<bool>();
            else if (key == "trace") s.trace = v.get<bool>();
            else if (key == "checkpoint") s.checkpoint = v.get<bool>();
            else if (key == "summary_tail") s.summary_tail = v.get<int>();
            else if (key == "ddqn") {
                try {
                    s.ddqn = qlearner_config_from_json(v);
                } catch (const std::invalid_argument& e) {
                    throw ConfigError(e.what());
                }
            } else {
                throw ConfigError("unknown experiment field '" + key + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("experiment section: ") + e.what());
    }
    validate_spec(s);
    return s;
}

nlohmann::json to_json(const ExperimentSpec& s) {
    nlohmann::json schemes = nlohmann::json::array();
    for (auto sc : s.schemes) schemes.push_back(to_string(sc));
    return {{"schemes", schemes},
            {"episodes", s.episodes},
            {"slots_per_episode", s.slots_per_episode},
            {"replications", s.replications},
            {"sweep", to_string(s.sweep)},
            {"sweep_values", s.sweep_values},
            {"seed", s.seed},
            {"action_levels", s.action_levels},
            {"infeasible_penalty", s.infeasible_penalty},
            {"pco_rounds_per_ue", s.pco_rounds_per_ue},
            {"time_budget_s", s.time_budget_s},
            {"detail", s.detail},
            {"trace", s.trace},
            {"checkpoint", s.checkpoint},
            {"summary_tail", s.summary_tail},
            {"ddqn", to_json(s.ddqn)}};
}

SchemeRunner::SchemeRunner(const ScenarioState& scn, const ExperimentSpec& spec, Scheme scheme,
                           std::uint64_t job_seed)
    : scn_(&scn),
      spec_(&spec),
      scheme_(scheme),
      codec_(spec.action_levels),
      env_rng_(make_rng(job_seed, 1)),
      orra_rng_(make_rng(job_seed, 2)),
      pco_rng_(make_rng(job_seed, 3)),
      explore_rng_(make_rng(job_seed, 4)) {
    if (scheme_ == Scheme::DdqnEpg) {
        const int input = scn.n_ues() * (scn.catalog.size() + 1);
        learner_.emplace(input, 2 * scn.n_ues(), codec_.levels(), spec.ddqn, job_seed);
    }
}

void SchemeRunner::begin_episode(double explore) {
    requests_ = sample_requests(*scn_, requests_, env_rng_);
    state_ = encode_state(requests_, scn_->catalog.size());
    if (learner_) pending_actions_ = select_action(*learner_, codec_, state_, explore_rng_, explore);
}

SlotResult SchemeRunner::run_slot(double explore, bool last_slot) {
    if (state_.empty()) throw std::logic_error("SchemeRunner: run_slot before begin_episode");
    auto requests = sample_requests(*scn_, requests_, env_rng_);
    const auto channel = realize_channel(*scn_, requests, env_rng_);

    SlotResult res;
    if (scheme_ == Scheme::Mec) {
        res = play(requests, channel.rate_bps, nullptr);
    } else {
        const OrraProposal proposal = scheme_ == Scheme::DdqnEpg
                                          ? codec_.to_proposal(pending_actions_)
                                          : random_orra(orra_rng_, scn_->n_ues(), codec_);
        res = play(requests, channel.rate_bps, &proposal);
    }

    auto next_state = encode_state(requests, scn_->catalog.size());
    if (learner_) {
        Transition t;
        t.state = state_;
        t.action = codec_.to_heads(pending_actions_);
        t.reward = *res.reward;
        t.next_state = next_state;
        t.terminal = last_slot;
        learner_->replay().push(std::move(t));
        if (learner_->replay().size() >= static_cast<std::size_t>(learner_->config().batch_size)) {
            res.loss = learner_->train_step();
        }
    }
    requests_ = std::move(requests);
    state_ = std::move(next_state);
    if (learner_) pending_actions_ = select_action(*learner_, codec_, state_, explore_rng_, explore);
    return res;
}

SlotResult SchemeRunner::play(const std::vector<int>& requests, const std::vector<double>& rates,
                              const OrraProposal* proposal) {
    const ScenarioState& scn = *scn_;
    const int m_count = scn.n_ues();
    const OffloadingGame game(scn, requests, rates, proposal ? *proposal : full_offload_orra(requests));

    SlotResult res;
    res.requests = requests;
    if (proposal) {
        auto pco = run_pco(game, spec_->pco_rounds_per_ue * m_count, pco_rng_);
        res.profile = std::move(pco.profile);
        res.ne_rounds = pco.rounds;
        res.converged = pco.converged;
        res.trace = std::move(pco.trace);
    } else {
        // MEC: the faster of local execution and full ES offloading that meets
        // the deadline, local when neither does.
        res.profile.decision.assign(static_cast<std::size_t>(m_count), kLocal);
        for (int m = 0; m < m_count; ++m) {
            if (!game.active(m)) continue;
            const auto& local = game.outcome(m, kLocal).latency;
            const auto& es = game.outcome(m, kEdgeServer);
            const bool local_ok = local.feasible;
            if (es.feasible && (!local_ok || es.latency.t_e2e < local.t_e2e)) {
                res.profile.decision[m] = kEdgeServer;
            }
        }
    }

    const auto report = utility_report(game, res.profile);
    res.system_utility = report.system_utility;
    res.violations = report.audit.count();
    res.plan = build_plan(game, res.profile);
    res.ues.resize(static_cast<std::size_t>(m_count));
    double latency_sum = 0.0;
    for (int m = 0; m < m_count; ++m) {
        auto& u = res.ues[m];
        const int d = res.profile.decision[m];
        u.request = requests[m];
        u.decision = d;
        u.ratio_es = res.plan.ratio_es[m];
        u.es_share = res.plan.es_share[m];
        u.ratio_cn = d >= 1 ? res.plan.lambda(m, d - 1) : 0.0;
        u.rate_bps = rates[m];
        u.utility = report.per_ue[m].value_or(0.0);
        if (game.active(m)) {
            u.max_latency_s = scn.catalog.at(requests[m]).max_latency_s;
            u.t_e2e = game.outcome(m, d).latency.t_e2e;
            latency_sum += u.t_e2e;
            ++res.active;
        }
    }
    res.mean_latency_s = res.active > 0 ? latency_sum / res.active : 0.0;
    if (proposal) res.reward = compute_reward(game, res.profile, spec_->infeasible_penalty).reward;
    return res;
}

namespace {

struct Job {
    Scheme scheme;
    int sweep_index;
    std::string sweep_value;
    int replication;
};

struct JobOutput {
    std::vector<EpisodeRow> rows;
    std::string detail;
    std::string trace;
    nlohmann::json checkpoint;
    bool truncated = false;
    std::exception_ptr error;
};

std::uint64_t job_seed(std::uint64_t seed, int sweep_index, int replication) {
    // Shared by every scheme of the same (sweep value, replication) so the
    // schemes see the same requests and fading.
    Rng r = make_rng(seed, 0x10B5EED, static_cast<std::uint64_t>(sweep_index) * 100003u + replication);
    return r();
}

void run_job(const Job& job, const SystemConfig& base_cfg, const ExperimentSpec& spec,
             const ScenarioState* scenario, const std::chrono::steady_clock::time_point start,
             std::atomic<bool>& out_of_time, JobOutput& out) {
    std::optional<ScenarioState> owned;
    if (!scenario) {
        const auto cfg = validate_config(apply_sweep(base_cfg, spec.sweep, job.sweep_value));
        owned.emplace(generate_scenario(cfg, cfg.raw().rng_seed));
        scenario = &*owned;
    }
    const ScenarioState& scn = *scenario;
    SchemeRunner runner(scn, spec, job.scheme, job_seed(spec.seed, job.sweep_index, job.replication));
    const std::string scheme_name = to_string(job.scheme);
    const long long total = static_cast<long long>(spec.episodes) * spec.slots_per_episode;
    long long step = 0;

    for (int ep = 0; ep < spec.episodes; ++ep) {
        if (out_of_time.load()) {
            out.truncated = true;
            break;
        }
        EpisodeRow row;
        row.scheme = job.scheme;
        row.sweep_value = job.sweep_value;
        row.replication = job.replication;
        row.episode = ep;
        int rewards = 0;
        int losses = 0;
        double explore = explore_rate(spec.ddqn, step, total);
        runner.begin_episode(explore);
        for (int slot = 0; slot < spec.slots_per_episode; ++slot, ++step) {
            explore = explore_rate(spec.ddqn, step, total);
            const auto res = runner.run_slot(explore, slot + 1 == spec.slots_per_episode);
            row.mean_system_utility += res.system_utility;
            row.mean_latency_s += res.mean_latency_s;
            row.mean_ne_rounds += res.ne_rounds;
            row.violations += res.violations;
            row.unconverged += res.converged ? 0 : 1;
            if (res.reward) {
                row.mean_reward += *res.reward;
                ++rewards;
            }
            if (res.loss) {
                row.mean_loss += *res.loss;
                ++losses;
            }
            if (spec.detail) {
                for (int m = 0; m < static_cast<int>(res.ues.size()); ++m) {
                    const auto& u = res.ues[m];
                    out.detail += fmt::format("{},{},{},{},{},{},{},{},{:.17g},{:.17g},{:.17g},{:.10g},{:.17g},{:.17g},{:.10g}\n",
                                              scheme_name, job.sweep_value, job.replication, ep, slot, m,
                                              u.request, u.decision, u.ratio_es, u.es_share, u.ratio_cn,
                                              u.rate_bps, u.t_e2e, u.max_latency_s, u.utility);
                }
            }
            if (spec.trace) {
                for (const auto& t : res.trace) {
                    out.trace += fmt::format("{},{},{},{},{},{},{},{},{:.10g},{:.10g},{:.10g},{:.10g}\n", scheme_name,
                                             job.sweep_value, job.replication, ep, slot, t.round, t.ue,
                                             decision_label(t.old_decision) + ">" + decision_label(t.new_decision),
                                             t.utility_before, t.utility_after, t.potential, t.system_utility);
                }
            }
        }
        const double n = spec.slots_per_episode;
        row.mean_system_utility /= n;
        row.mean_latency_s /= n;
        row.mean_ne_rounds /= n;
        row.mean_reward = rewards > 0 ? row.mean_reward / rewards : 0.0;
        row.mean_loss = losses > 0 ? row.mean_loss / losses : 0.0;
        row.explore_rate = job.scheme == Scheme::DdqnEpg ? explore : 0.0;
        out.rows.push_back(row);

        if (spec.time_budget_s > 0.0) {
            const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
            if (elapsed.count() > spec.time_budget_s) out_of_time.store(true);
        }
    }
    if (spec.checkpoint && runner.learner()) {
        out.checkpoint = runner.learner()->checkpoint({{"seed", spec.seed},
                                                       {"sweep", to_string(spec.sweep)},
                                                       {"sweep_value", job.sweep_value},
                                                       {"replication", job.replication},
                                                       {"action_levels", spec.action_levels},
                                                       {"n_ues", scn.n_ues()},
                                                       {"n_tasks", scn.catalog.size()}});
    }
    spdlog::debug("{} sweep={} rep={} finished {} episodes", scheme_name, job.sweep_value, job.replication,
                  out.rows.size());
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << text;
    if (!f) throw std::runtime_error("write failed for " + p.string());
}

}  // namespace

ExperimentResult run_experiment(const SystemConfig& cfg, const ExperimentSpec& spec_in,
                                const std::optional<ExperimentOutputs>& out, const ScenarioState* scenario) {
    ExperimentSpec spec = spec_in;
    validate_spec(spec);
    if (spec.sweep != SweepAxis::None && spec.sweep_values.empty()) spec.sweep_values = default_sweep_values(spec.sweep);
    if (scenario && spec.sweep != SweepAxis::None) {
        throw ConfigError("a fixed scenario cannot be combined with a sweep");
    }
    validate_config(cfg);

    std::vector<std::string> values = spec.sweep_values;
    if (values.empty()) values.push_back("-");
    std::vector<Job> jobs;
    for (int v = 0; v < static_cast<int>(values.size()); ++v) {
        for (auto scheme : spec.schemes) {
            for (int r = 0; r < spec.replications; ++r) jobs.push_back({scheme, v, values[v], r});
        }
    }

    std::vector<JobOutput> outputs(jobs.size());
    std::atomic<bool> out_of_time{false};
    const auto start = std::chrono::steady_clock::now();
    const auto n_jobs = static_cast<std::int64_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n_jobs; ++i) {
        try {
            run_job(jobs[i], cfg, spec, scenario, start, out_of_time, outputs[i]);
        } catch (...) {
            outputs[i].error = std::current_exception();
        }
    }
    for (const auto& o : outputs) {
        if (o.error) std::rethrow_exception(o.error);
    }

    ExperimentResult result;
    result.version = CMEC_VERSION;
    for (auto& o : outputs) {
        result.rows.insert(result.rows.end(), o.rows.begin(), o.rows.end());
        result.truncated = result.truncated || o.truncated;
    }
    if (result.truncated) spdlog::warn("time budget of {} s exhausted; results are partial", spec.time_budget_s);

    if (out) {
        std::filesystem::create_directories(out->dir);
        const std::string banner = fmt::format("# cmec version={} seed={} scenario_seed={} sweep={}\n", result.version,
                                               spec.seed, cfg.rng_seed, to_string(spec.sweep));
        std::string metrics = banner + metrics_csv_header() + "\n";
        for (const auto& r : result.rows) metrics += format_metrics_row(r);
        if (result.truncated) metrics += "# truncated: time budget exhausted\n";
        write_text(out->dir / "metrics.csv", metrics);

        if (spec.detail) {
            std::string detail = banner + slots_csv_header() + "\n";
            for (const auto& o : outputs) detail += o.detail;
            write_text(out->dir / "slots.csv", detail);
        }
        if (spec.trace) {
            std::string trace = banner +
                                "scheme,sweep_value,replication,episode,slot,round,ue,move,utility_before,"
                                "utility_after,potential,system_utility\n";
            for (const auto& o : outputs) trace += o.trace;
            write_text(out->dir / "trace.csv", trace);
        }
        if (spec.checkpoint) {
            for (std::size_t i = 0; i < jobs.size(); ++i) {
                if (outputs[i].checkpoint.is_null()) continue;
                const auto name = fmt::format("checkpoint_{}_rep{}.json",
                                              jobs[i].sweep_value == "-" ? "base" : jobs[i].sweep_value,
                                              jobs[i].replication);
                write_text(out->dir / name, outputs[i].checkpoint.dump() + "\n");
            }
        }

        const auto summary = aggregate(result.rows, spec.summary_tail);
        nlohmann::json sj = to_json(summary);
        sj["version"] = result.version;
        sj["seed"] = spec.seed;
        sj["scenario_seed"] = cfg.rng_seed;
        sj["sweep"] = to_string(spec.sweep);
        sj["summary_tail"] = spec.summary_tail;
        sj["truncated"] = result.truncated;
        write_text(out->dir / "summary.json", sj.dump(2) + "\n");

        if (out->plots) write_plots(out->dir, result.rows, summary, spec.sweep);
    }
    return result;
}

}  // namespace cmec
