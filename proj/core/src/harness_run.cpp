#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "json.hpp"
#include "topu/errors.hpp"
#include "topu/experiment_harness.hpp"

namespace topu {

using nlohmann::json;

RunResult run_single(const ScenarioConfig& config, Strategy strategy, std::uint64_t seed) {
    auto robots = config.robots;
    for (auto& r : robots) r.strategy = strategy;
    RunResult out;
    out.scenario = config.name;
    out.load = load_value(config);
    out.strategy = strategy;
    out.seed = seed;
    out.trace = run_world(config.environment, config.tasks, robots, config.sim, config.scheduler_config(seed), seed);
    return out;
}

std::vector<RunResult> run_suite(const ScenarioConfig& config) {
    config.validate();
    auto seeds = config.seeds;
    std::sort(seeds.begin(), seeds.end());
    std::vector<RunResult> runs;
    for (Strategy s : config.strategies)
        for (std::uint64_t seed : seeds) runs.push_back(run_single(config, s, seed));
    return runs;
}

RunMetrics run_metrics(const RunResult& run) {
    RunMetrics m;
    for (const auto& r : run.trace.robots) {
        m.distance += r.distance;
        m.switching += static_cast<double>(r.switching_replans);
        m.non_switching += static_cast<double>(r.non_switching_replans);
        m.planning_time += r.planning_seconds;
        m.locomotion_time += static_cast<double>(r.locomotion_ticks) * run.trace.tick_duration;
    }
    m.replans = m.switching + m.non_switching;
    return m;
}

MeanStd mean_std(const std::vector<double>& values) {
    MeanStd out;
    out.n = values.size();
    if (values.empty()) return out;
    double sum = 0.0;
    for (double v : values) sum += v;
    out.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double sq = 0.0;
        for (double v : values) sq += (v - out.mean) * (v - out.mean);
        out.stddev = std::sqrt(sq / static_cast<double>(values.size() - 1));
    }
    return out;
}

std::optional<double> percent_delta(double trg, double cfnu) {
    if (cfnu == 0.0) {
        if (trg == 0.0) return 0.0;
        return std::nullopt;
    }
    return 100.0 * (trg - cfnu) / cfnu;
}

Comparison compare(const std::vector<RunResult>& runs) {
    using Key = std::pair<double, std::string>;  // load, scenario
    std::map<Key, std::map<Strategy, std::vector<RunMetrics>>> groups;
    for (const auto& run : runs) groups[{run.load, run.scenario}][run.strategy].push_back(run_metrics(run));

    Comparison out;
    for (const auto& [key, by_strategy] : groups) {
        for (Strategy needed : {Strategy::Trg, Strategy::Cfnu})
            if (!by_strategy.contains(needed))
                throw MissingStrategy("scenario '" + key.second + "' has no " + to_string(needed) + " runs");
        std::map<Strategy, ComparisonRow> rows;
        for (const auto& [strategy, metrics] : by_strategy) {
            auto column = [&](auto get) {
                std::vector<double> v;
                for (const auto& m : metrics) v.push_back(get(m));
                return mean_std(v);
            };
            ComparisonRow row;
            row.scenario = key.second;
            row.load = key.first;
            row.strategy = strategy;
            row.distance = column([](const RunMetrics& m) { return m.distance; });
            row.switching = column([](const RunMetrics& m) { return m.switching; });
            row.non_switching = column([](const RunMetrics& m) { return m.non_switching; });
            row.replans = column([](const RunMetrics& m) { return m.replans; });
            row.planning_time = column([](const RunMetrics& m) { return m.planning_time; });
            row.locomotion_time = column([](const RunMetrics& m) { return m.locomotion_time; });
            row.total_time = column([](const RunMetrics& m) { return m.total_time(); });
            rows[strategy] = row;
            out.rows.push_back(row);
        }
        const auto& t = rows.at(Strategy::Trg);
        const auto& c = rows.at(Strategy::Cfnu);
        DeltaRow d;
        d.scenario = key.second;
        d.load = key.first;
        d.distance = percent_delta(t.distance.mean, c.distance.mean);
        d.switching = percent_delta(t.switching.mean, c.switching.mean);
        d.non_switching = percent_delta(t.non_switching.mean, c.non_switching.mean);
        d.replans = percent_delta(t.replans.mean, c.replans.mean);
        d.planning_time = percent_delta(t.planning_time.mean, c.planning_time.mean);
        d.locomotion_time = percent_delta(t.locomotion_time.mean, c.locomotion_time.mean);
        d.total_time = percent_delta(t.total_time.mean, c.total_time.mean);
        out.deltas.push_back(d);
    }
    return out;
}

namespace {

std::string num(double v) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    os << v;
    return os.str();
}

std::string num(const std::optional<double>& v) { return v ? num(*v) : "n/a"; }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

}  // namespace

std::string comparison_csv(const Comparison& c) {
    std::ostringstream os;
    os << "scenario,load,strategy,runs";
    for (const char* m : {"distance", "switching", "non_switching", "replans", "planning_time", "locomotion_time",
                          "total_time"})
        os << "," << m << "_mean," << m << "_std";
    os << "\n";
    for (const auto& r : c.rows) {
        os << csv_field(r.scenario) << "," << num(r.load) << "," << to_string(r.strategy) << "," << r.distance.n;
        for (const MeanStd* m : {&r.distance, &r.switching, &r.non_switching, &r.replans, &r.planning_time,
                                 &r.locomotion_time, &r.total_time})
            os << "," << num(m->mean) << "," << num(m->stddev);
        os << "\n";
    }
    return os.str();
}

std::string deltas_csv(const Comparison& c) {
    std::ostringstream os;
    os << "scenario,load,distance_pct,switching_pct,non_switching_pct,replans_pct,planning_time_pct,"
          "locomotion_time_pct,total_time_pct\n";
    for (const auto& d : c.deltas)
        os << csv_field(d.scenario) << "," << num(d.load) << "," << num(d.distance) << "," << num(d.switching) << ","
           << num(d.non_switching) << "," << num(d.replans) << "," << num(d.planning_time) << ","
           << num(d.locomotion_time) << "," << num(d.total_time) << "\n";
    return os.str();
}

namespace {

json point_json(Point2 p) { return json::array({p.x, p.y}); }

Outcome outcome_from_string(const std::string& s) {
    for (Outcome o : {Outcome::Running, Outcome::AllTasksDone, Outcome::Timeout, Outcome::JointPlanFailure,
                      Outcome::BatteryExhausted})
        if (s == to_string(o)) return o;
    throw ValidationError("outcome", "unknown outcome '" + s + "'");
}

ReplanCause cause_from_string(const std::string& s) {
    for (ReplanCause c : {ReplanCause::ObstacleDiscovered, ReplanCause::TaskCompleteMsg, ReplanCause::CoordinationForced,
                          ReplanCause::CloserTask})
        if (s == to_string(c)) return c;
    throw ValidationError("replans.cause", "unknown cause '" + s + "'");
}

json optional_task(const std::optional<TaskId>& t) { return t ? json(t->value) : json(nullptr); }

std::optional<TaskId> task_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    return TaskId{j.get<std::int64_t>()};
}

}  // namespace

std::string trace_to_json(const RunResult& run, bool include_wall_time) {
    const SimTrace& t = run.trace;
    json j;
    j["format_version"] = kFormatVersion;
    j["scenario"] = run.scenario;
    j["load"] = run.load;
    j["strategy"] = to_string(run.strategy);
    j["seed"] = run.seed;
    j["outcome"] = to_string(t.outcome);
    j["completion_tick"] = t.completion_tick;
    j["tick_duration"] = t.tick_duration;
    j["failure"] = t.failure;
    json robots = json::array();
    for (const auto& r : t.robots) {
        json rj{{"id", r.id},
                {"distance", r.distance},
                {"switching_replans", r.switching_replans},
                {"non_switching_replans", r.non_switching_replans},
                {"planning_calls", r.planning_calls},
                {"locomotion_ticks", r.locomotion_ticks},
                {"coordination_events", r.coordination_events},
                {"visits", r.visits}};
        if (include_wall_time) rj["planning_seconds"] = r.planning_seconds;
        json traj = json::array();
        for (const auto& p : r.trajectory) traj.push_back(point_json(p));
        rj["trajectory"] = traj;
        robots.push_back(rj);
    }
    j["robots"] = robots;
    json replans = json::array();
    for (const auto& [robot, e] : t.replans)
        replans.push_back({{"robot", robot},
                           {"tick", e.tick},
                           {"cause", to_string(e.cause)},
                           {"switched", e.switched},
                           {"old_target", optional_task(e.old_target)},
                           {"new_target", optional_task(e.new_target)},
                           {"position", point_json(e.position)}});
    j["replans"] = replans;
    json events = json::array();
    for (const auto& e : t.events)
        events.push_back({{"tick", e.tick}, {"robot", e.robot}, {"kind", e.kind}, {"detail", e.detail}});
    j["events"] = events;
    const auto& inv = t.invariants;
    j["invariants"] = {{"safety_violations", inv.safety_violations},
                       {"obstacle_violations", inv.obstacle_violations},
                       {"partition_violations", inv.partition_violations},
                       {"leaderless_rounds", inv.leaderless_rounds},
                       {"surrendered_without_joint", inv.surrendered_without_joint},
                       {"livelock_violations", inv.livelock_violations},
                       {"lowest_id_deposed", inv.lowest_id_deposed},
                       {"joint_plans", inv.joint_plans},
                       {"shape_episodes", inv.shape_episodes},
                       {"longest_episode", inv.longest_episode},
                       {"worst_episode_ratio", inv.worst_episode_ratio},
                       {"blocked_at_timeout", inv.blocked_at_timeout}};
    return j.dump(1) + "\n";
}

RunResult trace_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError("<trace>", std::string("malformed JSON: ") + e.what());
    }
    try {
        if (j.at("format_version").get<int>() != kFormatVersion)
            throw ValidationError("format_version", "unsupported trace version");
        RunResult run;
        run.scenario = j.at("scenario").get<std::string>();
        run.load = j.at("load").get<double>();
        run.strategy = strategy_from_string(j.at("strategy").get<std::string>());
        run.seed = j.at("seed").get<std::uint64_t>();
        auto& t = run.trace;
        t.seed = run.seed;
        t.outcome = outcome_from_string(j.at("outcome").get<std::string>());
        t.completion_tick = j.at("completion_tick").get<std::uint64_t>();
        t.tick_duration = j.at("tick_duration").get<double>();
        t.failure = j.at("failure").get<std::string>();
        for (const auto& rj : j.at("robots")) {
            RobotMetrics r;
            r.id = rj.at("id").get<RobotId>();
            r.distance = rj.at("distance").get<double>();
            r.switching_replans = rj.at("switching_replans").get<std::uint64_t>();
            r.non_switching_replans = rj.at("non_switching_replans").get<std::uint64_t>();
            r.planning_calls = rj.at("planning_calls").get<std::uint64_t>();
            r.planning_seconds = rj.value("planning_seconds", 0.0);
            r.locomotion_ticks = rj.at("locomotion_ticks").get<std::uint64_t>();
            r.coordination_events = rj.at("coordination_events").get<std::uint64_t>();
            r.visits = rj.at("visits").get<std::uint64_t>();
            for (const auto& p : rj.at("trajectory")) r.trajectory.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
            t.robots.push_back(std::move(r));
        }
        for (const auto& e : j.at("replans")) {
            ReplanEvent ev;
            ev.tick = e.at("tick").get<std::uint64_t>();
            ev.cause = cause_from_string(e.at("cause").get<std::string>());
            ev.switched = e.at("switched").get<bool>();
            ev.old_target = task_from(e.at("old_target"));
            ev.new_target = task_from(e.at("new_target"));
            ev.position = {e.at("position").at(0).get<double>(), e.at("position").at(1).get<double>()};
            t.replans.emplace_back(e.at("robot").get<RobotId>(), ev);
        }
        for (const auto& e : j.at("events"))
            t.events.push_back({e.at("tick").get<std::uint64_t>(), e.at("robot").get<RobotId>(),
                                e.at("kind").get<std::string>(), e.at("detail").get<std::string>()});
        const auto& inv = j.at("invariants");
        auto& out = t.invariants;
        out.safety_violations = inv.at("safety_violations").get<std::uint64_t>();
        out.obstacle_violations = inv.at("obstacle_violations").get<std::uint64_t>();
        out.partition_violations = inv.at("partition_violations").get<std::uint64_t>();
        out.leaderless_rounds = inv.at("leaderless_rounds").get<std::uint64_t>();
        out.surrendered_without_joint = inv.at("surrendered_without_joint").get<std::uint64_t>();
        out.livelock_violations = inv.at("livelock_violations").get<std::uint64_t>();
        out.lowest_id_deposed = inv.at("lowest_id_deposed").get<std::uint64_t>();
        out.joint_plans = inv.at("joint_plans").get<std::uint64_t>();
        out.shape_episodes = inv.at("shape_episodes").get<std::uint64_t>();
        out.longest_episode = inv.at("longest_episode").get<std::uint64_t>();
        out.worst_episode_ratio = inv.at("worst_episode_ratio").get<double>();
        out.blocked_at_timeout = inv.at("blocked_at_timeout").get<bool>();
        return run;
    } catch (const json::exception& e) {
        throw ValidationError("<trace>", std::string("bad trace document: ") + e.what());
    }
}

std::string trace_events_csv(const SimTrace& trace) {
    std::ostringstream os;
    os << "tick,robot,kind,payload\n";
    for (const auto& e : trace.events)
        os << e.tick << "," << e.robot << "," << csv_field(e.kind) << "," << csv_field(e.detail) << "\n";
    return os.str();
}

std::string metrics_csv(const std::vector<RunResult>& runs) {
    std::ostringstream os;
    os << "scenario,load,strategy,seed,outcome,completion_tick,robot,distance,switching_replans,"
          "non_switching_replans,planning_calls,planning_seconds,locomotion_ticks,coordination_events,visits\n";
    for (const auto& run : runs)
        for (const auto& r : run.trace.robots)
            os << csv_field(run.scenario) << "," << num(run.load) << "," << to_string(run.strategy) << "," << run.seed
               << "," << to_string(run.trace.outcome) << "," << run.trace.completion_tick << "," << r.id << ","
               << num(r.distance) << "," << r.switching_replans << "," << r.non_switching_replans << ","
               << r.planning_calls << "," << num(r.planning_seconds) << "," << r.locomotion_ticks << ","
               << r.coordination_events << "," << r.visits << "\n";
    return os.str();
}

}  // namespace topu
