#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "topu/errors.hpp"
#include "topu/experiment_harness.hpp"

namespace topu {

using nlohmann::json;

double load_value(int tasks, int robots, int visits) {
    if (robots < 1) throw std::invalid_argument("load_value needs at least one robot");
    return static_cast<double>(visits) * static_cast<double>(tasks) / static_cast<double>(robots);
}

double load_value(const ScenarioConfig& config) {
    return load_value(config.task_count(), config.robot_count(), config.visits());
}

int ScenarioConfig::visits() const {
    int v = 0;
    for (const auto& t : tasks) v = std::max(v, t.visits);
    return v;
}

SchedulerConfig ScenarioConfig::scheduler_config(std::uint64_t seed) const {
    SchedulerConfig c;
    c.planner = planner;
    c.planner.reuse_seed = seed;
    c.hmm = hmm;
    c.mdp = mdp;
    c.pll_gamma = pll_gamma;
    c.hmm_window = hmm_window;
    c.unavailability = unavailability;
    c.arrival_tolerance = sim.arrival_tolerance;
    return c;
}

namespace {

std::string indexed(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

void require_free(Point2 p, const EnvironmentMap& env, double radius, const std::string& field) {
    if (!env.bounds.contains(p)) throw ValidationError(field, "lies outside the environment bounds");
    if (!point_in_free_space(p, env, radius)) throw ValidationError(field, "lies inside an inflated obstacle");
}

}  // namespace

void ScenarioConfig::validate() const {
    if (name.empty()) throw ValidationError("name", "must not be empty");
    if (!(environment.bounds.max_x > environment.bounds.min_x && environment.bounds.max_y > environment.bounds.min_y))
        throw ValidationError("environment.bounds", "must have positive extent");
    if (tasks.empty()) throw ValidationError("tasks", "at least one task is required");
    if (robots.empty()) throw ValidationError("robots", "at least one robot is required");
    if (strategies.empty()) throw ValidationError("strategies", "at least one strategy is required");
    if (seeds.empty()) throw ValidationError("seeds", "at least one seed is required");
    sim.validate();
    hmm.validate();
    if (!(pll_gamma > 0.0) || !std::isfinite(pll_gamma)) throw ValidationError("pll_gamma", "must be positive");
    if (!(mdp.gamma >= 0.0 && mdp.gamma < 1.0)) throw ValidationError("gamma", "must be in [0, 1)");
    if (!(mdp.epsilon > 0.0)) throw ValidationError("mdp.epsilon", "must be positive");
    if (mdp.max_iter < 1) throw ValidationError("mdp.max_iter", "must be positive");
    if (hmm_window < 1) throw ValidationError("hmm.window", "must be positive");
    if (planner.sample_count < 0) throw ValidationError("planner.sample_count", "must be >= 0");
    if (!(planner.connection_radius > 0.0)) throw ValidationError("planner.connection_radius", "must be positive");
    if (!(planner.penalty > 0.0)) throw ValidationError("planner.penalty", "must be positive");
    if (!(planner.clearance_falloff > 0.0)) throw ValidationError("planner.clearance_falloff", "must be positive");
    if (!(planner.robot_radius >= 0.0)) throw ValidationError("planner.robot_radius", "must be >= 0");

    std::set<std::int64_t> task_ids;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const auto& t = tasks[i];
        if (!task_ids.insert(t.id.value).second) throw ValidationError(indexed("tasks", i) + ".id", "duplicate task id");
        if (t.visits < 1) throw ValidationError(indexed("tasks", i) + ".visits", "must be at least 1");
        if (t.visits > robot_count())
            throw ValidationError(indexed("tasks", i) + ".visits", "cannot exceed the number of robots");
        require_free(t.location, environment, planner.robot_radius, indexed("tasks", i));
    }
    std::set<RobotId> robot_ids;
    for (std::size_t i = 0; i < robots.size(); ++i) {
        const auto& r = robots[i];
        if (!robot_ids.insert(r.id).second) throw ValidationError(indexed("robots", i) + ".id", "duplicate robot id");
        require_free(r.position, environment, kRobotRadius, indexed("robots", i));
        for (std::size_t j = 0; j < i; ++j)
            if (euclidean(r.position, robots[j].position) < kMinSeparation)
                throw ValidationError(indexed("robots", i), "overlaps robot " + std::to_string(robots[j].id));
    }
}

namespace {

// Reads keys from one JSON object and rejects any it did not consume.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ValidationError(path_.empty() ? "<root>" : path_, "must be an object");
    }
    ~Reader() = default;

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    bool has(const std::string& key) const { return j_.contains(key); }

    const json& raw(const std::string& key) {
        used_.insert(key);
        return j_.at(key);
    }

    double number(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_number()) throw ValidationError(field(key), "must be a number");
        return v.get<double>();
    }
    double number(const std::string& key) {
        if (!has(key)) throw ValidationError(field(key), "is required");
        return number(key, 0.0);
    }
    std::int64_t integer(const std::string& key, std::int64_t fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_number_integer()) throw ValidationError(field(key), "must be an integer");
        return v.get<std::int64_t>();
    }
    std::int64_t integer(const std::string& key) {
        if (!has(key)) throw ValidationError(field(key), "is required");
        return integer(key, 0);
    }
    std::uint64_t count(const std::string& key, std::uint64_t fallback) {
        const std::int64_t v = integer(key, static_cast<std::int64_t>(fallback));
        if (v < 0) throw ValidationError(field(key), "must be >= 0");
        return static_cast<std::uint64_t>(v);
    }
    std::string text(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_string()) throw ValidationError(field(key), "must be a string");
        return v.get<std::string>();
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.contains(it.key())) throw ValidationError(field(it.key()), "unknown key");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

Point2 read_point(const json& j, const std::string& field) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ValidationError(field, "must be a pair of numbers");
    return {j[0].get<double>(), j[1].get<double>()};
}

EnvironmentMap read_environment(const json& j, const std::string& path) {
    Reader r(j, path);
    EnvironmentMap env;
    const json& b = r.raw("bounds");
    if (!b.is_array() || b.size() != 4) throw ValidationError(r.field("bounds"), "must be [min_x, min_y, max_x, max_y]");
    for (std::size_t i = 0; i < 4; ++i)
        if (!b[i].is_number()) throw ValidationError(r.field("bounds"), "must contain numbers");
    env.bounds = Rect{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
    if (r.has("obstacles")) {
        const json& obs = r.raw("obstacles");
        if (!obs.is_array()) throw ValidationError(r.field("obstacles"), "must be an array");
        for (std::size_t i = 0; i < obs.size(); ++i) {
            const std::string f = indexed(r.field("obstacles"), i);
            if (!obs[i].is_array()) throw ValidationError(f, "must be an array of points");
            std::vector<Point2> pts;
            for (std::size_t k = 0; k < obs[i].size(); ++k) pts.push_back(read_point(obs[i][k], indexed(f, k)));
            try {
                env.obstacles.emplace_back(std::move(pts));
            } catch (const std::invalid_argument& e) {
                throw ValidationError(f, e.what());
            }
        }
    }
    r.finish();
    return env;
}

json environment_json(const EnvironmentMap& env) {
    json j;
    j["bounds"] = {env.bounds.min_x, env.bounds.min_y, env.bounds.max_x, env.bounds.max_y};
    json obs = json::array();
    for (const auto& o : env.obstacles) {
        json poly = json::array();
        for (const auto& p : o.vertices()) poly.push_back({p.x, p.y});
        obs.push_back(poly);
    }
    j["obstacles"] = obs;
    return j;
}

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(what, std::string("malformed JSON: ") + e.what());
    }
}

std::string read_file(const std::filesystem::path& path, const std::string& field) {
    std::ifstream in(path);
    if (!in) throw ValidationError(field, "cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

BinaryTransition read_transition(Reader& parent, const std::string& key, BinaryTransition fallback) {
    if (!parent.has(key)) return fallback;
    Reader r(parent.raw(key), parent.field(key));
    BinaryTransition t;
    t.true_given_true = r.number("true_given_true", fallback.true_given_true);
    t.true_given_false = r.number("true_given_false", fallback.true_given_false);
    r.finish();
    return t;
}

}  // namespace

ScenarioConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
    const json doc = parse_json(json_text, "<config>");
    Reader root(doc, "");
    ScenarioConfig c;

    const std::int64_t version = root.integer("format_version");
    if (version != kFormatVersion)
        throw ValidationError("format_version", "unsupported version " + std::to_string(version));
    c.name = root.text("name", c.name);

    if (root.has("environment") == root.has("environment_file"))
        throw ValidationError("environment", "give exactly one of environment or environment_file");
    if (root.has("environment")) {
        c.environment = read_environment(root.raw("environment"), "environment");
    } else {
        c.environment_file = root.text("environment_file", "");
        const auto path = base_dir / c.environment_file;
        const json env = parse_json(read_file(path, "environment_file"), "environment_file");
        Reader wrapper(env, "environment_file");
        if (wrapper.integer("format_version") != kFormatVersion)
            throw ValidationError("environment_file.format_version", "unsupported version");
        c.environment = read_environment(wrapper.raw("environment"), "environment_file.environment");
        wrapper.finish();
    }

    const int default_visits = static_cast<int>(root.integer("visits", 1));
    if (!root.has("tasks")) throw ValidationError("tasks", "is required");
    const json& tasks = root.raw("tasks");
    if (!tasks.is_array()) throw ValidationError("tasks", "must be an array");
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        Reader t(tasks[i], indexed("tasks", i));
        TaskSpec spec;
        spec.id = TaskId{t.integer("id", static_cast<std::int64_t>(i + 1))};
        spec.location = {t.number("x"), t.number("y")};
        spec.visits = static_cast<int>(t.integer("visits", default_visits));
        t.finish();
        c.tasks.push_back(spec);
    }

    if (!root.has("robots")) throw ValidationError("robots", "is required");
    const json& robots = root.raw("robots");
    if (!robots.is_array()) throw ValidationError("robots", "must be an array");
    for (std::size_t i = 0; i < robots.size(); ++i) {
        Reader r(robots[i], indexed("robots", i));
        RobotSpec spec;
        spec.id = static_cast<RobotId>(r.integer("id", static_cast<std::int64_t>(i + 1)));
        spec.position = {r.number("x"), r.number("y")};
        spec.heading = r.number("heading", 0.0);
        r.finish();
        c.robots.push_back(spec);
    }

    if (root.has("strategies")) {
        const json& s = root.raw("strategies");
        if (!s.is_array()) throw ValidationError("strategies", "must be an array");
        c.strategies.clear();
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!s[i].is_string()) throw ValidationError(indexed("strategies", i), "must be a string");
            try {
                c.strategies.push_back(strategy_from_string(s[i].get<std::string>()));
            } catch (const ValidationError& e) {
                throw ValidationError(indexed("strategies", i), e.what());
            }
        }
    }
    if (root.has("seeds")) {
        const json& s = root.raw("seeds");
        if (!s.is_array()) throw ValidationError("seeds", "must be an array");
        c.seeds.clear();
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!s[i].is_number_unsigned()) throw ValidationError(indexed("seeds", i), "must be a non-negative integer");
            c.seeds.push_back(s[i].get<std::uint64_t>());
        }
    }

    c.mdp.gamma = root.number("gamma", c.mdp.gamma);
    c.pll_gamma = root.number("pll_gamma", c.pll_gamma);

    if (root.has("sim")) {
        Reader s(root.raw("sim"), "sim");
        auto& p = c.sim;
        p.tick_duration = s.number("tick_duration", p.tick_duration);
        p.robot_speed = s.number("robot_speed", p.robot_speed);
        p.sensor_radius = s.number("sensor_radius", p.sensor_radius);
        p.sensor_fov = s.number("sensor_fov", p.sensor_fov);
        p.msg_drop_prob = s.number("msg_drop_prob", p.msg_drop_prob);
        p.r_coll = s.number("r_coll", p.r_coll);
        p.arrival_tolerance = s.number("arrival_tolerance", p.arrival_tolerance);
        p.battery_initial = s.number("battery_initial", p.battery_initial);
        p.max_ticks = s.count("max_ticks", p.max_ticks);
        p.joint_max_expansions = s.count("joint_max_expansions", p.joint_max_expansions);
        p.joint_cell = s.number("joint_cell", p.joint_cell);
        p.livelock_ticks_per_member = s.count("livelock_ticks_per_member", p.livelock_ticks_per_member);
        p.snapshot_every = s.count("snapshot_every", p.snapshot_every);
        s.finish();
    }
    if (root.has("hmm")) {
        Reader h(root.raw("hmm"), "hmm");
        auto& p = c.hmm;
        if (h.has("prior")) {
            const json& pr = h.raw("prior");
            if (!pr.is_array() || pr.size() != HiddenState::kCount)
                throw ValidationError("hmm.prior", "must list 8 joint probabilities");
            for (std::size_t i = 0; i < HiddenState::kCount; ++i) {
                if (!pr[i].is_number()) throw ValidationError(indexed("hmm.prior", i), "must be a number");
                p.prior[i] = pr[i].get<double>();
            }
        }
        p.persist_so = read_transition(h, "persist_so", p.persist_so);
        p.persist_mo = read_transition(h, "persist_mo", p.persist_mo);
        p.persist_tna = read_transition(h, "persist_tna", p.persist_tna);
        p.inhibit_so = h.number("inhibit_so", p.inhibit_so);
        p.inhibit_mo = h.number("inhibit_mo", p.inhibit_mo);
        p.inhibit_tna = h.number("inhibit_tna", p.inhibit_tna);
        p.leak = h.number("leak", p.leak);
        c.hmm_window = static_cast<std::size_t>(h.count("window", c.hmm_window));
        const std::string mode = h.text("unavailability", "normalize");
        if (mode == "normalize")
            c.unavailability = UnavailabilityMode::Normalize;
        else if (mode == "clamp")
            c.unavailability = UnavailabilityMode::Clamp;
        else
            throw ValidationError("hmm.unavailability", "must be normalize or clamp");
        h.finish();
    }
    if (root.has("planner")) {
        Reader p(root.raw("planner"), "planner");
        auto& q = c.planner;
        q.sample_count = static_cast<int>(p.integer("sample_count", q.sample_count));
        q.connection_radius = p.number("connection_radius", q.connection_radius);
        q.penalty = p.number("penalty", q.penalty);
        q.clearance_falloff = p.number("clearance_falloff", q.clearance_falloff);
        q.robot_radius = p.number("robot_radius", q.robot_radius);
        const std::string model = p.text("falloff", "exponential");
        if (model == "exponential")
            q.falloff = FalloffModel::Exponential;
        else if (model == "linear")
            q.falloff = FalloffModel::Linear;
        else
            throw ValidationError("planner.falloff", "must be exponential or linear");
        p.finish();
    }
    if (root.has("mdp")) {
        Reader m(root.raw("mdp"), "mdp");
        c.mdp.epsilon = m.number("epsilon", c.mdp.epsilon);
        c.mdp.max_iter = static_cast<int>(m.integer("max_iter", c.mdp.max_iter));
        m.finish();
    }
    root.finish();
    c.validate();
    return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    return parse_config(read_file(path, "<config>"), path.parent_path());
}

std::string config_to_json(const ScenarioConfig& c) {
    json j;
    j["format_version"] = kFormatVersion;
    j["name"] = c.name;
    if (c.environment_file.empty())
        j["environment"] = environment_json(c.environment);
    else
        j["environment_file"] = c.environment_file;
    json tasks = json::array();
    for (const auto& t : c.tasks)
        tasks.push_back({{"id", t.id.value}, {"x", t.location.x}, {"y", t.location.y}, {"visits", t.visits}});
    j["tasks"] = tasks;
    json robots = json::array();
    for (const auto& r : c.robots)
        robots.push_back({{"id", r.id}, {"x", r.position.x}, {"y", r.position.y}, {"heading", r.heading}});
    j["robots"] = robots;
    json strategies = json::array();
    for (Strategy s : c.strategies) strategies.push_back(to_string(s));
    j["strategies"] = strategies;
    j["seeds"] = c.seeds;
    j["gamma"] = c.mdp.gamma;
    j["pll_gamma"] = c.pll_gamma;
    const auto& s = c.sim;
    j["sim"] = {{"tick_duration", s.tick_duration},
                {"robot_speed", s.robot_speed},
                {"sensor_radius", s.sensor_radius},
                {"sensor_fov", s.sensor_fov},
                {"msg_drop_prob", s.msg_drop_prob},
                {"r_coll", s.r_coll},
                {"arrival_tolerance", s.arrival_tolerance},
                {"battery_initial", s.battery_initial},
                {"max_ticks", s.max_ticks},
                {"joint_max_expansions", s.joint_max_expansions},
                {"joint_cell", s.joint_cell},
                {"livelock_ticks_per_member", s.livelock_ticks_per_member},
                {"snapshot_every", s.snapshot_every}};
    auto transition = [](const BinaryTransition& t) {
        return json{{"true_given_true", t.true_given_true}, {"true_given_false", t.true_given_false}};
    };
    const auto& h = c.hmm;
    j["hmm"] = {{"prior", h.prior},
                {"persist_so", transition(h.persist_so)},
                {"persist_mo", transition(h.persist_mo)},
                {"persist_tna", transition(h.persist_tna)},
                {"inhibit_so", h.inhibit_so},
                {"inhibit_mo", h.inhibit_mo},
                {"inhibit_tna", h.inhibit_tna},
                {"leak", h.leak},
                {"window", c.hmm_window},
                {"unavailability", c.unavailability == UnavailabilityMode::Normalize ? "normalize" : "clamp"}};
    const auto& p = c.planner;
    j["planner"] = {{"sample_count", p.sample_count},
                    {"connection_radius", p.connection_radius},
                    {"penalty", p.penalty},
                    {"clearance_falloff", p.clearance_falloff},
                    {"falloff", p.falloff == FalloffModel::Exponential ? "exponential" : "linear"},
                    {"robot_radius", p.robot_radius}};
    j["mdp"] = {{"epsilon", c.mdp.epsilon}, {"max_iter", c.mdp.max_iter}};
    return j.dump(2) + "\n";
}

}  // namespace topu
