#include "topu/scheduler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <tuple>

#include "topu/errors.hpp"

namespace topu {

const char* to_string(Strategy s) { return s == Strategy::Trg ? "TRG" : "CFNU"; }

const char* to_string(ReplanCause c) {
    switch (c) {
        case ReplanCause::ObstacleDiscovered: return "ObstacleDiscovered";
        case ReplanCause::TaskCompleteMsg: return "TaskCompleteMsg";
        case ReplanCause::CoordinationForced: return "CoordinationForced";
        case ReplanCause::CloserTask: return "CloserTask";
    }
    return "?";
}

const char* to_string(IdleReason r) {
    switch (r) {
        case IdleReason::None: return "None";
        case IdleReason::NoTasks: return "NoTasks";
        case IdleReason::Battery: return "Battery";
        case IdleReason::NoValidPath: return "NoValidPath";
    }
    return "?";
}

Strategy strategy_from_string(const std::string& s) {
    if (s == "TRG" || s == "trg") return Strategy::Trg;
    if (s == "CFNU" || s == "cfnu") return Strategy::Cfnu;
    throw ValidationError("strategy", "unknown strategy '" + s + "'");
}

RobotState::RobotState(RobotId id_, Point2 position_, double heading_, const std::map<TaskId, Point2>& tasks,
                       const Rect& bounds, Strategy strategy_, double battery_)
    : id(id_), position(position_), heading(heading_), battery(battery_), strategy(strategy_),
      perceived(bounds), trg(init_trg(tasks, position_)) {
    coord.priority = static_cast<double>(id_);
}

namespace {

class PlanningTimer {
public:
    explicit PlanningTimer(RobotState& r) : robot_(r), start_(std::chrono::steady_clock::now()) {}
    ~PlanningTimer() {
        robot_.planning_seconds +=
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        ++robot_.planning_calls;
    }

private:
    RobotState& robot_;
    std::chrono::steady_clock::time_point start_;
};

constexpr double kValueTieTolerance = 1e-9;

// A path is usable when no segment certainly collides.
bool valid_path(const Path& path, const PlannerConfig& config) {
    if (path.empty()) return false;
    for (double c : path.segment_costs)
        if (c >= config.penalty) return false;
    return true;
}

double unreachable_cost(Point2 a, Point2 b, const PlannerConfig& config) { return config.penalty + euclidean(a, b); }

// Roadmap over CURR and every task that is free on this map. node_of maps a
// TRG vertex to its roadmap node, when it has one.
struct PlanningGraph {
    Roadmap roadmap;
    std::map<Vertex, std::size_t> node_of;
};

PlanningGraph build_graph(const RobotState& robot, const PerceivedMap& map, const std::vector<TaskId>& tasks,
                          const PlannerConfig& config) {
    PlanningGraph g;
    std::vector<Point2> mandatory;
    std::vector<Vertex> owners;
    auto consider = [&](Vertex v, Point2 p) {
        if (!point_in_free_space(p, map, config.robot_radius)) return;
        // Coincident points share one roadmap node.
        for (std::size_t k = 0; k < mandatory.size(); ++k)
            if (mandatory[k] == p) {
                g.node_of[v] = k;
                return;
            }
        g.node_of[v] = mandatory.size();
        mandatory.push_back(p);
        owners.push_back(v);
    };
    consider(Vertex::curr(), robot.position);
    for (TaskId id : tasks) consider(Vertex::task(id), robot.trg.vertices.at(id));
    // Each build draws fresh samples from the run's seed stream.
    PlannerConfig sampled = config;
    std::seed_seq seq{config.reuse_seed, static_cast<std::uint64_t>(robot.id), robot.planning_calls};
    std::uint64_t words[2];
    seq.generate(words, words + 2);
    sampled.reuse_seed = (words[0] << 32) | words[1];
    g.roadmap = build_roadmap(map, mandatory, sampled);
    return g;
}

std::optional<Path> path_between(const PlanningGraph& g, const ShortestPathTree& tree, Vertex to) {
    auto it = g.node_of.find(to);
    if (it == g.node_of.end() || !tree.reachable(it->second)) return std::nullopt;
    return tree.path_to(g.roadmap, it->second);
}

void adopt(RobotState& robot, std::optional<TaskId> target, std::optional<Path> path) {
    robot.target = target;
    if (path) {
        robot.path = std::move(*path);
        robot.cursor = robot.path.waypoints.size() > 1 ? 1 : robot.path.waypoints.size();
    } else {
        robot.path = Path{};
        robot.cursor = 0;
    }
}

}  // namespace

TaskSchedule greedy_schedule(const Trg& trg, TaskId first) {
    TaskSchedule order{first};
    std::set<TaskId> left;
    for (const auto& [id, _] : trg.vertices)
        if (id != first) left.insert(id);
    while (!left.empty()) {
        const Vertex from = Vertex::task(order.back());
        TaskId best = *left.begin();
        double best_c = std::numeric_limits<double>::infinity();
        for (TaskId id : left) {
            const double c = trg.edge_cost(from, Vertex::task(id));
            if (c < best_c) {
                best_c = c;
                best = id;
            }
        }
        order.push_back(best);
        left.erase(best);
    }
    return order;
}

PlanResult update_trg(RobotState& robot, const SchedulerConfig& config, std::span<const Obstacle> extra) {
    PlanningTimer timer(robot);
    PlanResult result;
    const auto old_target = robot.target;
    robot.trg = move_curr(robot.trg, robot.position);
    robot.unreachable.clear();
    if (robot.trg.vertices.empty()) {
        adopt(robot, std::nullopt, std::nullopt);
        return result;
    }

    const PerceivedMap map = extra.empty() ? robot.perceived : robot.perceived.with_extra(extra);
    std::vector<TaskId> tasks;
    for (const auto& [id, _] : robot.trg.vertices) tasks.push_back(id);
    const PlanningGraph g = build_graph(robot, map, tasks, config.planner);

    // Edge costs from one shortest-path tree per vertex.
    const std::vector<Vertex> vertices = robot.trg.all_vertices();
    std::map<Vertex, ShortestPathTree> trees;
    for (const Vertex v : vertices) {
        auto it = g.node_of.find(v);
        if (it != g.node_of.end()) trees.emplace(v, shortest_path_tree(g.roadmap, it->second));
    }
    std::map<EdgeKey, double> cost;
    for (std::size_t i = 0; i < vertices.size(); ++i)
        for (std::size_t j = i + 1; j < vertices.size(); ++j) {
            const Vertex a = vertices[i], b = vertices[j];
            double c = unreachable_cost(robot.trg.location(a), robot.trg.location(b), config.planner);
            auto ta = trees.find(a);
            auto nb = g.node_of.find(b);
            if (ta != trees.end() && nb != g.node_of.end() && ta->second.reachable(nb->second))
                c = ta->second.cost[nb->second];
            cost[EdgeKey(a, b)] = c;
        }

    // PLL observations and smoothed TNA per directed edge, then per-source
    // normalization into unavailability.
    std::map<DirectedEdge, double> unavail;
    for (const Vertex from : vertices) {
        double min_incident = std::numeric_limits<double>::infinity();
        for (const Vertex other : vertices)
            if (other != from) min_incident = std::min(min_incident, cost.at(EdgeKey(from, other)));
        std::map<TaskId, double> raw;
        for (const Vertex to : vertices) {
            if (to == from || to.is_curr()) continue;
            const DirectedEdge e{from, to};
            auto& belief = robot.beliefs[e];
            belief.append(observe_pll(cost.at(EdgeKey(from, to)), min_incident, config.pll_gamma), config.hmm_window);
            const auto post = forward_backward(belief.observations, config.hmm);
            belief.smoothed_tna = tna_marginal(post.back());
            raw[to.id()] = belief.smoothed_tna;
        }
        if (raw.empty()) continue;
        for (const auto& [id, p] : edge_unavailability(raw, config.unavailability))
            unavail[DirectedEdge{from, Vertex::task(id)}] = p;
    }
    // A lone task has no fan-out; its CURR edge keeps availability 1.
    for (const Vertex from : vertices)
        for (const Vertex to : vertices)
            if (from != to && !unavail.contains({from, to})) unavail[{from, to}] = 0.0;
    robot.trg.cost = std::move(cost);
    robot.trg.unavail = std::move(unavail);
    ++robot.trg.stamp;

    // Paths from CURR decide which tasks are eligible.
    std::map<TaskId, Path> paths;
    auto curr_tree = trees.find(Vertex::curr());
    for (TaskId id : tasks) {
        std::optional<Path> p;
        if (curr_tree != trees.end()) p = path_between(g, curr_tree->second, Vertex::task(id));
        if (p && valid_path(*p, config.planner))
            paths.emplace(id, smooth_path(*p, map, config.planner));
        else
            robot.unreachable.insert(id);
    }

    const PolicyDecision decision = decide_next_task(robot.trg, config.mdp);
    std::optional<TaskId> choice;
    if (paths.contains(decision.task)) {
        choice = decision.task;
    } else {
        double best = -std::numeric_limits<double>::infinity();
        const auto& mdp = decision.mdp;
        for (const auto& action : mdp.actions[mdp.curr_index()]) {
            const TaskId id = mdp.tasks[action.target];
            if (!paths.contains(id)) continue;
            const double q = action_value(mdp, decision.utilities, mdp.curr_index(), action);
            if (q > best) {
                best = q;
                choice = id;
            }
        }
    }

    // A target that ties the best action is kept.
    if (choice && old_target && *old_target != *choice && paths.contains(*old_target)) {
        const auto& mdp = decision.mdp;
        const auto& acts = mdp.actions[mdp.curr_index()];
        double q_choice = 0.0, q_old = 0.0;
        for (const auto& action : acts) {
            const TaskId id = mdp.tasks[action.target];
            if (id == *choice) q_choice = action_value(mdp, decision.utilities, mdp.curr_index(), action);
            if (id == *old_target) q_old = action_value(mdp, decision.utilities, mdp.curr_index(), action);
        }
        if (q_old >= q_choice - kValueTieTolerance * std::max(1.0, std::abs(q_choice))) choice = old_target;
    }

    std::optional<Path> chosen_path;
    if (choice) chosen_path = paths.at(*choice);
    adopt(robot, choice, chosen_path);
    result.target = choice;
    result.path = chosen_path;
    result.switched = old_target != choice;
    return result;
}

TaskId cfnu_select(const RobotState& robot) {
    std::optional<TaskId> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& [id, p] : robot.trg.vertices) {
        const double d = euclidean(robot.position, p);
        if (d < best_d) {
            best = id;
            best_d = d;
        }
    }
    if (!best) throw NoTasks("no open tasks to select from");
    return *best;
}

PlanResult cfnu_replan(RobotState& robot, const SchedulerConfig& config, std::span<const Obstacle> extra) {
    PlanningTimer timer(robot);
    PlanResult result;
    const auto old_target = robot.target;
    robot.trg = move_curr(robot.trg, robot.position);
    robot.unreachable.clear();

    // Tasks left for a closer one go last so the robot does not swing back.
    std::vector<std::tuple<bool, double, TaskId>> order;
    for (const auto& [id, p] : robot.trg.vertices)
        order.emplace_back(robot.abandoned.contains(id), euclidean(robot.position, p), id);
    std::sort(order.begin(), order.end());

    std::optional<TaskId> choice;
    std::optional<Path> chosen_path;
    if (!order.empty()) {
        const PerceivedMap map = extra.empty() ? robot.perceived : robot.perceived.with_extra(extra);
        std::vector<TaskId> tasks;
        for (const auto& [_, d, id] : order) tasks.push_back(id);
        const PlanningGraph g = build_graph(robot, map, tasks, config.planner);
        auto curr = g.node_of.find(Vertex::curr());
        if (curr != g.node_of.end()) {
            const auto tree = shortest_path_tree(g.roadmap, curr->second);
            for (const auto& [_, d, id] : order) {
                auto p = path_between(g, tree, Vertex::task(id));
                if (p && valid_path(*p, config.planner)) {
                    choice = id;
                    chosen_path = smooth_path(*p, map, config.planner);
                    break;
                }
                robot.unreachable.insert(id);
            }
        } else {
            for (const auto& [_, d, id] : order) robot.unreachable.insert(id);
        }
    }
    adopt(robot, choice, chosen_path);
    result.target = choice;
    result.path = chosen_path;
    result.switched = old_target != choice;
    return result;
}

PlanResult replan(RobotState& robot, const SchedulerConfig& config, std::span<const Obstacle> extra) {
    return robot.strategy == Strategy::Trg ? update_trg(robot, config, extra) : cfnu_replan(robot, config, extra);
}

std::pair<Point2, std::size_t> advance_along(const Path& path, std::size_t cursor, Point2 from, double distance) {
    Point2 at = from;
    double left = distance;
    while (cursor < path.waypoints.size()) {
        const Point2 next = path.waypoints[cursor];
        const double d = euclidean(at, next);
        if (d > left) {
            at = at + (next - at) * (left / d);
            return {at, cursor};
        }
        left -= d;
        at = next;
        ++cursor;
    }
    return {at, cursor};
}

void complete_target(RobotState& robot) {
    if (robot.target && robot.trg.has_task(*robot.target)) robot.trg = remove_vertex(robot.trg, *robot.target);
    robot.target.reset();
    robot.path = Path{};
    robot.cursor = 0;
    robot.abandoned.clear();
}

bool obstacle_near_path(const RobotState& robot, const Obstacle& obstacle, double corridor) {
    if (robot.path.empty()) return false;
    Point2 prev = robot.position;
    for (std::size_t k = robot.cursor; k < robot.path.waypoints.size(); ++k) {
        const Point2 next = robot.path.waypoints[k];
        if (segment_obstacle_distance(prev, next, obstacle) <= corridor) return true;
        prev = next;
    }
    return false;
}

StepOutput scheduler_step(RobotState& robot, const StepInput& input, const SchedulerConfig& config) {
    StepOutput out;
    out.next_cursor = robot.cursor;

    bool message = false;
    for (TaskId id : input.completed)
        if (robot.trg.has_task(id)) {
            robot.trg = remove_vertex(robot.trg, id);
            message = true;
        }
    bool obstacle = false;
    for (const auto& o : input.new_obstacles)
        if (obstacle_near_path(robot, o, config.corridor)) obstacle = true;

    std::optional<ReplanCause> cause;
    if (message)
        cause = ReplanCause::TaskCompleteMsg;
    else if (obstacle)
        cause = ReplanCause::ObstacleDiscovered;
    else if (input.force_replan)
        cause = ReplanCause::CoordinationForced;

    const bool target_lost = robot.target && !robot.trg.has_task(*robot.target);
    if (robot.trg.vertices.empty()) {
        adopt(robot, std::nullopt, std::nullopt);
    } else if (cause) {
        const auto old = robot.target;
        robot.activity = Activity::Replanning;
        const auto r = replan(robot, config, input.peers);
        out.replanned = true;
        out.events.push_back({input.tick, *cause, r.target != old, old, r.target, robot.position});
        robot.last_attempt = input.tick;
    } else if (target_lost || (!robot.target && !robot.trg.vertices.empty() &&
                               (robot.idle_reason != IdleReason::NoValidPath ||
                                input.tick >= robot.last_attempt + config.retry_interval))) {
        // First selection, selection after arrival, or a periodic retry.
        replan(robot, config, input.peers);
        out.replanned = true;
        robot.last_attempt = input.tick;
    }

    // Baseline: switch as soon as another task is strictly closer.
    if (robot.strategy == Strategy::Cfnu && robot.target) {
        const double d_target = euclidean(robot.position, robot.trg.vertices.at(*robot.target));
        std::optional<TaskId> closer;
        double best = d_target;
        for (const auto& [id, p] : robot.trg.vertices) {
            if (id == *robot.target || robot.unreachable.contains(id) || robot.abandoned.contains(id)) continue;
            const double d = euclidean(robot.position, p);
            if (d < best) {
                best = d;
                closer = id;
            }
        }
        if (closer) {
            const auto old = robot.target;
            const auto r = cfnu_replan(robot, config, input.peers);
            out.replanned = true;
            if (old) robot.abandoned.insert(*old);
            if (r.target != old) out.events.push_back({input.tick, ReplanCause::CloserTask, true, old, r.target, robot.position});
        }
    }

    if (robot.trg.vertices.empty()) {
        robot.activity = Activity::Idle;
        robot.idle_reason = IdleReason::NoTasks;
        return out;
    }
    if (!robot.target) {
        robot.activity = Activity::Idle;
        robot.idle_reason = IdleReason::NoValidPath;
        out.no_valid_path = true;
        return out;
    }
    // Battery is checked for the next leg when it is chosen; the whole
    // remaining schedule is only flagged.
    if (out.replanned) {
        if (expected_schedule_cost({*robot.target}, robot.trg) > robot.battery) {
            adopt(robot, std::nullopt, std::nullopt);
            robot.activity = Activity::Idle;
            robot.idle_reason = IdleReason::Battery;
            return out;
        }
        robot.schedule_infeasible = !battery_feasible(greedy_schedule(robot.trg, *robot.target), robot.trg, robot.battery);
    }
    if (robot.idle_reason == IdleReason::Battery) return out;

    robot.activity = Activity::Traveling;
    robot.idle_reason = IdleReason::None;
    const auto [p, c] = advance_along(robot.path, robot.cursor, robot.position, input.step_length);
    out.next_position = p;
    out.next_cursor = c;
    return out;
}

}  // namespace topu
