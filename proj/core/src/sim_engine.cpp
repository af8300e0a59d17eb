#include "topu/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "topu/errors.hpp"

namespace topu {

const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::Running: return "Running";
        case Outcome::AllTasksDone: return "AllTasksDone";
        case Outcome::Timeout: return "Timeout";
        case Outcome::JointPlanFailure: return "JointPlanFailure";
        case Outcome::BatteryExhausted: return "BatteryExhausted";
    }
    return "?";
}

void SimParams::validate() const {
    auto positive = [](double v, const char* field) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(field, "must be positive and finite");
    };
    positive(tick_duration, "sim.tick_duration");
    positive(robot_speed, "sim.robot_speed");
    positive(sensor_radius, "sim.sensor_radius");
    positive(sensor_fov, "sim.sensor_fov");
    positive(r_coll, "sim.r_coll");
    positive(arrival_tolerance, "sim.arrival_tolerance");
    positive(battery_initial, "sim.battery_initial");
    positive(joint_cell, "sim.joint_cell");
    if (!(msg_drop_prob >= 0.0 && msg_drop_prob <= 1.0)) throw ValidationError("sim.msg_drop_prob", "must be in [0, 1]");
    if (sensor_fov > 2.0 * std::numbers::pi + 1e-12) throw ValidationError("sim.sensor_fov", "must not exceed 2*pi");
    if (max_ticks == 0) throw ValidationError("sim.max_ticks", "must be positive");
    if (snapshot_every == 0) throw ValidationError("sim.snapshot_every", "must be positive");
}

std::uint64_t SimTrace::total_switching() const {
    std::uint64_t n = 0;
    for (const auto& r : robots) n += r.switching_replans;
    return n;
}

std::uint64_t SimTrace::total_non_switching() const {
    std::uint64_t n = 0;
    for (const auto& r : robots) n += r.non_switching_replans;
    return n;
}

namespace {

double angle_between(Point2 u, Point2 w) { return std::abs(std::atan2(cross(u, w), dot(u, w))); }

bool rays_cross(Point2 origin, Point2 dir, double length, Point2 a, Point2 b) {
    return segments_intersect(origin, origin + dir * length, a, b);
}

constexpr int kPeerDiscSides = 24;

}  // namespace

bool segment_visible(Point2 at, double heading, double radius, double fov, Point2 a, Point2 b) {
    const Point2 d = b - a;
    const Point2 f = a - at;
    const double A = dot(d, d);
    const double B = 2.0 * dot(f, d);
    const double C = dot(f, f) - radius * radius;
    double t0 = 0.0, t1 = 0.0;
    if (A == 0.0) {
        if (C > 0.0) return false;
    } else {
        const double disc = B * B - 4.0 * A * C;
        if (disc < 0.0) return false;
        const double s = std::sqrt(disc);
        t0 = std::max(0.0, (-B - s) / (2.0 * A));
        t1 = std::min(1.0, (-B + s) / (2.0 * A));
        if (t0 > t1) return false;
    }
    if (fov >= 2.0 * std::numbers::pi) return true;

    const Point2 q0 = a + d * t0;
    const Point2 q1 = a + d * t1;
    const Point2 facing{std::cos(heading), std::sin(heading)};
    const double half = 0.5 * fov;
    if (half >= 0.5 * std::numbers::pi) {
        // The blind region is a convex wedge behind the robot; the clipped
        // segment is hidden only if both ends are strictly inside it.
        const Point2 back = facing * -1.0;
        const double blind = std::numbers::pi - half;
        auto hidden = [&](Point2 q) {
            const Point2 v = q - at;
            return norm(v) > 0.0 && angle_between(back, v) < blind;
        };
        return !(hidden(q0) && hidden(q1));
    }
    auto seen = [&](Point2 q) {
        const Point2 v = q - at;
        return norm(v) == 0.0 || angle_between(facing, v) <= half;
    };
    if (seen(q0) || seen(q1)) return true;
    const Point2 left{std::cos(heading + half), std::sin(heading + half)};
    const Point2 right{std::cos(heading - half), std::sin(heading - half)};
    return rays_cross(at, left, radius, q0, q1) || rays_cross(at, right, radius, q0, q1);
}

World::World(EnvironmentMap truth, const std::vector<TaskSpec>& tasks, const std::vector<RobotSpec>& robots,
             SimParams params, SchedulerConfig scheduler, std::uint64_t seed)
    : truth_(std::move(truth)), params_(params), scheduler_(std::move(scheduler)), rng_(seed) {
    params_.validate();
    scheduler_.arrival_tolerance = params_.arrival_tolerance;
    std::map<TaskId, Point2> locations;
    for (const auto& t : tasks) {
        if (t.visits < 1) throw ValidationError("tasks.visits", "must be at least 1");
        if (tasks_.contains(t.id)) throw ValidationError("tasks.id", "duplicate task id");
        tasks_[t.id] = WorldTask{t.location, t.visits, {}};
        locations[t.id] = t.location;
    }
    auto sorted = robots;
    std::sort(sorted.begin(), sorted.end(), [](const RobotSpec& x, const RobotSpec& y) { return x.id < y.id; });
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
        if (sorted[i].id == sorted[i + 1].id) throw ValidationError("robots.id", "duplicate robot id");
    trace_.seed = seed;
    trace_.tick_duration = params_.tick_duration;
    for (const auto& r : sorted) {
        robots_.emplace_back(r.id, r.position, r.heading, locations, truth_.bounds, r.strategy, params_.battery_initial);
        inbox_[r.id] = {};
        RobotMetrics m;
        m.id = r.id;
        m.trajectory.push_back(r.position);
        trace_.robots.push_back(m);
    }
}

std::size_t World::index_of(RobotId id) const {
    for (std::size_t i = 0; i < robots_.size(); ++i)
        if (robots_[i].id == id) return i;
    throw std::out_of_range("unknown robot id");
}

bool World::active(RobotId id) const {
    auto it = retired_.find(id);
    return it == retired_.end() || !it->second;
}

std::map<RobotId, Point2> World::active_positions() const {
    std::map<RobotId, Point2> out;
    for (const auto& r : robots_)
        if (active(r.id)) out[r.id] = r.position;
    return out;
}

void World::event(RobotId robot, std::string kind, std::string detail) {
    trace_.events.push_back({clock_, robot, std::move(kind), std::move(detail)});
}

std::vector<Obstacle> World::sense(RobotState& robot) {
    std::vector<Obstacle> found;
    for (std::size_t k = 0; k < truth_.obstacles.size(); ++k) {
        if (robot.perceived.knows(k)) continue;
        const auto& verts = truth_.obstacles[k].vertices();
        bool visible = false;
        for (std::size_t v = 0; v < verts.size() && !visible; ++v)
            visible = segment_visible(robot.position, robot.heading, params_.sensor_radius, params_.sensor_fov, verts[v],
                                      verts[(v + 1) % verts.size()]);
        if (visible && robot.perceived.add(k, truth_.obstacles[k])) found.push_back(truth_.obstacles[k]);
    }
    return found;
}

void World::deliver_messages() {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const auto& b : bus_) {
        for (const auto& r : robots_) {
            if (r.id == b.sender || !active(r.id)) continue;
            const double draw = u(rng_);
            if (draw >= params_.msg_drop_prob) {
                inbox_[r.id].push_back(b.task);
                event(r.id, "deliver", "task=" + std::to_string(b.task.value));
            } else {
                event(r.id, "drop", "task=" + std::to_string(b.task.value));
            }
        }
    }
    bus_.clear();
}

void World::close_episode(RobotId id, bool restart) {
    auto it = episodes_.find(id);
    if (it == episodes_.end()) return;
    const std::uint64_t ticks = clock_ - it->second.start;
    const std::uint64_t bound = params_.livelock_ticks_per_member * std::max<std::size_t>(it->second.max_size, 1);
    auto& inv = trace_.invariants;
    inv.longest_episode = std::max(inv.longest_episode, ticks);
    inv.worst_episode_ratio = std::max(inv.worst_episode_ratio, static_cast<double>(ticks) / static_cast<double>(bound));
    if (ticks > bound) {
        ++inv.livelock_violations;
        event(id, "livelock", "ticks=" + std::to_string(ticks) + " bound=" + std::to_string(bound));
    }
    if (restart) {
        it->second.start = clock_;
    } else {
        episodes_.erase(it);
    }
}

void World::run_joint_planning(const std::vector<RobotId>& members) {
    ++trace_.invariants.joint_plans;
    JointPlanRequest req;
    req.robots = members;
    double lo_x = std::numeric_limits<double>::infinity(), lo_y = lo_x;
    double hi_x = -lo_x, hi_y = -lo_x;
    for (RobotId id : members) {
        const auto& r = robots_[index_of(id)];
        req.starts.push_back(r.position);
        // A robot whose plan found no valid path heads for its closest task.
        Point2 goal = r.position;
        if (r.target)
            goal = r.trg.vertices.at(*r.target);
        else if (!r.trg.vertices.empty())
            goal = r.trg.vertices.at(cfnu_select(r));
        req.goals.push_back(goal);
        req.maps.push_back(&r.perceived);
        lo_x = std::min(lo_x, r.position.x);
        lo_y = std::min(lo_y, r.position.y);
        hi_x = std::max(hi_x, r.position.x);
        hi_y = std::max(hi_y, r.position.y);
    }
    const double pad = 2.0 * params_.r_coll;
    const Rect& b = truth_.bounds;
    req.region = Rect{std::max(b.min_x, lo_x - pad), std::max(b.min_y, lo_y - pad), std::min(b.max_x, hi_x + pad),
                      std::min(b.max_y, hi_y + pad)};
    req.cell = params_.joint_cell;
    req.exit_radius = params_.r_coll;
    req.goal_tolerance = params_.arrival_tolerance;
    req.max_expansions = params_.joint_max_expansions;

    std::ostringstream who;
    for (std::size_t i = 0; i < members.size(); ++i) who << (i ? "," : "") << members[i];
    try {
        JointPlan plan = perform_joint_planning(req);
        if (plan.moves.empty()) throw JointPlanFailure("joint plan moves nobody");
        std::map<RobotId, CoordState> states;
        for (RobotId id : members) states[id] = robots_[index_of(id)].coord;
        reset_after_joint_plan(states);
        for (RobotId id : members) {
            auto& r = robots_[index_of(id)];
            r.coord = states[id];
            pending_replan_[id] = true;
            ++trace_.robots[index_of(id)].coordination_events;
        }
        event(-1, "joint_plan", "members=" + who.str() + " moves=" + std::to_string(plan.moves.size()));
        joints_.push_back({members, std::move(plan.moves), 0});
    } catch (const JointPlanFailure& e) {
        event(-1, "joint_plan_failure", "members=" + who.str());
        finish(Outcome::JointPlanFailure, e.what());
    }
}

void World::coordinate(std::map<RobotId, bool>& force, std::map<RobotId, std::vector<Obstacle>>& peers,
                       std::set<RobotId>& movable) {
    const auto positions = active_positions();
    std::set<RobotId> locked;
    for (const auto& j : joints_)
        for (RobotId id : j.members) locked.insert(id);

    for (const auto& shape : collision_shapes(positions, params_.r_coll)) {
        for (RobotId id : shape) shape_of_[id] = shape;
        if (shape.size() == 1) {
            auto& r = robots_[index_of(shape[0])];
            if (r.coord.mode != CoordMode::Exited) {
                mark_exited(r.coord);
                r.coord.priority = static_cast<double>(r.id);
                close_episode(r.id, false);
                event(r.id, "exit", "alone");
            }
            if (!locked.contains(r.id)) movable.insert(r.id);
            continue;
        }

        std::map<RobotId, CoordState> members;
        bool any_locked = false;
        for (RobotId id : shape) {
            if (locked.contains(id)) {
                any_locked = true;
                continue;
            }
            members[id] = robots_[index_of(id)].coord;
        }
        for (auto& [id, st] : members) {
            if (st.mode == CoordMode::Exited) {
                episodes_[id] = Episode{clock_, shape.size()};
                ++trace_.invariants.shape_episodes;
                event(id, "enter", "size=" + std::to_string(shape.size()));
            }
            auto& ep = episodes_[id];
            ep.max_size = std::max(ep.max_size, shape.size());
        }
        if (any_locked) {
            // A joint plan is executing in this shape: newcomers stop and wait.
            for (auto& [id, st] : members) {
                if (st.mode == CoordMode::Exited || st.mode == CoordMode::Leader) {
                    st.mode = CoordMode::Waiting;
                    st.priority = static_cast<double>(id);
                }
                st.token_released = false;
                robots_[index_of(id)].coord = st;
            }
            continue;
        }

        bool had_waiting = false, had_leader = false;
        for (const auto& [id, st] : members) {
            had_waiting = had_waiting || st.mode == CoordMode::Waiting;
            had_leader = had_leader || st.mode == CoordMode::Leader;
        }
        std::map<RobotId, CoordMode> before;
        for (const auto& [id, st] : members) before[id] = st.mode;

        const ElectionResult res = elect_in_shape(members);

        if (had_waiting && !had_leader && !res.leader) ++trace_.invariants.leaderless_rounds;
        if (res.deposed) {
            std::optional<RobotId> lowest;
            for (const auto& [id, st] : members)
                if (std::isfinite(st.priority) && (!lowest || id < *lowest)) lowest = id;
            if (lowest && *lowest == *res.deposed) ++trace_.invariants.lowest_id_deposed;
            event(*res.deposed, "deposed");
            ++trace_.robots[index_of(*res.deposed)].coordination_events;
        }

        std::size_t leaders = 0;
        for (const auto& [id, st] : members) {
            if (st.mode == CoordMode::Leader) ++leaders;
            if (st.mode == CoordMode::Exited) ++trace_.invariants.partition_violations;
        }
        if (leaders > 1) ++trace_.invariants.partition_violations;

        for (const auto& [id, st] : members) robots_[index_of(id)].coord = st;

        if (res.joint_planning) {
            bool all_surrendered = true;
            for (const auto& [id, st] : members) all_surrendered = all_surrendered && st.mode == CoordMode::Surrendered;
            if (!all_surrendered) ++trace_.invariants.partition_violations;
            std::vector<RobotId> ids;
            for (const auto& [id, _] : members) ids.push_back(id);
            run_joint_planning(ids);
            continue;
        }
        // Everyone surrendered is only allowed on the joint-planning branch.
        {
            bool all_surrendered = true;
            for (const auto& [id, st] : members) all_surrendered = all_surrendered && st.mode == CoordMode::Surrendered;
            if (all_surrendered) ++trace_.invariants.surrendered_without_joint;
        }

        const RobotId leader = *res.leader;
        auto& lr = robots_[index_of(leader)];
        movable.insert(leader);
        std::vector<RobotId> others;
        for (const auto& [id, _] : members)
            if (id != leader) others.push_back(id);
        const bool fresh = before[leader] != CoordMode::Leader;
        if (fresh) {
            event(leader, "elect", "size=" + std::to_string(shape.size()));
            ++trace_.robots[index_of(leader)].coordination_events;
        }
        force[leader] = fresh || leader_members_[leader] != shape;
        leader_members_[leader] = shape;

        // Stopped peers become discs; a disc never swallows the leader itself.
        std::vector<Obstacle> discs;
        const double shrink = std::cos(std::numbers::pi / kPeerDiscSides);
        for (RobotId id : shape) {
            if (id == leader) continue;
            const Point2 q = robots_[index_of(id)].position;
            const double d = euclidean(lr.position, q);
            double radius = kRobotRadius + 0.005;
            if (radius / shrink + kRobotRadius >= d - 1e-6) radius = (d - kRobotRadius - 1e-6) * shrink - 1e-9;
            radius = std::max(radius, 1e-3);
            discs.push_back(Obstacle::disc(q, radius, kPeerDiscSides));
        }
        peers[leader] = std::move(discs);
    }
}

bool World::try_move(RobotState& robot, Point2 to, bool& blocked_by_robot) {
    blocked_by_robot = false;
    const std::size_t idx = index_of(robot.id);
    Point2 dest = to;
    double disp = euclidean(robot.position, dest);
    if (disp > robot.battery) {
        dest = robot.position + (dest - robot.position) * (robot.battery / disp);
        disp = robot.battery;
    }
    if (disp <= 0.0) return true;

    const bool free_point = point_in_free_space(dest, truth_, kRobotRadius);
    const double clearance = segment_clearance(robot.position, dest, truth_.obstacles);
    if (!free_point || clearance <= kRobotRadius) {
        std::vector<Obstacle> touching;
        for (std::size_t k = 0; k < truth_.obstacles.size(); ++k)
            if (segment_obstacle_distance(robot.position, dest, truth_.obstacles[k]) <= kRobotRadius + 1e-9 &&
                robot.perceived.add(k, truth_.obstacles[k]))
                touching.push_back(truth_.obstacles[k]);
        auto& pending = pending_obstacles_[robot.id];
        pending.insert(pending.end(), touching.begin(), touching.end());
        if (touching.empty()) pending_replan_[robot.id] = true;
        event(robot.id, "blocked", "by=obstacle");
        return false;
    }
    for (const auto& other : robots_) {
        if (other.id == robot.id || !active(other.id)) continue;
        if (point_segment_distance(other.position, robot.position, dest) < kMinSeparation) {
            blocked_by_robot = true;
            event(robot.id, "blocked", "by=robot" + std::to_string(other.id));
            return false;
        }
    }

    const Point2 delta = dest - robot.position;
    robot.heading = std::atan2(delta.y, delta.x);
    robot.position = dest;
    robot.battery = std::max(0.0, robot.battery - disp);
    trace_.robots[idx].distance += disp;
    return true;
}

void World::retire(RobotState& robot, const std::string& reason) {
    if (!active(robot.id)) return;
    if (robot.coord.mode == CoordMode::Leader) {
        std::map<RobotId, CoordState> states;
        for (RobotId id : shape_of_[robot.id])
            if (active(id)) states[id] = robots_[index_of(id)].coord;
        apply_leader_outcome(states, robot.id, LeaderOutcome::Exit);
        for (const auto& [id, st] : states) robots_[index_of(id)].coord = st;
    }
    mark_exited(robot.coord);
    close_episode(robot.id, false);
    retired_[robot.id] = true;
    event(robot.id, "retire", reason);
}

void World::process_arrivals() {
    for (auto& r : robots_) {
        if (!active(r.id) || !r.target) continue;
        const TaskId t = *r.target;
        if (euclidean(r.position, r.trg.vertices.at(t)) > params_.arrival_tolerance) continue;
        auto& wt = tasks_.at(t);
        if (wt.visits_remaining > 0 && !wt.visited_by.contains(r.id)) {
            --wt.visits_remaining;
            wt.visited_by.insert(r.id);
            ++trace_.robots[index_of(r.id)].visits;
            event(r.id, "visit", "task=" + std::to_string(t.value) + " left=" + std::to_string(wt.visits_remaining));
            if (wt.visits_remaining == 0) {
                broadcast(r.id, t);
                event(r.id, "complete", "task=" + std::to_string(t.value));
            }
        } else {
            event(r.id, "discharge", "task=" + std::to_string(t.value));
        }
        complete_target(r);
        if (episodes_.contains(r.id)) close_episode(r.id, true);
    }
}

void World::check_invariants() {
    auto& inv = trace_.invariants;
    const auto pos = active_positions();
    for (auto a = pos.begin(); a != pos.end(); ++a) {
        for (auto b = std::next(a); b != pos.end(); ++b)
            if (euclidean(a->second, b->second) < 2.0 * kRobotRadius) {
                ++inv.safety_violations;
                event(a->first, "unsafe", "robot=" + std::to_string(b->first));
            }
        if (!point_in_free_space(a->second, truth_, kRobotRadius - 1e-9)) ++inv.obstacle_violations;
    }
}

void World::finish(Outcome outcome, const std::string& why) {
    if (trace_.outcome != Outcome::Running) return;
    trace_.outcome = outcome;
    trace_.completion_tick = clock_;
    trace_.failure = why;
    for (auto& [id, ep] : episodes_) {
        const std::uint64_t ticks = clock_ - ep.start;
        const std::uint64_t bound = params_.livelock_ticks_per_member * std::max<std::size_t>(ep.max_size, 1);
        trace_.invariants.longest_episode = std::max(trace_.invariants.longest_episode, ticks);
        if (ticks > bound) ++trace_.invariants.livelock_violations;
    }
    if (outcome == Outcome::Timeout)
        for (const auto& r : robots_)
            if (active(r.id) && (r.coord.mode == CoordMode::Waiting || r.coord.mode == CoordMode::Surrendered))
                trace_.invariants.blocked_at_timeout = true;
    for (std::size_t i = 0; i < robots_.size(); ++i) {
        trace_.robots[i].planning_calls = robots_[i].planning_calls;
        trace_.robots[i].planning_seconds = robots_[i].planning_seconds;
        auto& traj = trace_.robots[i].trajectory;
        if (traj.empty() || !(traj.back() == robots_[i].position)) traj.push_back(robots_[i].position);
    }
    event(-1, "outcome", std::string(to_string(outcome)) + (why.empty() ? "" : " " + why));
}

bool World::step() {
    if (trace_.outcome != Outcome::Running) return false;
    const bool all_done =
        std::all_of(tasks_.begin(), tasks_.end(), [](const auto& kv) { return kv.second.visits_remaining == 0; });
    if (all_done) {
        finish(Outcome::AllTasksDone);
        return false;
    }
    if (clock_ >= params_.max_ticks) {
        finish(Outcome::Timeout, "max_ticks reached");
        return false;
    }

    // 1. sensing
    for (auto& r : robots_) {
        if (!active(r.id)) continue;
        auto found = sense(r);
        auto& pending = pending_obstacles_[r.id];
        pending.insert(pending.end(), found.begin(), found.end());
    }
    // 2. messages
    deliver_messages();

    // 3. coordination
    std::map<RobotId, bool> force;
    std::map<RobotId, std::vector<Obstacle>> peers;
    std::set<RobotId> movable;
    coordinate(force, peers, movable);
    if (trace_.outcome != Outcome::Running) return false;

    // 4. per-robot control
    const double step_length = params_.robot_speed * params_.tick_duration;
    std::map<RobotId, StepOutput> proposals;
    for (auto& r : robots_) {
        if (!active(r.id) || !movable.contains(r.id)) continue;
        StepInput in;
        in.tick = clock_;
        in.completed = std::move(inbox_[r.id]);
        inbox_[r.id].clear();
        in.new_obstacles = std::move(pending_obstacles_[r.id]);
        pending_obstacles_[r.id].clear();
        in.force_replan = force[r.id] || pending_replan_[r.id];
        pending_replan_[r.id] = false;
        if (peers.contains(r.id)) in.peers = peers.at(r.id);
        in.step_length = step_length;

        StepOutput out = scheduler_step(r, in, scheduler_);
        auto& m = trace_.robots[index_of(r.id)];
        for (const auto& e : out.events) {
            trace_.replans.emplace_back(r.id, e);
            if (e.switched)
                ++m.switching_replans;
            else
                ++m.non_switching_replans;
            std::ostringstream os;
            os << "cause=" << to_string(e.cause) << " switched=" << (e.switched ? 1 : 0)
               << " old=" << (e.old_target ? std::to_string(e.old_target->value) : "-")
               << " new=" << (e.new_target ? std::to_string(e.new_target->value) : "-");
            event(r.id, "replan", os.str());
        }
        if (r.schedule_infeasible && out.replanned) event(r.id, "schedule_infeasible");

        if (r.idle_reason == IdleReason::NoTasks) {
            retire(r, "no_tasks");
            continue;
        }
        if (r.idle_reason == IdleReason::Battery) {
            retire(r, "battery");
            continue;
        }
        if (r.coord.mode == CoordMode::Leader && out.no_valid_path) {
            std::map<RobotId, CoordState> states;
            for (RobotId id : shape_of_[r.id]) states[id] = robots_[index_of(id)].coord;
            apply_leader_outcome(states, r.id, LeaderOutcome::Surrender);
            for (const auto& [id, st] : states) robots_[index_of(id)].coord = st;
            ++m.coordination_events;
            event(r.id, "surrender");
            continue;
        }
        proposals[r.id] = std::move(out);
    }

    // 5. motion
    std::set<RobotId> moved;
    for (auto& j : joints_) {
        if (j.next >= j.moves.size()) continue;
        const JointMove& mv = j.moves[j.next];
        auto& r = robots_[index_of(mv.robot)];
        const double d = euclidean(r.position, mv.to);
        const Point2 dest = d <= step_length ? mv.to : r.position + (mv.to - r.position) * (step_length / d);
        bool by_robot = false;
        if (try_move(r, dest, by_robot)) {
            moved.insert(r.id);
            if (r.position == mv.to) ++j.next;
        } else {
            event(r.id, "joint_abort");
            j.next = j.moves.size();
        }
    }
    std::erase_if(joints_, [&](const JointExecution& j) {
        if (j.next < j.moves.size()) return false;
        event(-1, "joint_done");
        return true;
    });
    for (auto& [id, out] : proposals) {
        if (!out.next_position) continue;
        auto& r = robots_[index_of(id)];
        bool by_robot = false;
        if (try_move(r, *out.next_position, by_robot)) {
            r.cursor = out.next_cursor;
            moved.insert(id);
        } else if (by_robot && r.coord.mode == CoordMode::Leader) {
            std::map<RobotId, CoordState> states;
            for (RobotId sid : shape_of_[id]) states[sid] = robots_[index_of(sid)].coord;
            apply_leader_outcome(states, id, LeaderOutcome::Surrender);
            for (const auto& [sid, st] : states) robots_[index_of(sid)].coord = st;
            event(id, "surrender", "blocked");
        }
    }
    for (const auto& r : robots_) {
        if (!active(r.id)) continue;
        if (moved.contains(r.id) || r.coord.mode != CoordMode::Exited)
            ++trace_.robots[index_of(r.id)].locomotion_ticks;
    }

    // 6. arrivals, 7. battery
    process_arrivals();
    for (auto& r : robots_)
        if (active(r.id) && r.battery <= 0.0 && !r.trg.vertices.empty()) retire(r, "battery");

    // A leader with nobody left in its circle has exited and frees the token.
    const auto positions = active_positions();
    for (auto& r : robots_) {
        if (!active(r.id) || r.coord.mode != CoordMode::Leader) continue;
        if (collision_circle(positions, params_.r_coll, r.id).size() > 1) continue;
        std::map<RobotId, CoordState> states;
        for (RobotId id : shape_of_[r.id])
            if (active(id)) states[id] = robots_[index_of(id)].coord;
        apply_leader_outcome(states, r.id, LeaderOutcome::Exit);
        for (const auto& [id, st] : states) robots_[index_of(id)].coord = st;
        ++trace_.robots[index_of(r.id)].coordination_events;
        close_episode(r.id, false);
        event(r.id, "exit", "leader");
    }

    // 8. trace
    check_invariants();
    ++clock_;
    if (clock_ % params_.snapshot_every == 0)
        for (std::size_t i = 0; i < robots_.size(); ++i) {
            auto& traj = trace_.robots[i].trajectory;
            if (!(traj.back() == robots_[i].position)) traj.push_back(robots_[i].position);
        }

    const bool done =
        std::all_of(tasks_.begin(), tasks_.end(), [](const auto& kv) { return kv.second.visits_remaining == 0; });
    if (done) {
        finish(Outcome::AllTasksDone);
        return false;
    }
    const bool any_active = std::any_of(robots_.begin(), robots_.end(), [&](const RobotState& r) { return active(r.id); });
    if (!any_active) {
        bool battery = false;
        for (const auto& r : robots_) battery = battery || r.battery <= 0.0 || r.idle_reason == IdleReason::Battery;
        finish(battery ? Outcome::BatteryExhausted : Outcome::Timeout, "no active robots");
        return false;
    }
    return true;
}

const SimTrace& World::run() {
    while (step()) {
    }
    return trace_;
}

SimTrace run_world(const EnvironmentMap& truth, const std::vector<TaskSpec>& tasks, const std::vector<RobotSpec>& robots,
                   const SimParams& params, const SchedulerConfig& scheduler, std::uint64_t seed) {
    World w(truth, tasks, robots, params, scheduler, seed);
    return w.run();
}

}  // namespace topu
