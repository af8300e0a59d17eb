#pragma once

#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "topu/coordination.hpp"
#include "topu/geom2d.hpp"
#include "topu/scheduler.hpp"

namespace topu {

struct SimParams {
    double tick_duration = 0.1;
    double robot_speed = 0.3;
    double sensor_radius = 5.0;
    double sensor_fov = 1.5 * std::numbers::pi;
    double msg_drop_prob = 0.02;
    double r_coll = kDefaultCollisionRadius;
    double arrival_tolerance = 0.2;
    double battery_initial = 1.0e6;
    std::uint64_t max_ticks = 20000;
    std::size_t joint_max_expansions = 200000;
    double joint_cell = 0.25;
    // Livelock bound: ticks per shape member.
    std::uint64_t livelock_ticks_per_member = 200;
    // Trajectory samples are kept every this many ticks.
    std::uint64_t snapshot_every = 5;

    void validate() const;  // throws ValidationError
};

struct TaskSpec {
    TaskId id;
    Point2 location;
    int visits = 1;
};

struct RobotSpec {
    RobotId id = 0;
    Point2 position;
    double heading = 0.0;
    Strategy strategy = Strategy::Trg;
};

enum class Outcome { Running, AllTasksDone, Timeout, JointPlanFailure, BatteryExhausted };
const char* to_string(Outcome o);

struct TraceEvent {
    std::uint64_t tick = 0;
    RobotId robot = -1;  // -1 for world events
    std::string kind;
    std::string detail;
};

struct RobotMetrics {
    RobotId id = 0;
    double distance = 0.0;
    std::uint64_t switching_replans = 0;
    std::uint64_t non_switching_replans = 0;
    std::uint64_t planning_calls = 0;
    double planning_seconds = 0.0;  // wall clock, excluded from canonical output
    std::uint64_t locomotion_ticks = 0;
    std::uint64_t coordination_events = 0;
    std::uint64_t visits = 0;
    std::vector<Point2> trajectory;
};

struct InvariantCounters {
    std::uint64_t safety_violations = 0;      // centers closer than 2 * robot radius
    std::uint64_t obstacle_violations = 0;    // center inside inflated ground truth
    std::uint64_t partition_violations = 0;   // W, L, S do not partition a shape
    std::uint64_t leaderless_rounds = 0;      // waiting robots and no leader next round
    std::uint64_t surrendered_without_joint = 0;  // all surrendered, joint planning not run
    std::uint64_t livelock_violations = 0;    // shape episode over the tick bound
    std::uint64_t lowest_id_deposed = 0;      // lowest non-surrendered member went L -> W
    std::uint64_t joint_plans = 0;
    std::uint64_t shape_episodes = 0;
    std::uint64_t longest_episode = 0;        // ticks
    double worst_episode_ratio = 0.0;         // ticks / (bound * size)
    bool blocked_at_timeout = false;          // some robot was stopped in a shape at timeout
};

struct SimTrace {
    std::uint64_t seed = 0;
    Outcome outcome = Outcome::Running;
    std::uint64_t completion_tick = 0;
    double tick_duration = 0.1;
    std::vector<RobotMetrics> robots;
    std::vector<std::pair<RobotId, ReplanEvent>> replans;
    std::vector<TraceEvent> events;
    InvariantCounters invariants;
    std::string failure;

    std::uint64_t total_switching() const;
    std::uint64_t total_non_switching() const;
};

struct WorldTask {
    Point2 location;
    int visits_remaining = 1;
    std::set<RobotId> visited_by;
};

struct Broadcast {
    RobotId sender = 0;
    TaskId task;
};

class World {
public:
    World(EnvironmentMap truth, const std::vector<TaskSpec>& tasks, const std::vector<RobotSpec>& robots,
          SimParams params, SchedulerConfig scheduler, std::uint64_t seed);

    /// Ground-truth obstacles newly seen by the robot this call.
    std::vector<Obstacle> sense(RobotState& robot);

    /// Moves pending TaskComplete broadcasts into peers' inboxes, dropping each
    /// delivery independently.
    void deliver_messages();

    /// Advances one tick. Returns false once the outcome is terminal.
    bool step();

    /// Steps until a terminal outcome.
    const SimTrace& run();

    const SimTrace& trace() const { return trace_; }
    Outcome outcome() const { return trace_.outcome; }
    std::uint64_t clock() const { return clock_; }
    const std::vector<RobotState>& robots() const { return robots_; }
    std::vector<RobotState>& robots() { return robots_; }
    const std::map<TaskId, WorldTask>& tasks() const { return tasks_; }
    const EnvironmentMap& truth() const { return truth_; }
    const SimParams& params() const { return params_; }
    bool active(RobotId id) const;
    const std::vector<TaskId>& inbox(RobotId id) const { return inbox_.at(id); }
    void broadcast(RobotId sender, TaskId task) { bus_.push_back({sender, task}); }

private:
    struct JointExecution {
        std::vector<RobotId> members;
        std::vector<JointMove> moves;
        std::size_t next = 0;
    };
    struct Episode {
        std::uint64_t start = 0;
        std::size_t max_size = 0;
    };

    std::size_t index_of(RobotId id) const;
    std::map<RobotId, Point2> active_positions() const;
    void coordinate(std::map<RobotId, bool>& force, std::map<RobotId, std::vector<Obstacle>>& peers,
                    std::set<RobotId>& movable);
    void run_joint_planning(const std::vector<RobotId>& members);
    bool try_move(RobotState& robot, Point2 to, bool& blocked_by_robot);
    void process_arrivals();
    void retire(RobotState& robot, const std::string& reason);
    void check_invariants();
    void finish(Outcome outcome, const std::string& why = "");
    void event(RobotId robot, std::string kind, std::string detail = "");
    void close_episode(RobotId id, bool success);

    EnvironmentMap truth_;
    SimParams params_;
    SchedulerConfig scheduler_;
    std::mt19937_64 rng_;
    std::uint64_t clock_ = 0;
    std::map<TaskId, WorldTask> tasks_;
    std::vector<RobotState> robots_;
    std::map<RobotId, bool> retired_;
    std::map<RobotId, std::vector<TaskId>> inbox_;
    std::map<RobotId, std::vector<Obstacle>> pending_obstacles_;
    std::map<RobotId, bool> pending_replan_;
    std::map<RobotId, std::vector<RobotId>> leader_members_;
    std::map<RobotId, std::vector<RobotId>> shape_of_;
    std::map<RobotId, Episode> episodes_;
    std::vector<Broadcast> bus_;
    std::vector<JointExecution> joints_;
    SimTrace trace_;
};

/// Builds a world and runs it to completion.
SimTrace run_world(const EnvironmentMap& truth, const std::vector<TaskSpec>& tasks,
                   const std::vector<RobotSpec>& robots, const SimParams& params,
                   const SchedulerConfig& scheduler, std::uint64_t seed);

/// True when some point of the segment lies within `radius` of `at` and
/// inside the field of view centred on `heading`.
bool segment_visible(Point2 at, double heading, double radius, double fov, Point2 a, Point2 b);

}  // namespace topu
