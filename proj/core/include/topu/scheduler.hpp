#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "topu/coordination.hpp"
#include "topu/geom2d.hpp"
#include "topu/hmm_avail.hpp"
#include "topu/mdp_policy.hpp"
#include "topu/prm_planner.hpp"
#include "topu/trg.hpp"

namespace topu {

enum class Strategy { Trg, Cfnu };

enum class ReplanCause { ObstacleDiscovered, TaskCompleteMsg, CoordinationForced, CloserTask };

enum class Activity { Traveling, Replanning, Coordinating, Idle };

enum class IdleReason { None, NoTasks, Battery, NoValidPath };

const char* to_string(Strategy s);
const char* to_string(ReplanCause c);
const char* to_string(IdleReason r);
Strategy strategy_from_string(const std::string& s);

struct ReplanEvent {
    std::uint64_t tick = 0;
    ReplanCause cause = ReplanCause::ObstacleDiscovered;
    bool switched = false;
    std::optional<TaskId> old_target;
    std::optional<TaskId> new_target;
    Point2 position;  // where the robot was when it replanned
};

struct SchedulerConfig {
    PlannerConfig planner;
    HmmParams hmm = HmmParams::defaults();
    MdpSettings mdp;
    double pll_gamma = 1.5;
    std::size_t hmm_window = 50;
    UnavailabilityMode unavailability = UnavailabilityMode::Normalize;
    double arrival_tolerance = 0.2;
    // An obstacle this close to the remaining path forces a replan.
    double corridor = 2.0 * kRobotRadius;
    // Ticks between retries while no task has a valid path.
    std::uint64_t retry_interval = 50;
};

struct RobotState {
    RobotId id = 0;
    Point2 position;
    double heading = 0.0;
    double battery = 1.0e6;
    Strategy strategy = Strategy::Trg;
    std::optional<TaskId> target;
    Path path;
    std::size_t cursor = 0;  // index of the next waypoint
    PerceivedMap perceived{Rect{}};
    Trg trg;
    std::map<DirectedEdge, EdgeBelief> beliefs;
    CoordState coord;
    Activity activity = Activity::Idle;
    IdleReason idle_reason = IdleReason::None;
    std::set<TaskId> unreachable;  // no valid path in the latest plan
    std::set<TaskId> abandoned;    // left for a closer task since the last arrival
    std::uint64_t last_attempt = 0;
    std::uint64_t planning_calls = 0;
    double planning_seconds = 0.0;  // wall clock, never part of a trace
    bool schedule_infeasible = false;

    RobotState() = default;
    RobotState(RobotId id, Point2 position, double heading, const std::map<TaskId, Point2>& tasks, const Rect& bounds,
               Strategy strategy, double battery);
};

struct PlanResult {
    std::optional<TaskId> target;
    std::optional<Path> path;
    bool switched = false;
};

/// Replans every TRG edge on the perceived map (plus `extra` obstacles such
/// as stopped peers), refreshes edge unavailability from the PLL history,
/// solves the MDP and adopts its recommendation. Tasks without a valid path
/// from CURR are never chosen.
PlanResult update_trg(RobotState& robot, const SchedulerConfig& config, std::span<const Obstacle> extra = {});

/// Closest open task by straight-line distance; ties go to the lower id.
/// Throws NoTasks.
TaskId cfnu_select(const RobotState& robot);

/// Baseline replan: closest reachable task, path from the same planner.
PlanResult cfnu_replan(RobotState& robot, const SchedulerConfig& config, std::span<const Obstacle> extra = {});

/// Dispatches on the robot's strategy.
PlanResult replan(RobotState& robot, const SchedulerConfig& config, std::span<const Obstacle> extra = {});

struct StepInput {
    std::uint64_t tick = 0;
    std::vector<TaskId> completed;           // TaskComplete deliveries
    std::vector<Obstacle> new_obstacles;     // perceived this tick
    bool force_replan = false;
    std::span<const Obstacle> peers;         // stopped robots, leaders only
    double step_length = 0.0;
};

struct StepOutput {
    std::optional<Point2> next_position;
    std::size_t next_cursor = 0;
    std::vector<ReplanEvent> events;
    bool no_valid_path = false;
    bool replanned = false;
};

/// One control tick: drop announced tasks, replan on a trigger, apply the
/// baseline's closer-task switch, check the battery for the next leg and
/// propose the next position along the path.
StepOutput scheduler_step(RobotState& robot, const StepInput& input, const SchedulerConfig& config);

/// Point reached after travelling `distance` along the path from `from`,
/// with the index of the next waypoint still ahead.
std::pair<Point2, std::size_t> advance_along(const Path& path, std::size_t cursor, Point2 from, double distance);

/// `first`, then repeatedly the cheapest remaining edge.
TaskSchedule greedy_schedule(const Trg& trg, TaskId first);

/// The robot reached its target: drop the task and clear the path.
void complete_target(RobotState& robot);

/// True when the obstacle comes within `corridor` of the remaining path.
bool obstacle_near_path(const RobotState& robot, const Obstacle& obstacle, double corridor);

}  // namespace topu
