#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "topu/geom2d.hpp"

namespace topu {

using RobotId = int;

inline constexpr double kSurrenderPriority = std::numeric_limits<double>::infinity();
inline constexpr double kDefaultCollisionRadius = 1.0;
// Closest two robot centers may come; a small margin above touching.
inline constexpr double kMinSeparation = 2.0 * kRobotRadius + 1e-3;

enum class CoordMode { Waiting, Leader, Surrendered, Exited };

const char* to_string(CoordMode mode);

/// Robots within r_coll of robot i (boundary inclusive), i included, sorted.
std::vector<RobotId> collision_circle(const std::map<RobotId, Point2>& positions, double r_coll, RobotId i);

/// Connected component of the circle-overlap relation that contains i.
std::vector<RobotId> collision_shape(const std::map<RobotId, Point2>& positions, double r_coll, RobotId i);

/// Every shape, ordered by smallest member id.
std::vector<std::vector<RobotId>> collision_shapes(const std::map<RobotId, Point2>& positions, double r_coll);

/// Robot with the minimum finite priority; ties go to the lower id.
std::optional<RobotId> elect_winner(const std::map<RobotId, double>& priorities);

struct CoordState {
    CoordMode mode = CoordMode::Exited;
    double priority = 0.0;
    // Set when a leader of this robot's shape released the token.
    bool token_released = false;
};

/// Result of the election half of a round.
struct ElectionResult {
    std::optional<RobotId> leader;
    std::optional<RobotId> deposed;  // previous leader that moved L -> W
    bool joint_planning = false;     // every member surrendered
};

/// Election half of one round for a single shape (two or more members).
/// Newcomers stop and wait with priority = id, surrendered robots retry after
/// a token release, the lowest finite priority wins and any other leader
/// hands the token back.
ElectionResult elect_in_shape(std::map<RobotId, CoordState>& members);

enum class LeaderOutcome { Move, Surrender, Exit };

/// Applies the leader's outcome. Exit releases the token to the remaining
/// members; Surrender sets priority to infinity.
void apply_leader_outcome(std::map<RobotId, CoordState>& members, RobotId leader, LeaderOutcome outcome);

/// Every member back to Waiting with priority = id.
void reset_after_joint_plan(std::map<RobotId, CoordState>& members);

/// Robots that left every shape.
void mark_exited(CoordState& state);

struct JointPlanRequest {
    std::vector<RobotId> robots;
    std::vector<Point2> starts;
    std::vector<Point2> goals;
    std::vector<const PerceivedMap*> maps;  // one per robot
    Rect region;
    double cell = 0.25;
    double min_separation = kMinSeparation;
    double goal_tolerance = 0.2;
    // A robot farther than this from every other robot is out of the shape.
    double exit_radius = kDefaultCollisionRadius;
    double robot_radius = kRobotRadius;
    std::size_t max_expansions = 200000;
};

struct JointMove {
    RobotId robot;
    Point2 to;
};

/// One robot moves per step; positions of the others are fixed meanwhile.
struct JointPlan {
    std::vector<JointMove> moves;
    std::size_t expansions = 0;
};

/// Search over the product of per-robot grid lattices (anchored at each
/// start, 8-connected) for a move sequence that keeps every pair at least
/// min_separation apart and ends with each robot at its goal or beyond
/// exit_radius from all others (a lone robot must reach its goal). Throws JointPlanFailure when the reachable
/// space is exhausted or the expansion budget runs out.
JointPlan perform_joint_planning(const JointPlanRequest& request);

}  // namespace topu
