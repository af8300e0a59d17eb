#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "topu/geom2d.hpp"

namespace topu {

struct TaskId {
    std::int64_t value = 0;
    friend auto operator<=>(const TaskId&, const TaskId&) = default;
};

/// A TRG vertex: either a task or the robot's current location (CURR).
class Vertex {
public:
    static constexpr Vertex curr() { return Vertex(-1); }
    static constexpr Vertex task(TaskId id) { return Vertex(id.value); }

    constexpr bool is_curr() const { return raw_ < 0; }
    constexpr TaskId id() const { return TaskId{raw_}; }

    friend auto operator<=>(const Vertex&, const Vertex&) = default;

private:
    explicit constexpr Vertex(std::int64_t raw) : raw_(raw) {}
    std::int64_t raw_;
};

/// Unordered vertex pair, normalized so that lo < hi.
struct EdgeKey {
    Vertex lo;
    Vertex hi;

    EdgeKey(Vertex a, Vertex b) : lo(a < b ? a : b), hi(a < b ? b : a) {}
    friend auto operator<=>(const EdgeKey&, const EdgeKey&) = default;
};

/// Ordered pair; unavailability is normalized per source vertex and is
/// therefore directional.
struct DirectedEdge {
    Vertex from;
    Vertex to;
    friend auto operator<=>(const DirectedEdge&, const DirectedEdge&) = default;
};

/// Task reachability graph held by one robot: open tasks plus CURR, fully
/// connected, with expected costs and edge unavailability probabilities.
struct Trg {
    std::map<TaskId, Point2> vertices;
    Point2 curr;
    std::map<EdgeKey, double> cost;
    std::map<DirectedEdge, double> unavail;
    std::uint64_t stamp = 0;

    bool has_task(TaskId id) const { return vertices.contains(id); }
    std::vector<Vertex> all_vertices() const;  // CURR first, then tasks by id
    Point2 location(Vertex v) const;

    /// Throws UnknownEdge.
    double edge_cost(Vertex a, Vertex b) const;
    double edge_unavail(Vertex from, Vertex to) const;
};

using TaskSchedule = std::vector<TaskId>;

/// Costs start at the Euclidean distance, every unavailability at 0.
Trg init_trg(const std::map<TaskId, Point2>& tasks, Point2 robot_pos);

/// Sum over consecutive legs (starting at CURR) of (1 - p) * c.
/// Throws std::invalid_argument for repeated or unknown tasks.
double expected_schedule_cost(const TaskSchedule& schedule, const Trg& trg);

/// expected_schedule_cost(schedule) <= battery.
bool battery_feasible(const TaskSchedule& schedule, const Trg& trg, double battery);

/// Removes the task and every incident entry. Throws UnknownTask.
Trg remove_vertex(const Trg& trg, TaskId id);

/// Replaces the cost and both directions of the unavailability of an edge.
/// Throws UnknownEdge, InvalidCost or OutOfRangeProbability; the input is
/// never modified.
Trg update_edge(const Trg& trg, EdgeKey key, double cost, double unavail);

/// Sets the unavailability of one direction only.
Trg set_unavailability(const Trg& trg, DirectedEdge edge, double unavail);

/// Moves CURR; incident costs are left for the next replan to refresh.
Trg move_curr(const Trg& trg, Point2 position);

}  // namespace topu

template <>
struct std::hash<topu::TaskId> {
    std::size_t operator()(const topu::TaskId& id) const noexcept { return std::hash<std::int64_t>{}(id.value); }
};
