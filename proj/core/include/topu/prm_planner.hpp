#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "topu/geom2d.hpp"

namespace topu {

enum class FalloffModel { Exponential, Linear };

struct PlannerConfig {
    int sample_count = 300;
    double connection_radius = 2.0;
    // Cost of a segment that certainly collides; must dwarf the environment diameter.
    double penalty = 1.0e4;
    double clearance_falloff = 0.3;
    FalloffModel falloff = FalloffModel::Exponential;
    double robot_radius = kRobotRadius;
    std::uint64_t reuse_seed = 0;
};

/// Roadmap edge costs are whole multiples of this, so path sums below 2^23
/// are exact and shortest-path costs do not depend on summation order.
inline constexpr double kCostQuantum = 0x1p-30;

struct RoadmapEdge {
    std::size_t a = 0;
    std::size_t b = 0;
    double length = 0.0;
    double p_coll = 0.0;
    double cost = 0.0;
};

/// Undirected sampled graph. The first `mandatory_count` nodes are the
/// mandatory points in the order they were given.
struct Roadmap {
    std::vector<Point2> nodes;
    std::vector<RoadmapEdge> edges;
    std::vector<std::vector<std::size_t>> adjacency;  // node -> edge indices
    std::size_t mandatory_count = 0;

    std::optional<std::size_t> find_node(Point2 p) const;
    std::size_t other_end(std::size_t edge, std::size_t node) const {
        return edges[edge].a == node ? edges[edge].b : edges[edge].a;
    }
};

struct Path {
    std::vector<Point2> waypoints;
    std::vector<double> segment_costs;
    double total_cost = 0.0;

    bool empty() const { return waypoints.empty(); }
    Point2 start() const { return waypoints.front(); }
    Point2 goal() const { return waypoints.back(); }
};

/// Probability that the robot collides while driving ab. 1 when the segment
/// comes within the robot radius of a perceived obstacle, otherwise a falloff
/// in the clearance (exp(-clearance / falloff) by default).
double collision_probability(Point2 a, Point2 b, const PerceivedMap& map, const PlannerConfig& config);
double collision_probability_from_clearance(double clearance, const PlannerConfig& config);

/// p_coll * penalty + (1 - p_coll) * |ab|.
double segment_cost(Point2 a, Point2 b, double p_coll, const PlannerConfig& config);

/// Samples `sample_count` free points with the config seed and connects every
/// pair closer than the connection radius. Segments that cross an obstacle
/// are not added; segments that only graze the inflation band are kept with
/// p_coll = 1. Throws MandatoryPointBlocked if a mandatory point is not free.
Roadmap build_roadmap(const PerceivedMap& map, std::span<const Point2> mandatory,
                      const PlannerConfig& config);

/// Single-source search result over a roadmap.
struct ShortestPathTree {
    std::size_t source = 0;
    std::vector<double> cost;  // +inf when unreachable
    std::vector<std::size_t> hops;
    std::vector<std::size_t> predecessor;  // npos for the source and unreachable nodes

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    bool reachable(std::size_t node) const;
    /// Throws NoPath if unreachable.
    Path path_to(const Roadmap& roadmap, std::size_t node) const;
};

/// Dijkstra; ties go to fewer hops, then the lexicographically smaller node
/// sequence.
ShortestPathTree shortest_path_tree(const Roadmap& roadmap, std::size_t source);

/// Minimum-cost path between two roadmap nodes. Throws NoPath when they are
/// in different components and std::invalid_argument if either point is not
/// a node.
Path shortest_path(const Roadmap& roadmap, Point2 start, Point2 goal);
Path shortest_path(const Roadmap& roadmap, std::size_t start, std::size_t goal);

/// Drops intermediate waypoints when the direct segment is no more expensive
/// than the run of segments it replaces. The result's waypoints are a
/// subsequence of the input's and its total cost is never higher.
Path smooth_path(const Path& path, const PerceivedMap& map, const PlannerConfig& config);

}  // namespace topu
