#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace topu {

/// Half of the 30 cm x 30 cm robot footprint. Obstacles are inflated by this
/// radius so that planning happens for a point robot.
inline constexpr double kRobotRadius = 0.15;

/// Tolerance for geometric predicates, in meters.
inline constexpr double kGeomTolerance = 1e-9;

inline constexpr double kInfiniteClearance = std::numeric_limits<double>::infinity();

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
    friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
    friend Point2 operator*(Point2 a, double s) { return {s * a.x, s * a.y}; }
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }

/// Straight-line distance in meters.
inline double euclidean(Point2 p, Point2 q) { return norm(p - q); }

struct Rect {
    double min_x = 0.0;
    double min_y = 0.0;
    double max_x = 10.0;
    double max_y = 10.0;

    bool contains(Point2 p) const {
        return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
    }
    double width() const { return max_x - min_x; }
    double height() const { return max_y - min_y; }
    double diameter() const { return std::hypot(width(), height()); }

    friend bool operator==(const Rect&, const Rect&) = default;
};

/// Convex polygon obstacle. Vertices are stored counter-clockwise.
class Obstacle {
public:
    /// Throws std::invalid_argument unless the vertices form a convex polygon
    /// with at least three vertices and positive area. Clockwise input is
    /// reversed.
    explicit Obstacle(std::vector<Point2> vertices);

    static Obstacle rectangle(double min_x, double min_y, double max_x, double max_y);

    /// Regular polygon that circumscribes the disc (center, radius).
    static Obstacle disc(Point2 center, double radius, int sides = 12);

    const std::vector<Point2>& vertices() const { return vertices_; }
    const Rect& bounding_box() const { return box_; }
    double area() const;
    bool contains(Point2 p) const;

    friend bool operator==(const Obstacle& a, const Obstacle& b) { return a.vertices_ == b.vertices_; }

private:
    std::vector<Point2> vertices_;
    Rect box_;
};

struct EnvironmentMap {
    Rect bounds;
    std::vector<Obstacle> obstacles;
};

/// The obstacles one robot has sensed so far. Grows monotonically; every entry
/// is a copy of a ground-truth obstacle identified by its index in the
/// environment.
class PerceivedMap {
public:
    PerceivedMap() = default;
    explicit PerceivedMap(Rect bounds) : bounds_(bounds) {}

    const Rect& bounds() const { return bounds_; }
    std::span<const Obstacle> obstacles() const { return obstacles_; }

    /// Adds the obstacle unless `source_id` is already known. Returns true when
    /// something new was added.
    bool add(std::size_t source_id, const Obstacle& obstacle);
    bool knows(std::size_t source_id) const;
    const std::vector<std::size_t>& source_ids() const { return source_ids_; }

    /// Copy with extra temporary obstacles appended (e.g. stopped peers).
    PerceivedMap with_extra(std::span<const Obstacle> extra) const;

private:
    Rect bounds_;
    std::vector<Obstacle> obstacles_;
    std::vector<std::size_t> source_ids_;
};

double point_segment_distance(Point2 p, Point2 a, Point2 b);
bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d);
double segment_segment_distance(Point2 a, Point2 b, Point2 c, Point2 d);

/// Distance from p to the obstacle; zero when p is inside.
double distance_to_obstacle(Point2 p, const Obstacle& obstacle);

/// Distance from segment ab to the obstacle; zero when they intersect.
double segment_obstacle_distance(Point2 a, Point2 b, const Obstacle& obstacle);

/// Minimum distance from any point of ab to any obstacle. Zero when the
/// segment touches an obstacle, +infinity when there are no obstacles.
double segment_clearance(Point2 a, Point2 b, std::span<const Obstacle> obstacles);
double segment_clearance(Point2 a, Point2 b, const PerceivedMap& map);

/// True iff p is inside the bounds and farther than `inflation` from every
/// obstacle.
bool point_in_free_space(Point2 p, const Rect& bounds, std::span<const Obstacle> obstacles,
                         double inflation = kRobotRadius);
bool point_in_free_space(Point2 p, const EnvironmentMap& map, double inflation = kRobotRadius);
bool point_in_free_space(Point2 p, const PerceivedMap& map, double inflation = kRobotRadius);

}  // namespace topu
