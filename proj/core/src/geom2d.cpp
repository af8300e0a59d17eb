#include "topu/geom2d.hpp"

#include <algorithm>
#include <numbers>
#include <stdexcept>

namespace topu {

namespace {

double signed_area(const std::vector<Point2>& v) {
    double twice = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        twice += cross(v[i], v[(i + 1) % v.size()]);
    }
    return 0.5 * twice;
}

int orientation(Point2 a, Point2 b, Point2 c) {
    const double v = cross(b - a, c - a);
    if (v > kGeomTolerance) return 1;
    if (v < -kGeomTolerance) return -1;
    return 0;
}

bool on_segment(Point2 a, Point2 b, Point2 p) {
    return std::min(a.x, b.x) - kGeomTolerance <= p.x && p.x <= std::max(a.x, b.x) + kGeomTolerance &&
           std::min(a.y, b.y) - kGeomTolerance <= p.y && p.y <= std::max(a.y, b.y) + kGeomTolerance;
}

}  // namespace

Obstacle::Obstacle(std::vector<Point2> vertices) : vertices_(std::move(vertices)) {
    if (vertices_.size() < 3) {
        throw std::invalid_argument("obstacle needs at least 3 vertices");
    }
    for (const auto& p : vertices_) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw std::invalid_argument("obstacle vertex is not finite");
        }
    }
    if (signed_area(vertices_) < 0.0) {
        std::reverse(vertices_.begin(), vertices_.end());
    }
    if (signed_area(vertices_) <= kGeomTolerance) {
        throw std::invalid_argument("obstacle has no area");
    }
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (orientation(vertices_[i], vertices_[(i + 1) % n], vertices_[(i + 2) % n]) < 0) {
            throw std::invalid_argument("obstacle is not convex");
        }
    }
    box_ = Rect{vertices_[0].x, vertices_[0].y, vertices_[0].x, vertices_[0].y};
    for (const auto& p : vertices_) {
        box_.min_x = std::min(box_.min_x, p.x);
        box_.min_y = std::min(box_.min_y, p.y);
        box_.max_x = std::max(box_.max_x, p.x);
        box_.max_y = std::max(box_.max_y, p.y);
    }
}

Obstacle Obstacle::rectangle(double min_x, double min_y, double max_x, double max_y) {
    return Obstacle({{min_x, min_y}, {max_x, min_y}, {max_x, max_y}, {min_x, max_y}});
}

Obstacle Obstacle::disc(Point2 center, double radius, int sides) {
    const double outer = radius / std::cos(std::numbers::pi / sides);
    std::vector<Point2> v;
    v.reserve(static_cast<std::size_t>(sides));
    for (int k = 0; k < sides; ++k) {
        const double a = 2.0 * std::numbers::pi * k / sides;
        v.push_back({center.x + outer * std::cos(a), center.y + outer * std::sin(a)});
    }
    return Obstacle(std::move(v));
}

double Obstacle::area() const { return signed_area(vertices_); }

bool Obstacle::contains(Point2 p) const {
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (cross(vertices_[(i + 1) % n] - vertices_[i], p - vertices_[i]) < -kGeomTolerance) {
            return false;
        }
    }
    return true;
}

bool PerceivedMap::add(std::size_t source_id, const Obstacle& obstacle) {
    if (knows(source_id)) return false;
    source_ids_.push_back(source_id);
    obstacles_.push_back(obstacle);
    return true;
}

bool PerceivedMap::knows(std::size_t source_id) const {
    return std::find(source_ids_.begin(), source_ids_.end(), source_id) != source_ids_.end();
}

PerceivedMap PerceivedMap::with_extra(std::span<const Obstacle> extra) const {
    PerceivedMap copy = *this;
    copy.obstacles_.insert(copy.obstacles_.end(), extra.begin(), extra.end());
    // Temporary obstacles carry no source id; they are never merged back.
    return copy;
}

double point_segment_distance(Point2 p, Point2 a, Point2 b) {
    const Point2 ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 <= 0.0) return euclidean(p, a);
    const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
    return euclidean(p, a + t * ab);
}

bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d) {
    const int o1 = orientation(a, b, c);
    const int o2 = orientation(a, b, d);
    const int o3 = orientation(c, d, a);
    const int o4 = orientation(c, d, b);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(a, b, c)) return true;
    if (o2 == 0 && on_segment(a, b, d)) return true;
    if (o3 == 0 && on_segment(c, d, a)) return true;
    if (o4 == 0 && on_segment(c, d, b)) return true;
    return false;
}

double segment_segment_distance(Point2 a, Point2 b, Point2 c, Point2 d) {
    if (segments_intersect(a, b, c, d)) return 0.0;
    return std::min({point_segment_distance(a, c, d), point_segment_distance(b, c, d),
                     point_segment_distance(c, a, b), point_segment_distance(d, a, b)});
}

double distance_to_obstacle(Point2 p, const Obstacle& obstacle) {
    if (obstacle.contains(p)) return 0.0;
    const auto& v = obstacle.vertices();
    double best = kInfiniteClearance;
    for (std::size_t i = 0; i < v.size(); ++i) {
        best = std::min(best, point_segment_distance(p, v[i], v[(i + 1) % v.size()]));
    }
    return best;
}

double segment_obstacle_distance(Point2 a, Point2 b, const Obstacle& obstacle) {
    if (obstacle.contains(a) || obstacle.contains(b)) return 0.0;
    const auto& v = obstacle.vertices();
    double best = kInfiniteClearance;
    for (std::size_t i = 0; i < v.size(); ++i) {
        best = std::min(best, segment_segment_distance(a, b, v[i], v[(i + 1) % v.size()]));
        if (best == 0.0) break;
    }
    return best;
}

double segment_clearance(Point2 a, Point2 b, std::span<const Obstacle> obstacles) {
    const Rect seg{std::min(a.x, b.x), std::min(a.y, b.y), std::max(a.x, b.x), std::max(a.y, b.y)};
    double best = kInfiniteClearance;
    for (const auto& o : obstacles) {
        // The gap between bounding boxes is a lower bound on the distance.
        const Rect& box = o.bounding_box();
        const double gx = std::max({0.0, box.min_x - seg.max_x, seg.min_x - box.max_x});
        const double gy = std::max({0.0, box.min_y - seg.max_y, seg.min_y - box.max_y});
        if (std::hypot(gx, gy) >= best) continue;
        best = std::min(best, segment_obstacle_distance(a, b, o));
        if (best == 0.0) break;
    }
    return best;
}

double segment_clearance(Point2 a, Point2 b, const PerceivedMap& map) {
    return segment_clearance(a, b, map.obstacles());
}

bool point_in_free_space(Point2 p, const Rect& bounds, std::span<const Obstacle> obstacles,
                         double inflation) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !bounds.contains(p)) return false;
    for (const auto& o : obstacles) {
        if (distance_to_obstacle(p, o) <= inflation) return false;
    }
    return true;
}

bool point_in_free_space(Point2 p, const EnvironmentMap& map, double inflation) {
    return point_in_free_space(p, map.bounds, map.obstacles, inflation);
}

bool point_in_free_space(Point2 p, const PerceivedMap& map, double inflation) {
    return point_in_free_space(p, map.bounds(), map.obstacles(), inflation);
}

}  // namespace topu
