#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "topu/geom2d.hpp"

using namespace topu;

namespace {

// Oracle: dense sampling of both the segment and the obstacle boundary.
double sampled_clearance(Point2 a, Point2 b, const Obstacle& o, int samples = 2000) {
    double best = std::numeric_limits<double>::infinity();
    const auto& v = o.vertices();
    for (int i = 0; i <= samples; ++i) {
        const Point2 p = a + (static_cast<double>(i) / samples) * (b - a);
        for (std::size_t e = 0; e < v.size(); ++e) {
            const Point2 c = v[e];
            const Point2 d = v[(e + 1) % v.size()];
            for (int k = 0; k <= 200; ++k) {
                best = std::min(best, euclidean(p, c + (k / 200.0) * (d - c)));
            }
        }
    }
    return best;
}

}  // namespace

TEST(Euclidean, Examples) {
    EXPECT_DOUBLE_EQ(euclidean({0, 0}, {3, 4}), 5.0);
    EXPECT_DOUBLE_EQ(euclidean({1, 1}, {1, 1}), 0.0);
    EXPECT_NEAR(euclidean({0, 0}, {1, 1}), 1.41421356237, 1e-10);
}

TEST(Euclidean, MetricAxiomsOnRandomTriples) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (int t = 0; t < 2000; ++t) {
        const Point2 p{u(rng), u(rng)}, q{u(rng), u(rng)}, r{u(rng), u(rng)};
        EXPECT_GE(euclidean(p, q), 0.0);
        EXPECT_DOUBLE_EQ(euclidean(p, q), euclidean(q, p));
        EXPECT_LE(euclidean(p, r), euclidean(p, q) + euclidean(q, r) + 1e-12);
    }
}

TEST(Obstacle, RejectsBadPolygons) {
    EXPECT_THROW(Obstacle({{0, 0}, {1, 0}}), std::invalid_argument);
    EXPECT_THROW(Obstacle({{0, 0}, {1, 0}, {2, 0}}), std::invalid_argument);
    // Concave "dart".
    EXPECT_THROW(Obstacle({{0, 0}, {2, 1}, {4, 0}, {2, 4}}), std::invalid_argument);
    // Clockwise input is accepted and reoriented.
    const Obstacle cw({{0, 0}, {0, 1}, {1, 1}, {1, 0}});
    EXPECT_GT(cw.area(), 0.0);
}

TEST(Obstacle, DiscContainsCircle) {
    const auto d = Obstacle::disc({5, 5}, 0.15);
    for (int k = 0; k < 360; ++k) {
        const double a = k * 3.14159265358979 / 180.0;
        EXPECT_TRUE(d.contains({5 + 0.15 * std::cos(a), 5 + 0.15 * std::sin(a)}));
    }
}

TEST(Obstacle, BoundingBox) {
    const Obstacle tri({{3, 3}, {6, 4}, {4, 7}});
    EXPECT_EQ(tri.bounding_box(), (Rect{3, 3, 6, 7}));
}

TEST(SegmentClearance, EqualsMinimumOverObstacles) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.5, 9.5);
    std::vector<Obstacle> obstacles;
    for (int k = 0; k < 8; ++k) {
        const double x = u(rng), y = u(rng);
        obstacles.push_back(Obstacle::disc({x, y}, 0.2 + 0.05 * k));
    }
    for (int t = 0; t < 500; ++t) {
        const Point2 a{u(rng), u(rng)}, b{u(rng), u(rng)};
        double want = kInfiniteClearance;
        for (const auto& o : obstacles) want = std::min(want, segment_obstacle_distance(a, b, o));
        EXPECT_EQ(segment_clearance(a, b, obstacles), want);
    }
}

TEST(SegmentClearance, FarSegmentMatchesSamplingOracle) {
    const auto box = Obstacle::rectangle(4, 4, 6, 6);
    PerceivedMap map(Rect{});
    map.add(0, box);
    // Segment along y = 2, nearest obstacle edge (y = 4) is 2 m away.
    const double c = segment_clearance({3, 2}, {7, 2}, map);
    EXPECT_NEAR(c, 2.0, 1e-12);
    EXPECT_NEAR(c, sampled_clearance({3, 2}, {7, 2}, box), 1e-3);
}

TEST(SegmentClearance, RandomSegmentsMatchSamplingOracle) {
    const Obstacle tri({{3, 3}, {6, 4}, {4, 7}});
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int t = 0; t < 20; ++t) {
        const Point2 a{u(rng), u(rng)}, b{u(rng), u(rng)};
        const double exact = segment_clearance(a, b, std::span<const Obstacle>(&tri, 1));
        if (exact == 0.0) continue;
        EXPECT_NEAR(exact, sampled_clearance(a, b, tri, 400), 2e-2);
    }
}

TEST(SegmentClearance, CrossingAndEmpty) {
    PerceivedMap map(Rect{});
    EXPECT_TRUE(std::isinf(segment_clearance({1, 1}, {9, 9}, map)));
    map.add(0, Obstacle::rectangle(4, 4, 6, 6));
    EXPECT_EQ(segment_clearance({1, 5}, {9, 5}, map), 0.0);
}

TEST(SegmentClearance, MonotoneInObstacles) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.5, 9.5);
    PerceivedMap map(Rect{});
    std::vector<std::pair<Point2, Point2>> segs;
    for (int i = 0; i < 50; ++i) segs.push_back({{u(rng), u(rng)}, {u(rng), u(rng)}});
    std::vector<double> prev(segs.size(), kInfiniteClearance);
    for (std::size_t k = 0; k < 6; ++k) {
        const double x = u(rng), y = u(rng);
        map.add(k, Obstacle::rectangle(x - 0.3, y - 0.3, x + 0.3, y + 0.3));
        for (std::size_t i = 0; i < segs.size(); ++i) {
            const double c = segment_clearance(segs[i].first, segs[i].second, map);
            EXPECT_LE(c, prev[i]);
            prev[i] = c;
        }
    }
}

TEST(FreeSpace, Examples) {
    PerceivedMap empty(Rect{});
    EXPECT_TRUE(point_in_free_space({5, 5}, empty));
    PerceivedMap map(Rect{});
    map.add(0, Obstacle::rectangle(4, 4, 6, 6));
    EXPECT_FALSE(point_in_free_space({5, 5}, map));
    // 1 cm outside the obstacle with 15 cm inflation.
    EXPECT_FALSE(point_in_free_space({6.01, 5}, map, 0.15));
    EXPECT_TRUE(point_in_free_space({6.20, 5}, map, 0.15));
    EXPECT_FALSE(point_in_free_space({11, 5}, empty));
}

TEST(FreeSpace, PerceivingMoreNeverFreesAPoint) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    EnvironmentMap truth;
    for (int k = 0; k < 5; ++k) {
        const double x = u(rng), y = u(rng);
        truth.obstacles.push_back(Obstacle::rectangle(x, y, x + 1.0, y + 0.5));
    }
    for (int t = 0; t < 500; ++t) {
        const Point2 p{u(rng), u(rng)};
        PerceivedMap map(truth.bounds);
        bool free_before = point_in_free_space(p, map);
        for (std::size_t k = 0; k < truth.obstacles.size(); ++k) {
            map.add(k, truth.obstacles[k]);
            const bool free_now = point_in_free_space(p, map);
            if (!free_before) EXPECT_FALSE(free_now);
            free_before = free_now;
        }
    }
}

TEST(PerceivedMap, AddIsIdempotent) {
    PerceivedMap map(Rect{});
    EXPECT_TRUE(map.add(3, Obstacle::rectangle(1, 1, 2, 2)));
    EXPECT_FALSE(map.add(3, Obstacle::rectangle(1, 1, 2, 2)));
    EXPECT_EQ(map.obstacles().size(), 1u);
}
