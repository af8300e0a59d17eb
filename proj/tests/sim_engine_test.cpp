#include <gtest/gtest.h>

#include <cmath>

#include "topu/errors.hpp"
#include "topu/sim_engine.hpp"

using namespace topu;

namespace {

EnvironmentMap room(std::vector<Obstacle> obstacles = {}) { return {Rect{0, 0, 10, 10}, std::move(obstacles)}; }

SchedulerConfig scheduler_config() {
    SchedulerConfig c;
    c.planner.clearance_falloff = 0.05;
    c.planner.sample_count = 200;
    return c;
}

SimParams params(std::uint64_t max_ticks = 20000) {
    SimParams p;
    p.max_ticks = max_ticks;
    return p;
}

void expect_clean(const InvariantCounters& inv) {
    EXPECT_EQ(inv.safety_violations, 0u);
    EXPECT_EQ(inv.obstacle_violations, 0u);
    EXPECT_EQ(inv.partition_violations, 0u);
    EXPECT_EQ(inv.leaderless_rounds, 0u);
    EXPECT_EQ(inv.surrendered_without_joint, 0u);
    EXPECT_EQ(inv.livelock_violations, 0u);
    EXPECT_EQ(inv.lowest_id_deposed, 0u);
}

}  // namespace

TEST(SegmentVisible, RangeAndBlindWedge) {
    const double fov = 1.5 * std::numbers::pi;
    EXPECT_TRUE(segment_visible({0, 0}, 0.0, 5.0, fov, {2, -1}, {2, 1}));
    EXPECT_FALSE(segment_visible({0, 0}, 0.0, 5.0, fov, {6, -1}, {6, 1}));
    EXPECT_FALSE(segment_visible({0, 0}, 0.0, 5.0, fov, {-2, -0.1}, {-2, 0.1}));
    // Beside the robot is inside the field of view.
    EXPECT_TRUE(segment_visible({0, 0}, 0.0, 5.0, fov, {-0.5, 2}, {0.5, 2}));
    // A segment crossing the disc with both ends outside it is still seen.
    EXPECT_TRUE(segment_visible({0, 0}, 0.0, 5.0, fov, {3, -9}, {3, 9}));
    // A long segment behind the robot that reaches out of the wedge is seen.
    EXPECT_TRUE(segment_visible({0, 0}, 0.0, 5.0, fov, {-2, -3}, {-2, 3}));
    EXPECT_TRUE(segment_visible({0, 0}, 0.0, 5.0, 2.0 * std::numbers::pi, {-2, -0.1}, {-2, 0.1}));
}

TEST(SegmentVisible, NarrowFieldOfView) {
    const double fov = 0.5 * std::numbers::pi;
    EXPECT_TRUE(segment_visible({0, 0}, 0.0, 5.0, fov, {2, -0.5}, {2, 0.5}));
    EXPECT_FALSE(segment_visible({0, 0}, 0.0, 5.0, fov, {-0.5, 2}, {0.5, 2}));
    // Crosses the cone with both ends outside it.
    EXPECT_TRUE(segment_visible({0, 0}, 0.0, 5.0, fov, {2, -3}, {2, 3}));
}

TEST(SimParams, RejectsBadValues) {
    SimParams p;
    p.msg_drop_prob = 1.5;
    EXPECT_THROW(p.validate(), ValidationError);
    p = SimParams{};
    p.robot_speed = 0.0;
    EXPECT_THROW(p.validate(), ValidationError);
    p = SimParams{};
    p.max_ticks = 0;
    EXPECT_THROW(p.validate(), ValidationError);
    EXPECT_NO_THROW(SimParams{}.validate());
}

TEST(World, RejectsDuplicateIds) {
    EXPECT_THROW(World(room(), {{TaskId{1}, {2, 2}}, {TaskId{1}, {3, 3}}}, {{1, {1, 1}}}, params(), scheduler_config(), 1),
                 ValidationError);
    EXPECT_THROW(World(room(), {{TaskId{1}, {2, 2}}}, {{1, {1, 1}}, {1, {4, 4}}}, params(), scheduler_config(), 1),
                 ValidationError);
}

TEST(World, NoTasksFinishesImmediately) {
    auto trace = run_world(room(), {}, {{1, {1, 1}}}, params(), scheduler_config(), 1);
    EXPECT_EQ(trace.outcome, Outcome::AllTasksDone);
    EXPECT_EQ(trace.completion_tick, 0u);
}

TEST(World, SingleTaskOneMeterAway) {
    // 0.03 m per tick; arrival within 0.2 m needs 0.8 m of travel.
    auto trace = run_world(room(), {{TaskId{1}, {2, 1}}}, {{1, {1, 1}}}, params(), scheduler_config(), 1);
    EXPECT_EQ(trace.outcome, Outcome::AllTasksDone);
    EXPECT_EQ(trace.completion_tick, 27u);
    EXPECT_NEAR(trace.robots[0].distance, 0.81, 1e-9);
    EXPECT_EQ(trace.robots[0].visits, 1u);
    EXPECT_EQ(trace.total_switching() + trace.total_non_switching(), 0u);
}

TEST(World, TimeoutWhenTicksRunOut) {
    auto trace = run_world(room(), {{TaskId{1}, {9, 9}}}, {{1, {1, 1}}}, params(10), scheduler_config(), 1);
    EXPECT_EQ(trace.outcome, Outcome::Timeout);
    EXPECT_EQ(trace.completion_tick, 10u);
    EXPECT_FALSE(trace.invariants.blocked_at_timeout);
}

TEST(World, BatteryRunsOut) {
    auto p = params();
    p.battery_initial = 0.5;
    auto trace = run_world(room(), {{TaskId{1}, {9, 1}}}, {{1, {1, 1}}}, p, scheduler_config(), 1);
    EXPECT_EQ(trace.outcome, Outcome::BatteryExhausted);
    EXPECT_NEAR(trace.robots[0].distance, 0.5, 1e-9);
}

TEST(World, SensingRespectsRangeAndIsIdempotent) {
    World w(room({Obstacle::rectangle(7.5, 4, 8, 6), Obstacle::rectangle(3, 4.5, 3.5, 5.5)}), {{TaskId{1}, {9, 9}}},
            {{1, {1, 5}, 0.0}}, params(), scheduler_config(), 1);
    auto& r = w.robots()[0];
    auto seen = w.sense(r);
    ASSERT_EQ(seen.size(), 1u);
    EXPECT_EQ(seen[0], w.truth().obstacles[1]);
    EXPECT_TRUE(w.sense(r).empty());
    EXPECT_EQ(r.perceived.obstacles().size(), 1u);
}

TEST(World, ObstacleBehindIsNotSeen) {
    World w(room({Obstacle::rectangle(2.8, 4.9, 3.0, 5.1)}), {{TaskId{1}, {9, 9}}}, {{1, {5, 5}, 0.0}}, params(),
            scheduler_config(), 1);
    EXPECT_TRUE(w.sense(w.robots()[0]).empty());
    w.robots()[0].heading = std::numbers::pi;
    EXPECT_EQ(w.sense(w.robots()[0]).size(), 1u);
}

TEST(World, MessageDropExtremes) {
    const std::vector<RobotSpec> robots{{1, {1, 1}}, {2, {5, 5}}, {3, {9, 9}}};
    auto p = params();
    p.msg_drop_prob = 0.0;
    World sure(room(), {{TaskId{1}, {1, 9}}}, robots, p, scheduler_config(), 1);
    sure.broadcast(1, TaskId{1});
    sure.deliver_messages();
    EXPECT_TRUE(sure.inbox(1).empty());
    EXPECT_EQ(sure.inbox(2).size(), 1u);
    EXPECT_EQ(sure.inbox(3).size(), 1u);

    p.msg_drop_prob = 1.0;
    World lost(room(), {{TaskId{1}, {1, 9}}}, robots, p, scheduler_config(), 1);
    lost.broadcast(1, TaskId{1});
    lost.deliver_messages();
    EXPECT_TRUE(lost.inbox(2).empty());
    EXPECT_TRUE(lost.inbox(3).empty());
}

TEST(World, DropRateMatchesProbability) {
    std::vector<RobotSpec> robots;
    for (int i = 0; i < 11; ++i) robots.push_back({i, {0.5 + 0.8 * i, 0.5}});
    auto p = params();
    p.msg_drop_prob = 0.3;
    World w(room(), {{TaskId{1}, {5, 9}}}, robots, p, scheduler_config(), 7);
    for (int k = 0; k < 400; ++k) w.broadcast(0, TaskId{1});
    w.deliver_messages();
    std::size_t delivered = 0;
    for (int i = 1; i < 11; ++i) delivered += w.inbox(i).size();
    const double rate = 1.0 - static_cast<double>(delivered) / 4000.0;
    EXPECT_NEAR(rate, 0.3, 0.03);
}

TEST(World, DistanceIsSumOfDisplacements) {
    World w(room({Obstacle::rectangle(4.9, 0, 5.1, 7)}), {{TaskId{1}, {8, 2}}, {TaskId{2}, {2, 8}}},
            {{1, {2, 2}}}, params(), scheduler_config(), 3);
    double sum = 0.0;
    Point2 last = w.robots()[0].position;
    bool running = true;
    while (running) {
        running = w.step();
        const Point2 now = w.robots()[0].position;
        sum += euclidean(last, now);
        last = now;
    }
    EXPECT_EQ(w.outcome(), Outcome::AllTasksDone);
    EXPECT_NEAR(w.trace().robots[0].distance, sum, 1e-9);
}

TEST(World, DeterministicForFixedSeed) {
    const auto truth = room({Obstacle::rectangle(4.9, 0, 5.1, 7), Obstacle::rectangle(2, 5, 3, 6)});
    const std::vector<TaskSpec> tasks{{TaskId{1}, {8, 2}}, {TaskId{2}, {2, 8}}, {TaskId{3}, {8, 8}}, {TaskId{4}, {6, 5}}};
    const std::vector<RobotSpec> robots{{1, {1, 1}}, {2, {1, 3}}};
    auto a = run_world(truth, tasks, robots, params(), scheduler_config(), 11);
    auto b = run_world(truth, tasks, robots, params(), scheduler_config(), 11);
    EXPECT_EQ(a.outcome, b.outcome);
    EXPECT_EQ(a.completion_tick, b.completion_tick);
    ASSERT_EQ(a.events.size(), b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        EXPECT_EQ(a.events[i].kind, b.events[i].kind);
        EXPECT_EQ(a.events[i].detail, b.events[i].detail);
    }
    for (std::size_t i = 0; i < a.robots.size(); ++i) EXPECT_EQ(a.robots[i].distance, b.robots[i].distance);
}

TEST(World, TaskNeedingTwoVisits) {
    auto trace = run_world(room(), {{TaskId{1}, {5, 5}, 2}}, {{1, {1, 1}}, {2, {9, 1}}}, params(), scheduler_config(), 5);
    EXPECT_EQ(trace.outcome, Outcome::AllTasksDone);
    EXPECT_EQ(trace.robots[0].visits, 1u);
    EXPECT_EQ(trace.robots[1].visits, 1u);
    expect_clean(trace.invariants);
}

TEST(World, WallScenarioBothStrategies) {
    const auto truth = room({Obstacle::rectangle(4.9, 0, 5.1, 7)});
    const std::vector<TaskSpec> tasks{{TaskId{1}, {8, 2}}, {TaskId{2}, {2, 8}}, {TaskId{3}, {8, 8}},
                                      {TaskId{4}, {3, 2}}, {TaskId{5}, {7, 5}}, {TaskId{6}, {2, 5}}};
    for (Strategy s : {Strategy::Trg, Strategy::Cfnu}) {
        const std::vector<RobotSpec> robots{{1, {1, 1}, 0.0, s}, {2, {1, 9}, 0.0, s}};
        auto trace = run_world(truth, tasks, robots, params(), scheduler_config(), 2);
        EXPECT_EQ(trace.outcome, Outcome::AllTasksDone) << to_string(s);
        expect_clean(trace.invariants);
        std::uint64_t visits = 0;
        for (const auto& r : trace.robots) visits += r.visits;
        EXPECT_EQ(visits, tasks.size());
    }
}

TEST(World, HeadOnRobotsStaySeparated) {
    const std::vector<RobotSpec> robots{{1, {2, 5}, 0.0}, {2, {8, 5}, std::numbers::pi}};
    auto trace = run_world(room(), {{TaskId{1}, {8.5, 5}, 2}, {TaskId{2}, {1.5, 5}, 2}}, robots, params(), scheduler_config(), 4);
    EXPECT_EQ(trace.outcome, Outcome::AllTasksDone);
    expect_clean(trace.invariants);
    EXPECT_GT(trace.invariants.shape_episodes, 0u);
}
