#include <gtest/gtest.h>

#include "topu/errors.hpp"
#include "topu/scheduler.hpp"

using namespace topu;

namespace {

const Rect kRoom{0.0, 0.0, 10.0, 10.0};

SchedulerConfig quiet_config() {
    SchedulerConfig c;
    c.planner.clearance_falloff = 0.05;
    c.planner.sample_count = 150;
    return c;
}

RobotState make_robot(Point2 at, std::map<TaskId, Point2> tasks, Strategy s = Strategy::Trg, double battery = 1e6) {
    return RobotState(1, at, 0.0, tasks, kRoom, s, battery);
}

StepInput tick(std::uint64_t t, double step = 0.03) {
    StepInput in;
    in.tick = t;
    in.step_length = step;
    return in;
}

}  // namespace

TEST(Cfnu, PicksClosestTask) {
    auto r = make_robot({1, 1}, {{TaskId{1}, {6, 1}}, {TaskId{2}, {3, 1}}});
    EXPECT_EQ(cfnu_select(r), TaskId{2});
}

TEST(Cfnu, TieGoesToLowerId) {
    auto r = make_robot({5, 5}, {{TaskId{7}, {6, 5}}, {TaskId{3}, {5, 6}}});
    EXPECT_EQ(cfnu_select(r), TaskId{3});
}

TEST(Cfnu, EmptyThrows) {
    auto r = make_robot({5, 5}, {});
    EXPECT_THROW(cfnu_select(r), NoTasks);
}

TEST(Strategy, ParsesNames) {
    EXPECT_EQ(strategy_from_string("TRG"), Strategy::Trg);
    EXPECT_EQ(strategy_from_string("cfnu"), Strategy::Cfnu);
    EXPECT_THROW(strategy_from_string("greedy"), ValidationError);
}

TEST(AdvanceAlong, WalksWaypoints) {
    Path p;
    p.waypoints = {{0, 0}, {1, 0}, {1, 1}};
    auto [a, ca] = advance_along(p, 1, {0, 0}, 0.5);
    EXPECT_NEAR(a.x, 0.5, 1e-12);
    EXPECT_EQ(ca, 1u);
    auto [b, cb] = advance_along(p, 1, {0, 0}, 1.5);
    EXPECT_NEAR(b.x, 1.0, 1e-12);
    EXPECT_NEAR(b.y, 0.5, 1e-12);
    EXPECT_EQ(cb, 2u);
    auto [c, cc] = advance_along(p, 1, {0, 0}, 5.0);
    EXPECT_EQ(c, (Point2{1, 1}));
    EXPECT_EQ(cc, 3u);
}

TEST(GreedySchedule, FollowsCheapestEdges) {
    Trg trg = init_trg({{TaskId{1}, {0, 0}}, {TaskId{2}, {5, 0}}, {TaskId{3}, {1, 0}}}, {9, 9});
    EXPECT_EQ(greedy_schedule(trg, TaskId{1}), (TaskSchedule{TaskId{1}, TaskId{3}, TaskId{2}}));
}

TEST(ObstacleNearPath, UsesRemainingPath) {
    auto r = make_robot({1, 1}, {{TaskId{1}, {8, 1}}});
    r.path.waypoints = {{1, 1}, {8, 1}};
    r.cursor = 1;
    EXPECT_TRUE(obstacle_near_path(r, Obstacle::rectangle(4, 1.2, 5, 2), 0.3));
    EXPECT_FALSE(obstacle_near_path(r, Obstacle::rectangle(4, 2, 5, 3), 0.3));
}

TEST(SchedulerStep, FirstSelectionIsNotAReplanEvent) {
    auto cfg = quiet_config();
    auto r = make_robot({1, 1}, {{TaskId{1}, {8, 1}}, {TaskId{2}, {1, 8}}});
    auto out = scheduler_step(r, tick(0), cfg);
    EXPECT_TRUE(out.events.empty());
    EXPECT_TRUE(out.replanned);
    ASSERT_TRUE(r.target.has_value());
    ASSERT_TRUE(out.next_position.has_value());
    EXPECT_NEAR(euclidean(*out.next_position, {1, 1}), 0.03, 1e-9);
}

TEST(SchedulerStep, CompletionOfTargetSwitches) {
    auto cfg = quiet_config();
    auto r = make_robot({1, 1}, {{TaskId{1}, {8, 1}}, {TaskId{2}, {1, 8}}});
    scheduler_step(r, tick(0), cfg);
    const TaskId first = *r.target;
    auto in = tick(1);
    in.completed = {first};
    auto out = scheduler_step(r, in, cfg);
    ASSERT_EQ(out.events.size(), 1u);
    EXPECT_EQ(out.events[0].cause, ReplanCause::TaskCompleteMsg);
    EXPECT_TRUE(out.events[0].switched);
    EXPECT_EQ(out.events[0].old_target, first);
    EXPECT_FALSE(r.trg.has_task(first));
}

TEST(SchedulerStep, CompletionOfOtherTaskKeepsTarget) {
    auto cfg = quiet_config();
    auto r = make_robot({1, 1}, {{TaskId{1}, {8, 1}}, {TaskId{2}, {1, 8}}, {TaskId{3}, {2, 1}}});
    scheduler_step(r, tick(0), cfg);
    const TaskId first = *r.target;
    TaskId other = first == TaskId{2} ? TaskId{1} : TaskId{2};
    auto in = tick(1);
    in.completed = {other};
    auto out = scheduler_step(r, in, cfg);
    ASSERT_EQ(out.events.size(), 1u);
    EXPECT_EQ(out.events[0].cause, ReplanCause::TaskCompleteMsg);
    EXPECT_EQ(out.events[0].switched, out.events[0].new_target != first);
}

TEST(SchedulerStep, UnknownCompletionIsIgnored) {
    auto cfg = quiet_config();
    auto r = make_robot({1, 1}, {{TaskId{1}, {8, 1}}});
    scheduler_step(r, tick(0), cfg);
    auto in = tick(1);
    in.completed = {TaskId{42}};
    EXPECT_TRUE(scheduler_step(r, in, cfg).events.empty());
}

TEST(SchedulerStep, AllTasksAnnouncedLeavesRobotIdle) {
    auto cfg = quiet_config();
    auto r = make_robot({1, 1}, {{TaskId{1}, {8, 1}}});
    scheduler_step(r, tick(0), cfg);
    auto in = tick(1);
    in.completed = {TaskId{1}};
    auto out = scheduler_step(r, in, cfg);
    EXPECT_TRUE(out.events.empty());
    EXPECT_FALSE(r.target.has_value());
    EXPECT_FALSE(out.next_position.has_value());
    EXPECT_EQ(r.idle_reason, IdleReason::NoTasks);
}

TEST(SchedulerStep, WallAcrossPathTriggersReplan) {
    auto cfg = quiet_config();
    auto r = make_robot({1, 5}, {{TaskId{1}, {9, 5}}});
    scheduler_step(r, tick(0), cfg);
    ASSERT_EQ(r.target, TaskId{1});
    auto in = tick(1);
    in.new_obstacles = {Obstacle::rectangle(4.8, 2, 5.2, 8)};
    r.perceived.add(0, in.new_obstacles[0]);
    auto out = scheduler_step(r, in, cfg);
    ASSERT_EQ(out.events.size(), 1u);
    EXPECT_EQ(out.events[0].cause, ReplanCause::ObstacleDiscovered);
    EXPECT_FALSE(out.events[0].switched);
    for (std::size_t k = 1; k < r.path.waypoints.size(); ++k)
        EXPECT_GT(segment_clearance(r.path.waypoints[k - 1], r.path.waypoints[k], r.perceived), kRobotRadius);
}

TEST(SchedulerStep, DistantObstacleIsNoTrigger) {
    auto cfg = quiet_config();
    auto r = make_robot({1, 5}, {{TaskId{1}, {9, 5}}});
    scheduler_step(r, tick(0), cfg);
    auto in = tick(1);
    in.new_obstacles = {Obstacle::rectangle(1, 8, 2, 9)};
    EXPECT_TRUE(scheduler_step(r, in, cfg).events.empty());
}

TEST(SchedulerStep, ForcedReplanIsCoordinationCause) {
    auto cfg = quiet_config();
    auto r = make_robot({1, 5}, {{TaskId{1}, {9, 5}}});
    scheduler_step(r, tick(0), cfg);
    auto in = tick(1);
    in.force_replan = true;
    auto out = scheduler_step(r, in, cfg);
    ASSERT_EQ(out.events.size(), 1u);
    EXPECT_EQ(out.events[0].cause, ReplanCause::CoordinationForced);
    EXPECT_FALSE(out.events[0].switched);
}

TEST(SchedulerStep, BatteryTooLowForNextLeg) {
    auto cfg = quiet_config();
    auto r = make_robot({1, 1}, {{TaskId{1}, {6, 1}}, {TaskId{2}, {1, 8}}}, Strategy::Trg, 1.0);
    auto out = scheduler_step(r, tick(0), cfg);
    EXPECT_EQ(r.idle_reason, IdleReason::Battery);
    EXPECT_FALSE(out.next_position.has_value());
}

TEST(SchedulerStep, LoneLegHasZeroExpectedCost) {
    // A single outgoing edge normalizes to unavailability 1, so the leg's
    // expected cost is zero and the battery check does not bind.
    auto cfg = quiet_config();
    auto r = make_robot({1, 1}, {{TaskId{1}, {6, 1}}}, Strategy::Trg, 1.0);
    auto out = scheduler_step(r, tick(0), cfg);
    EXPECT_EQ(r.idle_reason, IdleReason::None);
    EXPECT_TRUE(out.next_position.has_value());
}

TEST(SchedulerStep, EnclosedTaskHasNoValidPath) {
    auto cfg = quiet_config();
    auto r = make_robot({1, 1}, {{TaskId{1}, {8, 8}}});
    r.perceived.add(0, Obstacle::rectangle(6, 6, 10, 6.5));
    r.perceived.add(1, Obstacle::rectangle(6, 6, 6.5, 10));
    auto out = scheduler_step(r, tick(0), cfg);
    EXPECT_TRUE(out.no_valid_path);
    EXPECT_EQ(r.idle_reason, IdleReason::NoValidPath);
    EXPECT_TRUE(r.unreachable.contains(TaskId{1}));
}

TEST(SchedulerStep, CfnuSwitchesToCloserTask) {
    auto cfg = quiet_config();
    auto r = make_robot({5, 5}, {{TaskId{1}, {6, 5}}, {TaskId{2}, {2, 5}}}, Strategy::Cfnu);
    scheduler_step(r, tick(0), cfg);
    ASSERT_EQ(r.target, TaskId{1});
    r.position = {3, 5};
    auto out = scheduler_step(r, tick(1), cfg);
    ASSERT_EQ(out.events.size(), 1u);
    EXPECT_EQ(out.events[0].cause, ReplanCause::CloserTask);
    EXPECT_TRUE(out.events[0].switched);
    EXPECT_EQ(r.target, TaskId{2});
}

TEST(SchedulerStep, CfnuInOpenRoomNeverSwitches) {
    auto cfg = quiet_config();
    auto r = make_robot({1, 1}, {{TaskId{1}, {3, 1}}, {TaskId{2}, {6, 4}}, {TaskId{3}, {8, 8}}}, Strategy::Cfnu);
    std::size_t events = 0;
    for (std::uint64_t t = 0; t < 2000 && !r.trg.vertices.empty(); ++t) {
        auto out = scheduler_step(r, tick(t, 0.05), cfg);
        events += out.events.size();
        if (out.next_position) {
            r.position = *out.next_position;
            r.cursor = out.next_cursor;
        }
        if (r.target && euclidean(r.position, r.trg.vertices.at(*r.target)) <= cfg.arrival_tolerance)
            complete_target(r);
    }
    EXPECT_TRUE(r.trg.vertices.empty());
    EXPECT_EQ(events, 0u);
}

TEST(CompleteTarget, DropsTaskAndPath) {
    auto cfg = quiet_config();
    auto r = make_robot({1, 1}, {{TaskId{1}, {3, 1}}, {TaskId{2}, {8, 8}}});
    scheduler_step(r, tick(0), cfg);
    const TaskId t = *r.target;
    complete_target(r);
    EXPECT_FALSE(r.trg.has_task(t));
    EXPECT_FALSE(r.target.has_value());
    EXPECT_TRUE(r.path.empty());
}
