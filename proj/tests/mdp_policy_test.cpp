#include <gtest/gtest.h>

#include <cmath>
#include <iostream>
#include <random>

#include "oracles.hpp"
#include "topu/errors.hpp"
#include "topu/mdp_policy.hpp"

using namespace topu;

namespace {

Trg trg_with_costs(const std::vector<double>& curr_costs) {
    std::map<TaskId, Point2> tasks;
    for (std::size_t i = 0; i < curr_costs.size(); ++i)
        tasks[TaskId{static_cast<std::int64_t>(i + 1)}] = {static_cast<double>(i), 1.0};
    Trg trg = init_trg(tasks, {0, 0});
    for (std::size_t i = 0; i < curr_costs.size(); ++i)
        trg.cost[EdgeKey(Vertex::curr(), Vertex::task(TaskId{static_cast<std::int64_t>(i + 1)}))] = curr_costs[i];
    return trg;
}

// Greedy edge from CURR versus every competitor: (1-p)c <= (1-p)(c + d) + p c
// with d = c' - c, p the chosen edge's unavailability.
bool admissible(const Trg& trg, TaskId chosen) {
    const Vertex cv = Vertex::curr();
    const double c = trg.edge_cost(cv, Vertex::task(chosen));
    const double p = trg.edge_unavail(cv, Vertex::task(chosen));
    for (const auto& [id, _] : trg.vertices) {
        if (id == chosen) continue;
        const double d = trg.edge_cost(cv, Vertex::task(id)) - c;
        if ((1.0 - p) * c > (1.0 - p) * (c + d) + p * c + 1e-12) return false;
    }
    return true;
}

}  // namespace

TEST(TransitionProb, Examples) {
    const TaskId a{1}, b{2}, c{3};
    EXPECT_EQ(transition_prob(0.0, 3, b, b), 1.0);
    EXPECT_EQ(transition_prob(0.0, 3, b, a), 0.0);
    EXPECT_DOUBLE_EQ(transition_prob(0.4, 3, b, b), 0.6);
    EXPECT_DOUBLE_EQ(transition_prob(0.4, 3, b, a), 0.2);
    EXPECT_DOUBLE_EQ(transition_prob(0.4, 3, b, c), 0.2);
    EXPECT_THROW(transition_prob(0.5, 1, a, b), DegenerateFanout);
}

TEST(BuildMdp, Examples) {
    const auto one = build_mdp(trg_with_costs({4.0}), 0.8);
    ASSERT_EQ(one.task_count(), 1u);
    EXPECT_DOUBLE_EQ(one.reward[0], 0.25);
    EXPECT_DOUBLE_EQ(one.gamma, 0.8);
    const auto zero = build_mdp(trg_with_costs({0.0, 2.0}), 0.8);
    EXPECT_TRUE(std::isfinite(zero.reward[0]));
    EXPECT_DOUBLE_EQ(zero.reward[0], 1.0 / kMinRewardCost);
    EXPECT_THROW(build_mdp(init_trg({}, {0, 0}), 0.8), EmptyTrg);
}

TEST(BuildMdp, RowsSumToOne) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 100; ++t) {
        const auto mdp = build_mdp(oracle::random_trg(rng, 1 + t % 6), 0.8);
        for (const auto& acts : mdp.actions)
            for (const auto& a : acts) {
                double s = 0.0;
                for (double v : a.outcome) s += v;
                EXPECT_NEAR(s, 1.0, 1e-12);
            }
        EXPECT_EQ(mdp.actions[mdp.curr_index()].size(), mdp.task_count());
    }
}

TEST(ValueIteration, SingleStateGeometricSeries) {
    const auto mdp = build_mdp(trg_with_costs({4.0}), 0.8);
    // A lone task has no outgoing edges, so its utility is its reward.
    const auto u = value_iteration(mdp, 1e-12, 10000);
    EXPECT_DOUBLE_EQ(u.values[0], 0.25);

    // Two tasks with zero unavailability bounce between each other forever.
    Trg two = trg_with_costs({4.0, 4.0});
    const auto m2 = build_mdp(two, 0.8);
    const auto u2 = value_iteration(m2, 1e-12, 10000);
    EXPECT_NEAR(u2.values[0], 0.25 / (1.0 - 0.8), 1e-9);
}

TEST(ValueIteration, MyopicLimit) {
    std::mt19937_64 rng(5);
    const auto mdp = build_mdp(oracle::random_trg(rng, 4), 0.0);
    const auto u = value_iteration(mdp, 1e-6, 10000);
    for (std::size_t i = 0; i < mdp.task_count(); ++i) EXPECT_EQ(u.values[i], mdp.reward[i]);
    EXPECT_LE(u.iterations, 2);
}

TEST(ValueIteration, MatchesPolicyEnumeration) {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 60; ++t) {
        const std::size_t n = 2 + t % 4;
        const auto trg = oracle::random_trg(rng, n);
        const auto mdp = build_mdp(trg, 0.8);
        const auto u = value_iteration(mdp, 1e-10, 100000);
        const auto want = oracle::enumerate_policies(trg, 0.8);
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(u.values[i], want[i], 1e-6);
    }
}

TEST(ValueIteration, ResidualNonincreasing) {
    std::mt19937_64 rng(12);
    for (int t = 0; t < 20; ++t) {
        const auto mdp = build_mdp(oracle::random_trg(rng, 5), 0.8);
        double prev = std::numeric_limits<double>::infinity();
        for (int k = 1; k <= 30; ++k) {
            Utilities u;
            try {
                u = value_iteration(mdp, 1e-300, k);
            } catch (const NonConvergence& e) {
                u = e.partial();
            }
            EXPECT_LE(u.residual, prev * (1.0 + 1e-12) + 1e-300);
            prev = u.residual;
        }
    }
}

TEST(ValueIteration, NonConvergenceCarriesPartial) {
    std::mt19937_64 rng(13);
    const auto mdp = build_mdp(oracle::random_trg(rng, 3), 0.8);
    try {
        value_iteration(mdp, 1e-12, 2);
        FAIL();
    } catch (const NonConvergence& e) {
        EXPECT_EQ(e.partial().iterations, 2);
        EXPECT_EQ(e.partial().values.size(), 3u);
    }
}

TEST(NextTask, Examples) {
    auto trg = trg_with_costs({3.0, 5.0});
    auto d = decide_next_task(trg, {});
    EXPECT_EQ(d.task, TaskId{1});

    // Cost 5 with p = 0.3 versus cost 7: 0.7*5 = 3.5 < 0.7*7 + 0.3*5 = 6.4.
    trg = trg_with_costs({5.0, 7.0});
    trg = set_unavailability(trg, {Vertex::curr(), Vertex::task(TaskId{1})}, 0.3);
    d = decide_next_task(trg, {});
    EXPECT_EQ(d.task, TaskId{1});
    EXPECT_NEAR(0.7 * 5.0, 3.5, 1e-12);
    EXPECT_NEAR(0.7 * 7.0 + 0.3 * 5.0, 6.4, 1e-12);
    EXPECT_TRUE(admissible(trg, d.task));

    trg = set_unavailability(trg_with_costs({9.0}), {Vertex::curr(), Vertex::task(TaskId{1})}, 0.9);
    EXPECT_EQ(decide_next_task(trg, {}).task, TaskId{1});
}

TEST(NextTask, TiesGoToLowestId) {
    const auto trg = trg_with_costs({2.0, 2.0, 2.0});
    EXPECT_EQ(decide_next_task(trg, {}).task, TaskId{1});
}

TEST(NextTask, NoTasks) {
    const auto mdp = build_mdp(trg_with_costs({1.0}), 0.8);
    Utilities u = value_iteration(mdp, 1e-6, 100);
    TrgMdp empty = mdp;
    empty.tasks.clear();
    empty.reward.clear();
    empty.actions.assign(1, {});
    EXPECT_THROW(next_task(empty, u), NoTasks);
}

TEST(NextTask, AdmissibleWhenEdgesAreCertain) {
    std::mt19937_64 rng(21);
    for (int t = 0; t < 500; ++t) {
        const auto trg = oracle::random_trg(rng, 1 + t % 6, 0.5, 10.0, 0.0);
        EXPECT_TRUE(admissible(trg, decide_next_task(trg, {}).task));
    }
}

TEST(NextTask, AdmissibleWhenChosenEdgeIsCheapest) {
    // With the chosen edge at minimum cost the inequality holds for any p.
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 500; ++t) {
        auto trg = oracle::random_trg(rng, 2 + t % 5);
        const auto chosen = decide_next_task(trg, {}).task;
        const double c = trg.edge_cost(Vertex::curr(), Vertex::task(chosen));
        bool cheapest = true;
        for (const auto& [id, _] : trg.vertices)
            cheapest = cheapest && trg.edge_cost(Vertex::curr(), Vertex::task(id)) >= c;
        if (!cheapest) continue;
        for (auto& [k, p] : trg.unavail) p = u(rng);
        EXPECT_TRUE(admissible(trg, chosen));
    }
}

TEST(NextTask, GreedyRolloutVersusPermutationOptimum) {
    std::mt19937_64 rng(31);
    int matches = 0, trials = 0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 2 + t % 5;
        Trg trg = oracle::random_trg(rng, n);
        const double best = oracle::min_schedule_cost(trg);
        TaskSchedule order;
        Trg rolling = trg;
        while (!rolling.vertices.empty()) {
            const TaskId next = decide_next_task(rolling, {}).task;
            order.push_back(next);
            // Moving onto the task: its edges become the new CURR edges.
            Trg moved = rolling;
            for (const auto& [id, _] : rolling.vertices) {
                if (id == next) continue;
                const Vertex a = Vertex::task(next), b = Vertex::task(id);
                moved.cost[EdgeKey(Vertex::curr(), b)] = rolling.edge_cost(a, b);
                moved.unavail[{Vertex::curr(), b}] = rolling.edge_unavail(a, b);
                moved.unavail[{b, Vertex::curr()}] = rolling.edge_unavail(b, a);
            }
            rolling = remove_vertex(moved, next);
        }
        ++trials;
        if (std::abs(expected_schedule_cost(order, trg) - best) <= 1e-9 * std::max(1.0, best)) ++matches;
    }
    std::cout << "greedy rollout matched permutation optimum on " << matches << " of " << trials << " TRGs\n";
    EXPECT_GT(trials, 0);
}
