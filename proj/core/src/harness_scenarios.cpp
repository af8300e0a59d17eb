#include <cmath>
#include <limits>
#include <random>

#include "topu/experiment_harness.hpp"

namespace topu {

double cfnu_switch_fraction(const ScenarioConfig& config, std::uint64_t seed) {
    ScenarioConfig solo = config;
    solo.robots = {config.robots.front()};
    for (auto& t : solo.tasks) t.visits = 1;
    const auto run = run_single(solo, Strategy::Cfnu, seed);
    const double total = static_cast<double>(run.trace.total_switching() + run.trace.total_non_switching());
    return total == 0.0 ? 0.0 : static_cast<double>(run.trace.total_switching()) / total;
}

namespace {

ScenarioConfig base(std::string name) {
    ScenarioConfig c;
    c.name = std::move(name);
    c.environment.bounds = Rect{0.0, 0.0, 20.0, 20.0};
    c.planner.clearance_falloff = 0.05;
    c.planner.sample_count = 600;
    c.sim.max_ticks = 30000;
    c.seeds.clear();
    for (std::uint64_t s = 1; s <= 10; ++s) c.seeds.push_back(s);
    return c;
}

// 20 m square floors, larger than the sensor footprint so walls are found en route.
std::vector<Obstacle> layout(int which) {
    switch (which % 3) {
        case 0:  // four rooms joined by doorways
            return {Obstacle::rectangle(9.9, 0.0, 10.1, 8.0),   Obstacle::rectangle(9.9, 11.0, 10.1, 20.0),
                    Obstacle::rectangle(0.0, 9.9, 4.0, 10.1),   Obstacle::rectangle(6.0, 9.9, 9.9, 10.1),
                    Obstacle::rectangle(10.1, 9.9, 14.0, 10.1), Obstacle::rectangle(16.0, 9.9, 20.0, 10.1),
                    Obstacle::rectangle(3.0, 3.0, 5.0, 5.0),    Obstacle::rectangle(14.5, 14.5, 16.5, 16.0)};
        case 1:  // serpentine corridors
            return {Obstacle::rectangle(0.0, 4.9, 14.0, 5.1), Obstacle::rectangle(6.0, 9.9, 20.0, 10.1),
                    Obstacle::rectangle(0.0, 14.9, 14.0, 15.1), Obstacle::rectangle(16.0, 1.5, 17.0, 3.5)};
        default:  // pillars and partial walls
            return {Obstacle::rectangle(3.0, 3.0, 6.0, 3.3),   Obstacle::rectangle(12.0, 2.0, 12.3, 8.0),
                    Obstacle::rectangle(5.0, 8.0, 5.3, 16.0),  Obstacle::rectangle(8.0, 12.0, 15.0, 12.3),
                    Obstacle::rectangle(15.0, 15.0, 17.0, 17.0), Obstacle::rectangle(1.0, 17.0, 3.5, 18.5),
                    Obstacle::rectangle(16.0, 6.0, 19.0, 6.3)};
    }
}

bool clear_point(Point2 p, const EnvironmentMap& env, double clearance) {
    if (p.x < env.bounds.min_x + clearance || p.x > env.bounds.max_x - clearance) return false;
    if (p.y < env.bounds.min_y + clearance || p.y > env.bounds.max_y - clearance) return false;
    for (const auto& o : env.obstacles)
        if (distance_to_obstacle(p, o) < clearance) return false;
    return true;
}

Point2 sample_clear(std::mt19937_64& rng, const EnvironmentMap& env, double clearance, const std::vector<Point2>& avoid,
                    double spacing) {
    std::uniform_real_distribution<double> ux(env.bounds.min_x, env.bounds.max_x);
    std::uniform_real_distribution<double> uy(env.bounds.min_y, env.bounds.max_y);
    for (int attempt = 0; attempt < 10000; ++attempt) {
        const Point2 p{std::round(ux(rng) * 100.0) / 100.0, std::round(uy(rng) * 100.0) / 100.0};
        if (!clear_point(p, env, clearance)) continue;
        bool ok = true;
        for (const auto& q : avoid) ok = ok && euclidean(p, q) >= spacing;
        if (ok) return p;
    }
    throw std::runtime_error("could not place a point in the scenario layout");
}

// Robots after the first are spread out: each new robot takes the sampled
// free point farthest from the robots already placed.
std::vector<Point2> spread_robots(std::mt19937_64& rng, const EnvironmentMap& env, Point2 lead, int count,
                                  const std::vector<Point2>& tasks) {
    std::vector<Point2> placed{lead};
    std::vector<Point2> candidates;
    for (int i = 0; i < 200; ++i) candidates.push_back(sample_clear(rng, env, 0.5, tasks, 0.5));
    while (static_cast<int>(placed.size()) < count) {
        Point2 best = candidates.front();
        double best_d = -1.0;
        for (const auto& c : candidates) {
            double d = std::numeric_limits<double>::infinity();
            for (const auto& p : placed) d = std::min(d, euclidean(c, p));
            if (d > best_d) {
                best_d = d;
                best = c;
            }
        }
        placed.push_back(best);
    }
    return placed;
}

ScenarioConfig table_row(int row, int tasks, int robots, int visits) {
    ScenarioConfig best;
    double best_gap = std::numeric_limits<double>::infinity();
    // Candidate placements are scored by how close a lone closest-first
    // robot comes to switching task on half of its replans.
    for (int attempt = 0; attempt < 12; ++attempt) {
        ScenarioConfig c = base("load_t" + std::to_string(tasks) + "_r" + std::to_string(robots) + "_v" +
                                std::to_string(visits));
        c.environment.obstacles = layout(row);
        std::mt19937_64 rng(static_cast<std::uint64_t>(1000 * row + attempt));
        std::vector<Point2> placed;
        for (int t = 0; t < tasks; ++t) {
            const Point2 p = sample_clear(rng, c.environment, 0.45, placed, 1.0);
            placed.push_back(p);
            c.tasks.push_back({TaskId{t + 1}, p, visits});
        }
        const Point2 lead = sample_clear(rng, c.environment, 0.5, placed, 0.8);
        const auto starts = spread_robots(rng, c.environment, lead, robots, placed);
        for (int r = 0; r < robots; ++r) c.robots.push_back({r + 1, starts[static_cast<std::size_t>(r)], 0.0});
        const double gap = std::abs(cfnu_switch_fraction(c, 1) - 0.5);
        if (gap < best_gap) {
            best_gap = gap;
            best = c;
        }
    }
    return best;
}

ScenarioConfig wall_scenario() {
    ScenarioConfig c = base("two_robot_wall");
    c.environment.bounds = Rect{0.0, 0.0, 10.0, 10.0};
    c.planner.sample_count = 300;
    c.environment.obstacles = {Obstacle::rectangle(4.9, 0.0, 5.1, 7.5)};
    c.robots = {{1, {1.0, 1.0}, 0.0}, {2, {1.0, 9.0}, 0.0}};
    const std::vector<Point2> tasks{{3.0, 1.5}, {6.2, 1.2}, {2.0, 5.0}, {8.0, 4.5}, {8.5, 8.5}, {3.5, 8.5}};
    for (std::size_t i = 0; i < tasks.size(); ++i) c.tasks.push_back({TaskId{static_cast<std::int64_t>(i + 1)}, tasks[i], 1});
    return c;
}

ScenarioConfig control_scenario() {
    ScenarioConfig c = base("control_open");
    c.environment.bounds = Rect{0.0, 0.0, 10.0, 10.0};
    c.planner.sample_count = 300;
    std::mt19937_64 rng(77);
    std::vector<Point2> placed;
    for (int t = 0; t < 10; ++t) {
        const Point2 p = sample_clear(rng, c.environment, 0.5, placed, 1.0);
        placed.push_back(p);
        c.tasks.push_back({TaskId{t + 1}, p, 1});
    }
    c.robots = {{1, sample_clear(rng, c.environment, 0.5, placed, 0.8), 0.0}};
    c.sim.msg_drop_prob = 0.0;
    return c;
}

}  // namespace

std::vector<ScenarioConfig> scenario_library() {
    const int rows[8][3] = {{5, 3, 1}, {10, 3, 1}, {5, 1, 1}, {10, 3, 2}, {10, 1, 1}, {15, 3, 2}, {15, 1, 1}, {15, 3, 3}};
    std::vector<ScenarioConfig> out;
    for (int i = 0; i < 8; ++i) out.push_back(table_row(i, rows[i][0], rows[i][1], rows[i][2]));
    out.push_back(wall_scenario());
    out.push_back(control_scenario());
    return out;
}

}  // namespace topu
