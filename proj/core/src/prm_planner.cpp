#include "topu/prm_planner.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "topu/errors.hpp"

namespace topu {

std::optional<std::size_t> Roadmap::find_node(Point2 p) const {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i] == p) return i;
    }
    return std::nullopt;
}

double collision_probability_from_clearance(double clearance, const PlannerConfig& config) {
    if (clearance <= config.robot_radius) return 1.0;
    if (std::isinf(clearance)) return 0.0;
    switch (config.falloff) {
    case FalloffModel::Linear:
        return std::clamp(1.0 - (clearance - config.robot_radius) / config.clearance_falloff, 0.0, 1.0);
    case FalloffModel::Exponential:
    default:
        return std::exp(-clearance / config.clearance_falloff);
    }
}

double collision_probability(Point2 a, Point2 b, const PerceivedMap& map, const PlannerConfig& config) {
    return collision_probability_from_clearance(segment_clearance(a, b, map), config);
}

double segment_cost(Point2 a, Point2 b, double p_coll, const PlannerConfig& config) {
    return p_coll * config.penalty + (1.0 - p_coll) * euclidean(a, b);
}

Roadmap build_roadmap(const PerceivedMap& map, std::span<const Point2> mandatory,
                      const PlannerConfig& config) {
    if (config.sample_count < 0) throw std::invalid_argument("sample_count must be >= 0");
    Roadmap rm;
    for (const auto& p : mandatory) {
        if (!point_in_free_space(p, map, config.robot_radius)) {
            std::ostringstream os;
            os << "mandatory point (" << p.x << ", " << p.y << ") is not in free space";
            throw MandatoryPointBlocked(os.str());
        }
        rm.nodes.push_back(p);
    }
    rm.mandatory_count = rm.nodes.size();

    std::mt19937_64 rng(config.reuse_seed);
    std::uniform_real_distribution<double> ux(map.bounds().min_x, map.bounds().max_x);
    std::uniform_real_distribution<double> uy(map.bounds().min_y, map.bounds().max_y);
    const std::size_t wanted = rm.mandatory_count + static_cast<std::size_t>(config.sample_count);
    // Bounded rejection sampling: a fully blocked map must not hang.
    std::size_t attempts = 0;
    const std::size_t max_attempts = 50 * static_cast<std::size_t>(config.sample_count) + 100;
    while (rm.nodes.size() < wanted && attempts < max_attempts) {
        ++attempts;
        const double x = ux(rng);
        const double y = uy(rng);
        const Point2 p{x, y};
        if (point_in_free_space(p, map, config.robot_radius)) rm.nodes.push_back(p);
    }

    rm.adjacency.assign(rm.nodes.size(), {});
    const double r2 = config.connection_radius * config.connection_radius;
    for (std::size_t i = 0; i < rm.nodes.size(); ++i) {
        for (std::size_t j = i + 1; j < rm.nodes.size(); ++j) {
            const Point2 d = rm.nodes[j] - rm.nodes[i];
            if (dot(d, d) > r2) continue;
            const double clearance = segment_clearance(rm.nodes[i], rm.nodes[j], map);
            if (clearance <= 0.0) continue;  // passes through an obstacle
            RoadmapEdge e;
            e.a = i;
            e.b = j;
            e.length = euclidean(rm.nodes[i], rm.nodes[j]);
            e.p_coll = collision_probability_from_clearance(clearance, config);
            e.cost = std::round(segment_cost(rm.nodes[i], rm.nodes[j], e.p_coll, config) / kCostQuantum) * kCostQuantum;
            rm.adjacency[i].push_back(rm.edges.size());
            rm.adjacency[j].push_back(rm.edges.size());
            rm.edges.push_back(e);
        }
    }
    return rm;
}

bool ShortestPathTree::reachable(std::size_t node) const {
    return node < cost.size() && std::isfinite(cost[node]);
}

Path ShortestPathTree::path_to(const Roadmap& roadmap, std::size_t node) const {
    if (!reachable(node)) throw NoPath("goal is not connected to start in the roadmap");
    std::vector<std::size_t> seq;
    for (std::size_t v = node; v != npos; v = predecessor[v]) seq.push_back(v);
    std::reverse(seq.begin(), seq.end());
    Path path;
    path.waypoints.reserve(seq.size());
    for (std::size_t k = 0; k < seq.size(); ++k) {
        path.waypoints.push_back(roadmap.nodes[seq[k]]);
        if (k > 0) {
            const std::size_t u = seq[k - 1];
            const std::size_t v = seq[k];
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t e : roadmap.adjacency[u]) {
                if (roadmap.other_end(e, u) == v) best = std::min(best, roadmap.edges[e].cost);
            }
            path.segment_costs.push_back(best);
            path.total_cost += best;
        }
    }
    return path;
}

namespace {

std::vector<std::size_t> node_sequence(const std::vector<std::size_t>& pred, std::size_t node) {
    std::vector<std::size_t> seq;
    for (std::size_t v = node; v != ShortestPathTree::npos; v = pred[v]) seq.push_back(v);
    std::reverse(seq.begin(), seq.end());
    return seq;
}

}  // namespace

ShortestPathTree shortest_path_tree(const Roadmap& roadmap, std::size_t source) {
    const std::size_t n = roadmap.nodes.size();
    if (source >= n) throw std::invalid_argument("source is not a roadmap node");
    ShortestPathTree tree;
    tree.source = source;
    tree.cost.assign(n, std::numeric_limits<double>::infinity());
    tree.hops.assign(n, 0);
    tree.predecessor.assign(n, ShortestPathTree::npos);
    tree.cost[source] = 0.0;

    using Key = std::tuple<double, std::size_t, std::size_t>;  // cost, hops, node
    std::priority_queue<Key, std::vector<Key>, std::greater<>> open;
    open.emplace(0.0, 0, source);
    std::vector<bool> done(n, false);
    while (!open.empty()) {
        const auto [c, h, u] = open.top();
        open.pop();
        if (done[u]) continue;
        done[u] = true;
        for (std::size_t e : roadmap.adjacency[u]) {
            const std::size_t v = roadmap.other_end(e, u);
            if (done[v]) continue;
            const double nc = c + roadmap.edges[e].cost;
            const std::size_t nh = h + 1;
            bool better = nc < tree.cost[v] || (nc == tree.cost[v] && nh < tree.hops[v]);
            if (!better && nc == tree.cost[v] && nh == tree.hops[v]) {
                auto current = node_sequence(tree.predecessor, v);
                auto candidate = node_sequence(tree.predecessor, u);
                candidate.push_back(v);
                better = candidate < current;
            }
            if (better) {
                tree.cost[v] = nc;
                tree.hops[v] = nh;
                tree.predecessor[v] = u;
                open.emplace(nc, nh, v);
            }
        }
    }
    return tree;
}

Path shortest_path(const Roadmap& roadmap, std::size_t start, std::size_t goal) {
    if (goal >= roadmap.nodes.size()) throw std::invalid_argument("goal is not a roadmap node");
    return shortest_path_tree(roadmap, start).path_to(roadmap, goal);
}

Path shortest_path(const Roadmap& roadmap, Point2 start, Point2 goal) {
    const auto s = roadmap.find_node(start);
    const auto g = roadmap.find_node(goal);
    if (!s || !g) throw std::invalid_argument("start and goal must be roadmap nodes");
    return shortest_path(roadmap, *s, *g);
}

Path smooth_path(const Path& path, const PerceivedMap& map, const PlannerConfig& config) {
    if (path.waypoints.size() <= 2) return path;
    Path out;
    out.waypoints.push_back(path.waypoints.front());
    std::size_t i = 0;
    const std::size_t last = path.waypoints.size() - 1;
    while (i < last) {
        std::size_t next = i + 1;
        double next_cost = path.segment_costs[i];
        double run = path.segment_costs[i];
        for (std::size_t j = i + 2; j <= last; ++j) {
            run += path.segment_costs[j - 1];
            const Point2 a = path.waypoints[i];
            const Point2 b = path.waypoints[j];
            const double clearance = segment_clearance(a, b, map);
            if (clearance <= 0.0) continue;
            const double direct = segment_cost(a, b, collision_probability_from_clearance(clearance, config), config);
            if (direct <= run) {
                next = j;
                next_cost = direct;
            }
        }
        out.waypoints.push_back(path.waypoints[next]);
        out.segment_costs.push_back(next_cost);
        out.total_cost += next_cost;
        i = next;
    }
    return out;
}

}  // namespace topu
