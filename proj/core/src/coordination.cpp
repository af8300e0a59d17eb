#include "topu/coordination.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>
#include <unordered_map>

#include "topu/errors.hpp"

namespace topu {

const char* to_string(CoordMode mode) {
    switch (mode) {
        case CoordMode::Waiting: return "W";
        case CoordMode::Leader: return "L";
        case CoordMode::Surrendered: return "S";
        case CoordMode::Exited: return "X";
    }
    return "?";
}

std::vector<RobotId> collision_circle(const std::map<RobotId, Point2>& positions, double r_coll, RobotId i) {
    if (!(r_coll > 0.0)) throw std::invalid_argument("r_coll must be positive");
    const Point2 center = positions.at(i);
    std::vector<RobotId> out;
    for (const auto& [id, p] : positions)
        if (id == i || euclidean(p, center) <= r_coll) out.push_back(id);
    return out;
}

std::vector<RobotId> collision_shape(const std::map<RobotId, Point2>& positions, double r_coll, RobotId i) {
    std::vector<RobotId> shape{i};
    std::deque<RobotId> frontier{i};
    while (!frontier.empty()) {
        const RobotId cur = frontier.front();
        frontier.pop_front();
        for (RobotId j : collision_circle(positions, r_coll, cur)) {
            if (std::find(shape.begin(), shape.end(), j) != shape.end()) continue;
            shape.push_back(j);
            frontier.push_back(j);
        }
    }
    std::sort(shape.begin(), shape.end());
    return shape;
}

std::vector<std::vector<RobotId>> collision_shapes(const std::map<RobotId, Point2>& positions, double r_coll) {
    std::vector<std::vector<RobotId>> shapes;
    std::map<RobotId, bool> seen;
    for (const auto& [id, _] : positions) {
        if (seen[id]) continue;
        auto shape = collision_shape(positions, r_coll, id);
        for (RobotId j : shape) seen[j] = true;
        shapes.push_back(std::move(shape));
    }
    return shapes;
}

std::optional<RobotId> elect_winner(const std::map<RobotId, double>& priorities) {
    std::optional<RobotId> best;
    double best_prio = kSurrenderPriority;
    for (const auto& [id, prio] : priorities) {
        if (!std::isfinite(prio)) continue;
        if (!best || prio < best_prio) {
            best = id;
            best_prio = prio;
        }
    }
    return best;
}

ElectionResult elect_in_shape(std::map<RobotId, CoordState>& members) {
    for (auto& [id, st] : members) {
        if (st.mode == CoordMode::Exited) {
            st.mode = CoordMode::Waiting;
            st.priority = static_cast<double>(id);
        } else if (st.token_released && st.mode == CoordMode::Surrendered) {
            st.mode = CoordMode::Waiting;
            st.priority = static_cast<double>(id);
        }
        st.token_released = false;
    }

    std::map<RobotId, double> prios;
    for (const auto& [id, st] : members) prios[id] = st.priority;

    ElectionResult result;
    result.leader = elect_winner(prios);
    if (!result.leader) {
        result.joint_planning = true;
        return result;
    }
    for (auto& [id, st] : members) {
        if (id == *result.leader) {
            st.mode = CoordMode::Leader;
        } else if (st.mode == CoordMode::Leader) {
            st.mode = CoordMode::Waiting;
            result.deposed = id;
        }
    }
    return result;
}

void apply_leader_outcome(std::map<RobotId, CoordState>& members, RobotId leader, LeaderOutcome outcome) {
    auto& st = members.at(leader);
    switch (outcome) {
        case LeaderOutcome::Move:
            break;
        case LeaderOutcome::Surrender:
            st.mode = CoordMode::Surrendered;
            st.priority = kSurrenderPriority;
            break;
        case LeaderOutcome::Exit:
            st.mode = CoordMode::Exited;
            st.priority = static_cast<double>(leader);
            for (auto& [id, other] : members)
                if (id != leader) other.token_released = true;
            break;
    }
}

void reset_after_joint_plan(std::map<RobotId, CoordState>& members) {
    for (auto& [id, st] : members) {
        st.mode = CoordMode::Waiting;
        st.priority = static_cast<double>(id);
        st.token_released = false;
    }
}

void mark_exited(CoordState& state) {
    state.mode = CoordMode::Exited;
    state.token_released = false;
}

namespace {

constexpr std::uint32_t kNoCell = static_cast<std::uint32_t>(-1);

// Free cells reachable from a robot's start, with 8-connected adjacency.
struct Lattice {
    std::vector<Point2> cells;
    std::vector<std::vector<std::uint32_t>> neighbours;
    std::vector<bool> goal;
    std::vector<std::uint32_t> goal_distance;  // hops, kNoCell when unreachable
};

Lattice build_lattice(Point2 start, Point2 goal, const PerceivedMap& map, const JointPlanRequest& req) {
    Lattice lat;
    std::map<std::pair<int, int>, std::uint32_t> index;
    std::deque<std::pair<int, int>> frontier;
    auto at = [&](int i, int j) { return Point2{start.x + i * req.cell, start.y + j * req.cell}; };
    auto admissible = [&](Point2 p) {
        return req.region.contains(p) && point_in_free_space(p, map, req.robot_radius);
    };

    index[{0, 0}] = 0;
    lat.cells.push_back(start);
    frontier.push_back({0, 0});
    while (!frontier.empty()) {
        const auto [i, j] = frontier.front();
        frontier.pop_front();
        const std::uint32_t from = index.at({i, j});
        for (int di = -1; di <= 1; ++di)
            for (int dj = -1; dj <= 1; ++dj) {
                if (di == 0 && dj == 0) continue;
                const std::pair<int, int> key{i + di, j + dj};
                const Point2 p = at(key.first, key.second);
                auto it = index.find(key);
                if (it == index.end()) {
                    if (!admissible(p)) continue;
                    if (segment_clearance(lat.cells[from], p, map) <= req.robot_radius) continue;
                    it = index.emplace(key, static_cast<std::uint32_t>(lat.cells.size())).first;
                    lat.cells.push_back(p);
                    frontier.push_back(key);
                } else if (segment_clearance(lat.cells[from], p, map) <= req.robot_radius) {
                    continue;
                }
                if (lat.neighbours.size() < lat.cells.size()) lat.neighbours.resize(lat.cells.size());
                lat.neighbours[from].push_back(it->second);
            }
    }
    lat.neighbours.resize(lat.cells.size());
    for (auto& n : lat.neighbours) {
        std::sort(n.begin(), n.end());
        n.erase(std::unique(n.begin(), n.end()), n.end());
    }

    lat.goal.assign(lat.cells.size(), false);
    lat.goal_distance.assign(lat.cells.size(), kNoCell);
    std::deque<std::uint32_t> bfs;
    for (std::uint32_t c = 0; c < lat.cells.size(); ++c)
        if (euclidean(lat.cells[c], goal) <= req.goal_tolerance) {
            lat.goal[c] = true;
            lat.goal_distance[c] = 0;
            bfs.push_back(c);
        }
    while (!bfs.empty()) {
        const std::uint32_t c = bfs.front();
        bfs.pop_front();
        for (std::uint32_t n : lat.neighbours[c])
            if (lat.goal_distance[n] == kNoCell) {
                lat.goal_distance[n] = lat.goal_distance[c] + 1;
                bfs.push_back(n);
            }
    }
    return lat;
}

struct StateHash {
    std::size_t operator()(const std::vector<std::uint32_t>& s) const noexcept {
        std::size_t h = 1469598103934665603ull;
        for (auto v : s) h = (h ^ v) * 1099511628211ull;
        return h;
    }
};

struct NodeInfo {
    std::size_t parent = static_cast<std::size_t>(-1);
    std::uint32_t cost = 0;
    std::size_t moved_robot = 0;
};

}  // namespace

JointPlan perform_joint_planning(const JointPlanRequest& req) {
    const std::size_t n = req.robots.size();
    if (req.starts.size() != n || req.goals.size() != n || req.maps.size() != n)
        throw std::invalid_argument("joint plan request has mismatched sizes");
    if (n == 0) return {};

    std::vector<Lattice> lattices;
    lattices.reserve(n);
    for (std::size_t r = 0; r < n; ++r) lattices.push_back(build_lattice(req.starts[r], req.goals[r], *req.maps[r], req));

    auto pos = [&](const std::vector<std::uint32_t>& s, std::size_t r) { return lattices[r].cells[s[r]]; };
    auto heuristic = [&](const std::vector<std::uint32_t>& s) {
        std::uint32_t h = 0;
        for (std::size_t r = 0; r < n; ++r) {
            const auto d = lattices[r].goal_distance[s[r]];
            if (d != kNoCell) h += d;
        }
        return h;
    };
    auto terminal = [&](const std::vector<std::uint32_t>& s) {
        for (std::size_t r = 0; r < n; ++r) {
            if (lattices[r].goal[s[r]]) continue;
            if (n == 1) return false;
            for (std::size_t o = 0; o < n; ++o)
                if (o != r && euclidean(pos(s, r), pos(s, o)) <= req.exit_radius) return false;
        }
        return true;
    };

    std::vector<std::vector<std::uint32_t>> states;
    std::vector<NodeInfo> info;
    std::unordered_map<std::vector<std::uint32_t>, std::size_t, StateHash> seen;
    // Lowest f first, deeper nodes first among equal f, then insertion order.
    using Entry = std::tuple<std::uint32_t, std::int64_t, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;

    const std::vector<std::uint32_t> start(n, 0);
    states.push_back(start);
    info.push_back({});
    seen.emplace(start, 0);
    open.emplace(heuristic(start), 0, 0);
    auto depth = [](std::uint32_t g) { return -static_cast<std::int64_t>(g); };

    std::size_t expansions = 0;
    std::vector<bool> closed;
    while (!open.empty()) {
        const auto [f, neg_g, idx] = open.top();
        open.pop();
        const auto g = static_cast<std::uint32_t>(-neg_g);
        if (closed.size() <= idx) closed.resize(states.size(), false);
        if (closed[idx] || g != info[idx].cost) continue;
        closed[idx] = true;

        const auto cur = states[idx];
        if (terminal(cur)) {
            JointPlan plan;
            plan.expansions = expansions;
            for (std::size_t k = idx; info[k].parent != static_cast<std::size_t>(-1); k = info[k].parent) {
                const std::size_t r = info[k].moved_robot;
                plan.moves.push_back({req.robots[r], lattices[r].cells[states[k][r]]});
            }
            std::reverse(plan.moves.begin(), plan.moves.end());
            return plan;
        }
        if (++expansions > req.max_expansions)
            throw JointPlanFailure("joint planning exceeded its search budget of " +
                                   std::to_string(req.max_expansions) + " states");

        for (std::size_t r = 0; r < n; ++r) {
            const Point2 from = pos(cur, r);
            for (std::uint32_t next : lattices[r].neighbours[cur[r]]) {
                const Point2 to = lattices[r].cells[next];
                bool ok = true;
                for (std::size_t o = 0; o < n && ok; ++o)
                    if (o != r && point_segment_distance(pos(cur, o), from, to) < req.min_separation) ok = false;
                if (!ok) continue;
                auto succ = cur;
                succ[r] = next;
                const std::uint32_t sg = g + 1;
                auto it = seen.find(succ);
                if (it != seen.end()) {
                    if (info[it->second].cost <= sg) continue;
                    info[it->second] = {idx, sg, r};
                    open.emplace(sg + heuristic(succ), depth(sg), it->second);
                    continue;
                }
                const std::size_t id = states.size();
                states.push_back(succ);
                info.push_back({idx, sg, r});
                seen.emplace(std::move(succ), id);
                open.emplace(sg + heuristic(states[id]), depth(sg), id);
            }
        }
    }
    throw JointPlanFailure("no joint motion exists on the planning grid");
}

}  // namespace topu
