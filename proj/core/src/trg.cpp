#include "topu/trg.hpp"

#include <set>
#include <stdexcept>
#include <string>

#include "topu/errors.hpp"

namespace topu {

namespace {

std::string describe(Vertex v) {
    return v.is_curr() ? std::string("curr") : std::to_string(v.id().value);
}

void check_probability(double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw OutOfRangeProbability("unavailability " + std::to_string(p) + " outside [0, 1]");
    }
}

}  // namespace

std::vector<Vertex> Trg::all_vertices() const {
    std::vector<Vertex> out;
    out.reserve(vertices.size() + 1);
    out.push_back(Vertex::curr());
    for (const auto& [id, _] : vertices) out.push_back(Vertex::task(id));
    return out;
}

Point2 Trg::location(Vertex v) const {
    if (v.is_curr()) return curr;
    const auto it = vertices.find(v.id());
    if (it == vertices.end()) throw UnknownTask("unknown task " + describe(v));
    return it->second;
}

double Trg::edge_cost(Vertex a, Vertex b) const {
    const auto it = cost.find(EdgeKey(a, b));
    if (it == cost.end()) throw UnknownEdge("unknown edge " + describe(a) + "-" + describe(b));
    return it->second;
}

double Trg::edge_unavail(Vertex from, Vertex to) const {
    const auto it = unavail.find(DirectedEdge{from, to});
    if (it == unavail.end()) throw UnknownEdge("unknown edge " + describe(from) + "->" + describe(to));
    return it->second;
}

Trg init_trg(const std::map<TaskId, Point2>& tasks, Point2 robot_pos) {
    Trg trg;
    trg.vertices = tasks;
    trg.curr = robot_pos;
    const auto vs = trg.all_vertices();
    for (std::size_t i = 0; i < vs.size(); ++i) {
        for (std::size_t j = i + 1; j < vs.size(); ++j) {
            trg.cost[EdgeKey(vs[i], vs[j])] = euclidean(trg.location(vs[i]), trg.location(vs[j]));
            trg.unavail[DirectedEdge{vs[i], vs[j]}] = 0.0;
            trg.unavail[DirectedEdge{vs[j], vs[i]}] = 0.0;
        }
    }
    return trg;
}

double expected_schedule_cost(const TaskSchedule& schedule, const Trg& trg) {
    std::set<TaskId> seen;
    double total = 0.0;
    Vertex prev = Vertex::curr();
    for (const TaskId id : schedule) {
        if (!trg.has_task(id)) throw std::invalid_argument("schedule names unknown task " + std::to_string(id.value));
        if (!seen.insert(id).second) throw std::invalid_argument("schedule repeats task " + std::to_string(id.value));
        const Vertex next = Vertex::task(id);
        total += (1.0 - trg.edge_unavail(prev, next)) * trg.edge_cost(prev, next);
        prev = next;
    }
    return total;
}

bool battery_feasible(const TaskSchedule& schedule, const Trg& trg, double battery) {
    return expected_schedule_cost(schedule, trg) <= battery;
}

Trg remove_vertex(const Trg& trg, TaskId id) {
    if (!trg.has_task(id)) throw UnknownTask("unknown task " + std::to_string(id.value));
    Trg out = trg;
    const Vertex gone = Vertex::task(id);
    out.vertices.erase(id);
    std::erase_if(out.cost, [&](const auto& kv) { return kv.first.lo == gone || kv.first.hi == gone; });
    std::erase_if(out.unavail, [&](const auto& kv) { return kv.first.from == gone || kv.first.to == gone; });
    return out;
}

Trg update_edge(const Trg& trg, EdgeKey key, double cost, double unavail) {
    if (!trg.cost.contains(key)) {
        throw UnknownEdge("unknown edge " + describe(key.lo) + "-" + describe(key.hi));
    }
    check_probability(unavail);
    if (!(cost >= 0.0) || !std::isfinite(cost)) {
        throw InvalidCost("edge cost " + std::to_string(cost) + " must be finite and >= 0");
    }
    Trg out = trg;
    out.cost[key] = cost;
    out.unavail[DirectedEdge{key.lo, key.hi}] = unavail;
    out.unavail[DirectedEdge{key.hi, key.lo}] = unavail;
    return out;
}

Trg set_unavailability(const Trg& trg, DirectedEdge edge, double unavail) {
    if (!trg.unavail.contains(edge)) {
        throw UnknownEdge("unknown edge " + describe(edge.from) + "->" + describe(edge.to));
    }
    check_probability(unavail);
    Trg out = trg;
    out.unavail[edge] = unavail;
    return out;
}

Trg move_curr(const Trg& trg, Point2 position) {
    Trg out = trg;
    out.curr = position;
    return out;
}

}  // namespace topu
