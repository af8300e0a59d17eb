#include "topu/mdp_policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace topu {

std::size_t TrgMdp::index_of(TaskId id) const {
    const auto it = std::lower_bound(tasks.begin(), tasks.end(), id);
    if (it == tasks.end() || *it != id) throw UnknownTask("task " + std::to_string(id.value) + " is not an MDP state");
    return static_cast<std::size_t>(it - tasks.begin());
}

double transition_prob(double p_unavail, std::size_t n_vertices, TaskId target, TaskId outcome) {
    if (!(p_unavail >= 0.0 && p_unavail <= 1.0)) throw OutOfRangeProbability("unavailability outside [0, 1]");
    if (outcome == target) return 1.0 - p_unavail;
    if (n_vertices < 2) {
        if (p_unavail > 0.0) throw DegenerateFanout("no other task can absorb the unavailable mass");
        return 0.0;
    }
    return p_unavail / static_cast<double>(n_vertices - 1);
}

TrgMdp build_mdp(const Trg& trg, double gamma) {
    if (trg.vertices.empty()) throw EmptyTrg("cannot build an MDP without tasks");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must be in [0, 1)");
    TrgMdp mdp;
    mdp.gamma = gamma;
    for (const auto& [id, _] : trg.vertices) mdp.tasks.push_back(id);
    const std::size_t n = mdp.tasks.size();

    mdp.reward.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double c = trg.edge_cost(Vertex::curr(), Vertex::task(mdp.tasks[i]));
        mdp.reward[i] = 1.0 / std::max(c, kMinRewardCost);
    }

    mdp.actions.resize(n + 1);
    auto make_action = [&](Vertex from, std::size_t j) {
        TrgMdp::Action a;
        a.target = j;
        a.outcome.assign(n, 0.0);
        const double p = trg.edge_unavail(from, Vertex::task(mdp.tasks[j]));
        if (n == 1) {
            // Only one task left: the edge is the sole way forward.
            a.outcome[j] = 1.0;
            return a;
        }
        for (std::size_t k = 0; k < n; ++k) a.outcome[k] = transition_prob(p, n, mdp.tasks[j], mdp.tasks[k]);
        return a;
    };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) mdp.actions[i].push_back(make_action(Vertex::task(mdp.tasks[i]), j));
        }
    }
    for (std::size_t j = 0; j < n; ++j) mdp.actions[n].push_back(make_action(Vertex::curr(), j));
    return mdp;
}

double action_value(const TrgMdp& mdp, const Utilities& u, std::size_t /*state*/, const TrgMdp::Action& action) {
    double v = 0.0;
    for (std::size_t k = 0; k < mdp.task_count(); ++k) v += action.outcome[k] * u.values[k];
    return v;
}

Utilities value_iteration(const TrgMdp& mdp, double epsilon, int max_iter) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
    const std::size_t n = mdp.task_count();
    Utilities u;
    u.values.assign(n, 0.0);
    std::vector<double> next(n);
    u.residual = std::numeric_limits<double>::infinity();
    while (u.iterations < max_iter) {
        double residual = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            double best = 0.0;
            bool any = false;
            for (const auto& a : mdp.actions[s]) {
                const double q = action_value(mdp, u, s, a);
                if (!any || q > best) best = q;
                any = true;
            }
            next[s] = mdp.reward[s] + mdp.gamma * best;
            residual = std::max(residual, std::abs(next[s] - u.values[s]));
        }
        u.values.swap(next);
        u.residual = residual;
        ++u.iterations;
        if (residual <= epsilon) break;
    }

    double best = 0.0;
    bool any = false;
    for (const auto& a : mdp.actions[mdp.curr_index()]) {
        const double q = action_value(mdp, u, mdp.curr_index(), a);
        if (!any || q > best) best = q;
        any = true;
    }
    u.curr_value = mdp.gamma * best;

    if (u.residual > epsilon) {
        throw NonConvergence("value iteration did not reach epsilon after " + std::to_string(u.iterations) + " sweeps",
                             u);
    }
    return u;
}

TaskId next_task(const TrgMdp& mdp, const Utilities& u) {
    const auto& acts = mdp.actions.at(mdp.curr_index());
    if (acts.empty()) throw NoTasks("no task to select");
    std::size_t best = acts.front().target;
    double best_q = action_value(mdp, u, mdp.curr_index(), acts.front());
    for (std::size_t a = 1; a < acts.size(); ++a) {
        const double q = action_value(mdp, u, mdp.curr_index(), acts[a]);
        // Actions are in ascending task order, so strict > keeps the lowest id on ties.
        if (q > best_q) {
            best_q = q;
            best = acts[a].target;
        }
    }
    return mdp.tasks[best];
}

PolicyDecision decide_next_task(const Trg& trg, const MdpSettings& settings) {
    PolicyDecision d{TaskId{}, build_mdp(trg, settings.gamma), {}, true};
    try {
        d.utilities = value_iteration(d.mdp, settings.epsilon, settings.max_iter);
    } catch (const NonConvergence& e) {
        d.utilities = e.partial();
        d.converged = false;
    }
    d.task = next_task(d.mdp, d.utilities);
    return d;
}

}  // namespace topu
