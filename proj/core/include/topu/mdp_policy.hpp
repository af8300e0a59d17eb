#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "topu/errors.hpp"
#include "topu/trg.hpp"

namespace topu {

inline constexpr double kMinRewardCost = 1e-6;

struct MdpSettings {
    double gamma = 0.8;
    double epsilon = 1e-6;
    int max_iter = 10000;
};

/// MDP induced by a TRG. State indices 0..n-1 are the tasks in id order; the
/// CURR pseudo-state has index n and never appears as an outcome.
struct TrgMdp {
    struct Action {
        std::size_t target = 0;         // task index the edge leads to
        std::vector<double> outcome;    // probability per task index, size n
    };

    std::vector<TaskId> tasks;
    std::vector<double> reward;                 // size n; CURR earns nothing
    std::vector<std::vector<Action>> actions;   // size n + 1
    double gamma = 0.8;

    std::size_t task_count() const { return tasks.size(); }
    std::size_t curr_index() const { return tasks.size(); }
    std::size_t index_of(TaskId id) const;
};

struct Utilities {
    std::vector<double> values;  // per task index
    double curr_value = 0.0;
    double residual = 0.0;
    int iterations = 0;

    double at(const TrgMdp& mdp, TaskId id) const { return values.at(mdp.index_of(id)); }
};

class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, Utilities partial) : Error(what), partial_(std::move(partial)) {}
    const Utilities& partial() const { return partial_; }

private:
    Utilities partial_;
};

/// P(outcome | edge towards target): 1 - p for the target itself, otherwise
/// p spread evenly over the other n_vertices - 1 tasks. Throws
/// DegenerateFanout when the failure mass has nowhere to go.
double transition_prob(double p_unavail, std::size_t n_vertices, TaskId target, TaskId outcome);

/// Throws EmptyTrg when the TRG has no tasks.
TrgMdp build_mdp(const Trg& trg, double gamma);

/// Synchronous Bellman sweeps until the largest change is <= epsilon. Throws
/// NonConvergence (with the partial result) after max_iter sweeps.
Utilities value_iteration(const TrgMdp& mdp, double epsilon, int max_iter);

/// Expected utility of taking `action` from `state`.
double action_value(const TrgMdp& mdp, const Utilities& u, std::size_t state, const TrgMdp::Action& action);

/// Best edge out of CURR; ties go to the lowest task id. Throws NoTasks.
TaskId next_task(const TrgMdp& mdp, const Utilities& u);

/// build_mdp + value_iteration + next_task. A NonConvergence result is
/// accepted and its partial utilities used.
struct PolicyDecision {
    TaskId task;
    TrgMdp mdp;
    Utilities utilities;
    bool converged = true;
};
PolicyDecision decide_next_task(const Trg& trg, const MdpSettings& settings);

}  // namespace topu
