#pragma once

// Independent reference computations used only by tests. Nothing here calls
// into the inference or solver code it is used to check.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "topu/hmm_avail.hpp"
#include "topu/mdp_policy.hpp"
#include "topu/trg.hpp"

namespace topu::oracle {

/// Smoothed posteriors by summing the joint over every hidden sequence.
inline std::vector<StateDistribution> enumerate_posteriors(const std::vector<bool>& obs, const HmmParams& params) {
    const std::size_t T = obs.size();
    std::vector<StateDistribution> post(T);
    for (auto& p : post) p.fill(0.0);
    std::size_t total = 1;
    for (std::size_t k = 0; k < T; ++k) total *= 8;
    std::vector<std::size_t> seq(T);
    double z = 0.0;
    for (std::size_t code = 0; code < total; ++code) {
        std::size_t c = code;
        for (std::size_t k = 0; k < T; ++k) {
            seq[k] = c % 8;
            c /= 8;
        }
        double w = params.prior[seq[0]];
        for (std::size_t k = 0; k < T; ++k) {
            const auto s = HiddenState::from_index(seq[k]);
            // Noisy-OR written out independently of emission_probability().
            double off = 1.0 - params.leak;
            if (s.so) off *= 1.0 - params.inhibit_so;
            if (s.mo) off *= 1.0 - params.inhibit_mo;
            if (s.tna) off *= 1.0 - params.inhibit_tna;
            w *= obs[k] ? 1.0 - off : off;
            if (k > 0) {
                const auto a = HiddenState::from_index(seq[k - 1]);
                auto step = [](const BinaryTransition& t, bool prev, bool next) {
                    const double p = prev ? t.true_given_true : t.true_given_false;
                    return next ? p : 1.0 - p;
                };
                w *= step(params.persist_so, a.so, s.so) * step(params.persist_mo, a.mo, s.mo) *
                     step(params.persist_tna, a.tna, s.tna);
            }
        }
        z += w;
        for (std::size_t k = 0; k < T; ++k) post[k][seq[k]] += w;
    }
    for (auto& p : post)
        for (double& v : p) v /= z;
    return post;
}

inline HmmParams random_params(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.02, 0.98);
    HmmParams p;
    double s = 0.0;
    for (double& v : p.prior) {
        v = u(rng);
        s += v;
    }
    for (double& v : p.prior) v /= s;
    p.persist_so = {u(rng), u(rng)};
    p.persist_mo = {u(rng), u(rng)};
    p.persist_tna = {u(rng), u(rng)};
    p.inhibit_so = u(rng);
    p.inhibit_mo = u(rng);
    p.inhibit_tna = u(rng);
    p.leak = u(rng) * 0.2;
    return p;
}

/// Solves A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> solve_linear(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t r = n; r-- > 0;) {
        double s = b[r];
        for (std::size_t k = r + 1; k < n; ++k) s -= a[r][k] * x[k];
        x[r] = s / a[r][r];
    }
    return x;
}

/// Optimal utilities by evaluating every deterministic stationary policy
/// exactly and taking the elementwise maximum. Transitions are rebuilt from
/// the TRG directly, not read from the MDP object.
inline std::vector<double> enumerate_policies(const Trg& trg, double gamma) {
    std::vector<TaskId> ids;
    for (const auto& [id, _] : trg.vertices) ids.push_back(id);
    const std::size_t n = ids.size();
    std::vector<double> reward(n);
    for (std::size_t i = 0; i < n; ++i)
        reward[i] = 1.0 / std::max(trg.edge_cost(Vertex::curr(), Vertex::task(ids[i])), 1e-6);
    if (n == 1) return {reward[0]};

    std::vector<std::size_t> choice(n, 0);  // index into "other tasks"
    std::vector<double> best(n, -std::numeric_limits<double>::infinity());
    while (true) {
        std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t j = choice[i] < i ? choice[i] : choice[i] + 1;
            const double p = trg.edge_unavail(Vertex::task(ids[i]), Vertex::task(ids[j]));
            a[i][i] += 1.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double prob = k == j ? 1.0 - p : p / static_cast<double>(n - 1);
                a[i][k] -= gamma * prob;
            }
        }
        const auto u = solve_linear(a, reward);
        for (std::size_t i = 0; i < n; ++i) best[i] = std::max(best[i], u[i]);
        std::size_t pos = 0;
        while (pos < n && ++choice[pos] == n - 1) choice[pos++] = 0;
        if (pos == n) break;
    }
    return best;
}

/// Random TRG with n tasks, costs in [lo, hi] and unavailability in [0, pmax].
inline Trg random_trg(std::mt19937_64& rng, std::size_t n, double lo = 0.5, double hi = 10.0, double pmax = 1.0) {
    std::uniform_real_distribution<double> pos(0.0, 10.0);
    std::uniform_real_distribution<double> cost(lo, hi);
    std::uniform_real_distribution<double> prob(0.0, pmax);
    std::map<TaskId, Point2> tasks;
    for (std::size_t i = 0; i < n; ++i) tasks[TaskId{static_cast<std::int64_t>(i + 1)}] = {pos(rng), pos(rng)};
    Trg trg = init_trg(tasks, {pos(rng), pos(rng)});
    for (auto& [k, c] : trg.cost) c = cost(rng);
    for (auto& [k, p] : trg.unavail) p = prob(rng);
    return trg;
}

/// Minimum expected cost over all orderings of every task.
inline double min_schedule_cost(const Trg& trg) {
    std::vector<TaskId> order;
    for (const auto& [id, _] : trg.vertices) order.push_back(id);
    double best = std::numeric_limits<double>::infinity();
    do {
        double c = 0.0;
        Vertex prev = Vertex::curr();
        for (TaskId id : order) {
            const Vertex v = Vertex::task(id);
            c += (1.0 - trg.edge_unavail(prev, v)) * trg.edge_cost(prev, v);
            prev = v;
        }
        best = std::min(best, c);
    } while (std::next_permutation(order.begin(), order.end()));
    return best;
}

}  // namespace topu::oracle
