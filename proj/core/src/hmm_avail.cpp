#include "topu/hmm_avail.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "topu/errors.hpp"

namespace topu {

namespace {

void require_probability(double p, const char* field) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(field, "must be a probability in [0, 1]");
}

}  // namespace

StateDistribution HmmParams::independent_prior(double p_so, double p_mo, double p_tna) {
    StateDistribution d{};
    for (std::size_t i = 0; i < HiddenState::kCount; ++i) {
        const auto s = HiddenState::from_index(i);
        d[i] = (s.so ? p_so : 1.0 - p_so) * (s.mo ? p_mo : 1.0 - p_mo) * (s.tna ? p_tna : 1.0 - p_tna);
    }
    return d;
}

HmmParams HmmParams::defaults() {
    HmmParams p;
    p.prior = independent_prior(0.1, 0.1, 0.1);
    return p;
}

double HmmParams::transition(std::size_t prev, std::size_t next) const {
    const auto a = HiddenState::from_index(prev);
    const auto b = HiddenState::from_index(next);
    return persist_so.prob(b.so, a.so) * persist_mo.prob(b.mo, a.mo) * persist_tna.prob(b.tna, a.tna);
}

void HmmParams::validate() const {
    double sum = 0.0;
    for (double p : prior) {
        require_probability(p, "hmm.prior");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("hmm.prior", "must sum to 1");
    require_probability(persist_so.true_given_true, "hmm.persist_so");
    require_probability(persist_so.true_given_false, "hmm.persist_so");
    require_probability(persist_mo.true_given_true, "hmm.persist_mo");
    require_probability(persist_mo.true_given_false, "hmm.persist_mo");
    require_probability(persist_tna.true_given_true, "hmm.persist_tna");
    require_probability(persist_tna.true_given_false, "hmm.persist_tna");
    require_probability(inhibit_so, "hmm.inhibit_so");
    require_probability(inhibit_mo, "hmm.inhibit_mo");
    require_probability(inhibit_tna, "hmm.inhibit_tna");
    require_probability(leak, "hmm.leak");
}

void EdgeBelief::append(bool pll, std::size_t window) {
    observations.push_back(pll);
    if (window > 0 && observations.size() > window) {
        observations.erase(observations.begin(),
                           observations.begin() + static_cast<std::ptrdiff_t>(observations.size() - window));
    }
}

bool observe_pll(double edge_cost, double min_incident_cost, double gamma) {
    return !(edge_cost <= gamma * min_incident_cost);
}

double emission_probability(HiddenState state, const HmmParams& params) {
    double off = 1.0 - params.leak;
    if (state.so) off *= 1.0 - params.inhibit_so;
    if (state.mo) off *= 1.0 - params.inhibit_mo;
    if (state.tna) off *= 1.0 - params.inhibit_tna;
    return 1.0 - off;
}

std::vector<StateDistribution> forward_backward(const std::vector<bool>& observations, const HmmParams& params) {
    constexpr std::size_t N = HiddenState::kCount;
    const std::size_t T = observations.size();
    if (T == 0) throw std::invalid_argument("forward_backward needs at least one observation");

    std::array<std::array<double, N>, N> trans{};
    std::array<double, N> emit_true{};
    for (std::size_t i = 0; i < N; ++i) {
        emit_true[i] = emission_probability(HiddenState::from_index(i), params);
        for (std::size_t j = 0; j < N; ++j) trans[i][j] = params.transition(i, j);
    }
    auto emit = [&](std::size_t s, bool obs) { return obs ? emit_true[s] : 1.0 - emit_true[s]; };

    // Scaled forward pass: alpha[k] is P(X_k | obs_1..k).
    std::vector<StateDistribution> alpha(T);
    for (std::size_t k = 0; k < T; ++k) {
        double z = 0.0;
        for (std::size_t j = 0; j < N; ++j) {
            double pred = 0.0;
            if (k == 0) {
                pred = params.prior[j];
            } else {
                for (std::size_t i = 0; i < N; ++i) pred += alpha[k - 1][i] * trans[i][j];
            }
            alpha[k][j] = pred * emit(j, observations[k]);
            z += alpha[k][j];
        }
        if (!(z > 0.0)) {
            throw DegenerateModel("observation " + std::to_string(k) + " has zero likelihood under every state");
        }
        for (double& a : alpha[k]) a /= z;
    }

    // Backward pass, rescaled each step to unit sum.
    std::vector<StateDistribution> post(T);
    StateDistribution beta;
    beta.fill(1.0);
    for (std::size_t k = T; k-- > 0;) {
        if (k + 1 < T) {
            StateDistribution next{};
            double z = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                for (std::size_t j = 0; j < N; ++j) next[i] += trans[i][j] * emit(j, observations[k + 1]) * beta[j];
                z += next[i];
            }
            for (std::size_t i = 0; i < N; ++i) beta[i] = next[i] / z;
        }
        double z = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            post[k][i] = alpha[k][i] * beta[i];
            z += post[k][i];
        }
        for (double& p : post[k]) p /= z;
    }
    return post;
}

double tna_marginal(const StateDistribution& dist) {
    double p = 0.0;
    for (std::size_t i = 0; i < HiddenState::kCount; ++i) {
        if (HiddenState::from_index(i).tna) p += dist[i];
    }
    return p;
}

std::map<TaskId, double> edge_unavailability(const std::map<TaskId, double>& raw_tna, UnavailabilityMode mode) {
    if (raw_tna.empty()) throw std::invalid_argument("edge_unavailability needs at least one edge");
    double sum = 0.0;
    for (const auto& [id, p] : raw_tna) {
        if (!(p >= 0.0 && p <= 1.0)) throw OutOfRangeProbability("raw TNA posterior outside [0, 1]");
        sum += p;
    }
    std::map<TaskId, double> out;
    for (const auto& [id, p] : raw_tna) {
        if (mode == UnavailabilityMode::Clamp) {
            out[id] = std::clamp(p, 0.0, 1.0);
        } else {
            out[id] = sum > 0.0 ? p / sum : 0.0;
        }
    }
    return out;
}

}  // namespace topu
