#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <vector>

#include "topu/trg.hpp"

namespace topu {

/// Joint value of the three hidden causes of a long path: static obstacle,
/// mobile obstacle, task not available.
struct HiddenState {
    bool so = false;
    bool mo = false;
    bool tna = false;

    static constexpr std::size_t kCount = 8;
    constexpr std::size_t index() const { return (so ? 1u : 0u) | (mo ? 2u : 0u) | (tna ? 4u : 0u); }
    static constexpr HiddenState from_index(std::size_t i) { return {(i & 1u) != 0, (i & 2u) != 0, (i & 4u) != 0}; }
    friend bool operator==(const HiddenState&, const HiddenState&) = default;
};

using StateDistribution = std::array<double, HiddenState::kCount>;

/// P(var_t = true | var_{t-1}).
struct BinaryTransition {
    double true_given_true = 0.9;
    double true_given_false = 0.1;

    double prob(bool next, bool prev) const {
        const double t = prev ? true_given_true : true_given_false;
        return next ? t : 1.0 - t;
    }
};

struct HmmParams {
    StateDistribution prior{};
    BinaryTransition persist_so;
    BinaryTransition persist_mo;
    BinaryTransition persist_tna{0.98, 0.02};
    double inhibit_so = 0.9;  // activation probability of each noisy-OR parent
    double inhibit_mo = 0.8;
    double inhibit_tna = 0.95;
    double leak = 0.01;

    /// Shipped defaults: independent prior with P(true) = 0.1 per variable.
    static HmmParams defaults();
    /// Prior where each variable is independently true with the given probability.
    static StateDistribution independent_prior(double p_so, double p_mo, double p_tna);

    /// Joint transition P(next | prev), the product of the three binary rows.
    double transition(std::size_t prev, std::size_t next) const;

    /// Throws ValidationError naming the offending field.
    void validate() const;
};

enum class UnavailabilityMode { Normalize, Clamp };

/// Observation history and smoothed belief for one directed TRG edge.
struct EdgeBelief {
    std::vector<bool> observations;
    double smoothed_tna = 0.0;

    /// Appends and drops the oldest entries beyond `window`.
    void append(bool pll, std::size_t window);
};

/// PLL: true iff edge_cost > gamma * min_incident_cost.
bool observe_pll(double edge_cost, double min_incident_cost, double gamma);

/// Noisy-OR: 1 - (1 - leak) * prod over true parents of (1 - activation).
double emission_probability(HiddenState state, const HmmParams& params);

/// Smoothed posteriors P(X_k | PLL_{1:T}) for every k. Throws
/// std::invalid_argument on empty input and DegenerateModel when the evidence
/// has zero likelihood.
std::vector<StateDistribution> forward_backward(const std::vector<bool>& observations, const HmmParams& params);

/// Marginal P(TNA = true) of a joint distribution.
double tna_marginal(const StateDistribution& dist);

/// Converts per-edge TNA posteriors of the edges leaving one vertex into
/// unavailability probabilities: normalized to sum to one (all zero if every
/// input is zero), or clamped raw values in Clamp mode.
std::map<TaskId, double> edge_unavailability(const std::map<TaskId, double>& raw_tna,
                                             UnavailabilityMode mode = UnavailabilityMode::Normalize);

}  // namespace topu
