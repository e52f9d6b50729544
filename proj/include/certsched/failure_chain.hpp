#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "certsched/rng.hpp"

namespace certsched {

// Two-state burst model of bidirectional opportunity outcomes: mu1 bounds the
// probability that an opportunity fails, p11 bounds the probability that a
// failure is followed by another failure.
struct ChainParams {
  double mu1 = 0.0;
  double p11 = 0.0;

  bool valid() const {
    return mu1 >= 0.0 && mu1 <= 1.0 && p11 >= 0.0 && p11 <= 1.0;
  }
};

// Probability bound for a run of l consecutive failures starting at a fixed
// opportunity: mu1 * p11^(l-1).  l >= 1.
double interaction_tail(const ChainParams& chain, int l);

// Smallest L >= 1 such that h_t * mu1 * p11^(L-1) <= delta_t, i.e. the union
// bound over a horizon of h_t opportunities keeps the probability of an
// L-failure block within delta_t.  Empty when no finite L exists (p11 = 1
// with a budget smaller than h_t * mu1).  Closed form via logarithms,
// cross-checked against the direct inequality before returning.
std::optional<int> failure_tolerance(const ChainParams& chain, int h_t,
                                     double delta_t);

// Longest realized gap between consecutive successful opportunities, on the
// opportunity clock t_s.  outcomes[m] == true means success at time
// (m+1)*t_s.  Returns +infinity when fewer than two successes occurred
// (no completed interval exists).
double realized_max_interval(const std::vector<bool>& outcomes, double t_s);

// Length of the longest all-failure run in the window.  A run of length >= g
// is exactly the certified interaction-violation event: it is equivalent to
// some completed inter-success interval exceeding g*t_s.
int longest_failure_run(const std::vector<bool>& outcomes);

// Union composition of per-certificate violation budgets.
double compose_budgets(const std::vector<double>& deltas);

// Draw one window of h_t outcomes from the chain at the certified bounds:
// failure persistence p11, stationary failure marginal mu1 (so the
// success-to-failure probability is mu1*(1-p11)/(1-mu1)), initial state from
// the stationary distribution.  outcomes[m] == true means success.
std::vector<bool> sample_outcome_window(const ChainParams& chain, int h_t,
                                        const CounterRng& rng,
                                        std::uint64_t trial);

// Monte-Carlo frequency of the certified violation event (a g-failure block
// inside the h_t-window) under the bounded chain.  With a certified
// g = failure_tolerance(...) the frequency stays within delta_t up to
// binomial noise.
double validate_interaction_certificate(const ChainParams& chain, int g,
                                        int h_t, int trials,
                                        const CounterRng& rng);

}  // namespace certsched
