#include "certsched/failure_chain.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace certsched {

double interaction_tail(const ChainParams& chain, int l) {
  if (!chain.valid()) throw std::invalid_argument("interaction_tail: bad chain");
  if (l < 1) throw std::invalid_argument("interaction_tail: l must be >= 1");
  return chain.mu1 * std::pow(chain.p11, l - 1);
}

std::optional<int> failure_tolerance(const ChainParams& chain, int h_t,
                                     double delta_t) {
  if (!chain.valid()) throw std::invalid_argument("failure_tolerance: bad chain");
  if (h_t < 1) throw std::invalid_argument("failure_tolerance: h_t must be >= 1");
  if (!(delta_t > 0.0)) {
    throw std::invalid_argument("failure_tolerance: delta_t must be > 0");
  }
  const double budget = static_cast<double>(h_t) * chain.mu1;
  if (budget <= delta_t || chain.mu1 == 0.0) return 1;
  if (chain.p11 == 0.0) return 2;  // runs beyond one failure are impossible
  if (chain.p11 >= 1.0) return std::nullopt;

  // Closed form L = 1 + log(delta/(h_t*mu1)) / log(p11), then walk to the
  // exact boundary of the direct inequality (log rounding can be off by one).
  const double raw = 1.0 + std::log(delta_t / budget) / std::log(chain.p11);
  int l = std::max(1, static_cast<int>(std::ceil(raw)) - 2);
  while (static_cast<double>(h_t) * interaction_tail(chain, l) > delta_t) ++l;
  return l;
}

double realized_max_interval(const std::vector<bool>& outcomes, double t_s) {
  if (!(t_s > 0.0)) {
    throw std::invalid_argument("realized_max_interval: t_s must be > 0");
  }
  int prev = -1;
  int max_gap = 0;
  int successes = 0;
  for (int m = 0; m < static_cast<int>(outcomes.size()); ++m) {
    if (!outcomes[m]) continue;
    ++successes;
    if (prev >= 0) max_gap = std::max(max_gap, m - prev);
    prev = m;
  }
  if (successes < 2) return std::numeric_limits<double>::infinity();
  return static_cast<double>(max_gap) * t_s;
}

int longest_failure_run(const std::vector<bool>& outcomes) {
  int best = 0;
  int run = 0;
  for (bool ok : outcomes) {
    run = ok ? 0 : run + 1;
    best = std::max(best, run);
  }
  return best;
}

double compose_budgets(const std::vector<double>& deltas) {
  double total = 0.0;
  for (double d : deltas) {
    if (!(d >= 0.0)) throw std::invalid_argument("compose_budgets: delta < 0");
    total += d;
  }
  return total;
}

std::vector<bool> sample_outcome_window(const ChainParams& chain, int h_t,
                                        const CounterRng& rng,
                                        std::uint64_t trial) {
  if (!chain.valid()) throw std::invalid_argument("sample_outcome_window: bad chain");
  if (h_t < 1) throw std::invalid_argument("sample_outcome_window: h_t must be >= 1");
  // Success-to-failure probability that makes mu1 the stationary failure
  // marginal under persistence p11.
  const double p01 =
      chain.mu1 >= 1.0
          ? 1.0
          : std::min(1.0, chain.mu1 * (1.0 - chain.p11) / (1.0 - chain.mu1));

  std::vector<bool> outcomes(static_cast<std::size_t>(h_t));
  bool failed = rng.uniform(CounterRng::kChain, trial, std::uint64_t{0}) < chain.mu1;
  outcomes[0] = !failed;
  for (int m = 1; m < h_t; ++m) {
    const double p_fail = failed ? chain.p11 : p01;
    failed = rng.uniform(CounterRng::kChain, trial,
                         static_cast<std::uint64_t>(m)) < p_fail;
    outcomes[static_cast<std::size_t>(m)] = !failed;
  }
  return outcomes;
}

double validate_interaction_certificate(const ChainParams& chain, int g,
                                        int h_t, int trials,
                                        const CounterRng& rng) {
  if (g < 1) throw std::invalid_argument("validate_interaction_certificate: g < 1");
  if (trials < 1) {
    throw std::invalid_argument("validate_interaction_certificate: trials < 1");
  }
  int violations = 0;
  for (int t = 0; t < trials; ++t) {
    const auto window =
        sample_outcome_window(chain, h_t, rng, static_cast<std::uint64_t>(t));
    if (longest_failure_run(window) >= g) ++violations;
  }
  return static_cast<double>(violations) / static_cast<double>(trials);
}

}  // namespace certsched
