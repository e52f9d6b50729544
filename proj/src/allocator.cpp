#include "certsched/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace certsched {

double covariance_envelope(const LoopState& zeta, const QosCertificate& q,
                           const TimingTriple& timing, const DriftParams& dp) {
  const double staleness_floor = refresh_floor(timing.h_ul, dp.tr_meas, dp.tr_proc);
  const double delta = staleness_floor - zeta.sigma_trace - dp.tr_proc;
  if (delta >= 0.0) return delta + dp.tr_proc;
  return q.rho_ul * delta + dp.tr_proc;
}

double drift_bound(const LoopState& zeta, const CertifiedFactors& factors,
                   const QosCertificate& q, const TimingTriple& timing,
                   const DriftParams& dp) {
  const double envelope = cycle_envelope(factors, q.rho_ul, q.rho_dl,
                                         zeta.failure_run, timing.g);
  return (envelope - 1.0) * zeta.v +
         dp.lambda_sigma * covariance_envelope(zeta, q, timing, dp);
}

std::vector<AdmittedAction> admit_safe(const LoopState& zeta,
                                       const std::vector<ScheduledAction>& candidates,
                                       const EnvelopeTable& table,
                                       const DriftParams& dp) {
  std::vector<AdmittedAction> out;
  const auto& sol = table.solution();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& cand = candidates[i];
    if (cand.timing.h_ul > sol.h_ul_max || cand.timing.h_dl > sol.h_dl_max) {
      continue;  // certification grid does not cover this timing
    }
    if (zeta.failure_run >= cand.timing.g) continue;
    AdmittedAction a;
    a.action = cand;
    a.factors = table.factors(cand.timing.h_ul, cand.timing.h_dl);
    a.phi = drift_bound(zeta, a.factors, cand.cert, cand.timing, dp);
    if (a.phi > 0.0) continue;
    a.index = static_cast<int>(i);
    out.push_back(std::move(a));
  }
  return out;
}

double zero_baseline(const LoopState& zeta, const AdmissibleDomain& domain,
                     const SafeModeParams& safe, double alpha_hold,
                     const DriftParams& dp) {
  if (hold_admissible(zeta, domain, alpha_hold, dp.tr_proc)) {
    return (alpha_hold - 1.0) * zeta.v + dp.lambda_sigma * dp.tr_proc;
  }
  return safe_mode_step(zeta, domain, safe, dp.tr_proc, dp.lambda_sigma).second;
}

std::vector<AdmittedAction> prune_frontier(std::vector<AdmittedAction> safe) {
  const std::size_t n = safe.size();
  std::vector<char> dominated(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || dominated[i]) continue;
      if (action_dominates(safe[i].action.cert, safe[i].action.slot_cost,
                           safe[j].action.cert, safe[j].action.slot_cost)) {
        // Dominance must never discard utility: the certified drift of the
        // stronger certificate is no larger, so its utility is no smaller.
        const double scale =
            std::max({1.0, std::fabs(safe[i].utility), std::fabs(safe[j].utility)});
        if (safe[i].utility < safe[j].utility - 1e-9 * scale) {
          throw std::logic_error(
              "frontier pruning: dominating action has lower utility");
        }
        dominated[j] = 1;
      }
    }
  }
  std::vector<AdmittedAction> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!dominated[i]) out.push_back(std::move(safe[i]));
  }
  return out;
}

DpResult dp_allocate(const std::vector<std::vector<AdmittedAction>>& frontiers,
                     int s_budget) {
  const int n = static_cast<int>(frontiers.size());
  const int budget = std::max(0, s_budget);
  DpResult result;
  result.picks.assign(n, -1);
  if (n == 0) return result;

  const int cols = budget + 1;
  // value[i][b], used[i][b], choice[i][b] flattened row-major.
  std::vector<double> value(static_cast<std::size_t>(n) * cols, 0.0);
  std::vector<int> used(static_cast<std::size_t>(n) * cols, 0);
  std::vector<int> choice(static_cast<std::size_t>(n) * cols, -1);
  auto at = [cols](int i, int b) { return static_cast<std::size_t>(i) * cols + b; };

  for (int i = 0; i < n; ++i) {
    for (int b = 0; b <= budget; ++b) {
      // Zero choice first: value 0, no slots.
      double best_v = (i > 0) ? value[at(i - 1, b)] : 0.0;
      int best_u = (i > 0) ? used[at(i - 1, b)] : 0;
      int best_c = -1;
      ++result.ops;
      for (int k = 0; k < static_cast<int>(frontiers[i].size()); ++k) {
        ++result.ops;
        const auto& a = frontiers[i][k];
        const int s = a.action.slot_cost;
        if (s > b) continue;
        const double v = ((i > 0) ? value[at(i - 1, b - s)] : 0.0) + a.utility;
        const int u = ((i > 0) ? used[at(i - 1, b - s)] : 0) + s;
        if (v > best_v || (v == best_v && (u < best_u ||
                                           (u == best_u && k < best_c && best_c >= 0)))) {
          best_v = v;
          best_u = u;
          best_c = k;
        }
      }
      value[at(i, b)] = best_v;
      used[at(i, b)] = best_u;
      choice[at(i, b)] = best_c;
    }
  }

  int best_b = 0;
  for (int b = 1; b <= budget; ++b) {
    if (value[at(n - 1, b)] > value[at(n - 1, best_b)] ||
        (value[at(n - 1, b)] == value[at(n - 1, best_b)] &&
         used[at(n - 1, b)] < used[at(n - 1, best_b)])) {
      best_b = b;
    }
  }
  result.value = value[at(n - 1, best_b)];
  result.slots_used = used[at(n - 1, best_b)];
  int b = best_b;
  for (int i = n - 1; i >= 0; --i) {
    const int c = choice[at(i, b)];
    result.picks[i] = c;
    if (c >= 0) b -= frontiers[i][c].action.slot_cost;
  }
  return result;
}

double brute_force_allocate(const std::vector<std::vector<AdmittedAction>>& sets,
                            int s_budget) {
  const int n = static_cast<int>(sets.size());
  double best = 0.0;
  std::vector<int> pick(n, -1);
  // Depth-first over every per-loop choice including zero.
  std::function<void(int, int, double)> rec = [&](int i, int slots, double util) {
    if (slots > s_budget) return;
    if (i == n) {
      best = std::max(best, util);
      return;
    }
    rec(i + 1, slots, util);
    for (const auto& a : sets[i]) {
      rec(i + 1, slots + a.action.slot_cost, util + a.utility);
    }
  };
  rec(0, 0, 0.0);
  return best;
}

AllocationResult allocate_cycle(
    const std::vector<std::vector<ScheduledAction>>& candidates,
    const std::vector<LoopState>& states, const EnvelopeTable& table,
    const AdmissibleDomain& domain, const SafeModeParams& safe,
    double alpha_hold, const DriftParams& dp, int s_budget) {
  const int n = static_cast<int>(candidates.size());
  if (static_cast<int>(states.size()) != n) {
    throw std::invalid_argument("allocate_cycle: one state per loop required");
  }
  AllocationResult res;
  res.decisions.resize(n);
  res.safe_sets.resize(n);
  res.frontiers.resize(n);
  for (int i = 0; i < n; ++i) {
    auto& d = res.decisions[i];
    d.loop = i;
    d.baseline = zero_baseline(states[i], domain, safe, alpha_hold, dp);
    auto admitted = admit_safe(states[i], candidates[i], table, dp);
    d.safe_count = static_cast<int>(admitted.size());
    for (auto& a : admitted) a.utility = action_utility(d.baseline, a.phi);
    res.safe_sets[i] = admitted;
    res.frontiers[i] = prune_frontier(std::move(admitted));
    d.frontier_count = static_cast<int>(res.frontiers[i].size());
  }
  const auto& frontiers = res.frontiers;
  res.dp = dp_allocate(frontiers, s_budget);
  for (int i = 0; i < n; ++i) {
    auto& d = res.decisions[i];
    const int pick = res.dp.picks[i];
    if (pick >= 0) {
      d.admitted = frontiers[i][pick];
      res.scheduled.push_back(d.admitted->action);
    } else {
      d.zero_kind = hold_admissible(states[i], domain, alpha_hold, dp.tr_proc)
                        ? ZeroKind::kHold
                        : ZeroKind::kSafe;
    }
  }
  return res;
}

}  // namespace certsched
