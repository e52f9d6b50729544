#pragma once

// Online certified allocation: state-conditioned admission of priced actions,
// zero-allocation baselines, utility formation, frontier pruning, and the
// exact slot-budgeted dynamic program, composed per cycle.

#include <optional>
#include <vector>

#include "certsched/frame.hpp"
#include "certsched/lkf.hpp"
#include "certsched/plant.hpp"

namespace certsched {

struct DriftParams {
  double lambda_sigma = 1.0;  // covariance weight in W = v + lambda * trace
  double tr_proc = 0.0;       // per-cycle process-noise covariance trace
  double tr_meas = 0.0;       // measurement covariance trace
};

// Worst-case one-cycle change of the covariance trace under the certificate:
// a successful refresh lands on the staleness floor, a miss grows open loop;
// the expectation is evaluated at the reliability lower bound and the branch
// is picked by the sign of the refresh gain.
double covariance_envelope(const LoopState& zeta, const QosCertificate& q,
                           const TimingTriple& timing, const DriftParams& dp);

// Certified bound on E[W(next) - W(now)] for one scheduled opportunity:
// (cycle envelope - 1) * v + lambda * covariance envelope.  Throws
// std::invalid_argument when the failure run has already exhausted the
// certificate's interaction budget (c >= g).
double drift_bound(const LoopState& zeta, const CertifiedFactors& factors,
                   const QosCertificate& q, const TimingTriple& timing,
                   const DriftParams& dp);

struct AdmittedAction {
  ScheduledAction action;
  CertifiedFactors factors;
  double phi = 0.0;      // certified drift bound, <= 0 by admission
  double utility = 0.0;  // baseline - phi
  int index = 0;         // position in the loop's candidate list
};

// Retain candidates whose failure counter is inside the interaction budget
// and whose drift bound is nonpositive.  Candidates whose timing falls
// outside the solved delay grid cannot be certified and are dropped.
// Utilities are left at zero; the caller fills them once the baseline is
// known.
std::vector<AdmittedAction> admit_safe(const LoopState& zeta,
                                       const std::vector<ScheduledAction>& candidates,
                                       const EnvelopeTable& table,
                                       const DriftParams& dp);

// Drift of the certified zero-allocation continuation: the hold map when it
// stays inside the admissible domain, otherwise the local-autonomy step.
double zero_baseline(const LoopState& zeta, const AdmissibleDomain& domain,
                     const SafeModeParams& safe, double alpha_hold,
                     const DriftParams& dp);

inline double action_utility(double baseline, double phi) {
  return baseline - phi;
}

// Remove every action strictly dominated certificate-and-cost-wise by
// another member.  Dominance must align with utility (the dominating action
// is at least as useful and no more expensive); a violation indicates a
// broken envelope table and throws std::logic_error.
std::vector<AdmittedAction> prune_frontier(std::vector<AdmittedAction> safe);

struct DpResult {
  std::vector<int> picks;  // per loop: index into its frontier, -1 = zero
  double value = 0.0;
  int slots_used = 0;
  long long ops = 0;  // inner-iteration count, for the complexity check
};

// Exact multi-choice knapsack over per-loop frontiers plus the implicit zero
// choice: maximize total utility subject to the slot budget.  Ties prefer
// lower total slot usage, then the zero choice, then lower action index.
DpResult dp_allocate(const std::vector<std::vector<AdmittedAction>>& frontiers,
                     int s_budget);

// Exhaustive reference for small instances; returns the optimal value.
double brute_force_allocate(const std::vector<std::vector<AdmittedAction>>& sets,
                            int s_budget);

enum class ZeroKind { kHold, kSafe };

struct CycleDecision {
  int loop = 0;
  std::optional<AdmittedAction> admitted;  // engaged when a slot action won
  ZeroKind zero_kind = ZeroKind::kHold;    // realization of the zero choice
  double baseline = 0.0;
  int safe_count = 0;      // |safe set| after admission
  int frontier_count = 0;  // after pruning
};

struct AllocationResult {
  std::vector<CycleDecision> decisions;      // one per loop, loop order
  std::vector<ScheduledAction> scheduled;    // winning actions, loop order
  DpResult dp;
  // Kept for oracle cross-checks: the post-admission sets before and after
  // pruning (small at the instance sizes where the oracle runs).
  std::vector<std::vector<AdmittedAction>> safe_sets;
  std::vector<std::vector<AdmittedAction>> frontiers;
};

// One full allocation cycle: admit each loop's priced candidates, form
// baselines and utilities, prune to the frontier, run the DP, and realize
// zero choices as hold or safe mode by hold-admissibility.
AllocationResult allocate_cycle(
    const std::vector<std::vector<ScheduledAction>>& candidates,
    const std::vector<LoopState>& states, const EnvelopeTable& table,
    const AdmissibleDomain& domain, const SafeModeParams& safe,
    double alpha_hold, const DriftParams& dp, int s_budget);

}  // namespace certsched
