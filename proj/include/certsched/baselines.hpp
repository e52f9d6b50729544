#pragma once

// Comparison policies.  All consume the same per-loop candidate lists and
// loop states as the certified allocator and return the same decision shape,
// so the harness executes every policy against identical channel draws.
// Their zero choices are always realized as nominal hold (no certified safe
// fallback): the policies differ from the certified allocator exactly in
// admission and selection.

#include <string>
#include <vector>

#include "certsched/allocator.hpp"

namespace certsched {

enum class PolicyId { kFixedService, kCertFixed, kDynTxHlc, kVoiSched, kSafe };

PolicyId policy_from_name(const std::string& name);
std::string policy_name(PolicyId id);

// Round-robin regular service: starting at loop (cycle mod N), each loop in
// rotation order takes its cheapest candidate; the first loop whose cheapest
// candidate no longer fits ends the rotation and later loops get zero.
AllocationResult fixed_service(const std::vector<std::vector<ScheduledAction>>& candidates,
                               int n_loops, int cycle, int s_budget);

// Certificate filtering with a static priority rule: admission identical to
// the certified allocator, then loops in index order each take their
// lowest-slot-cost safe action while it fits.
AllocationResult cert_fixed(const std::vector<std::vector<ScheduledAction>>& candidates,
                            const std::vector<LoopState>& states,
                            const EnvelopeTable& table, const DriftParams& dp,
                            int s_budget);

// Adaptive transmission count with hold-last-control: desired retransmission
// depth 0/1/2 for v in the low/mid/high thirds of v_max; each loop offers its
// cheapest candidate at that depth; loops served greedily by v descending.
AllocationResult dyntx_hlc(const std::vector<std::vector<ScheduledAction>>& candidates,
                           const std::vector<LoopState>& states, double v_max,
                           int s_budget);

// Value-of-information scheduling: score = sample age * (v + lambda * trace),
// loops served greedily by score per slot on their cheapest candidates.
AllocationResult voi_sched(const std::vector<std::vector<ScheduledAction>>& candidates,
                           const std::vector<LoopState>& states,
                           const std::vector<int>& sample_ages,
                           double lambda_sigma, int s_budget);

}  // namespace certsched
