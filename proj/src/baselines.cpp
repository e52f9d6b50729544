#include "certsched/baselines.hpp"

#include <algorithm>
#include <stdexcept>

namespace certsched {
namespace {

// Index of the cheapest candidate (ties toward the earlier entry, which is
// the shorter route pair by enumeration order), or -1 when the list is empty
// or nothing matches the predicate.
template <typename Pred>
int cheapest_index(const std::vector<ScheduledAction>& list, Pred keep) {
  int best = -1;
  for (int i = 0; i < static_cast<int>(list.size()); ++i) {
    if (!keep(list[i])) continue;
    if (best < 0 || list[i].slot_cost < list[best].slot_cost) best = i;
  }
  return best;
}

AllocationResult make_result(int n_loops) {
  AllocationResult res;
  res.decisions.resize(n_loops);
  for (int i = 0; i < n_loops; ++i) {
    res.decisions[i].loop = i;
    res.decisions[i].zero_kind = ZeroKind::kHold;
  }
  res.dp.picks.assign(n_loops, -1);
  return res;
}

void take(AllocationResult& res, int loop, const ScheduledAction& action,
          int index, int& budget) {
  AdmittedAction a;
  a.action = action;
  a.index = index;
  res.decisions[loop].admitted = a;
  res.dp.picks[loop] = index;
  res.dp.slots_used += action.slot_cost;
  budget -= action.slot_cost;
}

void finish(AllocationResult& res) {
  for (const auto& d : res.decisions) {
    if (d.admitted) res.scheduled.push_back(d.admitted->action);
  }
}

}  // namespace

PolicyId policy_from_name(const std::string& name) {
  if (name == "fixed_service") return PolicyId::kFixedService;
  if (name == "cert_fixed") return PolicyId::kCertFixed;
  if (name == "dyntx_hlc") return PolicyId::kDynTxHlc;
  if (name == "voi_sched") return PolicyId::kVoiSched;
  if (name == "safe") return PolicyId::kSafe;
  throw std::invalid_argument("unknown policy: " + name);
}

std::string policy_name(PolicyId id) {
  switch (id) {
    case PolicyId::kFixedService: return "fixed_service";
    case PolicyId::kCertFixed: return "cert_fixed";
    case PolicyId::kDynTxHlc: return "dyntx_hlc";
    case PolicyId::kVoiSched: return "voi_sched";
    case PolicyId::kSafe: return "safe";
  }
  throw std::logic_error("unreachable policy id");
}

AllocationResult fixed_service(const std::vector<std::vector<ScheduledAction>>& candidates,
                               int n_loops, int cycle, int s_budget) {
  AllocationResult res = make_result(n_loops);
  int budget = s_budget;
  const int start = (n_loops > 0) ? cycle % n_loops : 0;
  for (int r = 0; r < n_loops; ++r) {
    const int loop = (start + r) % n_loops;
    const int pick = cheapest_index(candidates[loop],
                                    [](const ScheduledAction&) { return true; });
    if (pick < 0) continue;  // no route: zero realization, rotation goes on
    if (candidates[loop][pick].slot_cost > budget) break;  // budget exhausted
    take(res, loop, candidates[loop][pick], pick, budget);
  }
  finish(res);
  return res;
}

AllocationResult cert_fixed(const std::vector<std::vector<ScheduledAction>>& candidates,
                            const std::vector<LoopState>& states,
                            const EnvelopeTable& table, const DriftParams& dp,
                            int s_budget) {
  const int n = static_cast<int>(candidates.size());
  AllocationResult res = make_result(n);
  int budget = s_budget;
  for (int loop = 0; loop < n; ++loop) {
    const auto safe = admit_safe(states[loop], candidates[loop], table, dp);
    res.decisions[loop].safe_count = static_cast<int>(safe.size());
    int pick = -1;
    for (int i = 0; i < static_cast<int>(safe.size()); ++i) {
      if (pick < 0 || safe[i].action.slot_cost < safe[pick].action.slot_cost) pick = i;
    }
    if (pick < 0 || safe[pick].action.slot_cost > budget) continue;
    take(res, loop, safe[pick].action, safe[pick].index, budget);
    res.decisions[loop].admitted = safe[pick];
  }
  finish(res);
  return res;
}

AllocationResult dyntx_hlc(const std::vector<std::vector<ScheduledAction>>& candidates,
                           const std::vector<LoopState>& states, double v_max,
                           int s_budget) {
  const int n = static_cast<int>(candidates.size());
  AllocationResult res = make_result(n);
  int budget = s_budget;
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&states](int a, int b) {
    return states[a].v > states[b].v;
  });
  for (int loop : order) {
    const double v = states[loop].v;
    const int depth = (v < v_max / 3.0) ? 0 : (v < 2.0 * v_max / 3.0) ? 1 : 2;
    const int pick = cheapest_index(candidates[loop], [depth](const ScheduledAction& a) {
      return a.retx == depth;
    });
    if (pick < 0 || candidates[loop][pick].slot_cost > budget) continue;
    take(res, loop, candidates[loop][pick], pick, budget);
  }
  finish(res);
  return res;
}

AllocationResult voi_sched(const std::vector<std::vector<ScheduledAction>>& candidates,
                           const std::vector<LoopState>& states,
                           const std::vector<int>& sample_ages,
                           double lambda_sigma, int s_budget) {
  const int n = static_cast<int>(candidates.size());
  AllocationResult res = make_result(n);
  int budget = s_budget;
  std::vector<int> pick(n, -1);
  std::vector<double> ratio(n, 0.0);
  for (int i = 0; i < n; ++i) {
    pick[i] = cheapest_index(candidates[i], [](const ScheduledAction&) { return true; });
    if (pick[i] < 0) continue;
    const double score = static_cast<double>(sample_ages[i]) *
                         (states[i].v + lambda_sigma * states[i].sigma_trace);
    ratio[i] = score / static_cast<double>(candidates[i][pick[i]].slot_cost);
  }
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&ratio](int a, int b) {
    return ratio[a] > ratio[b];
  });
  for (int loop : order) {
    if (pick[loop] < 0 || candidates[loop][pick[loop]].slot_cost > budget) continue;
    take(res, loop, candidates[loop][pick[loop]], pick[loop], budget);
  }
  finish(res);
  return res;
}

}  // namespace certsched
