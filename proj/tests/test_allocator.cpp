#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "certsched/allocator.hpp"
#include "certsched/certificate.hpp"
#include "certsched/frame.hpp"
#include "certsched/lkf.hpp"
#include "certsched/plant.hpp"
#include "doctest.h"

using namespace certsched;

namespace {

CertifiedFactors flat_factors(double a) {
  CertifiedFactors f;
  f.a11 = f.a10 = f.a01 = f.a00 = a;
  f.runs = {a};
  f.hold = 1.1;
  f.depth = 1;
  return f;
}

QosCertificate make_cert(double d_ul, double d_dl, double t_cert, double rho_ul,
                         double rho_dl) {
  QosCertificate q;
  q.d_ul = d_ul;
  q.d_dl = d_dl;
  q.t_cert = t_cert;
  q.rho_ul = rho_ul;
  q.rho_dl = rho_dl;
  return q;
}

ScheduledAction make_action(int h_ul, int h_dl, int g, double rho_ul,
                            double rho_dl, int slot_cost) {
  const double t_s = 0.25;
  ScheduledAction a;
  a.cert = make_cert(h_ul * t_s, h_dl * t_s, g * t_s, rho_ul, rho_dl);
  a.timing = TimingTriple{h_ul, h_dl, g};
  a.slot_cost = slot_cost;
  return a;
}

LoopState make_state(double v, double sigma, int run) {
  LoopState z;
  z.z = Eigen::VectorXd::Zero(3);
  z.v = v;
  z.sigma_trace = sigma;
  z.failure_run = run;
  return z;
}

AdmittedAction priced(const ScheduledAction& a, double utility) {
  AdmittedAction out;
  out.action = a;
  out.utility = utility;
  return out;
}

const EnvelopeTable& shared_table() {
  static const EnvelopeTable table = [] {
    const Eigen::Matrix3d bk =
        0.25 * lqr_gain(0.25, 1.0, 0.1) * Eigen::Matrix3d::Identity();
    auto sol = solve_lkf(bk, 2, 2);
    REQUIRE(sol.has_value());
    return EnvelopeTable(std::move(*sol));
  }();
  return table;
}

DriftParams desk_drift() {
  DriftParams dp;
  dp.lambda_sigma = 1.0;
  dp.tr_proc = 0.01;
  dp.tr_meas = 0.03;
  return dp;
}

// Covariance weight at the scale the closed loop actually runs with: the
// run-cycle growth factors always exceed one, so admission relies on a
// strongly negative staleness term.
DriftParams scarce_drift() {
  DriftParams dp = desk_drift();
  dp.lambda_sigma = 1000.0;
  return dp;
}

}  // namespace

TEST_CASE("covariance envelope: deterministic branch when refresh cannot help") {
  // Staleness floor refresh_floor(0, 0.03, 0.01) = 0.03; with sigma = 0.01 the
  // refresh gain is delta = 0.03 - 0.01 - 0.01 = 0.01 >= 0, so the bound is
  // delta + proc regardless of the reliability.
  const DriftParams dp = desk_drift();
  const TimingTriple timing{0, 1, 4};
  const LoopState fresh = make_state(5.0, 0.01, 0);
  for (double rho : {0.1, 0.5, 0.99}) {
    const QosCertificate q = make_cert(0.25, 0.25, 1.0, rho, rho);
    CHECK(covariance_envelope(fresh, q, timing, dp) == doctest::Approx(0.02).epsilon(1e-12));
  }
}

TEST_CASE("covariance envelope: reliability-weighted branch when refresh helps") {
  const DriftParams dp = desk_drift();
  const TimingTriple timing{0, 1, 4};
  const LoopState stale = make_state(5.0, 0.05, 0);
  const QosCertificate q = make_cert(0.25, 0.25, 1.0, 0.9, 0.8);
  // delta = 0.03 - 0.05 - 0.01 = -0.03 < 0 -> rho_ul * delta + proc.
  CHECK(covariance_envelope(stale, q, timing, dp) ==
        doctest::Approx(-0.017).epsilon(1e-12));
  // Higher certified reliability gives a smaller (more negative) bound.
  const QosCertificate better = make_cert(0.25, 0.25, 1.0, 0.99, 0.8);
  CHECK(covariance_envelope(stale, better, timing, dp) <
        covariance_envelope(stale, q, timing, dp));
}

TEST_CASE("drift bound combines cycle envelope and covariance envelope") {
  const DriftParams dp = desk_drift();
  const TimingTriple timing{0, 1, 4};
  const LoopState zeta = make_state(10.0, 0.05, 0);
  const QosCertificate q = make_cert(0.25, 0.25, 1.0, 0.9, 0.8);
  const CertifiedFactors f = flat_factors(0.9);
  // All outcome factors 0.9 -> envelope 0.9; covariance term is -0.017.
  CHECK(drift_bound(zeta, f, q, timing, dp) ==
        doctest::Approx(-1.017).epsilon(1e-12));
}

TEST_CASE("drift bound rejects an exhausted interaction budget") {
  const DriftParams dp = desk_drift();
  const TimingTriple timing{0, 1, 3};
  const QosCertificate q = make_cert(0.25, 0.25, 0.75, 0.9, 0.8);
  const CertifiedFactors f = flat_factors(0.9);
  const LoopState burned = make_state(10.0, 0.05, 3);  // run == g
  CHECK_THROWS_AS(drift_bound(burned, f, q, timing, dp), std::invalid_argument);
}

TEST_CASE("admission keeps certified-negative-drift actions and drops the rest") {
  const EnvelopeTable& table = shared_table();
  const DriftParams dp = scarce_drift();
  // Stale estimate: the certified refresh gain pays for the run-cycle growth.
  const LoopState zeta = make_state(10.0, 0.10, 2);

  std::vector<ScheduledAction> cands;
  cands.push_back(make_action(1, 1, 6, 0.95, 0.95, 4));  // admissible
  cands.push_back(make_action(3, 1, 6, 0.95, 0.95, 4));  // off the solved grid
  cands.push_back(make_action(1, 3, 6, 0.95, 0.95, 4));  // off the solved grid
  cands.push_back(make_action(1, 1, 2, 0.95, 0.95, 4));  // run 2 >= g = 2
  cands.push_back(make_action(2, 2, 6, 0.97, 0.97, 6));  // admissible, slower

  const auto admitted = admit_safe(zeta, cands, table, dp);
  REQUIRE(admitted.size() == 2);
  CHECK(admitted[0].index == 0);
  CHECK(admitted[1].index == 4);
  for (const auto& a : admitted) {
    CHECK(a.phi <= 0.0);
    CHECK(a.utility == 0.0);  // caller prices utilities later
    const CertifiedFactors ref =
        table.factors(a.action.timing.h_ul, a.action.timing.h_dl);
    CHECK(a.factors.a11 == ref.a11);
    CHECK(a.phi ==
          drift_bound(zeta, ref, a.action.cert, a.action.timing, dp));
  }

  // A hopeless certificate at high error: every envelope factor is at least
  // one and the covariance term is positive (the estimate is already below
  // the staleness floor), so phi > 0 and nothing is admitted.
  std::vector<ScheduledAction> weak;
  weak.push_back(make_action(2, 2, 6, 0.05, 0.05, 2));
  const LoopState hot = make_state(80.0, 0.02, 0);
  CHECK(admit_safe(hot, weak, table, dp).empty());
}

TEST_CASE("zero baseline switches between hold and local-autonomy drift") {
  const DriftParams dp = desk_drift();
  AdmissibleDomain domain;
  domain.v_max = 100.0;
  domain.sigma_min = 0.0;
  domain.sigma_max = 10.0;
  SafeModeParams safe;
  safe.contraction = 0.95;
  safe.v_floor = 0.5;
  const double alpha_hold = 1.002;

  // Holdable state: baseline = (alpha_hold - 1) v + lambda * proc.
  const LoopState calm = make_state(10.0, 1.0, 0);
  CHECK(hold_admissible(calm, domain, alpha_hold, dp.tr_proc));
  CHECK(zero_baseline(calm, domain, safe, alpha_hold, dp) ==
        doctest::Approx(0.03).epsilon(1e-12));

  // Near the error ceiling the hold map exits the domain, so the baseline is
  // the contraction drift of the local-autonomy step, which is negative.
  const LoopState hot = make_state(99.9, 1.0, 0);
  CHECK_FALSE(hold_admissible(hot, domain, alpha_hold, dp.tr_proc));
  const double base = zero_baseline(hot, domain, safe, alpha_hold, dp);
  const double expected =
      safe_mode_step(hot, domain, safe, dp.tr_proc, dp.lambda_sigma).second;
  CHECK(base == expected);
  CHECK(base < 0.0);
}

TEST_CASE("action utility is baseline minus certified drift") {
  CHECK(action_utility(0.03, -1.017) == doctest::Approx(1.047).epsilon(1e-12));
  CHECK(action_utility(-0.5, -0.2) == doctest::Approx(-0.3).epsilon(1e-12));
}

TEST_CASE("frontier pruning removes dominated actions and keeps incomparable ones") {
  const ScheduledAction strong = make_action(1, 1, 6, 0.95, 0.95, 3);
  const ScheduledAction weak = make_action(2, 2, 4, 0.80, 0.80, 5);
  const ScheduledAction cheap_slow = make_action(2, 2, 4, 0.80, 0.80, 1);

  REQUIRE(action_dominates(strong.cert, strong.slot_cost, weak.cert,
                           weak.slot_cost));
  REQUIRE_FALSE(action_dominates(strong.cert, strong.slot_cost,
                                 cheap_slow.cert, cheap_slow.slot_cost));

  std::vector<AdmittedAction> safe;
  safe.push_back(priced(strong, 2.0));
  safe.push_back(priced(weak, 1.0));
  safe.push_back(priced(cheap_slow, 0.5));
  const auto frontier = prune_frontier(safe);
  REQUIRE(frontier.size() == 2);
  CHECK(frontier[0].action.slot_cost == 3);
  CHECK(frontier[1].action.slot_cost == 1);

  // Utility misaligned with dominance marks a broken envelope table.
  std::vector<AdmittedAction> broken;
  broken.push_back(priced(strong, 1.0));
  broken.push_back(priced(weak, 2.0));
  CHECK_THROWS_AS(prune_frontier(broken), std::logic_error);
}

TEST_CASE("slot dynamic program solves a hand-checkable instance") {
  // Loop 0: utilities {5 for 4 slots, 3 for 2 slots}; loop 1: {4 for 3 slots}.
  std::vector<std::vector<AdmittedAction>> fronts(2);
  fronts[0].push_back(priced(make_action(1, 1, 6, 0.9, 0.9, 4), 5.0));
  fronts[0].push_back(priced(make_action(2, 2, 6, 0.8, 0.8, 2), 3.0));
  fronts[1].push_back(priced(make_action(1, 1, 6, 0.9, 0.9, 3), 4.0));

  SUBCASE("budget 5 pairs the cheap action with the second loop") {
    const auto dp = dp_allocate(fronts, 5);
    CHECK(dp.value == doctest::Approx(7.0).epsilon(1e-15));
    CHECK(dp.slots_used == 5);
    CHECK((dp.picks == std::vector<int>{1, 0}));
    CHECK(dp.ops > 0);
  }
  SUBCASE("budget 4 takes the single best action") {
    const auto dp = dp_allocate(fronts, 4);
    CHECK(dp.value == doctest::Approx(5.0).epsilon(1e-15));
    CHECK((dp.picks == std::vector<int>{0, -1}));
  }
  SUBCASE("budget 2 falls back to the cheap action alone") {
    const auto dp = dp_allocate(fronts, 2);
    CHECK(dp.value == doctest::Approx(3.0).epsilon(1e-15));
    CHECK((dp.picks == std::vector<int>{1, -1}));
    CHECK(dp.slots_used == 2);
  }
  SUBCASE("budget 0 schedules nothing") {
    const auto dp = dp_allocate(fronts, 0);
    CHECK(dp.value == 0.0);
    CHECK((dp.picks == std::vector<int>{-1, -1}));
    CHECK(dp.slots_used == 0);
  }
}

TEST_CASE("dynamic program tie-breaks: fewer slots, then the zero choice") {
  // Equal utilities at different costs: the cheaper action must win.
  std::vector<std::vector<AdmittedAction>> fronts(1);
  fronts[0].push_back(priced(make_action(1, 1, 6, 0.9, 0.9, 4), 5.0));
  fronts[0].push_back(priced(make_action(1, 2, 6, 0.9, 0.8, 2), 5.0));
  auto dp = dp_allocate(fronts, 6);
  CHECK((dp.picks == std::vector<int>{1}));
  CHECK(dp.slots_used == 2);

  // A zero-utility action never displaces the zero choice.
  std::vector<std::vector<AdmittedAction>> zeros(1);
  zeros[0].push_back(priced(make_action(1, 1, 6, 0.9, 0.9, 2), 0.0));
  dp = dp_allocate(zeros, 6);
  CHECK((dp.picks == std::vector<int>{-1}));
  CHECK(dp.value == 0.0);
  CHECK(dp.slots_used == 0);
}

TEST_CASE("dynamic program equals brute force on random small instances") {
  std::mt19937 rng(618033u);
  std::uniform_int_distribution<int> loops_d(1, 5);
  std::uniform_int_distribution<int> budget_d(1, 12);
  std::uniform_int_distribution<int> count_d(0, 6);
  std::uniform_int_distribution<int> cost_d(1, 6);
  std::uniform_real_distribution<double> util_d(-0.5, 3.0);

  for (int trial = 0; trial < 100; ++trial) {
    const int n = loops_d(rng);
    const int budget = budget_d(rng);
    std::vector<std::vector<AdmittedAction>> sets(n);
    for (auto& s : sets) {
      const int m = count_d(rng);
      for (int k = 0; k < m; ++k) {
        s.push_back(priced(make_action(1, 1, 6, 0.9, 0.9, cost_d(rng)),
                           util_d(rng)));
      }
    }
    const auto dp = dp_allocate(sets, budget);
    const double bf = brute_force_allocate(sets, budget);
    CHECK(dp.value == bf);  // exact, including floating-point association

    // The reported picks must reproduce the reported value and respect the
    // budget with the reported slot usage.
    double value = 0.0;
    int slots = 0;
    REQUIRE(dp.picks.size() == static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const int k = dp.picks[i];
      if (k < 0) continue;
      REQUIRE(k < static_cast<int>(sets[i].size()));
      value += sets[i][static_cast<std::size_t>(k)].utility;
      slots += sets[i][static_cast<std::size_t>(k)].action.slot_cost;
    }
    CHECK(value == dp.value);
    CHECK(slots == dp.slots_used);
    CHECK(slots <= budget);
  }
}

TEST_CASE("frontier pruning never changes the dynamic-program optimum") {
  std::mt19937 rng(271828u);
  std::uniform_int_distribution<int> loops_d(1, 5);
  std::uniform_int_distribution<int> budget_d(1, 12);
  std::uniform_int_distribution<int> count_d(0, 6);
  std::uniform_int_distribution<int> cost_d(1, 5);
  std::uniform_int_distribution<int> pick3(0, 2);
  std::uniform_int_distribution<int> pick2(0, 1);

  auto aligned_utility = [](const QosCertificate& q, int cost) {
    return 2.0 * (q.rho_ul + q.rho_dl) - 0.3 * (q.d_ul + q.d_dl) -
           0.2 * q.t_cert - 0.05 * cost;
  };

  for (int trial = 0; trial < 100; ++trial) {
    const int n = loops_d(rng);
    const int budget = budget_d(rng);
    std::vector<std::vector<AdmittedAction>> sets(n);
    for (auto& s : sets) {
      const int m = count_d(rng);
      for (int k = 0; k < m; ++k) {
        // Coordinates drawn from small grids so dominance pairs are common.
        const double rho[3] = {0.7, 0.8, 0.9};
        QosCertificate q = make_cert(0.25 * (1 + pick2(rng)),
                                     0.25 * (1 + pick2(rng)),
                                     1.0 + pick2(rng), rho[pick3(rng)],
                                     rho[pick3(rng)]);
        ScheduledAction a;
        a.cert = q;
        a.timing = TimingTriple{1, 1, 4};
        a.slot_cost = cost_d(rng);
        s.push_back(priced(a, aligned_utility(q, a.slot_cost)));
      }
    }

    std::vector<std::vector<AdmittedAction>> pruned(sets.size());
    std::size_t kept = 0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      pruned[i] = prune_frontier(sets[i]);
      kept += pruned[i].size();
      // No dominated pair may survive.
      for (std::size_t a = 0; a < pruned[i].size(); ++a) {
        for (std::size_t b = 0; b < pruned[i].size(); ++b) {
          if (a == b) continue;
          CHECK_FALSE(action_dominates(pruned[i][a].action.cert,
                                       pruned[i][a].action.slot_cost,
                                       pruned[i][b].action.cert,
                                       pruned[i][b].action.slot_cost));
        }
      }
    }
    const double full = brute_force_allocate(sets, budget);
    const auto dp_full = dp_allocate(sets, budget);
    const auto dp_pruned = dp_allocate(pruned, budget);
    CHECK(dp_full.value == full);
    CHECK(dp_pruned.value == full);
    CHECK(dp_pruned.ops <= dp_full.ops);
    (void)kept;
  }
}

TEST_CASE("certified drift is monotone under certificate dominance") {
  const EnvelopeTable& table = shared_table();
  const DriftParams dp = desk_drift();
  std::mt19937 rng(14142u);
  std::uniform_int_distribution<int> h_d(0, 2);
  std::uniform_int_distribution<int> g_extra(1, 5);
  std::uniform_real_distribution<double> rho_d(0.55, 0.999);
  std::uniform_real_distribution<double> v_d(0.5, 60.0);
  std::uniform_real_distribution<double> sig_d(0.02, 0.4);

  for (int pair = 0; pair < 50; ++pair) {
    const int h_ul = h_d(rng), h_dl = h_d(rng);
    const int g_weak = 1 + g_extra(rng);
    const TimingTriple strong_t{h_ul, h_dl, g_weak};  // same timing class
    const double ru = rho_d(rng), rd = rho_d(rng);
    const QosCertificate strong = make_cert(h_ul * 0.25, h_dl * 0.25,
                                            g_weak * 0.25, ru, rd);
    QosCertificate weak = strong;
    weak.rho_ul = ru - 0.05;
    weak.rho_dl = rd - 0.05;
    REQUIRE(certificate_dominates(strong, weak));

    const CertifiedFactors f = table.factors(h_ul, h_dl);
    for (int s = 0; s < 20; ++s) {
      const LoopState zeta = make_state(v_d(rng), sig_d(rng), 0);
      const double phi_strong = drift_bound(zeta, f, strong, strong_t, dp);
      const double phi_weak = drift_bound(zeta, f, weak, strong_t, dp);
      CHECK(phi_strong <= phi_weak + 1e-10);
    }
  }
}

TEST_CASE("full-cycle allocation wires admission, pricing, pruning, and the DP") {
  const EnvelopeTable& table = shared_table();
  const DriftParams dp = desk_drift();
  AdmissibleDomain domain;
  domain.v_max = 100.0;
  domain.sigma_min = 0.0;
  domain.sigma_max = 10.0;
  SafeModeParams safe;
  safe.contraction = 0.95;
  safe.v_floor = 0.5;
  const double alpha_hold = 1.002;

  std::vector<std::vector<ScheduledAction>> candidates(3);
  candidates[0].push_back(make_action(1, 1, 6, 0.95, 0.95, 4));
  candidates[0].push_back(make_action(2, 2, 6, 0.90, 0.90, 2));
  candidates[1].push_back(make_action(3, 3, 6, 0.95, 0.95, 4));  // off grid
  // Loop 2 has no candidates at all.

  std::vector<LoopState> states;
  states.push_back(make_state(10.0, 0.05, 0));
  states.push_back(make_state(10.0, 0.05, 0));
  states.push_back(make_state(99.9, 0.05, 0));  // hold map exits the domain

  const auto res = allocate_cycle(candidates, states, table, domain, safe,
                                  alpha_hold, dp, 6);
  REQUIRE(res.decisions.size() == 3);

  // Loop 0 wins a slot action; its utility uses loop 0's baseline.
  REQUIRE(res.decisions[0].admitted.has_value());
  CHECK(res.decisions[0].safe_count == 2);
  CHECK(res.decisions[0].frontier_count >= 1);
  const auto& won = *res.decisions[0].admitted;
  CHECK(won.utility ==
        action_utility(res.decisions[0].baseline, won.phi));
  CHECK(res.scheduled.size() == 1);
  CHECK(res.scheduled[0].slot_cost <= 6);

  // Loop 1's only candidate is off the certification grid: zero choice, and
  // the calm state realizes it as a hold.
  CHECK_FALSE(res.decisions[1].admitted.has_value());
  CHECK(res.decisions[1].safe_count == 0);
  CHECK((res.decisions[1].zero_kind == ZeroKind::kHold));

  // Loop 2 has nothing to schedule and cannot hold: local autonomy.
  CHECK_FALSE(res.decisions[2].admitted.has_value());
  CHECK((res.decisions[2].zero_kind == ZeroKind::kSafe));
  CHECK(res.decisions[2].baseline < 0.0);

  // DP bookkeeping is consistent with the exposed frontiers.
  CHECK(res.dp.value == brute_force_allocate(res.frontiers, 6));
  CHECK_THROWS_AS(allocate_cycle(candidates, {states[0]}, table, domain, safe,
                                 alpha_hold, dp, 6),
                  std::invalid_argument);
}
