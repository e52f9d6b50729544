#include "certsched/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace certsched {
namespace {

Eigen::Vector3d gauss3(const CounterRng& rng, std::uint64_t stream,
                       std::uint64_t trial, int cycle, int loop,
                       double sigma_axis) {
  Eigen::Vector3d v;
  for (int a = 0; a < 3; ++a) {
    v[a] = sigma_axis * rng.normal(stream, trial, static_cast<std::uint64_t>(cycle),
                                   static_cast<std::uint64_t>(loop),
                                   static_cast<std::uint64_t>(a));
  }
  return v;
}

// Large-scale realized bottleneck over a full route, independent of which
// hops the ARQ actually attempted.
double route_realized_snr(const std::vector<int>& route,
                          const std::vector<Eigen::Vector3d>& positions,
                          const Box& building, const ChannelParams& ch,
                          const CounterRng& rng, std::uint64_t trial) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t h = 0; h + 1 < route.size(); ++h) {
    worst = std::min(worst, realized_link_snr_db(
                                positions[static_cast<std::size_t>(route[h])],
                                positions[static_cast<std::size_t>(route[h + 1])],
                                building, ch, rng, trial, route[h], route[h + 1]));
  }
  return worst;
}

// Calibration explorer: round-robin over loops, sweeping each loop's
// candidate list across cycles so every pattern class gets sampled.
AllocationResult explore_allocation(
    const std::vector<std::vector<ScheduledAction>>& raw, int n_loops,
    int cycle, int s_budget) {
  AllocationResult res;
  res.decisions.resize(static_cast<std::size_t>(n_loops));
  res.dp.picks.assign(static_cast<std::size_t>(n_loops), -1);
  for (int i = 0; i < n_loops; ++i) res.decisions[i].loop = i;
  int budget = s_budget;
  const int start = (n_loops > 0) ? cycle % n_loops : 0;
  for (int r = 0; r < n_loops; ++r) {
    const int loop = (start + r) % n_loops;
    if (raw[loop].empty()) continue;
    const int idx = static_cast<int>((static_cast<std::size_t>(cycle) + loop) %
                                     raw[loop].size());
    const auto& act = raw[loop][idx];
    if (act.slot_cost > budget) continue;  // rotation covers this class later
    AdmittedAction a;
    a.action = act;
    a.index = idx;
    res.decisions[loop].admitted = a;
    res.dp.picks[loop] = idx;
    res.dp.slots_used += act.slot_cost;
    budget -= act.slot_cost;
  }
  for (const auto& d : res.decisions) {
    if (d.admitted) res.scheduled.push_back(d.admitted->action);
  }
  return res;
}

// Realized-supply certificate: the certified coordinate map evaluated at the
// realized bottleneck classes instead of the margin-degraded ones.  Empty
// when some realized class has no calibrated bound.
std::optional<QosCertificate> realized_certificate(
    const ScheduledAction& act, double realized_ul, double realized_dl,
    const ConfidenceModel& model, double t_s, const TwinParams& tp) {
  ClassKey kul = act.class_ul;
  kul.snr_bucket = ClassKey::bucket_of_snr(realized_ul);
  ClassKey kdl = act.class_dl;
  kdl.snr_bucket = ClassKey::bucket_of_snr(realized_dl);
  ClassKey kbi = act.class_bi;
  kbi.snr_bucket = std::min(kul.snr_bucket, kdl.snr_bucket);
  const auto q_ul = model.service_miss_upper('u', kul);
  const auto q_dl = model.service_miss_upper('d', kdl);
  const auto q_bi = model.service_miss_upper('b', kbi);
  const auto chain = model.chain_params(kbi);
  if (!q_ul || !q_dl || !q_bi || !chain) return std::nullopt;
  ChainParams cp = *chain;
  cp.mu1 = std::min(1.0, std::max(cp.mu1, *q_bi));
  const auto lf = failure_tolerance(cp, tp.horizon_opps, tp.delta_t);
  if (!lf) return std::nullopt;
  auto floor_1e4 = [](double x) { return std::floor(std::max(0.0, x) * 1e4) / 1e4; };
  QosCertificate q;
  q.d_ul = act.cert.d_ul;
  q.d_dl = act.cert.d_dl;
  q.rho_ul = floor_1e4(1.0 - *q_ul);
  q.rho_dl = floor_1e4(1.0 - *q_dl);
  q.t_cert = static_cast<double>(*lf) * t_s;
  return q;
}

std::string fmt(double v, const char* spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace

CertifiedTables build_tables(const Config& cfg) {
  const double t_s = cfg.mission.t_s;
  CertifiedTables t{EnvelopeTable{[&] {
    LkfOptions opts;
    opts.epsilon = cfg.control.epsilon;
    opts.theta = cfg.control.theta;
    opts.max_iterations = cfg.control.lkf_iterations;
    const double gain = lqr_gain(t_s, cfg.control.q_weight, cfg.control.r_weight);
    const Eigen::Matrix3d bk = (t_s * gain) * Eigen::Matrix3d::Identity();
    auto sol = solve_lkf(bk, cfg.control.h_ul_max, cfg.control.h_dl_max, opts);
    if (!sol) {
      throw std::runtime_error(
          "certification grid admits no common quadratic certificate for this config");
    }
    return *sol;
  }()}};
  t.gain = lqr_gain(t_s, cfg.control.q_weight, cfg.control.r_weight);
  t.alpha_hold = t.table.hold_factor();
  t.safe.contraction = cfg.domain.safe_contraction;
  t.safe.v_floor = cfg.domain.v_floor;
  t.local_gain = (1.0 - std::sqrt(cfg.domain.safe_contraction)) / t_s;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t.table.solution().x);
  const double lambda_min = es.eigenvalues().minCoeff();
  t.domain.v_max = lambda_min * cfg.domain.radius_m * cfg.domain.radius_m;
  t.domain.sigma_min = cfg.noise.meas_tr;
  t.domain.sigma_max = cfg.domain.sigma_max_factor * cfg.noise.meas_tr;

  t.drift.lambda_sigma = cfg.lambda_sigma;
  t.drift.tr_proc = cfg.noise.proc_tr;
  t.drift.tr_meas = cfg.noise.meas_tr;
  return t;
}

void export_certification_table(const CertifiedTables& tables,
                                const Config& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const auto& sol = tables.table.solution();
  out << "# epsilon=" << fmt(sol.epsilon, "%.9g")
      << " depth=" << sol.depth << " v_max=" << fmt(tables.domain.v_max, "%.9g")
      << " alpha_hold=" << fmt(tables.alpha_hold, "%.9g") << "\n";
  out << "h_ul,h_dl,g,a11,a10,a01,a00,run_g,hold\n";
  for (int hu = 0; hu <= sol.h_ul_max; ++hu) {
    for (int hd = 0; hd <= sol.h_dl_max; ++hd) {
      const CertifiedFactors f = tables.table.factors(hu, hd);
      for (int g = 1; g <= cfg.twin.horizon_opps; ++g) {
        out << hu << ',' << hd << ',' << g << ',' << fmt(f.a11, "%.9f") << ','
            << fmt(f.a10, "%.9f") << ',' << fmt(f.a01, "%.9f") << ','
            << fmt(f.a00, "%.9f") << ',' << fmt(f.run(g), "%.9f") << ','
            << fmt(f.hold, "%.9f") << "\n";
      }
    }
  }
}

TrialRecord run_trial(const Config& cfg, const CertifiedTables& tables,
                      const ConfidenceModel* model, std::uint64_t seed,
                      const EngineOptions& opts) {
  const bool certified_policy =
      !opts.explore &&
      (opts.policy == PolicyId::kSafe || opts.policy == PolicyId::kCertFixed);
  if (certified_policy && model == nullptr) {
    throw std::invalid_argument("certificate-dependent policy needs a calibrated model");
  }
  const int n = cfg.mission.n_uavs;
  const int s_budget = cfg.net.frame_slots;
  const double t_s = cfg.mission.t_s;
  const double tau = cfg.net.tau_slot();
  const double lambda = tables.drift.lambda_sigma;
  const double proc_axis = std::sqrt(cfg.noise.proc_tr / 3.0);
  const double meas_axis = std::sqrt(cfg.noise.meas_tr / 3.0);

  const CounterRng rng(0);
  const MissionPlan plan(cfg.mission, rng, seed);
  const WorldGeometry world = plan.world();
  const Eigen::MatrixXd& x = tables.table.solution().x;
  const int depth = tables.table.solution().depth;

  struct LoopSim {
    LoopState st;
    Eigen::Vector3d p, est, last_fb;
    int age = 0;
  };
  std::vector<LoopSim> sim(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& s = sim[i];
    s.st.z = Eigen::VectorXd::Zero(3 * (depth + 1));
    s.st.v = 0.0;
    s.st.sigma_trace = cfg.noise.meas_tr;
    s.p = plan.reference(0, i);
    s.est = s.p;
    s.last_fb.setZero();
  }

  TrialRecord trial;
  trial.seed = seed;
  trial.policy = opts.explore ? "calibrate" : policy_name(opts.policy);
  trial.rows.reserve(static_cast<std::size_t>(cfg.mission.cycles));

  std::vector<Eigen::Vector3d> positions(static_cast<std::size_t>(n) + 1);
  positions[0] = world.gcs;

  BurstField bursts;
  bursts.reset(n + 1);
  std::vector<Eigen::Vector3d> reference(static_cast<std::size_t>(n) + 1);
  reference[0] = world.gcs;

  for (int k = 0; k < cfg.mission.cycles; ++k) {
    const TwinState twin = predict(plan, k, cfg.channel, cfg.twin);
    for (int i = 0; i < n; ++i) {
      reference[static_cast<std::size_t>(i) + 1] = plan.reference(k, i);
    }
    bursts.step(reference, world.building, cfg.channel, rng, seed, k);
    std::vector<std::vector<ScheduledAction>> raw(static_cast<std::size_t>(n));
    std::vector<std::vector<ScheduledAction>> priced(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      raw[i] = enumerate_actions(twin, i, cfg.net, cfg.twin);
      if (model != nullptr) {
        for (ScheduledAction a : raw[i]) {
          if (build_certificate(a, *model, t_s, cfg.net, cfg.twin) ==
              ExclusionReason::kNone) {
            priced[i].push_back(std::move(a));
          }
        }
      }
    }

    std::vector<LoopState> states(static_cast<std::size_t>(n));
    std::vector<int> ages(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      states[i] = sim[i].st;
      ages[i] = sim[i].age;
    }

    // Uncertified resync for loops the certified policy cannot serve on its
    // own: a loop in local safe mode, or whose failure run has passed every
    // certified tolerance, can only be re-anchored by an out-of-band
    // bidirectional success.  Recovery competes for slots ahead of the DP
    // (worst state first, up to half the frame), because a stuck loop grows
    // every cycle it waits while an admitted loop merely serves later.
    std::vector<ScheduledAction> resyncs;
    int dp_budget = s_budget;
    if (opts.policy == PolicyId::kSafe && !opts.explore) {
      std::vector<int> stuck;
      for (int i = 0; i < n; ++i) {
        int cap = cfg.twin.horizon_opps;
        for (const auto& a : priced[i]) cap = std::min(cap, a.timing.g);
        if (sim[i].st.safe_mode || sim[i].st.failure_run >= cap) {
          stuck.push_back(i);
        }
      }
      std::sort(stuck.begin(), stuck.end(),
                [&](int a, int b) { return sim[a].st.v > sim[b].st.v; });
      for (int i : stuck) {
        // Cheap patterns that still reserve a retransmission: a resync only
        // clears on full bidirectional success, so a bare first-attempt
        // pattern tends to waste the slots it occupies.  Rotate through the
        // cheapest few route alternatives as the failure run grows — repeated
        // failures suggest the favourite path is in a fade, and the
        // alternatives rarely share it.
        std::vector<int> order;
        for (int j = 0; j < static_cast<int>(raw[i].size()); ++j) order.push_back(j);
        std::sort(order.begin(), order.end(), [&](int x, int y) {
          return std::make_pair(raw[i][x].retx == 0, raw[i][x].slot_cost) <
                 std::make_pair(raw[i][y].retx == 0, raw[i][y].slot_cost);
        });
        if (order.empty()) continue;
        const int rotate = std::min<int>(3, static_cast<int>(order.size()));
        const int pick = order[static_cast<std::size_t>(
            sim[i].st.failure_run % rotate)];
        const int cost = raw[i][pick].slot_cost;
        if (s_budget - dp_budget + cost > s_budget / 2) continue;
        resyncs.push_back(raw[i][pick]);
        dp_budget -= cost;
      }
    }

    AllocationResult alloc;
    if (opts.explore) {
      alloc = explore_allocation(raw, n, k, s_budget);
    } else {
      switch (opts.policy) {
        case PolicyId::kFixedService:
          alloc = fixed_service(raw, n, k, s_budget);
          break;
        case PolicyId::kCertFixed:
          alloc = cert_fixed(priced, states, tables.table, tables.drift, s_budget);
          break;
        case PolicyId::kDynTxHlc:
          alloc = dyntx_hlc(raw, states, tables.domain.v_max, s_budget);
          break;
        case PolicyId::kVoiSched:
          alloc = voi_sched(raw, states, ages, lambda, s_budget);
          break;
        case PolicyId::kSafe:
          alloc = allocate_cycle(priced, states, tables.table, tables.domain,
                                 tables.safe, tables.alpha_hold, tables.drift,
                                 dp_budget);
          break;
      }
    }

    if (opts.oracle != nullptr && opts.policy == PolicyId::kSafe && !opts.explore) {
      double combos = 1.0;
      for (const auto& s : alloc.safe_sets) combos *= static_cast<double>(s.size() + 1);
      if (n > 6 || combos > 1e6) {
        throw std::invalid_argument("oracle instance too large to enumerate");
      }
      const double bf_safe = brute_force_allocate(alloc.safe_sets, dp_budget);
      const double bf_front = brute_force_allocate(alloc.frontiers, dp_budget);
      const double diff = std::max(std::fabs(bf_safe - alloc.dp.value),
                                   std::fabs(bf_front - alloc.dp.value));
      opts.oracle->cycles += 1;
      opts.oracle->max_diff = std::max(opts.oracle->max_diff, diff);
      if (diff != 0.0) opts.oracle->mismatches += 1;
    }

    std::vector<ScheduledAction> all_actions = alloc.scheduled;
    const std::size_t n_policy = all_actions.size();
    all_actions.insert(all_actions.end(), resyncs.begin(), resyncs.end());

    const PackedFrame frame = pack_frame(all_actions, s_budget);
    for (int i = 0; i < n; ++i) positions[static_cast<std::size_t>(i) + 1] = sim[i].p;
    const auto outcomes = execute_cycle(all_actions, frame, positions,
                                        world.building, cfg.channel, tau, rng,
                                        seed, k, &bursts);

    struct Serve {
      bool any = false, ul = false, dl = false, resync = false;
      double dl_delay = -1.0;
      double r_ul = 0.0, r_dl = 0.0;
      const ScheduledAction* act = nullptr;
    };
    std::vector<Serve> serve(static_cast<std::size_t>(n));
    for (std::size_t j = 0; j < frame.assignments.size(); ++j) {
      const auto& asg = frame.assignments[j];
      const ScheduledAction& act = all_actions[static_cast<std::size_t>(asg.action_index)];
      const CycleOutcome& oc = outcomes[j];
      Serve& s = serve[static_cast<std::size_t>(act.loop)];
      s.any = true;
      s.resync = j >= n_policy;
      s.act = &act;
      s.ul = oc.ul.success;
      s.dl = oc.dl.success;
      if (oc.dl.success) {
        s.dl_delay = (asg.base_slot + act.span_ul) * tau + oc.dl.delay_s;
      }
      s.r_ul = route_realized_snr(act.route_ul, positions, world.building,
                                  cfg.channel, rng, seed);
      s.r_dl = route_realized_snr(act.route_dl, positions, world.building,
                                  cfg.channel, rng, seed);
      if (opts.log != nullptr) {
        auto push = [&](char dir, const ClassKey& key, bool met, double realized,
                        double predicted) {
          CalibrationRecord r;
          r.seed = seed;
          r.cycle = k;
          r.loop = act.loop;
          r.key = key;
          r.direction = dir;
          r.deadline_met = met;
          r.realized_snr_db = realized;
          r.predicted_snr_db = predicted;
          opts.log->push_back(r);
        };
        push('u', act.class_ul, s.ul, s.r_ul, act.predicted_snr_ul);
        push('d', act.class_dl, s.dl, s.r_dl, act.predicted_snr_dl);
        push('b', act.class_bi, s.ul && s.dl, std::min(s.r_ul, s.r_dl),
             std::min(act.predicted_snr_ul, act.predicted_snr_dl));
      }
    }

    CycleRow row;
    row.cycle = k;
    row.slots_used = frame.slots_used;
    row.v_norm.resize(static_cast<std::size_t>(n));
    row.sigma.resize(static_cast<std::size_t>(n));
    row.dl_delay.assign(static_cast<std::size_t>(n), -1.0);
    row.fail_run.resize(static_cast<std::size_t>(n));

    std::vector<Eigen::Vector3d> next_positions(static_cast<std::size_t>(n));
    std::vector<Eigen::Vector3d> next_refs(static_cast<std::size_t>(n));

    for (int i = 0; i < n; ++i) {
      LoopSim& s = sim[i];
      const Serve& sv = serve[static_cast<std::size_t>(i)];
      const Eigen::Vector3d ref_k = plan.reference(k, i);
      const Eigen::Vector3d ref_k1 = plan.reference(k + 1, i);
      const double w_before = s.st.v + lambda * s.st.sigma_trace;

      const bool ul_ok = sv.ul;
      const bool dl_ok = sv.dl;
      const bool bidi = ul_ok && dl_ok;

      if (ul_ok) {
        s.est = s.p + gauss3(rng, CounterRng::kMeasurementNoise, seed, k, i,
                             meas_axis);
      }
      const Eigen::Vector3d u_fb_cmd = lqr_command(s.est, ref_k, tables.gain);
      if (dl_ok) s.last_fb = u_fb_cmd;

      const auto& dec = alloc.decisions[static_cast<std::size_t>(i)];
      const bool zero_safe = !dec.admitted && dec.zero_kind == ZeroKind::kSafe;
      const bool safe_now = opts.policy == PolicyId::kSafe && !opts.explore &&
                            !bidi && (s.st.safe_mode || (!sv.any && zero_safe));

      Eigen::Vector3d applied;
      if (dl_ok) {
        applied = s.last_fb;
      } else if (safe_now) {
        applied = -tables.local_gain * (s.p - ref_k);
      } else {
        applied = s.last_fb;
      }
      const Eigen::Vector3d ff = (ref_k1 - ref_k) / t_s;
      const Eigen::Vector3d gust = plan.at(k, i).gust_velocity;
      const Eigen::Vector3d w =
          gauss3(rng, CounterRng::kProcessNoise, seed, k, i, proc_axis);
      const Eigen::Vector3d p_next = s.p + t_s * (ff + applied + gust) + w;
      s.est += t_s * (ff + s.last_fb);

      const Eigen::Vector3d e_next = p_next - ref_k1;
      s.st.z = shift_error_buffer(s.st.z, e_next);
      s.st.v = quadratic_form(x, s.st.z);

      const bool certified_action =
          sv.any && !sv.resync && certified_policy && dec.admitted.has_value();
      const int h_floor = certified_action ? dec.admitted->action.timing.h_ul : 1;
      s.st.sigma_trace = covariance_step(s.st.sigma_trace, ul_ok, h_floor,
                                         cfg.noise.meas_tr, cfg.noise.proc_tr);

      const int c_next = bidi ? 0 : s.st.failure_run + 1;
      if (certified_action && !bidi && c_next >= dec.admitted->action.timing.g) {
        row.n_viol += 1;
      }
      s.st.failure_run = c_next;
      s.st.safe_mode = safe_now;
      s.age = ul_ok ? 1 : s.age + 1;
      if (sv.resync && bidi) row.n_sync += 1;
      if (sv.any) {
        if (!sv.resync) row.n_admitted += 1;
      } else if (zero_safe || s.st.safe_mode) {
        row.n_safe += 1;
      } else {
        row.n_hold += 1;
      }

      // Certified-event bookkeeping for the coverage and drift criteria.
      if (sv.any && model != nullptr && opts.policy == PolicyId::kSafe &&
          !opts.explore) {
        const bool ul_cov = sv.r_ul >= sv.act->predicted_snr_ul - model->snr_margin_db;
        const bool dl_cov = sv.r_dl >= sv.act->predicted_snr_dl - model->snr_margin_db;
        trial.margin_total += 2;
        trial.margin_ok += (ul_cov ? 1 : 0) + (dl_cov ? 1 : 0);
        if (certified_action) {
          trial.admitted_cycles += 1;
          if (ul_cov && dl_cov) {
            trial.delta_w.push_back((s.st.v + lambda * s.st.sigma_trace) - w_before);
          }
          trial.realized_dom_total += 1;
          const auto realized = realized_certificate(
              dec.admitted->action, sv.r_ul, sv.r_dl, *model, t_s, cfg.twin);
          if (realized &&
              certificate_dominates(*realized, dec.admitted->action.cert)) {
            trial.realized_dom_ok += 1;
          }
        }
      }

      s.p = p_next;
      next_positions[static_cast<std::size_t>(i)] = p_next;
      next_refs[static_cast<std::size_t>(i)] = ref_k1;
      row.v_norm[static_cast<std::size_t>(i)] = s.st.v / tables.domain.v_max;
      row.sigma[static_cast<std::size_t>(i)] = s.st.sigma_trace;
      row.dl_delay[static_cast<std::size_t>(i)] = sv.dl_delay;
      row.fail_run[static_cast<std::size_t>(i)] = s.st.failure_run;
    }

    row.rmse = swarm_rmse(next_positions, next_refs);
    trial.rows.push_back(std::move(row));
  }
  return trial;
}

std::string format_trial(const TrialRecord& trial) {
  std::ostringstream out;
  const int n = trial.rows.empty() ? 0 : static_cast<int>(trial.rows[0].v_norm.size());
  out << "# trial seed=" << trial.seed << " policy=" << trial.policy
      << " loops=" << n << " cycles=" << trial.rows.size() << "\n";
  out << "# cycle rmse slots adm hold safe sync viol | v/vmax.. | sigma.. | dl_delay..\n";
  for (const auto& r : trial.rows) {
    out << r.cycle << ' ' << fmt(r.rmse) << ' ' << r.slots_used << ' '
        << r.n_admitted << ' ' << r.n_hold << ' ' << r.n_safe << ' ' << r.n_sync
        << ' ' << r.n_viol << " |";
    for (double v : r.v_norm) out << ' ' << fmt(v);
    out << " |";
    for (double v : r.sigma) out << ' ' << fmt(v);
    out << " |";
    for (double v : r.dl_delay) {
      if (v < 0.0) {
        out << " -";
      } else {
        out << ' ' << fmt(v);
      }
    }
    out << "\n";
  }
  return out.str();
}

void write_trial(const std::string& path, const TrialRecord& trial) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << format_trial(trial);
}

double nearest_rank_percentile(std::vector<double> samples, double p) {
  if (samples.empty()) return 0.0;
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("percentile p in (0,1]");
  std::sort(samples.begin(), samples.end());
  auto rank = static_cast<std::size_t>(
      std::ceil(p * static_cast<double>(samples.size())));
  rank = std::min(std::max<std::size_t>(rank, 1), samples.size());
  return samples[rank - 1];
}

PolicySummary summarize(const std::string& policy,
                        const std::vector<TrialRecord>& trials) {
  PolicySummary s;
  s.policy = policy;
  std::vector<double> rmse, vnorm, delay;
  double slot_sum = 0.0;
  long long rows = 0;
  for (const auto& t : trials) {
    for (const auto& r : t.rows) {
      rmse.push_back(r.rmse);
      slot_sum += r.slots_used;
      ++rows;
      for (double v : r.v_norm) vnorm.push_back(v);
      for (double d : r.dl_delay) {
        if (d >= 0.0) delay.push_back(d);
      }
      s.sync_events += r.n_sync;
      s.violations += r.n_viol;
    }
  }
  if (rows > 0) {
    double acc = 0.0;
    for (double v : rmse) acc += v;
    s.mean_rmse = acc / static_cast<double>(rmse.size());
    s.mean_slots = slot_sum / static_cast<double>(rows);
  }
  s.p95_rmse = nearest_rank_percentile(rmse, 0.95);
  s.p95_vnorm = nearest_rank_percentile(vnorm, 0.95);
  s.delivered = static_cast<long long>(delay.size());
  if (!delay.empty()) {
    double acc = 0.0;
    for (double d : delay) acc += d;
    s.mean_dl_delay = acc / static_cast<double>(delay.size());
    s.p95_dl_delay = nearest_rank_percentile(delay, 0.95);
  }
  return s;
}

std::string format_summary_table(const std::vector<PolicySummary>& summaries) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-14s %10s %10s %10s %12s %12s %10s %9s %6s %6s\n",
                "policy", "mean_rmse", "p95_rmse", "p95_vnorm", "mean_dl_ms",
                "p95_dl_ms", "mean_slots", "delivered", "syncs", "viols");
  out << line;
  for (const auto& s : summaries) {
    std::snprintf(line, sizeof(line),
                  "%-14s %10.4f %10.4f %10.4f %12.4f %12.4f %10.2f %9lld %6lld %6lld\n",
                  s.policy.c_str(), s.mean_rmse, s.p95_rmse, s.p95_vnorm,
                  1e3 * s.mean_dl_delay, 1e3 * s.p95_dl_delay, s.mean_slots,
                  s.delivered, s.sync_events, s.violations);
    out << line;
  }
  return out.str();
}

void write_ecdf(const std::string& path, const std::string& field,
                std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "# ecdf field=" << field << " n=" << samples.size() << "\n";
  char buf[64];
  for (double v : samples) {
    std::snprintf(buf, sizeof(buf), "%.17g\n", v);
    out << buf;
  }
}

std::vector<double> read_ecdf(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<double> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    out.push_back(std::stod(line));
  }
  return out;
}

ConfidenceModel ensure_model(const Config& cfg, const CertifiedTables& tables,
                             const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::string model_path;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    model_path = (fs::path(out_dir) / "model.txt").string();
    if (fs::exists(model_path)) return ConfidenceModel::load(model_path);
  }
  std::vector<CalibrationRecord> log;
  EngineOptions opts;
  opts.explore = true;
  opts.log = &log;
  for (std::uint64_t seed : cfg.calib_seeds) {
    run_trial(cfg, tables, nullptr, seed, opts);
  }
  ConfidenceModel model = calibrate(log, cfg.calib.beta, cfg.calib.min_records);
  if (!out_dir.empty()) {
    write_records((fs::path(out_dir) / "calibration_log.txt").string(), log);
    model.save(model_path);
  }
  return model;
}

CompareOutcome run_compare(const Config& cfg, const CertifiedTables& tables,
                           const ConfidenceModel& model,
                           const std::vector<std::uint64_t>& seeds,
                           const std::vector<PolicyId>& policies,
                           const std::string& out_dir) {
  namespace fs = std::filesystem;
  if (!out_dir.empty()) fs::create_directories(out_dir);
  CompareOutcome out;
  for (PolicyId policy : policies) {
    const std::string name = policy_name(policy);
    std::vector<TrialRecord>& trials = out.trials[name];
    for (std::uint64_t seed : seeds) {
      EngineOptions opts;
      opts.policy = policy;
      TrialRecord t = run_trial(cfg, tables, &model, seed, opts);
      if (!out_dir.empty()) {
        write_trial((fs::path(out_dir) /
                     ("trial_" + name + "_" + std::to_string(seed) + ".txt"))
                        .string(),
                    t);
      }
      trials.push_back(std::move(t));
    }
    out.summaries.push_back(summarize(name, trials));
    if (!out_dir.empty()) {
      std::vector<double> rmse, vnorm, delay;
      for (const auto& t : trials) {
        for (const auto& r : t.rows) {
          rmse.push_back(r.rmse);
          for (double v : r.v_norm) vnorm.push_back(v);
          for (double d : r.dl_delay) {
            if (d >= 0.0) delay.push_back(d);
          }
        }
      }
      write_ecdf((fs::path(out_dir) / ("ecdf_" + name + "_rmse.csv")).string(),
                 "rmse_m", rmse);
      write_ecdf((fs::path(out_dir) / ("ecdf_" + name + "_vnorm.csv")).string(),
                 "v_over_vmax", vnorm);
      write_ecdf((fs::path(out_dir) / ("ecdf_" + name + "_delay.csv")).string(),
                 "dl_delay_s", delay);
    }
  }
  if (!out_dir.empty()) {
    std::ofstream sum((fs::path(out_dir) / "summary.txt").string(), std::ios::binary);
    sum << format_summary_table(out.summaries);
  }
  return out;
}

OracleStats run_oracle(const Config& cfg, const CertifiedTables& tables,
                       const ConfidenceModel& model,
                       const std::vector<std::uint64_t>& seeds) {
  if (cfg.mission.n_uavs > 6) {
    throw std::invalid_argument(
        "oracle instance too large: needs n_uavs <= 6 for exhaustive enumeration");
  }
  OracleStats stats;
  for (std::uint64_t seed : seeds) {
    EngineOptions opts;
    opts.policy = PolicyId::kSafe;
    opts.oracle = &stats;
    run_trial(cfg, tables, &model, seed, opts);
  }
  return stats;
}

}  // namespace certsched
