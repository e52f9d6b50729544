#include "certsched/twin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace certsched {
namespace {

void all_paths(const TwinState& twin, int here, int dst, int hops_left,
               std::vector<int>& prefix, std::vector<char>& used,
               std::vector<std::vector<int>>& out) {
  if (here == dst) {
    out.push_back(prefix);
    return;
  }
  if (hops_left == 0) return;
  const int n = static_cast<int>(twin.nodes.size());
  for (int next = 0; next < n; ++next) {
    if (used[next] || !twin.avail[here][next]) continue;
    used[next] = 1;
    prefix.push_back(next);
    all_paths(twin, next, dst, hops_left - 1, prefix, used, out);
    prefix.pop_back();
    used[next] = 0;
  }
}

}  // namespace

TwinState predict(const MissionPlan& plan, int cycle, const ChannelParams& ch,
                  const TwinParams& tp) {
  const auto world = plan.world();
  const int n_uavs = plan.params().n_uavs;
  TwinState t;
  t.cycle = cycle;
  t.nodes.resize(n_uavs + 1);
  t.nodes[0] = world.gcs;
  for (int i = 0; i < n_uavs; ++i) t.nodes[i + 1] = plan.reference(cycle, i);

  const int n = n_uavs + 1;
  t.snr_db = Eigen::MatrixXd::Constant(n, n, -std::numeric_limits<double>::infinity());
  t.avail.assign(n, std::vector<char>(n, 0));
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const double snr =
          predicted_link_snr_db(t.nodes[a], t.nodes[b], world.building, ch);
      t.snr_db(a, b) = snr;
      t.snr_db(b, a) = snr;
      const bool in_range = (t.nodes[a] - t.nodes[b]).norm() <= ch.max_range_m;
      const bool ok = in_range && snr >= ch.thr_base_db + ch.avail_margin_db;
      t.avail[a][b] = t.avail[b][a] = ok ? 1 : 0;
    }
  }

  t.routes_ul.resize(n_uavs);
  t.routes_dl.resize(n_uavs);
  for (int i = 0; i < n_uavs; ++i) {
    t.routes_ul[i] = k_shortest_routes(t, i + 1, 0, tp.k_routes, tp.max_hops);
    t.routes_dl[i] = k_shortest_routes(t, 0, i + 1, tp.k_routes, tp.max_hops);
  }
  return t;
}

double route_bottleneck_snr(const TwinState& twin, const std::vector<int>& route) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t h = 0; h + 1 < route.size(); ++h) {
    worst = std::min(worst, twin.snr_db(route[h], route[h + 1]));
  }
  return worst;
}

std::vector<std::vector<int>> k_shortest_routes(const TwinState& twin, int src,
                                                int dst, int k, int max_hops) {
  std::vector<std::vector<int>> paths;
  std::vector<int> prefix = {src};
  std::vector<char> used(twin.nodes.size(), 0);
  used[src] = 1;
  if (src != dst) all_paths(twin, src, dst, max_hops, prefix, used, paths);
  std::sort(paths.begin(), paths.end(),
            [&twin](const std::vector<int>& a, const std::vector<int>& b) {
              if (a.size() != b.size()) return a.size() < b.size();
              const double sa = route_bottleneck_snr(twin, a);
              const double sb = route_bottleneck_snr(twin, b);
              if (sa != sb) return sa > sb;
              return a < b;
            });
  if (static_cast<int>(paths.size()) > k) paths.resize(k);
  return paths;
}

std::vector<ScheduledAction> enumerate_actions(const TwinState& twin, int loop,
                                               const NetworkParams& net,
                                               const TwinParams& tp) {
  std::vector<ScheduledAction> out;
  if (loop < 0 || loop >= static_cast<int>(twin.routes_ul.size())) {
    throw std::out_of_range("enumerate_actions: loop index");
  }
  for (const auto& ul : twin.routes_ul[loop]) {
    for (const auto& dl : twin.routes_dl[loop]) {
      for (int retx : tp.retx_depths) {
        for (int n : tp.blocklengths) {
          ScheduledAction a;
          a.loop = loop;
          a.route_ul = ul;
          a.route_dl = dl;
          a.retx = retx;
          a.blocklength = n;
          const int per_attempt = slot_blocks(n, net.b_eff, net.t_slot);
          const int per_hop = (1 + retx) * per_attempt;
          int offset = 0;
          auto add_hops = [&](const std::vector<int>& route, bool uplink) {
            for (std::size_t h = 0; h + 1 < route.size(); ++h) {
              HopReservation hop;
              hop.tx_node = route[h];
              hop.rx_node = route[h + 1];
              hop.uplink = uplink;
              hop.first_slot = offset;
              hop.slots_per_attempt = per_attempt;
              hop.attempts = 1 + retx;
              hop.blocklength = n;
              a.hops.push_back(hop);
              offset += per_hop;
            }
          };
          add_hops(ul, true);
          a.span_ul = offset;
          add_hops(dl, false);
          a.span_dl = offset - a.span_ul;
          a.slot_cost = offset;
          if (a.slot_cost > net.frame_slots) continue;
          a.predicted_snr_ul = route_bottleneck_snr(twin, ul);
          a.predicted_snr_dl = route_bottleneck_snr(twin, dl);
          const int block_idx = static_cast<int>(
              std::find(tp.blocklengths.begin(), tp.blocklengths.end(), n) -
              tp.blocklengths.begin());
          a.class_ul = {ClassKey::cap_hops(static_cast<int>(ul.size()) - 1),
                        ClassKey::bucket_of_snr(a.predicted_snr_ul), retx, block_idx};
          a.class_dl = {ClassKey::cap_hops(static_cast<int>(dl.size()) - 1),
                        ClassKey::bucket_of_snr(a.predicted_snr_dl), retx, block_idx};
          a.class_bi = {ClassKey::cap_hops(static_cast<int>(ul.size()) +
                                           static_cast<int>(dl.size()) - 2),
                        std::min(a.class_ul.snr_bucket, a.class_dl.snr_bucket),
                        retx, block_idx};
          out.push_back(a);
        }
      }
    }
  }
  return out;
}

ExclusionReason build_certificate(ScheduledAction& action,
                                  const ConfidenceModel& model, double t_s,
                                  const NetworkParams& net, const TwinParams& tp) {
  // Worst class inside the confidence set: re-bucket at the margin-degraded
  // predicted SNR.  Hop count, retransmission depth and blocklength are
  // exact, so only the SNR coordinate degrades.
  auto degraded = [&](ClassKey key, double snr) {
    key.snr_bucket = ClassKey::bucket_of_snr(snr - model.snr_margin_db);
    return key;
  };
  const ClassKey worst_ul = degraded(action.class_ul, action.predicted_snr_ul);
  const ClassKey worst_dl = degraded(action.class_dl, action.predicted_snr_dl);
  ClassKey worst_bi = action.class_bi;
  worst_bi.snr_bucket = std::min(worst_ul.snr_bucket, worst_dl.snr_bucket);

  const auto q_ul = model.service_miss_upper('u', worst_ul);
  const auto q_dl = model.service_miss_upper('d', worst_dl);
  const auto q_bi = model.service_miss_upper('b', worst_bi);
  const auto chain = model.chain_params(worst_bi);
  if (!q_ul || !q_dl || !q_bi || !chain) return ExclusionReason::kUncalibrated;

  const double tau = net.tau_slot();
  auto floor_1e4 = [](double x) {
    return std::floor(std::max(0.0, x) * 1e4) / 1e4;
  };
  QosCertificate q;
  q.d_ul = action.span_ul * tau;
  q.d_dl = action.span_dl * tau;
  q.rho_ul = floor_1e4(1.0 - *q_ul);
  q.rho_dl = floor_1e4(1.0 - *q_dl);

  ChainParams cp = *chain;
  // First-failure mass: at least the bidirectional deadline-miss bound, at
  // least the logged window-start miss bound -- take the larger.
  cp.mu1 = std::min(1.0, std::max(cp.mu1, *q_bi));
  const auto lf = failure_tolerance(cp, tp.horizon_opps, tp.delta_t);
  if (!lf) return ExclusionReason::kNoFiniteCertificate;
  q.t_cert = static_cast<double>(*lf) * t_s;

  action.cert = q;
  action.chain = cp;
  action.timing = timing_triple(q, t_s);
  return ExclusionReason::kNone;
}

}  // namespace certsched
