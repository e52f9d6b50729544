#include "certsched/frame.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace certsched {

int ClassKey::bucket_of_snr(double snr_db) {
  // 3 dB bins clamped to a [-9, 36) dB window; bucket 0 is the worst.
  const double clamped = std::clamp(snr_db, -9.0, 35.999);
  return static_cast<int>(std::floor((clamped + 9.0) / 3.0));
}

int ClassKey::cap_hops(int hops) { return std::min(hops, 5); }

std::string ClassKey::str() const {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "h%d.s%d.r%d.b%d", hops, snr_bucket, retx,
                block_idx);
  return buf;
}

ClassKey ClassKey::parse(const std::string& text) {
  ClassKey k;
  if (std::sscanf(text.c_str(), "h%d.s%d.r%d.b%d", &k.hops, &k.snr_bucket,
                  &k.retx, &k.block_idx) != 4) {
    throw std::invalid_argument("ClassKey: cannot parse '" + text + "'");
  }
  return k;
}

PackedFrame pack_frame(const std::vector<ScheduledAction>& actions,
                       int frame_slots) {
  if (frame_slots < 1) throw std::invalid_argument("pack_frame: empty frame");
  PackedFrame out;
  out.frame_slots = frame_slots;
  int base = 0;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const int cost = actions[i].slot_cost;
    if (cost <= 0) throw std::invalid_argument("pack_frame: non-positive cost");
    if (base + cost > frame_slots) {
      throw std::invalid_argument("pack_frame: frame overflow");
    }
    out.assignments.push_back({static_cast<int>(i), base});
    base += cost;
  }
  out.slots_used = base;
  return out;
}

std::vector<CycleOutcome> execute_cycle(
    const std::vector<ScheduledAction>& actions, const PackedFrame& frame,
    const std::vector<Eigen::Vector3d>& node_positions, const Box& building,
    const ChannelParams& channel, double tau_slot, const CounterRng& rng,
    std::uint64_t trial, int cycle, const BurstField* bursts) {
  if (!(tau_slot > 0.0)) throw std::invalid_argument("execute_cycle: tau_slot");
  std::vector<CycleOutcome> outcomes;
  outcomes.reserve(frame.assignments.size());

  for (const auto& asg : frame.assignments) {
    const ScheduledAction& act =
        actions.at(static_cast<std::size_t>(asg.action_index));
    CycleOutcome oc;
    oc.loop = act.loop;

    // Direction state while walking the canonical hop order.
    struct Dir {
      bool alive = true;
      int first_slot = -1;
      int last_slot = -1;
      int hops_total = 0;
      int hops_done = 0;
      double bottleneck = std::numeric_limits<double>::infinity();
    } ul, dl;
    for (const auto& hop : act.hops) (hop.uplink ? ul : dl).hops_total++;

    for (const auto& hop : act.hops) {
      Dir& dir = hop.uplink ? ul : dl;
      const int abs_first = asg.base_slot + hop.first_slot;
      if (dir.first_slot < 0) dir.first_slot = abs_first;
      if (!dir.alive) continue;

      const Eigen::Vector3d& ptx =
          node_positions.at(static_cast<std::size_t>(hop.tx_node));
      const Eigen::Vector3d& prx =
          node_positions.at(static_cast<std::size_t>(hop.rx_node));
      double snr_ls =
          realized_link_snr_db(ptx, prx, building, channel, rng, trial,
                               hop.tx_node, hop.rx_node);
      if (bursts != nullptr && bursts->bad(hop.tx_node, hop.rx_node)) {
        snr_ls -= channel.burst_fade_db;
      }
      dir.bottleneck = std::min(dir.bottleneck, snr_ls);
      const double threshold = snr_threshold_db(hop.blocklength, channel);

      bool decoded = false;
      for (int attempt = 0; attempt < hop.attempts && !decoded; ++attempt) {
        bool all_slots_clear = true;
        for (int s = 0; s < hop.slots_per_attempt; ++s) {
          const int slot = abs_first + attempt * hop.slots_per_attempt + s;
          const double snr =
              snr_ls + fading_db(rng, trial, cycle, slot, hop.tx_node,
                                 hop.rx_node);
          if (snr < threshold) {
            all_slots_clear = false;
            break;
          }
        }
        if (all_slots_clear) {
          decoded = true;
          dir.last_slot = abs_first + (attempt + 1) * hop.slots_per_attempt - 1;
        }
      }
      if (decoded) {
        dir.hops_done++;
      } else {
        dir.alive = false;
      }
    }

    auto finish = [&](const Dir& dir, DirectionOutcome& out) {
      out.attempted = dir.hops_total > 0;
      out.success = dir.alive && dir.hops_done == dir.hops_total;
      out.hops_completed = dir.hops_done;
      out.realized_snr_db =
          std::isfinite(dir.bottleneck) ? dir.bottleneck : 0.0;
      if (out.success) {
        out.delay_s =
            static_cast<double>(dir.last_slot - dir.first_slot + 1) * tau_slot;
      }
    };
    finish(ul, oc.ul);
    finish(dl, oc.dl);
    outcomes.push_back(oc);
  }
  return outcomes;
}

}  // namespace certsched
