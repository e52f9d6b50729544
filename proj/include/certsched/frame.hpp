#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "certsched/certificate.hpp"
#include "certsched/channel.hpp"
#include "certsched/failure_chain.hpp"
#include "certsched/geometry.hpp"

namespace certsched {

// Calibration class of one directed transmission: total hop count (capped),
// bottleneck predicted SNR bucket (3 dB bins), retransmission depth,
// blocklength index.  Identical keys pool statistics across geometry.
struct ClassKey {
  int hops = 0;
  int snr_bucket = 0;
  int retx = 0;
  int block_idx = 0;

  static int bucket_of_snr(double snr_db);
  static int cap_hops(int hops);

  std::string str() const;          // e.g. "h2.s4.r1.b0"
  static ClassKey parse(const std::string& text);

  auto operator<=>(const ClassKey&) const = default;
};

// One reserved per-hop block inside an action's slot window.  Offsets are
// relative to the action base until the frame is packed.
struct HopReservation {
  int tx_node = 0;
  int rx_node = 0;
  bool uplink = true;
  int first_slot = 0;
  int slots_per_attempt = 1;
  int attempts = 1;
  int blocklength = 0;
};

// Fully specified resource-allocation action for one loop: routes, pattern,
// slot accounting, and the certificate its class statistics support.
struct ScheduledAction {
  int loop = 0;
  std::vector<int> route_ul;  // node ids, uav ... gcs
  std::vector<int> route_dl;  // node ids, gcs ... uav
  int retx = 0;
  int blocklength = 0;
  std::vector<HopReservation> hops;  // uplink hops first, then downlink
  int slot_cost = 0;
  int span_ul = 0;  // slot-clock span of the uplink window
  int span_dl = 0;
  double predicted_snr_ul = 0.0;  // bottleneck along the route
  double predicted_snr_dl = 0.0;
  QosCertificate cert;
  TimingTriple timing;
  ChainParams chain;
  ClassKey class_ul, class_dl, class_bi;
};

struct FrameAssignment {
  int action_index = 0;  // into the packed list
  int base_slot = 0;
};

struct PackedFrame {
  std::vector<FrameAssignment> assignments;
  int slots_used = 0;
  int frame_slots = 0;
};

// Concatenate the actions' slot blocks in the given order.  Throws
// std::invalid_argument when the total exceeds the frame.
PackedFrame pack_frame(const std::vector<ScheduledAction>& actions,
                       int frame_slots);

struct DirectionOutcome {
  bool attempted = false;
  bool success = false;
  double delay_s = 0.0;            // from the direction's first reserved slot
  double realized_snr_db = 0.0;    // bottleneck large-scale SNR along route
  int hops_completed = 0;
};

struct CycleOutcome {
  int loop = -1;
  DirectionOutcome ul, dl;
  bool bidirectional() const { return ul.success && dl.success; }
};

// Run every reserved transmission of the packed frame against realized
// geometry and per-slot fading.  node_positions[0] is the GCS; UAV i is node
// i+1.  An attempt decodes when all its slots clear the blocklength
// threshold; a hop fails after its reserved attempts are spent; later hops
// of a failed direction are skipped (their slots stay reserved).  A link the
// burst field marks bad loses burst_fade_db on every slot of the cycle; pass
// nullptr to run without the burst layer.
std::vector<CycleOutcome> execute_cycle(
    const std::vector<ScheduledAction>& actions, const PackedFrame& frame,
    const std::vector<Eigen::Vector3d>& node_positions, const Box& building,
    const ChannelParams& channel, double tau_slot, const CounterRng& rng,
    std::uint64_t trial, int cycle, const BurstField* bursts = nullptr);

}  // namespace certsched
