#pragma once

// Twin-side prediction and certificate construction: forecast the network
// from the mission plan, enumerate candidate slot-pattern actions per loop,
// and price each action into a QoS certificate using calibrated bounds.

#include <cstdint>
#include <vector>

#include "certsched/calibration.hpp"
#include "certsched/channel.hpp"
#include "certsched/frame.hpp"
#include "certsched/mission.hpp"

namespace certsched {

struct NetworkParams {
  int frame_slots = 160;
  double t_slot = 500e-6;   // payload portion of a slot, seconds
  double t_guard = 50e-6;   // guard interval, seconds
  double b_eff = 1e6;       // effective symbol rate, symbols/second
  double tau_slot() const { return t_slot + t_guard; }
};

struct TwinParams {
  int k_routes = 3;
  int max_hops = 3;
  std::vector<int> retx_depths = {0, 1, 2};
  std::vector<int> blocklengths = {200, 500};
  int horizon_opps = 16;   // outcome-window length for the interaction bound
  double delta_t = 0.01;   // per-cycle interaction-violation budget
};

// Predicted network snapshot for one cycle.  Node 0 is the GCS; UAV i sits
// at its reference position (the twin's best forecast of where the loop
// will be when the frame executes).
struct TwinState {
  int cycle = 0;
  std::vector<Eigen::Vector3d> nodes;
  Eigen::MatrixXd snr_db;                     // predicted, symmetric
  std::vector<std::vector<char>> avail;       // range + margin gate
  std::vector<std::vector<std::vector<int>>> routes_ul;  // [loop][rank] uav..gcs
  std::vector<std::vector<std::vector<int>>> routes_dl;  // [loop][rank] gcs..uav
};

TwinState predict(const MissionPlan& plan, int cycle, const ChannelParams& ch,
                  const TwinParams& tp);

// All simple paths src -> dst over available links with at most max_hops
// edges, ranked by (hop count, higher bottleneck predicted SNR, lexicographic
// node sequence); at most k returned.
std::vector<std::vector<int>> k_shortest_routes(const TwinState& twin, int src,
                                                int dst, int k, int max_hops);

double route_bottleneck_snr(const TwinState& twin, const std::vector<int>& route);

// Candidate actions for one loop: every UL-route x DL-route x retransmission
// depth x blocklength combination whose canonical pattern (UL hops first,
// then DL hops, each hop holding (1+retx) * block slots) fits the frame.
// Class keys are taken at the raw predicted bottleneck SNR; certificates are
// not yet attached.
std::vector<ScheduledAction> enumerate_actions(const TwinState& twin, int loop,
                                               const NetworkParams& net,
                                               const TwinParams& tp);

enum class ExclusionReason { kNone, kUncalibrated, kNoFiniteCertificate };

// Price an enumerated action against the calibrated model: delay coordinates
// from the slot spans, reliabilities from the class miss bounds evaluated at
// the margin-degraded SNR bucket (worst class inside the confidence set,
// rounded down at 1e-4), interaction interval from the failure-chain
// tolerance.  Fills cert, timing and chain in place; on exclusion the action
// must not be scheduled as certified.
ExclusionReason build_certificate(ScheduledAction& action,
                                  const ConfidenceModel& model, double t_s,
                                  const NetworkParams& net, const TwinParams& tp);

}  // namespace certsched
