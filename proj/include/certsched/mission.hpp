#pragma once

#include <cstdint>
#include <vector>

#include "certsched/geometry.hpp"
#include "certsched/rng.hpp"

namespace certsched {

struct MissionParams {
  int n_uavs = 10;
  int groups = 4;
  double speed_mps = 15.0;
  double t_s = 0.25;
  int cycles = 120;
  double building_x = 60.0;
  double building_y = 60.0;
  double building_height = 80.0;
  double facade_offset = 20.0;
  double alt_min = 70.0;
  double alt_max = 100.0;
  int hotspot_cycles = 6;
  int recovery_cycles = 4;
  double gust_accel_min = 2.0;
  double gust_accel_max = 4.0;
  int gust_cycles_min = 2;
  int gust_cycles_max = 6;
  double gcs_x = 70.0;
  double gcs_y = 0.0;
  double gcs_z = 2.0;
  double vert_rate = 10.0;  // vertical speed share of hotspot excursions
};

enum class MissionPhase { kCruise, kHotspot, kRecovery };

struct MissionFrame {
  Eigen::Vector3d reference = Eigen::Vector3d::Zero();
  Eigen::Vector3d gust_accel = Eigen::Vector3d::Zero();
  Eigen::Vector3d gust_velocity = Eigen::Vector3d::Zero();
  MissionPhase phase = MissionPhase::kCruise;
};

// Deterministic mission for one trial: every UAV sweeps the facade-offset
// perimeter at constant path speed; groups take turns in an inspection
// hotspot (shorter legs, vertical excursions) followed by a recovery leg
// back to cruise altitude; gusts are per-UAV wind events fixed by the trial
// seed.  References move at most speed_mps * t_s per cycle.
class MissionPlan {
 public:
  MissionPlan(const MissionParams& params, const CounterRng& rng,
              std::uint64_t trial);

  const MissionFrame& at(int cycle, int uav) const;
  // Reference one cycle past the horizon is available for feedforward.
  const Eigen::Vector3d& reference(int cycle, int uav) const;

  WorldGeometry world() const;
  int group_of(int uav) const;
  MissionPhase phase_of(int cycle, int group) const;
  const MissionParams& params() const { return params_; }

 private:
  MissionParams params_;
  std::vector<std::vector<MissionFrame>> frames_;  // [cycle][uav], cycles + 1
};

}  // namespace certsched
