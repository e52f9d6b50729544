#include "certsched/mission.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace certsched {
namespace {

// Counter-clockwise point on the facade-offset rectangle, arc length s from
// the mid-east starting point.
Eigen::Vector2d perimeter_point(double s, double hx, double hy) {
  const double perim = 4.0 * hx + 4.0 * hy;
  s = std::fmod(s, perim);
  if (s < 0.0) s += perim;
  if (s < hy) return {hx, s};                                   // east, up
  s -= hy;
  if (s < 2.0 * hx) return {hx - s, hy};                        // north
  s -= 2.0 * hx;
  if (s < 2.0 * hy) return {-hx, hy - s};                       // west
  s -= 2.0 * hy;
  if (s < 2.0 * hx) return {-hx + s, -hy};                      // south
  s -= 2.0 * hx;
  return {hx, -hy + s};                                         // east, rising
}

Eigen::Vector2d perimeter_tangent(double s, double hx, double hy) {
  const double eps = 1e-3;
  const Eigen::Vector2d d =
      perimeter_point(s + eps, hx, hy) - perimeter_point(s - eps, hx, hy);
  return d.normalized();
}

}  // namespace

MissionPlan::MissionPlan(const MissionParams& p, const CounterRng& rng,
                         std::uint64_t trial)
    : params_(p) {
  if (p.n_uavs < 1 || p.groups < 1 || p.cycles < 1) {
    throw std::invalid_argument("MissionPlan: empty mission");
  }
  const double hx = 0.5 * p.building_x + p.facade_offset;
  const double hy = 0.5 * p.building_y + p.facade_offset;
  const double perim = 4.0 * hx + 4.0 * hy;

  struct Gust {
    int onset, duration;
    Eigen::Vector3d accel;
  };
  std::vector<Gust> gusts(static_cast<std::size_t>(p.n_uavs));
  std::vector<double> arc(static_cast<std::size_t>(p.n_uavs));
  std::vector<double> alt(static_cast<std::size_t>(p.n_uavs));
  std::vector<double> base_alt(static_cast<std::size_t>(p.n_uavs));
  for (int i = 0; i < p.n_uavs; ++i) {
    arc[i] = perim * static_cast<double>(i) / static_cast<double>(p.n_uavs);
    base_alt[i] = p.alt_min + (p.alt_max - p.alt_min) *
                                  static_cast<double>(i % 4) / 3.0;
    alt[i] = base_alt[i];

    const auto u = static_cast<std::uint64_t>(i);
    const int span = std::max(1, p.cycles - 12);
    Gust& g = gusts[i];
    g.onset = 4 + static_cast<int>(rng.uniform(CounterRng::kGust, trial, u, 0) *
                                   span);
    g.duration =
        p.gust_cycles_min +
        static_cast<int>(rng.uniform(CounterRng::kGust, trial, u, 1) *
                         (p.gust_cycles_max - p.gust_cycles_min + 1));
    const double mag =
        p.gust_accel_min + rng.uniform(CounterRng::kGust, trial, u, 2) *
                               (p.gust_accel_max - p.gust_accel_min);
    const double mix = rng.uniform(CounterRng::kGust, trial, u, 3);
    const Eigen::Vector2d tan = perimeter_tangent(arc[i], hx, hy);
    const Eigen::Vector2d out =
        perimeter_point(arc[i], hx, hy).normalized();  // outward from center
    Eigen::Vector2d dir2 = (mix * tan + (1.0 - mix) * out).normalized();
    g.accel = mag * Eigen::Vector3d(dir2.x(), dir2.y(), 0.0);
  }

  frames_.assign(static_cast<std::size_t>(p.cycles) + 1,
                 std::vector<MissionFrame>(static_cast<std::size_t>(p.n_uavs)));
  std::vector<Eigen::Vector3d> gust_vel(static_cast<std::size_t>(p.n_uavs),
                                        Eigen::Vector3d::Zero());

  for (int k = 0; k <= p.cycles; ++k) {
    for (int i = 0; i < p.n_uavs; ++i) {
      MissionFrame& f = frames_[static_cast<std::size_t>(k)]
                               [static_cast<std::size_t>(i)];
      const MissionPhase phase = phase_of(k, group_of(i));
      f.phase = phase;
      const Eigen::Vector2d xy = perimeter_point(arc[i], hx, hy);
      f.reference = Eigen::Vector3d(xy.x(), xy.y(), alt[i]);

      const Gust& g = gusts[static_cast<std::size_t>(i)];
      const bool gusting = k >= g.onset && k < g.onset + g.duration;
      f.gust_accel = gusting ? g.accel : Eigen::Vector3d::Zero();
      f.gust_velocity = gust_vel[static_cast<std::size_t>(i)];

      // Advance kinematics for the next cycle.
      double vz = 0.0;
      if (phase == MissionPhase::kHotspot) {
        const int idx = k % p.hotspot_cycles;
        vz = ((idx / 2) % 2 == 0 ? 1.0 : -1.0) * p.vert_rate;
      } else if (phase == MissionPhase::kRecovery) {
        vz = std::clamp((base_alt[i] - alt[i]) / p.t_s, -p.vert_rate,
                        p.vert_rate);
      }
      const double vh = std::sqrt(
          std::max(0.0, p.speed_mps * p.speed_mps - vz * vz));
      arc[i] += vh * p.t_s;
      alt[i] = std::clamp(alt[i] + vz * p.t_s, p.alt_min - 8.0, p.alt_max + 8.0);

      Eigen::Vector3d& gv = gust_vel[static_cast<std::size_t>(i)];
      gv = gusting ? (gv + g.accel * p.t_s).eval() : (0.8 * gv).eval();
    }
  }
}

const MissionFrame& MissionPlan::at(int cycle, int uav) const {
  return frames_.at(static_cast<std::size_t>(cycle))
      .at(static_cast<std::size_t>(uav));
}

const Eigen::Vector3d& MissionPlan::reference(int cycle, int uav) const {
  return at(cycle, uav).reference;
}

WorldGeometry MissionPlan::world() const {
  WorldGeometry w;
  w.building.lo = Eigen::Vector3d(-0.5 * params_.building_x,
                                  -0.5 * params_.building_y, 0.0);
  w.building.hi = Eigen::Vector3d(0.5 * params_.building_x,
                                  0.5 * params_.building_y,
                                  params_.building_height);
  w.gcs = Eigen::Vector3d(params_.gcs_x, params_.gcs_y, params_.gcs_z);
  return w;
}

int MissionPlan::group_of(int uav) const {
  return uav * params_.groups / params_.n_uavs;
}

MissionPhase MissionPlan::phase_of(int cycle, int group) const {
  const int period = params_.groups * params_.hotspot_cycles;
  const int pos = cycle % period;
  const int start = group * params_.hotspot_cycles;
  if (pos >= start && pos < start + params_.hotspot_cycles) {
    return MissionPhase::kHotspot;
  }
  const int after = (pos - start - params_.hotspot_cycles + period) % period;
  if (after < params_.recovery_cycles) return MissionPhase::kRecovery;
  return MissionPhase::kCruise;
}

}  // namespace certsched
