#include "certsched/channel.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <stdexcept>

namespace certsched {

double noise_floor_dbm(const ChannelParams& ch) {
  return -174.0 + 10.0 * std::log10(ch.bandwidth_hz) + ch.noise_figure_db;
}

double link_snr_db(double p_tx_dbm, double path_loss_db, double shadowing_db,
                   double noise_dbm) {
  return p_tx_dbm - path_loss_db + shadowing_db - noise_dbm;
}

double path_loss_db(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                    const Box& building, const ChannelParams& ch) {
  const double d = std::max(1.0, (a - b).norm());
  if (segment_blocked(a, b, building)) {
    return ch.pl_ref_db + 10.0 * ch.exp_nlos * std::log10(d) + ch.penetration_db;
  }
  return ch.pl_ref_db + 10.0 * ch.exp_los * std::log10(d);
}

double snr_threshold_db(int n, const ChannelParams& ch) {
  if (n <= 0) throw std::invalid_argument("snr_threshold_db: n must be > 0");
  return ch.thr_base_db + 10.0 * std::log10(static_cast<double>(n) / 200.0);
}

double shadowing_db(const ChannelParams& ch, const CounterRng& rng,
                    std::uint64_t trial, int node_a, int node_b) {
  const auto lo = static_cast<std::uint64_t>(std::min(node_a, node_b));
  const auto hi = static_cast<std::uint64_t>(std::max(node_a, node_b));
  return ch.shadow_sigma_db * rng.normal(CounterRng::kShadowing, trial, lo, hi);
}

double realized_link_snr_db(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                            const Box& building, const ChannelParams& ch,
                            const CounterRng& rng, std::uint64_t trial,
                            int node_a, int node_b) {
  return link_snr_db(ch.p_tx_dbm, path_loss_db(a, b, building, ch),
                     shadowing_db(ch, rng, trial, node_a, node_b),
                     noise_floor_dbm(ch));
}

double fading_db(const CounterRng& rng, std::uint64_t trial, int cycle,
                 int slot, int tx_node, int rx_node) {
  const double gain = rng.exponential(
      CounterRng::kFading, trial, static_cast<std::uint64_t>(cycle),
      static_cast<std::uint64_t>(slot), static_cast<std::uint64_t>(tx_node),
      static_cast<std::uint64_t>(rx_node));
  return 10.0 * std::log10(gain);
}

double predicted_link_snr_db(const Eigen::Vector3d& a,
                             const Eigen::Vector3d& b, const Box& building,
                             const ChannelParams& ch) {
  return link_snr_db(ch.p_tx_dbm, path_loss_db(a, b, building, ch), 0.0,
                     noise_floor_dbm(ch));
}

namespace {

// Distance from point p to the axis-aligned box (0 inside).
double point_box_distance(const Eigen::Vector3d& p, const Box& box) {
  const Eigen::Array3d below = (box.lo - p).array().max(0.0);
  const Eigen::Array3d above = (p - box.hi).array().max(0.0);
  return std::sqrt((below * below + above * above).sum());
}

// Closest approach of the segment a-b to the box, sampled densely; exact
// enough to classify whether a ray passes through the multipath band around
// the structure.
double segment_box_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                            const Box& box) {
  double best = std::numeric_limits<double>::infinity();
  constexpr int kSamples = 32;
  for (int s = 0; s <= kSamples; ++s) {
    const double t = static_cast<double>(s) / kSamples;
    best = std::min(best, point_box_distance(a + t * (b - a), box));
  }
  return best;
}

}  // namespace

double burst_enter_prob(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                        const Box& building, const ChannelParams& ch) {
  if ((a - b).norm() > ch.burst_range_m) return ch.burst_p_enter_risk;
  // Rays skimming the structure sit in its reflection/diffraction field and
  // fade in bursts; the twin's large-scale model cannot see this.
  if (segment_box_distance(a, b, building) < ch.burst_clear_m) {
    return ch.burst_p_enter_risk;
  }
  return ch.burst_p_enter;
}

void BurstField::reset(int n_nodes) {
  n_ = n_nodes;
  state_.assign(static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_), 0);
}

void BurstField::step(const std::vector<Eigen::Vector3d>& reference_positions,
                      const Box& building, const ChannelParams& ch,
                      const CounterRng& rng, std::uint64_t trial, int cycle) {
  if (static_cast<int>(reference_positions.size()) != n_) {
    throw std::invalid_argument("BurstField::step: node count mismatch");
  }
  for (int a = 0; a < n_; ++a) {
    for (int b = a + 1; b < n_; ++b) {
      const double u = rng.uniform(CounterRng::kBurst, trial,
                                   static_cast<std::uint64_t>(cycle),
                                   static_cast<std::uint64_t>(a),
                                   static_cast<std::uint64_t>(b));
      char& s = state_[static_cast<std::size_t>(a) * n_ + b];
      if (s) {
        s = u < ch.burst_p_stay ? 1 : 0;
      } else {
        const double p_enter = burst_enter_prob(
            reference_positions[static_cast<std::size_t>(a)],
            reference_positions[static_cast<std::size_t>(b)], building, ch);
        s = u < p_enter ? 1 : 0;
      }
      state_[static_cast<std::size_t>(b) * n_ + a] = s;
    }
  }
}

bool BurstField::bad(int node_a, int node_b) const {
  return state_[static_cast<std::size_t>(node_a) * n_ + node_b] != 0;
}

}  // namespace certsched
