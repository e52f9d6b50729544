#pragma once

#include <cstdint>
#include <vector>

#include "certsched/geometry.hpp"
#include "certsched/rng.hpp"

namespace certsched {

struct ChannelParams {
  double p_tx_dbm = 20.0;
  double bandwidth_hz = 5e6;
  double noise_figure_db = 7.0;
  double pl_ref_db = 40.05;      // path loss at the 1 m reference (2.4 GHz)
  double exp_los = 2.2;
  double exp_nlos = 3.5;
  double penetration_db = 20.0;  // extra loss when the building blocks the ray
  double shadow_sigma_db = 4.0;  // lognormal shadowing, fixed per run and link
  double max_range_m = 180.0;
  double avail_margin_db = 3.0;  // predicted SNR above decode base to admit a link
  double thr_base_db = 5.0;      // decode threshold at the 200-symbol reference

  // Two-state burst layer (Gilbert-Elliott at the cycle cadence).  A link in
  // the bad state loses burst_fade_db on every slot of the cycle, so the
  // retransmission attempts of one opportunity fail together rather than
  // independently.  Entry is more likely for rays that graze the roof edge or
  // stretch past burst_range_m; the twin never observes the state.
  double burst_fade_db = 18.0;
  double burst_p_stay = 0.65;        // P(bad stays bad) across cycles
  double burst_p_enter = 0.01;       // P(good turns bad), well-conditioned link
  double burst_p_enter_risk = 0.06;  // same, roof-grazing or long-range link
  double burst_clear_m = 10.0;       // roof clearance that separates the two
  double burst_range_m = 120.0;      // range that separates the two
};

// Thermal noise floor: -174 dBm/Hz + 10 log10(bandwidth) + noise figure.
double noise_floor_dbm(const ChannelParams& ch);

// Link budget: p_tx - path_loss + shadowing - noise floor.
double link_snr_db(double p_tx_dbm, double path_loss_db, double shadowing_db,
                   double noise_dbm);

// Log-distance path loss with LOS / through-building exponents.
double path_loss_db(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                    const Box& building, const ChannelParams& ch);

// Decode threshold for a coded block of n symbols, anchored at the
// 200-symbol reference and growing with blocklength.
double snr_threshold_db(int n, const ChannelParams& ch);

// Shadowing realization for the unordered node pair {a, b}: one draw per
// (trial, link), identical for every cycle, slot and policy.
double shadowing_db(const ChannelParams& ch, const CounterRng& rng,
                    std::uint64_t trial, int node_a, int node_b);

// Large-scale realized SNR (path loss + shadowing, no per-slot fading).
double realized_link_snr_db(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                            const Box& building, const ChannelParams& ch,
                            const CounterRng& rng, std::uint64_t trial,
                            int node_a, int node_b);

// Per-slot Rayleigh fading term in dB for a directed transmission: drawn from
// (trial, cycle, slot, transmitter, receiver) only.
double fading_db(const CounterRng& rng, std::uint64_t trial, int cycle,
                 int slot, int tx_node, int rx_node);

// Burst entry probability for the unordered link {a, b}: burst_p_enter_risk
// when the ray clears the roof by less than burst_clear_m or the range
// exceeds burst_range_m, burst_p_enter otherwise.
double burst_enter_prob(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                        const Box& building, const ChannelParams& ch);

// Per-link bad-state field, stepped once per control cycle from reference
// geometry and counter draws only, so every policy replaying a trial sees the
// same burst pattern no matter what it schedules.
class BurstField {
 public:
  void reset(int n_nodes);
  void step(const std::vector<Eigen::Vector3d>& reference_positions,
            const Box& building, const ChannelParams& ch, const CounterRng& rng,
            std::uint64_t trial, int cycle);
  bool bad(int node_a, int node_b) const;
  int n_nodes() const { return n_; }

 private:
  int n_ = 0;
  std::vector<char> state_;
};

// Twin-side prediction: path loss from predicted positions, no shadowing or
// fading knowledge.
double predicted_link_snr_db(const Eigen::Vector3d& a,
                             const Eigen::Vector3d& b, const Box& building,
                             const ChannelParams& ch);

}  // namespace certsched
