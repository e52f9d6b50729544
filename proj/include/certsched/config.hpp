#pragma once

// Experiment configuration: a flat dotted-key text file over typed defaults.
// Unknown keys are rejected so typos fail loudly.

#include <cstdint>
#include <string>
#include <vector>

#include "certsched/channel.hpp"
#include "certsched/mission.hpp"
#include "certsched/twin.hpp"

namespace certsched {

struct ControlParams {
  double q_weight = 1.0;
  double r_weight = 0.1;
  double theta = 0.5;        // fresh-share weight of the lifted feedback
  double epsilon = 1e-4;     // LKF margin
  int h_ul_max = 1;          // certification delay grid
  int h_dl_max = 1;
  int lkf_iterations = 6000;
};

struct NoiseParams {
  double proc_tr = 0.01;  // per-cycle process-noise covariance trace, m^2
  double meas_tr = 0.03;  // measurement covariance trace, m^2
};

struct DomainParams {
  double radius_m = 10.0;       // v_max = lambda_min(X) * radius^2
  double sigma_max_factor = 25.0;  // sigma_max = factor * meas_tr
  double safe_contraction = 0.95;
  double v_floor = 0.0;
};

struct CalibParams {
  double beta = 0.05;
  int min_records = 50;
};

struct Config {
  MissionParams mission;
  ChannelParams channel;
  NetworkParams net;
  TwinParams twin;
  ControlParams control;
  NoiseParams noise;
  DomainParams domain;
  CalibParams calib;
  double lambda_sigma = 1.0;
  std::vector<std::uint64_t> calib_seeds;  // default 1000..1039
  std::vector<std::uint64_t> eval_seeds;   // default 0..9

  static Config defaults();
  static Config load(const std::string& path);

  // Numerology, horizon, seed-disjointness and parameter-range checks;
  // throws std::invalid_argument with the offending key.
  void validate() const;
};

// "A..B" (inclusive) or a single integer.
std::vector<std::uint64_t> parse_seed_range(const std::string& text);

}  // namespace certsched
