#include "certsched/config.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <stdexcept>

namespace certsched {
namespace {

class KeyMap {
 public:
  explicit KeyMap(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      std::string key;
      if (!(ls >> key)) continue;
      std::string eq_or_value;
      ls >> eq_or_value;
      if (eq_or_value == "=") ls >> eq_or_value;
      if (eq_or_value.empty()) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": key without value: " + key);
      }
      std::string rest;
      std::getline(ls, rest);
      rest.erase(0, rest.find_first_not_of(" \t"));
      if (!rest.empty()) eq_or_value += " " + rest;
      if (!values_.emplace(key, eq_or_value).second) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": duplicate key " + key);
      }
    }
  }

  template <typename T>
  void take(const std::string& key, T& into) {
    const auto it = values_.find(key);
    if (it == values_.end()) return;
    std::istringstream vs(it->second);
    vs >> into;
    if (!vs) throw std::runtime_error("config key " + key + ": cannot parse '" +
                                      it->second + "'");
    values_.erase(it);
  }

  void take_ints(const std::string& key, std::vector<int>& into) {
    const auto it = values_.find(key);
    if (it == values_.end()) return;
    std::vector<int> parsed;
    std::string item;
    std::istringstream vs(it->second);
    while (std::getline(vs, item, ',')) {
      parsed.push_back(std::stoi(item));
    }
    if (parsed.empty()) throw std::runtime_error("config key " + key + ": empty list");
    into = parsed;
    values_.erase(it);
  }

  void take_seeds(const std::string& key, std::vector<std::uint64_t>& into) {
    const auto it = values_.find(key);
    if (it == values_.end()) return;
    into = parse_seed_range(it->second);
    values_.erase(it);
  }

  void reject_leftovers(const std::string& path) const {
    if (values_.empty()) return;
    std::string msg = "unknown config keys in " + path + ":";
    for (const auto& [k, v] : values_) msg += " " + k;
    throw std::runtime_error(msg);
  }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace

std::vector<std::uint64_t> parse_seed_range(const std::string& text) {
  const auto dots = text.find("..");
  std::vector<std::uint64_t> out;
  if (dots == std::string::npos) {
    out.push_back(std::stoull(text));
    return out;
  }
  const std::uint64_t a = std::stoull(text.substr(0, dots));
  const std::uint64_t b = std::stoull(text.substr(dots + 2));
  if (b < a) throw std::invalid_argument("seed range ends before it starts: " + text);
  if (b - a > 100000) throw std::invalid_argument("seed range too large: " + text);
  for (std::uint64_t s = a; s <= b; ++s) out.push_back(s);
  return out;
}

Config Config::defaults() {
  Config c;
  for (std::uint64_t s = 1000; s < 1040; ++s) c.calib_seeds.push_back(s);
  for (std::uint64_t s = 0; s < 10; ++s) c.eval_seeds.push_back(s);
  return c;
}

Config Config::load(const std::string& path) {
  Config c = defaults();
  KeyMap kv(path);

  kv.take("mission.n_uavs", c.mission.n_uavs);
  kv.take("mission.groups", c.mission.groups);
  kv.take("mission.speed_mps", c.mission.speed_mps);
  kv.take("mission.t_s", c.mission.t_s);
  kv.take("mission.cycles", c.mission.cycles);
  kv.take("mission.building_x", c.mission.building_x);
  kv.take("mission.building_y", c.mission.building_y);
  kv.take("mission.building_height", c.mission.building_height);
  kv.take("mission.facade_offset", c.mission.facade_offset);
  kv.take("mission.alt_min", c.mission.alt_min);
  kv.take("mission.alt_max", c.mission.alt_max);
  kv.take("mission.hotspot_cycles", c.mission.hotspot_cycles);
  kv.take("mission.recovery_cycles", c.mission.recovery_cycles);
  kv.take("mission.gust_accel_min", c.mission.gust_accel_min);
  kv.take("mission.gust_accel_max", c.mission.gust_accel_max);
  kv.take("mission.gust_cycles_min", c.mission.gust_cycles_min);
  kv.take("mission.gust_cycles_max", c.mission.gust_cycles_max);
  kv.take("mission.gcs_x", c.mission.gcs_x);
  kv.take("mission.gcs_y", c.mission.gcs_y);
  kv.take("mission.gcs_z", c.mission.gcs_z);
  kv.take("mission.vert_rate", c.mission.vert_rate);

  kv.take("channel.p_tx_dbm", c.channel.p_tx_dbm);
  kv.take("channel.bandwidth_hz", c.channel.bandwidth_hz);
  kv.take("channel.noise_figure_db", c.channel.noise_figure_db);
  kv.take("channel.pl_ref_db", c.channel.pl_ref_db);
  kv.take("channel.exp_los", c.channel.exp_los);
  kv.take("channel.exp_nlos", c.channel.exp_nlos);
  kv.take("channel.penetration_db", c.channel.penetration_db);
  kv.take("channel.shadow_sigma_db", c.channel.shadow_sigma_db);
  kv.take("channel.max_range_m", c.channel.max_range_m);
  kv.take("channel.avail_margin_db", c.channel.avail_margin_db);
  kv.take("channel.thr_base_db", c.channel.thr_base_db);
  kv.take("channel.burst_fade_db", c.channel.burst_fade_db);
  kv.take("channel.burst_p_stay", c.channel.burst_p_stay);
  kv.take("channel.burst_p_enter", c.channel.burst_p_enter);
  kv.take("channel.burst_p_enter_risk", c.channel.burst_p_enter_risk);
  kv.take("channel.burst_clear_m", c.channel.burst_clear_m);
  kv.take("channel.burst_range_m", c.channel.burst_range_m);

  kv.take("net.frame_slots", c.net.frame_slots);
  kv.take("net.t_slot", c.net.t_slot);
  kv.take("net.t_guard", c.net.t_guard);
  kv.take("net.b_eff", c.net.b_eff);

  kv.take("twin.k_routes", c.twin.k_routes);
  kv.take("twin.max_hops", c.twin.max_hops);
  kv.take_ints("twin.retx_depths", c.twin.retx_depths);
  kv.take_ints("twin.blocklengths", c.twin.blocklengths);
  kv.take("twin.horizon_opps", c.twin.horizon_opps);
  kv.take("twin.delta_t", c.twin.delta_t);

  kv.take("control.q_weight", c.control.q_weight);
  kv.take("control.r_weight", c.control.r_weight);
  kv.take("control.theta", c.control.theta);
  kv.take("control.epsilon", c.control.epsilon);
  kv.take("control.h_ul_max", c.control.h_ul_max);
  kv.take("control.h_dl_max", c.control.h_dl_max);
  kv.take("control.lkf_iterations", c.control.lkf_iterations);

  kv.take("noise.proc_tr", c.noise.proc_tr);
  kv.take("noise.meas_tr", c.noise.meas_tr);

  kv.take("domain.radius_m", c.domain.radius_m);
  kv.take("domain.sigma_max_factor", c.domain.sigma_max_factor);
  kv.take("domain.safe_contraction", c.domain.safe_contraction);
  kv.take("domain.v_floor", c.domain.v_floor);

  kv.take("calib.beta", c.calib.beta);
  kv.take("calib.min_records", c.calib.min_records);

  kv.take("lambda_sigma", c.lambda_sigma);
  kv.take_seeds("seeds.calib", c.calib_seeds);
  kv.take_seeds("seeds.eval", c.eval_seeds);

  kv.reject_leftovers(path);
  c.validate();
  return c;
}

void Config::validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("config: " + what);
  };
  if (mission.n_uavs < 1) fail("mission.n_uavs must be >= 1");
  if (mission.groups < 1 || mission.groups > mission.n_uavs)
    fail("mission.groups must lie in [1, n_uavs]");
  if (!(mission.t_s > 0.0)) fail("mission.t_s must be > 0");
  if (mission.cycles < 1) fail("mission.cycles must be >= 1");
  if (net.frame_slots < 1) fail("net.frame_slots must be >= 1");
  if (!(net.t_slot > 0.0) || net.t_guard < 0.0) fail("net slot timing must be positive");
  const double frame_span = net.frame_slots * net.tau_slot();
  if (frame_span > mission.t_s) {
    fail("numerology violates frame-within-cycle: frame_slots * tau_slot = " +
         std::to_string(frame_span) + " s exceeds t_s");
  }
  if (channel.burst_fade_db < 0.0) fail("channel.burst_fade_db must be >= 0");
  for (double p : {channel.burst_p_stay, channel.burst_p_enter,
                   channel.burst_p_enter_risk}) {
    if (!(p >= 0.0 && p < 1.0)) fail("burst probabilities must lie in [0,1)");
  }
  if (channel.burst_clear_m < 0.0 || channel.burst_range_m <= 0.0)
    fail("burst geometry knobs must be positive");
  if (!(calib.beta > 0.0 && calib.beta < 1.0)) fail("calib.beta must lie in (0,1)");
  if (calib.min_records < 1) fail("calib.min_records must be >= 1");
  if (twin.k_routes < 1 || twin.max_hops < 1) fail("twin route knobs must be >= 1");
  if (twin.horizon_opps < 1) fail("twin.horizon_opps must be >= 1");
  if (!(twin.delta_t > 0.0 && twin.delta_t < 1.0)) fail("twin.delta_t must lie in (0,1)");
  if (!(control.theta > 0.0 && control.theta < 1.0)) fail("control.theta must lie in (0,1)");
  if (!(noise.proc_tr > 0.0 && noise.meas_tr > 0.0)) fail("noise traces must be > 0");
  if (!(lambda_sigma > 0.0)) fail("lambda_sigma must be > 0");
  for (int r : twin.retx_depths)
    if (r < 0) fail("twin.retx_depths must be nonnegative");
  for (int n : twin.blocklengths)
    if (n < 1) fail("twin.blocklengths must be >= 1");
  // Calibration and evaluation seeds must not overlap.
  std::vector<std::uint64_t> a = calib_seeds, b = eval_seeds;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<std::uint64_t> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(both));
  if (!both.empty()) {
    fail("seeds.calib and seeds.eval overlap at seed " + std::to_string(both.front()));
  }
}

}  // namespace certsched
