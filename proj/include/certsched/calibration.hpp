#pragma once

// Offline calibration: turns logged transport outcomes into one-sided
// confidence bounds that the certificate builder treats as ground truth.
//
// Every quantity consumed downstream is an upper confidence limit, so a
// certificate derived from the model is conservative whenever the logged
// conditions cover the deployment conditions (checked by the coverage test).

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "certsched/failure_chain.hpp"
#include "certsched/frame.hpp"

namespace certsched {

// One transport attempt as logged by the closed-loop harness.
// direction: 'u' uplink, 'd' downlink, 'b' bidirectional composite.
struct CalibrationRecord {
  std::uint64_t seed = 0;
  int cycle = 0;
  int loop = 0;
  ClassKey key;
  char direction = 'u';
  bool deadline_met = false;
  double realized_snr_db = 0.0;
  double predicted_snr_db = 0.0;
};

std::string format_record(const CalibrationRecord& r);
CalibrationRecord parse_record(const std::string& line);

void write_records(const std::string& path, const std::vector<CalibrationRecord>& records);
std::vector<CalibrationRecord> read_records(const std::string& path);

// One-sided upper confidence limit for a binomial proportion: the largest p
// such that observing <= misses failures out of n is still plausible at the
// requested confidence (exact Clopper-Pearson construction, solved by
// bisection on the binomial CDF).
double clopper_pearson_upper(int misses, int n, double confidence);

// Nearest-rank upper quantile of |samples| at the given coverage level.
double abs_quantile(std::vector<double> samples, double coverage);

struct ServiceBound {
  int records = 0;
  int misses = 0;
  double miss_upper = 1.0;  // UCL on the per-opportunity miss probability
};

struct ChainBound {
  int starts = 0;        // first opportunities of logged outcome windows
  int start_misses = 0;  // windows whose first opportunity missed
  int fail_steps = 0;    // opportunities immediately following a miss
  int fail_repeats = 0;  // of those, how many missed again
  double mu1_upper = 1.0;
  double p11_upper = 1.0;
};

// Calibrated model: per-class upper bounds plus a global SNR prediction
// margin.  Classes with fewer than min_records samples are absent, and
// lookups on absent classes fall back to the nearest strictly-worse SNR
// bucket of the same (hops, retx, blocklength) family; if no such bucket is
// calibrated the lookup fails and the action must be excluded.
struct ConfidenceModel {
  double beta = 0.05;
  int min_records = 50;
  double snr_margin_db = 0.0;
  int residual_count = 0;

  std::map<ClassKey, ServiceBound> uplink;
  std::map<ClassKey, ServiceBound> downlink;
  std::map<ClassKey, ServiceBound> bidir;
  std::map<ClassKey, ChainBound> chains;

  // UCL on the miss probability for one direction, worst-case over the
  // confidence set (conservative bucket fallback).  Empty if uncalibrated.
  std::optional<double> service_miss_upper(char direction, const ClassKey& key) const;

  // Interaction-chain parameters for the bidirectional composite class.
  std::optional<ChainParams> chain_params(const ClassKey& key) const;

  void save(const std::string& path) const;
  static ConfidenceModel load(const std::string& path);
};

// Fit the model from logged records.  beta is the per-bound tail mass
// (confidence 1-beta); classes below min_records are dropped.  Bounds are
// monotonized across SNR buckets within each (hops, retx, blocklength)
// family so that worse predicted SNR never yields a smaller bound.
ConfidenceModel calibrate(const std::vector<CalibrationRecord>& records,
                          double beta, int min_records);

// Fraction of held-out records whose realized outcome violated the model
// bound (deadline missed in a class the model claims meets it with the
// certified probability is not itself a violation -- misses are allowed at
// the bounded rate; what is checked cycle-level elsewhere).  Here: fraction
// of records where the realized SNR fell below prediction by more than the
// calibrated margin.
double margin_violation_rate(const ConfidenceModel& model,
                             const std::vector<CalibrationRecord>& records);

}  // namespace certsched
