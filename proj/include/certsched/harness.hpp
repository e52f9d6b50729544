#pragma once

// Experiment driver: offline certification tables, the closed-loop trial
// engine, calibration and evaluation campaigns, metric aggregation, and the
// record / ECDF file formats.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "certsched/allocator.hpp"
#include "certsched/baselines.hpp"
#include "certsched/calibration.hpp"
#include "certsched/config.hpp"
#include "certsched/twin.hpp"

namespace certsched {

// Everything derived offline from the config before any trial runs.
struct CertifiedTables {
  EnvelopeTable table;        // holds the LKF solution and factor grids
  double gain = 0.0;          // scalar LQR feedback gain
  double alpha_hold = 1.0;    // certified zero-allocation growth factor
  double local_gain = 0.0;    // safe-mode physical feedback gain
  AdmissibleDomain domain;
  SafeModeParams safe;
  DriftParams drift;
};

// Solve the certification grid and derive domain / drift constants.  Throws
// std::runtime_error when the grid admits no common quadratic certificate.
CertifiedTables build_tables(const Config& cfg);

// One row per (h_ul, h_dl, g): certified factors, the run factor bounding
// the g-th consecutive failure, and the hold factor.  CSV with a header.
void export_certification_table(const CertifiedTables& tables,
                                const Config& cfg, const std::string& path);

struct CycleRow {
  int cycle = 0;
  double rmse = 0.0;
  int slots_used = 0;
  int n_admitted = 0;  // loops served by a policy-selected action
  int n_hold = 0;
  int n_safe = 0;
  int n_sync = 0;  // resync exchanges that completed bidirectionally
  int n_viol = 0;  // certified interaction budgets overrun this cycle
  std::vector<double> v_norm;    // per loop, v / v_max
  std::vector<double> sigma;     // per loop, covariance trace
  std::vector<double> dl_delay;  // per loop, delivered-command delay s; < 0 = none
  std::vector<int> fail_run;     // per loop, consecutive cycles without refresh
};

struct TrialRecord {
  std::uint64_t seed = 0;
  std::string policy;
  std::vector<CycleRow> rows;

  // Certified-event bookkeeping (filled for the certified policy).
  std::vector<double> delta_w;       // W drift on executed-admitted cycles,
                                     // coverage event held
  long long admitted_cycles = 0;     // executed-admitted loop-cycles
  long long margin_ok = 0;           // realized SNR within predicted margin
  long long margin_total = 0;
  long long realized_dom_ok = 0;     // realized supply dominates certified
  long long realized_dom_total = 0;
};

std::string format_trial(const TrialRecord& trial);
void write_trial(const std::string& path, const TrialRecord& trial);

struct OracleStats {
  long long cycles = 0;
  long long mismatches = 0;
  double max_diff = 0.0;
};

struct EngineOptions {
  PolicyId policy = PolicyId::kSafe;
  bool explore = false;  // calibration explorer: rotate through candidates
  std::vector<CalibrationRecord>* log = nullptr;
  OracleStats* oracle = nullptr;  // cross-check DP against brute force
};

// One deterministic closed-loop trial.  The confidence model may be null
// only for the explorer and the certificate-free baselines.
TrialRecord run_trial(const Config& cfg, const CertifiedTables& tables,
                      const ConfidenceModel* model, std::uint64_t seed,
                      const EngineOptions& opts);

struct PolicySummary {
  std::string policy;
  double mean_rmse = 0.0;
  double p95_rmse = 0.0;
  double p95_vnorm = 0.0;
  double mean_dl_delay = 0.0;
  double p95_dl_delay = 0.0;
  double mean_slots = 0.0;
  long long delivered = 0;   // DL commands delivered
  long long sync_events = 0;
  long long violations = 0;
};

// Nearest-rank percentile: the ceil(p*n)-th smallest sample, p in (0, 1].
double nearest_rank_percentile(std::vector<double> samples, double p);

PolicySummary summarize(const std::string& policy,
                        const std::vector<TrialRecord>& trials);

std::string format_summary_table(const std::vector<PolicySummary>& summaries);

// Sorted samples, one per line after a '#' header; full precision so parsing
// the file reproduces summary percentiles exactly.
void write_ecdf(const std::string& path, const std::string& field,
                std::vector<double> samples);
std::vector<double> read_ecdf(const std::string& path);

// Run the calibration campaign over cfg.calib_seeds and fit the model.  When
// out_dir is nonempty the raw log and model are written there (model.txt,
// calibration_log.txt); an existing model.txt short-circuits the campaign.
ConfidenceModel ensure_model(const Config& cfg, const CertifiedTables& tables,
                             const std::string& out_dir);

struct CompareOutcome {
  std::vector<PolicySummary> summaries;  // one per requested policy
  std::map<std::string, std::vector<TrialRecord>> trials;
};

// Matched-seed evaluation of the given policies; when out_dir is nonempty,
// per-trial records, ECDF files and the summary table are written there.
CompareOutcome run_compare(const Config& cfg, const CertifiedTables& tables,
                           const ConfidenceModel& model,
                           const std::vector<std::uint64_t>& seeds,
                           const std::vector<PolicyId>& policies,
                           const std::string& out_dir);

// Closed-loop oracle: rerun the certified policy with per-cycle brute-force
// verification of the allocation optimum.  Enforces the small-instance gate
// (throws std::invalid_argument when the config is too large to enumerate).
OracleStats run_oracle(const Config& cfg, const CertifiedTables& tables,
                       const ConfidenceModel& model,
                       const std::vector<std::uint64_t>& seeds);

}  // namespace certsched
