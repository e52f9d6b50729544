// Command-line front end: calibrate the confidence model, export the
// certification tables, run closed-loop trials, compare policies on matched
// seeds, and cross-check the allocator against brute force.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "certsched/harness.hpp"

namespace {

using namespace certsched;

std::vector<std::uint64_t> resolve_seeds(const std::string& range,
                                         std::int64_t single,
                                         const std::vector<std::uint64_t>& fallback,
                                         int trials) {
  std::vector<std::uint64_t> seeds;
  if (!range.empty()) {
    seeds = parse_seed_range(range);
  } else if (single >= 0) {
    seeds.push_back(static_cast<std::uint64_t>(single));
  } else {
    seeds = fallback;
  }
  if (trials > 0 && static_cast<std::size_t>(trials) < seeds.size()) {
    seeds.resize(static_cast<std::size_t>(trials));
  }
  return seeds;
}

int count_classes(const ConfidenceModel& m) {
  return static_cast<int>(m.uplink.size() + m.downlink.size() + m.bidir.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"certificate-guided wireless allocation for UAV swarm control"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string seed_range;
  std::string policy_name_arg = "safe";
  std::vector<std::string> policy_names;
  std::int64_t seed_single = -1;
  int trials = 0;

  auto add_common = [&](CLI::App* sub, bool with_out) {
    sub->add_option("--config", config_path, "experiment config file")
        ->required()
        ->check(CLI::ExistingFile);
    if (with_out) sub->add_option("--out", out_dir, "output directory");
  };

  CLI::App* calibrate = app.add_subcommand(
      "calibrate", "run the exploration campaign and fit the confidence model");
  add_common(calibrate, true);
  calibrate->add_option("--seeds", seed_range,
                        "calibration seeds A..B (default: config seeds.calib)");
  calibrate->add_option("--trials", trials, "use only the first N seeds");

  CLI::App* certify = app.add_subcommand(
      "certify", "solve the certification grid and export the factor table");
  add_common(certify, true);

  CLI::App* run = app.add_subcommand(
      "run", "closed-loop trials of one policy");
  add_common(run, true);
  run->add_option("--policy", policy_name_arg,
                  "fixed_service | cert_fixed | dyntx_hlc | voi_sched | safe");
  run->add_option("--seed", seed_single, "single trial seed");
  run->add_option("--seeds", seed_range, "seed range A..B");
  run->add_option("--trials", trials, "use only the first N seeds");

  CLI::App* compare = app.add_subcommand(
      "compare", "matched-seed comparison across policies");
  add_common(compare, true);
  compare->add_option("--policy", policy_names,
                      "policy to include (repeatable; default: all five)");
  compare->add_option("--seeds", seed_range, "seed range A..B");
  compare->add_option("--trials", trials, "use only the first N seeds");

  CLI::App* oracle = app.add_subcommand(
      "oracle", "re-run the certified policy with brute-force allocation checks");
  add_common(oracle, true);
  oracle->add_option("--seed", seed_single, "single trial seed");
  oracle->add_option("--seeds", seed_range, "seed range A..B");
  oracle->add_option("--trials", trials, "use only the first N seeds");

  CLI11_PARSE(app, argc, argv);

  try {
    Config cfg = Config::load(config_path);
    CertifiedTables tables = build_tables(cfg);

    if (calibrate->parsed()) {
      cfg.calib_seeds = resolve_seeds(seed_range, -1, cfg.calib_seeds, trials);
      cfg.validate();
      ConfidenceModel model = ensure_model(cfg, tables, out_dir);
      std::printf("calibrated %d classes from %d residuals over %zu seeds\n",
                  count_classes(model), model.residual_count,
                  cfg.calib_seeds.size());
      std::printf("snr margin %.3f dB at coverage %.3f\n", model.snr_margin_db,
                  1.0 - model.beta);
      if (!out_dir.empty()) {
        std::printf("wrote %s/model.txt and calibration_log.txt\n",
                    out_dir.c_str());
      }
      return 0;
    }

    if (certify->parsed()) {
      const LkfSolution& sol = tables.table.solution();
      std::printf("grid (h_ul,h_dl) <= (%d,%d)  depth %d  iterations %d\n",
                  sol.h_ul_max, sol.h_dl_max, sol.depth, sol.iterations);
      std::printf("max residual %.3e  hold factor %.6f  v_max %.4f\n",
                  sol.max_residual, tables.alpha_hold, tables.domain.v_max);
      if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        const std::string path = out_dir + "/certification_table.csv";
        export_certification_table(tables, cfg, path);
        std::printf("wrote %s\n", path.c_str());
      }
      return 0;
    }

    // run / compare / oracle all need the calibrated model; an existing
    // model.txt in --out short-circuits the calibration campaign.
    ConfidenceModel model = ensure_model(cfg, tables, out_dir);

    if (run->parsed() || compare->parsed()) {
      std::vector<PolicyId> policies;
      if (run->parsed()) {
        policies.push_back(policy_from_name(policy_name_arg));
      } else if (policy_names.empty()) {
        policies = {PolicyId::kFixedService, PolicyId::kCertFixed,
                    PolicyId::kDynTxHlc, PolicyId::kVoiSched, PolicyId::kSafe};
      } else {
        for (const std::string& n : policy_names)
          policies.push_back(policy_from_name(n));
      }
      const std::vector<std::uint64_t> seeds =
          resolve_seeds(seed_range, seed_single, cfg.eval_seeds, trials);
      CompareOutcome out =
          run_compare(cfg, tables, model, seeds, policies, out_dir);
      std::printf("%s", format_summary_table(out.summaries).c_str());
      if (!out_dir.empty()) {
        std::printf("wrote per-trial records, ECDFs and summary.txt to %s\n",
                    out_dir.c_str());
      }
      return 0;
    }

    // oracle
    const std::vector<std::uint64_t> seeds =
        resolve_seeds(seed_range, seed_single, cfg.eval_seeds, trials);
    OracleStats stats = run_oracle(cfg, tables, model, seeds);
    std::printf("oracle: %lld cycles checked, %lld mismatches, max diff %.3e\n",
                stats.cycles, stats.mismatches, stats.max_diff);
    return stats.mismatches == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
