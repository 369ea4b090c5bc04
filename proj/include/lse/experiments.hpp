#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lse/certificate.hpp"
#include "lse/recovery.hpp"
#include "lse/signal.hpp"

namespace lse {

// Rectangles the frequencies are drawn from, with optional fixed
// per-region component counts (empty = area-weighted i.i.d. placement).
struct ExperimentConfig {
  int n = 7;
  int s = 4;
  int trials = 100;
  std::uint64_t seed = 1;
  std::vector<int> m_list;                 // measurement counts to sweep
  std::vector<SubbandPrior> priors;        // empty = unweighted only
  std::vector<RawSubband> regions;         // frequency sampling regions
  std::vector<int> region_counts;          // optional fixed split, sums to s
  int resolution = 0;                      // 0 = max(256, 4n) default
  double success_radius = 1e-2;
  std::string out_dir = ".";
  bool covering_straddle = false;

  void validate() const;  // throws std::invalid_argument
};

struct TrialRecord {
  int trial = 0;
  std::uint64_t stream_seed = 0;
  SpectralSignal truth;
  int m = 0;
  std::string method;  // "weighted" | "unweighted"
  bool success = false;
  bool solver_failed = false;
  std::vector<double> frequency_errors;
  int solver_iterations = 0;
  double wall_seconds = 0.0;
};

struct SweepCell {
  int m = 0;
  std::string method;
  int trials = 0;
  int successes = 0;
  double rate = 0.0;
  double ci_lo = 0.0;  // 95% Wilson interval
  double ci_hi = 0.0;
};

struct SweepReport {
  std::vector<TrialRecord> records;
  std::vector<SweepCell> cells;
  int solver_failures = 0;
  int total_solves = 0;
};

// Draws s components: frequencies uniform over the configured regions
// (fixed split if region_counts is set, else area-weighted), amplitudes
// |d| = 0.5 + chi^2(1), phase uniform.
SpectralSignal draw_signal(const ExperimentConfig& config, std::uint64_t stream_seed);

// One recovery attempt on given observations. Peaks of the (weighted)
// dual polynomial are scored against the truth.
TrialRecord run_trial(const ExperimentConfig& config, int trial, int m,
                      bool weighted);

SweepReport run_sweep(const ExperimentConfig& config);

struct DualPolyReport {
  SpectralSignal truth;
  std::vector<std::string> surface_files;
  std::string summary_file;
  std::vector<bool> successes;  // per method, weighted first if present
};

// One drawn signal, full resolution |Q(f)| surfaces for each method,
// CSVs plus a JSON summary in config.out_dir.
DualPolyReport run_dualpoly(const ExperimentConfig& config);

// 95% Wilson score interval for successes out of trials.
std::pair<double, double> wilson_interval(int successes, int trials);

void sweep_to_csv(const SweepReport& report, std::ostream& os);

}  // namespace lse
