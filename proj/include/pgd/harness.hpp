#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pgd/config.hpp"
#include "pgd/csv.hpp"
#include "pgd/optimizers.hpp"
#include "pgd/population.hpp"

namespace pgd {

// ratio = 0: floor(k/2) entries -0.1 followed by floor(k/2) entries +0.1,
// with a single 0 in the middle when k is odd, so 1^T a* = 0.
// ratio r > 0: a* = (1/r) 1, so 1^T a* / |a*|^2 = r.
// w* is drawn uniformly from the sphere.
TeacherParams build_teacher(int p, int k, double ratio, RngStream& rng);

// First half of a* at 1/sqrt(k), second half at -1/sqrt(k); w* uniform.
TeacherParams build_overparam_teacher(int p, int k, RngStream& rng);

// Runs fn(i) for i in [0, n) over a pool of workers. Result slots are owned by
// the caller, so outcomes do not depend on the worker count.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

struct CellResult {
  int k = 0;
  double ratio = 0.0;
  int successes = 0;
  int trials = 0;
  double rate() const { return trials ? static_cast<double>(successes) / trials : 0.0; }
};

struct SuccessTable {
  std::vector<int> k_values;
  std::vector<double> ratios;
  std::vector<CellResult> cells;  // row-major: k outer, ratio inner

  const CellResult& at(int k, double ratio) const;
  std::string csv() const;
};

// Outcome of a single configured trial.
struct TrialOutcome {
  RunResult run;
  std::uint64_t stream_id = 0;
};

// One trial of the configured algorithm for teacher shape (k, ratio).
TrialOutcome run_trial(const ExperimentConfig& cfg, int k, double ratio, int trial,
                       bool record = false);

SuccessTable run_table1(const ExperimentConfig& cfg, bool write_files = true);

struct TrajectoryTrialSummary {
  int trial = 0;
  bool succeeded = false;
  int escape_epoch = -1;  // first epoch after which every record has a^T a* > 0
  double final_phi = 0.0;
  double final_a_err = 0.0;  // |a - a*|^2 / |a*|^2
  double late_phi_jitter = 0.0;  // std of successive phi differences, last 30% of epochs
};

struct TrajectoryReport {
  std::vector<TrialRecord> rows;
  std::vector<TrialRecord> mean_rows;  // trial = -1
  std::vector<TrajectoryTrialSummary> trials;
  int phase_transition_count() const;  // trials that escape and succeed
};

int escape_epoch(const std::vector<TrajectoryRecord>& records);

TrajectoryReport run_trajectory(const ExperimentConfig& cfg, bool write_files = true);

struct OverparamReport {
  std::uint64_t dataset_seed = 0;
  double population_spurious_loss = 0.0;
  OverparamRun run;
};

OverparamReport run_overparam(const ExperimentConfig& cfg, bool write_files = true);

struct Claim {
  std::string claim_id;
  std::string description;
  double estimate = 0.0;
  double std_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct VerifyReport {
  std::vector<Claim> claims;
  bool all_pass() const;
  std::string json() const;
  std::string text() const;
};

struct VerifyOptions {
  AngleKernel kernel = g_phi;  // swapped out only by negative-control tests
};

VerifyReport run_verify(const ExperimentConfig& cfg, const VerifyOptions& opts = {},
                        bool write_files = true);

}  // namespace pgd
