#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pgd/empirical.hpp"
#include "pgd/population.hpp"
#include "pgd/rng.hpp"

namespace pgd {

struct EpochSpec {
  int iters = 1;       // T_s; the epoch takes T_s - 1 steps
  double eta = 0.1;
  double rho_w = 0.0;
  double rho_a = 0.0;
};

// Per-epoch step size and noise radii. Noise radii may not increase.
class AnnealingSchedule {
 public:
  explicit AnnealingSchedule(std::vector<EpochSpec> epochs);

  // eta_s = eta0 * eta_decay^s and rho_s = rho0 * rho_decay^s for s = 0..epochs-1.
  static AnnealingSchedule geometric(int epochs, int iters, double eta0, double eta_decay,
                                     double rho_w0, double rho_a0, double rho_decay);

  const std::vector<EpochSpec>& epochs() const noexcept { return epochs_; }
  // Total number of update steps, sum over epochs of (T_s - 1).
  long long total_steps() const noexcept;

 private:
  std::vector<EpochSpec> epochs_;
};

struct TrajectoryRecord {
  int epoch = 0;     // 1-based
  long long iter = 0;  // global step count at which the record was taken
  double inner_aa = 0.0;
  double phi = 0.0;
  double loss = 0.0;
};

struct SuccessTolerance {
  double tol_a = 1e-3;
  double tol_phi = 1e-2;
};

struct RunOptions {
  int record_every = 10;  // 0 disables recording
  SuccessTolerance tolerance;
};

struct RunResult {
  StudentParams final;
  std::vector<TrajectoryRecord> trajectory;
  bool succeeded = false;
  std::uint64_t seed = 0;
};

struct SgdConfig {
  int batch_size = 4;
  double radius = 10.0;
  AnnealingSchedule schedule;
};

// |a - a*|^2 <= tol_a |a*|^2 and angle(w, w*) <= tol_phi.
bool success_check(const StudentParams& s, const TeacherParams& t, SuccessTolerance tol = {});

// One step of perturbed GD. A single (xi, eps) draw feeds both updates.
StudentParams perturbed_gd_step(const StudentParams& s, const TeacherParams& t, double eta,
                                double rho_w, double rho_a, RngStream& rng);

// Noise-free step; identical to perturbed_gd_step with zero radii.
StudentParams vanilla_gd_step(const StudentParams& s, const TeacherParams& t, double eta);

// Algorithm with noise annealing: epochs warm-start from the previous epoch's
// final iterate.
RunResult run_perturbed_gd(const StudentParams& init, const AnnealingSchedule& schedule,
                           const TeacherParams& t, const RunOptions& opts, RngStream& rng);

RunResult run_vanilla_gd(const StudentParams& init, const TeacherParams& t, double eta,
                         long long iters, const RunOptions& opts, std::uint64_t seed = 0);

// w0 ~ unif(sphere), a0 ~ unif(B(|1^T a*| / sqrt(k))); a0 = 0 when 1^T a* = 0.
StudentParams random_init(const TeacherParams& t, RngStream& rng);

// Mini-batch step with injected noise; a is projected onto the ball of radius R.
StudentParams perturbed_sgd_step(const StudentParams& s, const TeacherParams& t,
                                 const SgdConfig& cfg, double eta, double rho_w, double rho_a,
                                 RngStream& rng);

RunResult run_perturbed_sgd(const StudentParams& init, const SgdConfig& cfg,
                            const TeacherParams& t, const RunOptions& opts, RngStream& rng);

struct OverparamRecord {
  long long iter = 0;
  double loss = 0.0;
  double grad_norm = 0.0;  // manifold norm, see OverparamGrad::manifold_norm
};

struct OverparamRun {
  OverparamStudent final;
  std::vector<OverparamRecord> trajectory;
  double initial_loss = 0.0;
  double initial_grad_norm = 0.0;
  double final_loss = 0.0;
  double final_grad_norm = 0.0;
};

// Full-batch GD on F_n; w and v take tangent steps followed by sphere
// projection, a and b are unconstrained.
OverparamRun run_overparam_gd(const Dataset& d, const OverparamStudent& init,
                              const TeacherParams& t, double eta, long long iters,
                              long long record_every);

}  // namespace pgd
