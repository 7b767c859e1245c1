#include "pgd/optimizers.hpp"

#include <cmath>
#include <string>

#include "pgd/error.hpp"

namespace pgd {

AnnealingSchedule::AnnealingSchedule(std::vector<EpochSpec> epochs) : epochs_(std::move(epochs)) {
  if (epochs_.empty()) throw Error(Errc::invalid_config, "schedule needs at least one epoch");
  for (std::size_t s = 0; s < epochs_.size(); ++s) {
    const EpochSpec& e = epochs_[s];
    if (e.iters < 1) throw Error(Errc::invalid_config, "epoch length must be >= 1");
    if (!(e.eta > 0.0)) throw Error(Errc::invalid_config, "step size must be positive");
    if (!(e.rho_w >= 0.0) || !(e.rho_a >= 0.0)) {
      throw Error(Errc::invalid_config, "noise radii must be nonnegative");
    }
    if (s > 0 && (e.rho_w > epochs_[s - 1].rho_w || e.rho_a > epochs_[s - 1].rho_a)) {
      throw Error(Errc::invalid_config,
                  "noise radii must not increase (epoch " + std::to_string(s + 1) + ")");
    }
  }
}

AnnealingSchedule AnnealingSchedule::geometric(int epochs, int iters, double eta0, double eta_decay,
                                               double rho_w0, double rho_a0, double rho_decay) {
  if (epochs < 1) throw Error(Errc::invalid_config, "schedule needs at least one epoch");
  std::vector<EpochSpec> specs;
  specs.reserve(static_cast<std::size_t>(epochs));
  double eta = eta0;
  double rw = rho_w0;
  double ra = rho_a0;
  for (int s = 0; s < epochs; ++s) {
    specs.push_back({iters, eta, rw, ra});
    eta *= eta_decay;
    rw *= rho_decay;
    ra *= rho_decay;
  }
  return AnnealingSchedule(std::move(specs));
}

long long AnnealingSchedule::total_steps() const noexcept {
  long long total = 0;
  for (const auto& e : epochs_) total += e.iters - 1;
  return total;
}

bool success_check(const StudentParams& s, const TeacherParams& t, SuccessTolerance tol) {
  const double err = (s.a - t.a_star).squaredNorm();
  return err <= tol.tol_a * t.a_star.squaredNorm() && angle(s.w, t.w_star) <= tol.tol_phi;
}

namespace {

StudentParams apply_update(const StudentParams& s, const Vec& gw, const Vec& ga, double eta) {
  Vec a = s.a - eta * ga;
  UnitVector w = project_to_sphere(s.w.vec() - eta * tangent_project(s.w, gw));
  return StudentParams(std::move(w), std::move(a));
}

TrajectoryRecord make_record(int epoch, long long iter, const StudentParams& s,
                             const TeacherParams& t) {
  return {epoch, iter, s.a.dot(t.a_star), angle(s.w, t.w_star), population_loss(s, t)};
}

bool due(const RunOptions& opts, long long step) {
  return opts.record_every > 0 && step % opts.record_every == 0;
}

void check_eta(double eta) {
  if (!(eta > 0.0)) throw Error(Errc::domain, "step size must be positive");
}

}  // namespace

StudentParams perturbed_gd_step(const StudentParams& s, const TeacherParams& t, double eta,
                                double rho_w, double rho_a, RngStream& rng) {
  check_eta(eta);
  const PerturbedGrads g = perturbed_grads(s, t, rho_w, rho_a, rng);
  return apply_update(s, g.grad_w, g.grad_a, eta);
}

StudentParams vanilla_gd_step(const StudentParams& s, const TeacherParams& t, double eta) {
  check_eta(eta);
  return apply_update(s, grad_w(s, t), grad_a(s, t), eta);
}

RunResult run_perturbed_gd(const StudentParams& init, const AnnealingSchedule& schedule,
                           const TeacherParams& t, const RunOptions& opts, RngStream& rng) {
  RunResult out{init, {}, false, rng.seed()};
  StudentParams& cur = out.final;
  long long step = 0;
  int epoch = 0;
  for (const EpochSpec& e : schedule.epochs()) {
    ++epoch;
    for (int it = 1; it <= e.iters - 1; ++it) {
      cur = perturbed_gd_step(cur, t, e.eta, e.rho_w, e.rho_a, rng);
      ++step;
      if (due(opts, step)) out.trajectory.push_back(make_record(epoch, step, cur, t));
    }
  }
  out.succeeded = success_check(cur, t, opts.tolerance);
  return out;
}

RunResult run_vanilla_gd(const StudentParams& init, const TeacherParams& t, double eta,
                         long long iters, const RunOptions& opts, std::uint64_t seed) {
  RunResult out{init, {}, false, seed};
  StudentParams& cur = out.final;
  for (long long step = 1; step <= iters; ++step) {
    cur = vanilla_gd_step(cur, t, eta);
    if (due(opts, step)) out.trajectory.push_back(make_record(1, step, cur, t));
  }
  out.succeeded = success_check(cur, t, opts.tolerance);
  return out;
}

StudentParams random_init(const TeacherParams& t, RngStream& rng) {
  UnitVector w = sample_sphere(t.p(), rng);
  const double radius = std::abs(t.a_star.sum()) / std::sqrt(static_cast<double>(t.k()));
  Vec a = sample_unit_ball({t.k(), radius}, rng);
  return StudentParams(std::move(w), std::move(a));
}

StudentParams perturbed_sgd_step(const StudentParams& s, const TeacherParams& t,
                                 const SgdConfig& cfg, double eta, double rho_w, double rho_a,
                                 RngStream& rng) {
  check_eta(eta);
  if (cfg.batch_size < 1) throw Error(Errc::invalid_config, "batch size must be >= 1");
  if (!(cfg.radius > 0.0)) throw Error(Errc::invalid_config, "ball radius R must be positive");
  const Vec xi = sample_unit_ball({t.p(), rho_w}, rng);
  const Vec eps = sample_unit_ball({t.k(), rho_a}, rng);
  std::vector<InputSample> batch;
  batch.reserve(static_cast<std::size_t>(cfg.batch_size));
  for (int i = 0; i < cfg.batch_size; ++i) batch.push_back(sample_input(t.p(), t.k(), rng));

  const SampleGrad g = minibatch_grad(batch, s.w.vec() + xi, s.a + eps, t);
  StudentParams next = apply_update(s, g.gw, g.ga, eta);
  const double norm = next.a.norm();
  if (norm > cfg.radius) {
    next.a *= cfg.radius / norm;
    // Rescaling can land an ulp outside the ball.
    while (next.a.norm() > cfg.radius) next.a *= (1.0 - 1e-15);
  }
  return next;
}

RunResult run_perturbed_sgd(const StudentParams& init, const SgdConfig& cfg,
                            const TeacherParams& t, const RunOptions& opts, RngStream& rng) {
  RunResult out{init, {}, false, rng.seed()};
  StudentParams& cur = out.final;
  long long step = 0;
  int epoch = 0;
  for (const EpochSpec& e : cfg.schedule.epochs()) {
    ++epoch;
    for (int it = 1; it <= e.iters - 1; ++it) {
      cur = perturbed_sgd_step(cur, t, cfg, e.eta, e.rho_w, e.rho_a, rng);
      ++step;
      if (due(opts, step)) out.trajectory.push_back(make_record(epoch, step, cur, t));
    }
  }
  out.succeeded = success_check(cur, t, opts.tolerance);
  return out;
}

OverparamRun run_overparam_gd(const Dataset& d, const OverparamStudent& init,
                              const TeacherParams& t, double eta, long long iters,
                              long long record_every) {
  check_eta(eta);
  const OverparamObjective objective(d, t);
  OverparamRun out{init, {}, 0.0, 0.0, 0.0, 0.0};
  OverparamStudent& cur = out.final;

  double loss = 0.0;
  OverparamGrad g = objective.grad(cur, &loss);
  out.initial_loss = loss;
  out.initial_grad_norm = g.manifold_norm(cur);
  if (record_every > 0) out.trajectory.push_back({0, loss, out.initial_grad_norm});

  for (long long step = 1; step <= iters; ++step) {
    cur.w = project_to_sphere(cur.w.vec() - eta * tangent_project(cur.w, g.gw));
    cur.v = project_to_sphere(cur.v.vec() - eta * tangent_project(cur.v, g.gv));
    cur.a -= eta * g.ga;
    cur.b -= eta * g.gb;
    g = objective.grad(cur, &loss);
    if (record_every > 0 && step % record_every == 0) {
      out.trajectory.push_back({step, loss, g.manifold_norm(cur)});
    }
  }
  out.final_loss = loss;
  out.final_grad_norm = g.manifold_norm(cur);
  return out;
}

}  // namespace pgd
