// lab: command-line driver for the experiments.
//
//   lab table1|trajectory|overparam|verify [--config FILE] [--seed N] [--trials N]
//       [--out DIR] [--algorithm pgd|gd|psgd] [--tol-a X] [--tol-phi X] [--workers N]

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pgd/config.hpp"
#include "pgd/harness.hpp"

namespace {

void print_table(const pgd::SuccessTable& t) { std::cout << t.csv(); }

void print_trajectory(const pgd::TrajectoryReport& r) {
  for (const auto& s : r.trials) {
    std::printf("trial %d  escape_epoch=%d  final_phi=%.3e  final_a_err=%.3e  %s\n", s.trial,
                s.escape_epoch, s.final_phi, s.final_a_err, s.succeeded ? "success" : "fail");
  }
  std::printf("%d/%zu trials escaped and converged\n", r.phase_transition_count(), r.trials.size());
}

void print_overparam(const pgd::OverparamReport& r) {
  std::printf("population loss at the spurious point: %.6f\n", r.population_spurious_loss);
  std::printf("initial loss %.6f  grad norm %.3e\n", r.run.initial_loss, r.run.initial_grad_norm);
  std::printf("final   loss %.6f  grad norm %.3e\n", r.run.final_loss, r.run.final_grad_norm);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perturbed gradient descent experiments"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string out_dir;
  std::string algorithm;
  std::uint64_t seed = 0;
  int trials = 0;
  std::string tol_a;
  std::string tol_phi;
  unsigned workers = 0;

  for (const char* name : {"table1", "trajectory", "overparam", "verify"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master seed (default: config, then LAB_SEED)");
    sub->add_option("--trials", trials, "trials per cell")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--algorithm", algorithm, "pgd, gd or psgd")
        ->check(CLI::IsMember({"pgd", "gd", "psgd"}));
    sub->add_option("--tol-a", tol_a, "success tolerance on |a - a*|^2 / |a*|^2")
        ->check(CLI::Number);
    sub->add_option("--tol-phi", tol_phi, "success tolerance on the angle")->check(CLI::Number);
    sub->add_option("--workers", workers, "worker threads (0: all cores)");
  }

  CLI11_PARSE(app, argc, argv);
  CLI::App* sub = app.get_subcommands().front();

  try {
    pgd::KeyValueConfig kv;
    if (!config_path.empty()) kv = pgd::KeyValueConfig::load(config_path);
    auto given = [&](const char* opt) { return sub->count(opt) > 0; };
    if (given("--seed")) kv.set("seed", std::to_string(seed));
    if (given("--trials")) kv.set("trials", std::to_string(trials));
    if (given("--out")) kv.set("out_dir", out_dir);
    if (given("--algorithm")) kv.set("algorithm", algorithm);
    if (given("--tol-a")) kv.set("tol_a", tol_a);
    if (given("--tol-phi")) kv.set("tol_phi", tol_phi);
    if (given("--workers")) kv.set("workers", std::to_string(workers));

    const pgd::Experiment exp = pgd::parse_experiment(sub->get_name());
    const pgd::ExperimentConfig cfg = pgd::ExperimentConfig::from(exp, kv);
    cfg.validate();

    switch (exp) {
      case pgd::Experiment::table1:
        print_table(pgd::run_table1(cfg));
        return 0;
      case pgd::Experiment::trajectory:
        print_trajectory(pgd::run_trajectory(cfg));
        return 0;
      case pgd::Experiment::overparam:
        print_overparam(pgd::run_overparam(cfg));
        return 0;
      case pgd::Experiment::verify: {
        const pgd::VerifyReport report = pgd::run_verify(cfg);
        std::cout << report.text();
        return report.all_pass() ? 0 : 1;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "lab: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
