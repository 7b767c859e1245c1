#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pgd/optimizers.hpp"

namespace pgd {

// Flat `key = value` text; '#' starts a comment, lists are comma-separated.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text, const std::string& origin = "<string>");
  static KeyValueConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;
  std::vector<int> get_ints(const std::string& key, std::vector<int> fallback) const;

 private:
  std::map<std::string, std::string> values_;
};

enum class Experiment { table1, trajectory, overparam, verify };
enum class Algorithm { pgd, gd, psgd };
enum class InitKind { automatic, spurious, random, custom };
enum class TeacherPolicy { per_trial, per_cell };

Experiment parse_experiment(const std::string& s);
Algorithm parse_algorithm(const std::string& s);
std::string to_string(Experiment e);
std::string to_string(Algorithm a);
std::string to_string(InitKind i);
std::string to_string(TeacherPolicy t);

struct ExperimentConfig {
  Experiment experiment = Experiment::table1;
  int p = 6;
  std::vector<int> k_grid{25};
  std::vector<double> ratio_grid{0.0};
  int trials = 100;
  Algorithm algorithm = Algorithm::pgd;
  std::uint64_t seed = 20190101;
  InitKind init = InitKind::automatic;
  TeacherPolicy teacher_policy = TeacherPolicy::per_trial;
  SuccessTolerance tolerance;
  int record_every = 10;
  std::filesystem::path out_dir = "out";
  unsigned workers = 0;  // 0: one per hardware thread

  // perturbed GD schedule
  int epochs = 20;
  int iters = 400;
  double eta0 = 0.1;
  double eta_decay = 0.8;
  double rho_w0 = 36.0;
  double rho_a0 = 1.0;
  double rho_decay = 0.4;

  // noiseless GD
  double gd_eta = 0.1;
  long long gd_iters = 8000;

  // perturbed SGD
  int batch_size = 4;
  double sgd_radius = 10.0;
  int sgd_epochs = 10;
  int sgd_iters = 4000;
  double sgd_eta0 = 0.1;
  double sgd_eta_decay = 0.4;
  double sgd_rho_w0 = 0.0;
  double sgd_rho_a0 = 0.0;
  double sgd_rho_decay = 0.4;

  // custom teacher / init
  std::vector<double> a_star;
  std::vector<double> init_w;
  std::vector<double> init_a;

  // two-filter experiment
  int overparam_n = 10000;
  int overparam_p = 15;
  int overparam_k = 10;
  double overparam_eta = 1e-5;
  long long overparam_iters = 100000;
  long long overparam_record_every = 1000;

  // verification suite
  long long mc_samples = 1000000;
  long long dissipativity_samples = 100000;
  int fd_points = 100;

  AnnealingSchedule pgd_schedule() const;
  SgdConfig sgd_config() const;

  // Defaults for the experiment, overlaid with every key present in `kv`.
  static ExperimentConfig from(Experiment experiment, const KeyValueConfig& kv);
  void validate() const;
  // Flat key/value echo of every field, for output metadata.
  std::map<std::string, std::string> echo() const;
};

// Seed fallback: LAB_SEED when set, else the given default.
std::uint64_t seed_from_env(std::uint64_t fallback);

}  // namespace pgd
