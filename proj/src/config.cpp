#include "pgd/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "pgd/csv.hpp"
#include "pgd/error.hpp"

namespace pgd {

KeyValueConfig KeyValueConfig::parse(const std::string& text, const std::string& origin) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::invalid_config,
                  origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw Error(Errc::invalid_config, origin + ":" + std::to_string(lineno) + ": empty key");
    }
    cfg.values_[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return parse_double(it->second);
  } catch (const Error& e) {
    throw Error(Errc::invalid_config, key + ": " + e.what());
  }
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return parse_int(it->second);
  } catch (const Error& e) {
    throw Error(Errc::invalid_config, key + ": " + e.what());
  }
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string t = trim(it->second);
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(t, &used);
    if (used != t.size() || t.front() == '-') throw std::invalid_argument(t);
    return v;
  } catch (const std::exception&) {
    throw Error(Errc::invalid_config, key + ": not an unsigned integer: '" + t + "'");
  }
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key,
                                                std::vector<double> fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<double> out;
  if (trim(it->second).empty()) return out;
  for (const auto& item : split(it->second, ',')) out.push_back(parse_double(item));
  return out;
}

std::vector<int> KeyValueConfig::get_ints(const std::string& key, std::vector<int> fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<int> out;
  for (const auto& item : split(it->second, ',')) out.push_back(static_cast<int>(parse_int(item)));
  return out;
}

Experiment parse_experiment(const std::string& s) {
  if (s == "table1") return Experiment::table1;
  if (s == "trajectory") return Experiment::trajectory;
  if (s == "overparam") return Experiment::overparam;
  if (s == "verify") return Experiment::verify;
  throw Error(Errc::invalid_config, "unknown experiment '" + s + "'");
}

Algorithm parse_algorithm(const std::string& s) {
  if (s == "pgd") return Algorithm::pgd;
  if (s == "gd") return Algorithm::gd;
  if (s == "psgd") return Algorithm::psgd;
  throw Error(Errc::invalid_config, "unknown algorithm '" + s + "'");
}

namespace {

InitKind parse_init(const std::string& s) {
  if (s == "auto") return InitKind::automatic;
  if (s == "spurious") return InitKind::spurious;
  if (s == "random") return InitKind::random;
  if (s == "custom") return InitKind::custom;
  throw Error(Errc::invalid_config, "unknown init '" + s + "'");
}

TeacherPolicy parse_policy(const std::string& s) {
  if (s == "per_trial") return TeacherPolicy::per_trial;
  if (s == "per_cell") return TeacherPolicy::per_cell;
  throw Error(Errc::invalid_config, "unknown teacher_policy '" + s + "'");
}

std::string join(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + format_double(xs[i]);
  return out;
}

std::string join(const std::vector<int>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + std::to_string(xs[i]);
  return out;
}

}  // namespace

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::table1: return "table1";
    case Experiment::trajectory: return "trajectory";
    case Experiment::overparam: return "overparam";
    case Experiment::verify: return "verify";
  }
  return "?";
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::pgd: return "pgd";
    case Algorithm::gd: return "gd";
    case Algorithm::psgd: return "psgd";
  }
  return "?";
}

std::string to_string(InitKind i) {
  switch (i) {
    case InitKind::automatic: return "auto";
    case InitKind::spurious: return "spurious";
    case InitKind::random: return "random";
    case InitKind::custom: return "custom";
  }
  return "?";
}

std::string to_string(TeacherPolicy t) {
  return t == TeacherPolicy::per_trial ? "per_trial" : "per_cell";
}

AnnealingSchedule ExperimentConfig::pgd_schedule() const {
  return AnnealingSchedule::geometric(epochs, iters, eta0, eta_decay, rho_w0, rho_a0, rho_decay);
}

SgdConfig ExperimentConfig::sgd_config() const {
  return SgdConfig{batch_size, sgd_radius,
                   AnnealingSchedule::geometric(sgd_epochs, sgd_iters, sgd_eta0, sgd_eta_decay,
                                                sgd_rho_w0, sgd_rho_a0, sgd_rho_decay)};
}

namespace {

const std::set<std::string> kKnownKeys = {
    "experiment", "p", "k", "ratio_grid", "trials", "algorithm", "seed", "init", "teacher_policy",
    "tol_a", "tol_phi", "record_every", "out_dir", "workers", "epochs", "iters", "eta0",
    "eta_decay", "rho_w0", "rho_a0", "rho_decay", "gd_eta", "gd_iters", "batch_size",
    "sgd_radius", "sgd_epochs", "sgd_iters", "sgd_eta0", "sgd_eta_decay", "sgd_rho_w0",
    "sgd_rho_a0", "sgd_rho_decay", "a_star", "init_w", "init_a", "overparam_n", "overparam_p",
    "overparam_k", "overparam_eta", "overparam_iters", "overparam_record_every", "mc_samples",
    "dissipativity_samples", "fd_points"};

}  // namespace

ExperimentConfig ExperimentConfig::from(Experiment experiment, const KeyValueConfig& kv) {
  for (const auto& [key, value] : kv.values()) {
    if (kKnownKeys.count(key) == 0) throw Error(Errc::invalid_config, "unknown config key '" + key + "'");
  }
  if (kv.has("experiment") && parse_experiment(kv.get_string("experiment", "")) != experiment) {
    throw Error(Errc::invalid_config, "config is for experiment '" + kv.get_string("experiment", "") +
                                          "', not '" + to_string(experiment) + "'");
  }
  ExperimentConfig c;
  c.experiment = experiment;
  if (experiment == Experiment::trajectory) {
    // Second experiment: one hard teacher, shorter epochs, ten seeds.
    c.k_grid = {100};
    c.epochs = 10;
    c.iters = 1000;
    c.trials = 10;
  }

  c.p = static_cast<int>(kv.get_int("p", c.p));
  c.k_grid = kv.get_ints("k", c.k_grid);
  c.ratio_grid = kv.get_doubles("ratio_grid", c.ratio_grid);
  c.trials = static_cast<int>(kv.get_int("trials", c.trials));
  c.algorithm = parse_algorithm(kv.get_string("algorithm", to_string(c.algorithm)));
  c.seed = kv.get_u64("seed", seed_from_env(c.seed));
  c.init = parse_init(kv.get_string("init", to_string(c.init)));
  c.teacher_policy = parse_policy(kv.get_string("teacher_policy", to_string(c.teacher_policy)));
  c.tolerance.tol_a = kv.get_double("tol_a", c.tolerance.tol_a);
  c.tolerance.tol_phi = kv.get_double("tol_phi", c.tolerance.tol_phi);
  c.record_every = static_cast<int>(kv.get_int("record_every", c.record_every));
  c.out_dir = kv.get_string("out_dir", c.out_dir.string());
  c.workers = static_cast<unsigned>(kv.get_int("workers", c.workers));

  c.epochs = static_cast<int>(kv.get_int("epochs", c.epochs));
  c.iters = static_cast<int>(kv.get_int("iters", c.iters));
  c.eta0 = kv.get_double("eta0", c.eta0);
  c.eta_decay = kv.get_double("eta_decay", c.eta_decay);
  c.rho_w0 = kv.get_double("rho_w0", c.rho_w0);
  c.rho_a0 = kv.get_double("rho_a0", c.rho_a0);
  c.rho_decay = kv.get_double("rho_decay", c.rho_decay);

  c.gd_eta = kv.get_double("gd_eta", c.gd_eta);
  c.gd_iters = kv.get_int("gd_iters", c.gd_iters);

  c.batch_size = static_cast<int>(kv.get_int("batch_size", c.batch_size));
  c.sgd_radius = kv.get_double("sgd_radius", c.sgd_radius);
  c.sgd_epochs = static_cast<int>(kv.get_int("sgd_epochs", c.sgd_epochs));
  c.sgd_iters = static_cast<int>(kv.get_int("sgd_iters", c.sgd_iters));
  c.sgd_eta0 = kv.get_double("sgd_eta0", c.sgd_eta0);
  c.sgd_eta_decay = kv.get_double("sgd_eta_decay", c.sgd_eta_decay);
  c.sgd_rho_w0 = kv.get_double("sgd_rho_w0", c.sgd_rho_w0);
  c.sgd_rho_a0 = kv.get_double("sgd_rho_a0", c.sgd_rho_a0);
  c.sgd_rho_decay = kv.get_double("sgd_rho_decay", c.sgd_rho_decay);

  c.a_star = kv.get_doubles("a_star", c.a_star);
  c.init_w = kv.get_doubles("init_w", c.init_w);
  c.init_a = kv.get_doubles("init_a", c.init_a);

  c.overparam_n = static_cast<int>(kv.get_int("overparam_n", c.overparam_n));
  c.overparam_p = static_cast<int>(kv.get_int("overparam_p", c.overparam_p));
  c.overparam_k = static_cast<int>(kv.get_int("overparam_k", c.overparam_k));
  c.overparam_eta = kv.get_double("overparam_eta", c.overparam_eta);
  c.overparam_iters = kv.get_int("overparam_iters", c.overparam_iters);
  c.overparam_record_every = kv.get_int("overparam_record_every", c.overparam_record_every);

  c.mc_samples = kv.get_int("mc_samples", c.mc_samples);
  c.dissipativity_samples = kv.get_int("dissipativity_samples", c.dissipativity_samples);
  c.fd_points = static_cast<int>(kv.get_int("fd_points", c.fd_points));

  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(Errc::invalid_config, msg); };
  if (p < 2) fail("p must be >= 2");
  if (k_grid.empty()) fail("k needs at least one value");
  for (int k : k_grid) {
    if (k < 2) fail("every k must be >= 2");
  }
  if (ratio_grid.empty()) fail("ratio_grid needs at least one value");
  for (double r : ratio_grid) {
    if (!(r >= 0.0)) fail("ratio values must be >= 0");
  }
  if (trials < 1) fail("trials must be >= 1");
  if (record_every < 0) fail("record_every must be >= 0");
  if (!(tolerance.tol_a > 0.0) || !(tolerance.tol_phi > 0.0)) fail("tolerances must be positive");
  if (!(gd_eta > 0.0) || gd_iters < 0) fail("invalid GD settings");
  if (batch_size < 1 || !(sgd_radius > 0.0)) fail("invalid SGD settings");
  if (!a_star.empty() && static_cast<int>(a_star.size()) != k_grid.front()) {
    fail("a_star must have k entries");
  }
  if (init == InitKind::custom) {
    if (static_cast<int>(init_w.size()) != p || static_cast<int>(init_a.size()) != k_grid.front()) {
      fail("custom init needs init_w with p entries and init_a with k entries");
    }
  }
  if (overparam_n < 1 || overparam_p < 2 || overparam_k < 2 || overparam_iters < 0) {
    fail("invalid overparam settings");
  }
  if (mc_samples < 1000 || dissipativity_samples < 10000 || fd_points < 1) {
    fail("verification sample counts too small");
  }
  // Schedules validate their own invariants.
  (void)pgd_schedule();
  (void)sgd_config();
}

std::map<std::string, std::string> ExperimentConfig::echo() const {
  std::map<std::string, std::string> m;
  m["experiment"] = to_string(experiment);
  m["p"] = std::to_string(p);
  m["k"] = join(k_grid);
  m["ratio_grid"] = join(ratio_grid);
  m["trials"] = std::to_string(trials);
  m["algorithm"] = to_string(algorithm);
  m["seed"] = std::to_string(seed);
  m["init"] = to_string(init);
  m["teacher_policy"] = to_string(teacher_policy);
  m["tol_a"] = format_double(tolerance.tol_a);
  m["tol_phi"] = format_double(tolerance.tol_phi);
  m["record_every"] = std::to_string(record_every);
  m["epochs"] = std::to_string(epochs);
  m["iters"] = std::to_string(iters);
  m["eta0"] = format_double(eta0);
  m["eta_decay"] = format_double(eta_decay);
  m["rho_w0"] = format_double(rho_w0);
  m["rho_a0"] = format_double(rho_a0);
  m["rho_decay"] = format_double(rho_decay);
  m["gd_eta"] = format_double(gd_eta);
  m["gd_iters"] = std::to_string(gd_iters);
  m["batch_size"] = std::to_string(batch_size);
  m["sgd_radius"] = format_double(sgd_radius);
  m["sgd_epochs"] = std::to_string(sgd_epochs);
  m["sgd_iters"] = std::to_string(sgd_iters);
  m["sgd_eta0"] = format_double(sgd_eta0);
  m["sgd_eta_decay"] = format_double(sgd_eta_decay);
  m["sgd_rho_w0"] = format_double(sgd_rho_w0);
  m["sgd_rho_a0"] = format_double(sgd_rho_a0);
  m["sgd_rho_decay"] = format_double(sgd_rho_decay);
  if (!a_star.empty()) m["a_star"] = join(a_star);
  if (!init_w.empty()) m["init_w"] = join(init_w);
  if (!init_a.empty()) m["init_a"] = join(init_a);
  m["overparam_n"] = std::to_string(overparam_n);
  m["overparam_p"] = std::to_string(overparam_p);
  m["overparam_k"] = std::to_string(overparam_k);
  m["overparam_eta"] = format_double(overparam_eta);
  m["overparam_iters"] = std::to_string(overparam_iters);
  m["overparam_record_every"] = std::to_string(overparam_record_every);
  m["mc_samples"] = std::to_string(mc_samples);
  m["dissipativity_samples"] = std::to_string(dissipativity_samples);
  m["fd_points"] = std::to_string(fd_points);
  return m;
}

std::uint64_t seed_from_env(std::uint64_t fallback) {
  const char* env = std::getenv("LAB_SEED");
  if (env == nullptr || *env == '\0') return fallback;
  try {
    return std::stoull(env);
  } catch (const std::exception&) {
    throw Error(Errc::invalid_config, std::string("LAB_SEED is not an integer: ") + env);
  }
}

}  // namespace pgd
