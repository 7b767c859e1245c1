#include "pgd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

#include "json.hpp"
#include "pgd/error.hpp"

namespace pgd {

using json = nlohmann::ordered_json;

TeacherParams build_teacher(int p, int k, double ratio, RngStream& rng) {
  if (p < 2 || k < 2) throw Error(Errc::invalid_dimension, "teacher needs p, k >= 2");
  if (!(ratio >= 0.0)) throw Error(Errc::domain, "ratio must be nonnegative");
  Vec a(k);
  if (ratio == 0.0) {
    const int half = k / 2;
    a.setZero();
    a.head(half).setConstant(-0.1);
    a.tail(half).setConstant(0.1);
  } else {
    a.setConstant(1.0 / ratio);
  }
  return TeacherParams(sample_sphere(p, rng), std::move(a));
}

TeacherParams build_overparam_teacher(int p, int k, RngStream& rng) {
  if (p < 2 || k < 2) throw Error(Errc::invalid_dimension, "teacher needs p, k >= 2");
  const double c = 1.0 / std::sqrt(static_cast<double>(k));
  Vec a(k);
  a.head(k / 2).setConstant(c);
  a.tail(k - k / 2).setConstant(-c);
  return TeacherParams(sample_sphere(p, rng), std::move(a));
}

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

const CellResult& SuccessTable::at(int k, double ratio) const {
  for (const auto& c : cells) {
    if (c.k == k && c.ratio == ratio) return c;
  }
  throw Error(Errc::domain, "no table cell for k=" + std::to_string(k) + ", ratio=" +
                                format_double(ratio));
}

std::string SuccessTable::csv() const {
  std::string out = "k";
  for (double r : ratios) out += "," + format_double(r);
  out += '\n';
  char buf[32];
  for (int k : k_values) {
    out += std::to_string(k);
    for (double r : ratios) {
      std::snprintf(buf, sizeof buf, ",%.2f", at(k, r).rate());
      out += buf;
    }
    out += '\n';
  }
  return out;
}

namespace {

std::uint64_t cell_id(int k, double ratio) {
  return mix64(static_cast<std::uint64_t>(k) * 0x100000001b3ULL ^
               mix64(std::bit_cast<std::uint64_t>(ratio)));
}

TeacherParams make_teacher(const ExperimentConfig& cfg, int k, double ratio, RngStream& rng) {
  if (!cfg.a_star.empty()) {
    if (static_cast<int>(cfg.a_star.size()) != k) {
      throw Error(Errc::invalid_config, "a_star length does not match k");
    }
    Vec a = Eigen::Map<const Vec>(cfg.a_star.data(), k);
    return TeacherParams(sample_sphere(cfg.p, rng), std::move(a));
  }
  return build_teacher(cfg.p, k, ratio, rng);
}

StudentParams make_init(const ExperimentConfig& cfg, const TeacherParams& t, RngStream& rng) {
  InitKind kind = cfg.init;
  if (kind == InitKind::automatic) {
    kind = cfg.algorithm == Algorithm::gd ? InitKind::random : InitKind::spurious;
  }
  switch (kind) {
    case InitKind::spurious: return spurious_optimum(t);
    case InitKind::random: return random_init(t, rng);
    case InitKind::custom: {
      if (static_cast<Eigen::Index>(cfg.init_w.size()) != t.p() ||
          static_cast<Eigen::Index>(cfg.init_a.size()) != t.k()) {
        throw Error(Errc::invalid_config, "custom init does not match (p, k)");
      }
      const Vec w = Eigen::Map<const Vec>(cfg.init_w.data(), t.p());
      const Vec a = Eigen::Map<const Vec>(cfg.init_a.data(), t.k());
      return StudentParams(project_to_sphere(w), a);
    }
    case InitKind::automatic: break;
  }
  throw Error(Errc::invalid_config, "unresolved init kind");
}

json config_json(const ExperimentConfig& cfg) {
  json j = json::object();
  for (const auto& [key, value] : cfg.echo()) j[key] = value;
  return j;
}

}  // namespace

TrialOutcome run_trial(const ExperimentConfig& cfg, int k, double ratio, int trial, bool record) {
  const std::uint64_t cid = cell_id(k, ratio);
  const std::uint64_t sid = mix64(cid + static_cast<std::uint64_t>(trial));
  const RngStream trial_rng(cfg.seed, sid);

  RngStream teacher_rng = cfg.teacher_policy == TeacherPolicy::per_trial
                              ? trial_rng.child(1)
                              : RngStream(cfg.seed, cid).child(1);
  const TeacherParams teacher = make_teacher(cfg, k, ratio, teacher_rng);
  RngStream init_rng = trial_rng.child(2);
  const StudentParams init = make_init(cfg, teacher, init_rng);
  RngStream algo_rng = trial_rng.child(3);

  RunOptions opts;
  opts.record_every = record ? cfg.record_every : 0;
  opts.tolerance = cfg.tolerance;

  switch (cfg.algorithm) {
    case Algorithm::pgd:
      return {run_perturbed_gd(init, cfg.pgd_schedule(), teacher, opts, algo_rng), sid};
    case Algorithm::gd:
      return {run_vanilla_gd(init, teacher, cfg.gd_eta, cfg.gd_iters, opts, cfg.seed), sid};
    case Algorithm::psgd:
      return {run_perturbed_sgd(init, cfg.sgd_config(), teacher, opts, algo_rng), sid};
  }
  throw Error(Errc::invalid_config, "unknown algorithm");
}

SuccessTable run_table1(const ExperimentConfig& cfg, bool write_files) {
  SuccessTable table;
  table.k_values = cfg.k_grid;
  table.ratios = cfg.ratio_grid;
  json cells = json::array();
  for (int k : cfg.k_grid) {
    for (double ratio : cfg.ratio_grid) {
      std::vector<char> ok(static_cast<std::size_t>(cfg.trials), 0);
      parallel_for(ok.size(), cfg.workers, [&](std::size_t i) {
        ok[i] = run_trial(cfg, k, ratio, static_cast<int>(i)).run.succeeded ? 1 : 0;
      });
      CellResult cell{k, ratio, static_cast<int>(std::count(ok.begin(), ok.end(), 1)), cfg.trials};
      table.cells.push_back(cell);
      cells.push_back({{"k", k},
                       {"ratio", ratio},
                       {"successes", cell.successes},
                       {"trials", cell.trials},
                       {"rate", cell.rate()},
                       {"cell_stream", cell_id(k, ratio)}});
    }
  }
  if (write_files) {
    const std::string stem = "table1_" + to_string(cfg.algorithm);
    write_text_file(cfg.out_dir / (stem + ".csv"), table.csv());
    json doc = {{"experiment", "table1"},
                {"algorithm", to_string(cfg.algorithm)},
                {"seed", cfg.seed},
                {"trials", cfg.trials},
                {"teacher_policy", to_string(cfg.teacher_policy)},
                {"cells", cells},
                {"config", config_json(cfg)}};
    write_text_file(cfg.out_dir / (stem + ".json"), doc.dump(2) + "\n");
  }
  return table;
}

int escape_epoch(const std::vector<TrajectoryRecord>& records) {
  if (records.empty()) return -1;
  int last_bad = -1;
  for (const auto& r : records) {
    if (r.inner_aa <= 0.0) last_bad = r.epoch;
  }
  if (last_bad < 0) return records.front().epoch;
  // Every record from the following epoch on is positive, provided it exists.
  return last_bad + 1 <= records.back().epoch ? last_bad + 1 : -1;
}

int TrajectoryReport::phase_transition_count() const {
  return static_cast<int>(std::count_if(trials.begin(), trials.end(), [](const auto& t) {
    return t.escape_epoch > 0 && t.succeeded;
  }));
}

TrajectoryReport run_trajectory(const ExperimentConfig& cfg, bool write_files) {
  const int k = cfg.k_grid.front();
  const double ratio = cfg.ratio_grid.front();
  const int epochs = cfg.algorithm == Algorithm::psgd ? cfg.sgd_epochs : cfg.epochs;
  std::vector<std::optional<TrialOutcome>> slots(static_cast<std::size_t>(cfg.trials));
  parallel_for(slots.size(), cfg.workers, [&](std::size_t i) {
    slots[i] = run_trial(cfg, k, ratio, static_cast<int>(i), true);
  });
  std::vector<TrialOutcome> outcomes;
  outcomes.reserve(slots.size());
  for (auto& s : slots) outcomes.push_back(std::move(*s));

  TrajectoryReport report;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& run = outcomes[i].run;
    const TeacherParams teacher = [&] {
      // Re-derive the teacher the trial used, for the final error summary.
      const RngStream trial_rng(cfg.seed, outcomes[i].stream_id);
      RngStream rng = cfg.teacher_policy == TeacherPolicy::per_trial
                          ? trial_rng.child(1)
                          : RngStream(cfg.seed, cell_id(k, ratio)).child(1);
      return make_teacher(cfg, k, ratio, rng);
    }();
    TrajectoryTrialSummary s;
    s.trial = static_cast<int>(i);
    s.succeeded = run.succeeded;
    s.escape_epoch = escape_epoch(run.trajectory);
    s.final_phi = angle(run.final.w, teacher.w_star);
    s.final_a_err = (run.final.a - teacher.a_star).squaredNorm() / teacher.a_star.squaredNorm();

    const int late_from = epochs - std::max(1, static_cast<int>(std::ceil(0.3 * epochs))) + 1;
    std::vector<double> diffs;
    for (std::size_t r = 1; r < run.trajectory.size(); ++r) {
      if (run.trajectory[r - 1].epoch >= late_from) {
        diffs.push_back(run.trajectory[r].phi - run.trajectory[r - 1].phi);
      }
    }
    if (diffs.size() > 1) {
      double mean = 0.0;
      for (double d : diffs) mean += d;
      mean /= static_cast<double>(diffs.size());
      double var = 0.0;
      for (double d : diffs) var += (d - mean) * (d - mean);
      s.late_phi_jitter = std::sqrt(var / static_cast<double>(diffs.size() - 1));
    }
    report.trials.push_back(s);
    for (const auto& rec : run.trajectory) report.rows.push_back({static_cast<int>(i), rec});
  }

  std::size_t len = outcomes.empty() ? 0 : outcomes.front().run.trajectory.size();
  for (const auto& o : outcomes) len = std::min(len, o.run.trajectory.size());
  for (std::size_t r = 0; r < len; ++r) {
    TrajectoryRecord m = outcomes.front().run.trajectory[r];
    m.inner_aa = m.phi = m.loss = 0.0;
    for (const auto& o : outcomes) {
      m.inner_aa += o.run.trajectory[r].inner_aa;
      m.phi += o.run.trajectory[r].phi;
      m.loss += o.run.trajectory[r].loss;
    }
    const double inv = 1.0 / static_cast<double>(outcomes.size());
    m.inner_aa *= inv;
    m.phi *= inv;
    m.loss *= inv;
    report.mean_rows.push_back({-1, m});
  }

  if (write_files) {
    const std::string stem = "trajectory_" + to_string(cfg.algorithm);
    write_trajectory_csv(cfg.out_dir / (stem + ".csv"), report.rows);
    write_trajectory_csv(cfg.out_dir / (stem + "_mean.csv"), report.mean_rows);
    json trials = json::array();
    for (const auto& s : report.trials) {
      trials.push_back({{"trial", s.trial},
                        {"succeeded", s.succeeded},
                        {"escape_epoch", s.escape_epoch},
                        {"final_phi", s.final_phi},
                        {"final_a_err", s.final_a_err},
                        {"late_phi_jitter", s.late_phi_jitter}});
    }
    json doc = {{"experiment", "trajectory"},
                {"algorithm", to_string(cfg.algorithm)},
                {"seed", cfg.seed},
                {"phase_transitions", report.phase_transition_count()},
                {"trials", trials},
                {"config", config_json(cfg)}};
    write_text_file(cfg.out_dir / (stem + "_summary.json"), doc.dump(2) + "\n");
  }
  return report;
}

OverparamReport run_overparam(const ExperimentConfig& cfg, bool write_files) {
  const RngStream base(cfg.seed, 0xf00d);
  RngStream teacher_rng = base.child(1);
  const TeacherParams teacher =
      build_overparam_teacher(cfg.overparam_p, cfg.overparam_k, teacher_rng);
  RngStream data_rng = base.child(2);
  const Dataset data = Dataset::sample(cfg.overparam_n, cfg.overparam_p, cfg.overparam_k, data_rng);

  const StudentParams spurious = spurious_optimum(teacher);
  const OverparamStudent init{-teacher.w_star, -teacher.w_star, spurious.a,
                              Vec::Zero(cfg.overparam_k)};

  OverparamReport report{data.seed(), population_loss(spurious, teacher),
                         run_overparam_gd(data, init, teacher, cfg.overparam_eta,
                                          cfg.overparam_iters, cfg.overparam_record_every)};

  if (write_files) {
    std::string csv = "iter,loss,grad_norm\n";
    for (const auto& r : report.run.trajectory) {
      csv += std::to_string(r.iter) + "," + format_double(r.loss) + "," +
             format_double(r.grad_norm) + "\n";
    }
    write_text_file(cfg.out_dir / "overparam.csv", csv);
    save_dataset(data, cfg.out_dir / "overparam_dataset.bin");
    json doc = {{"experiment", "overparam"},
                {"seed", cfg.seed},
                {"n", cfg.overparam_n},
                {"population_spurious_loss", report.population_spurious_loss},
                {"initial_loss", report.run.initial_loss},
                {"initial_grad_norm", report.run.initial_grad_norm},
                {"final_loss", report.run.final_loss},
                {"final_grad_norm", report.run.final_grad_norm},
                {"config", config_json(cfg)}};
    write_text_file(cfg.out_dir / "overparam_summary.json", doc.dump(2) + "\n");
  }
  return report;
}

}  // namespace pgd
