#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "pgd/config.hpp"
#include "pgd/csv.hpp"
#include "pgd/error.hpp"
#include "pgd/harness.hpp"

using namespace pgd;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("pgd_harness_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig small_config(Experiment e, const std::string& extra = "") {
  const std::string text =
      "k = 10\nratio_grid = 0, 4\ntrials = 6\nepochs = 4\niters = 60\n"
      "gd_iters = 200\nsgd_epochs = 2\nsgd_iters = 50\nrecord_every = 5\n" + extra;
  return ExperimentConfig::from(e, KeyValueConfig::parse(text));
}

double corrupted_g(double phi) { return g_phi(phi) + 0.05 * std::sin(3 * phi); }

}  // namespace

TEST_CASE("teacher construction") {
  RngStream rng(81, 1);
  const TeacherParams t = build_teacher(6, 100, 0.0, rng);
  for (int j = 0; j < 50; ++j) CHECK(t.a_star[j] == -0.1);
  for (int j = 50; j < 100; ++j) CHECK(t.a_star[j] == 0.1);
  CHECK(std::abs(t.a_star.sum()) <= 1e-15);

  const TeacherParams odd = build_teacher(6, 25, 0.0, rng);
  CHECK(odd.a_star[12] == 0.0);
  CHECK(odd.a_star.head(12) == Vec::Constant(12, -0.1));
  CHECK(odd.a_star.tail(12) == Vec::Constant(12, 0.1));
  CHECK(std::abs(odd.a_star.sum()) <= 1e-15);

  const TeacherParams one = build_teacher(6, 25, 1.0, rng);
  CHECK(one.a_star == Vec::Ones(25));
  CHECK(one.a_star.sum() / one.a_star.squaredNorm() == doctest::Approx(1.0));
  const TeacherParams four = build_teacher(6, 36, 4.0, rng);
  CHECK(four.a_star == Vec::Constant(36, 0.25));
  CHECK(four.a_star.sum() / four.a_star.squaredNorm() == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(std::abs(four.w_star.vec().norm() - 1) <= 1e-12);
  CHECK_THROWS_AS(build_teacher(6, 10, -1.0, rng), Error);

  const TeacherParams op = build_overparam_teacher(15, 10, rng);
  const double c = 1 / std::sqrt(10.0);
  CHECK(op.a_star.head(5) == Vec::Constant(5, c));
  CHECK(op.a_star.tail(5) == Vec::Constant(5, -c));
}

TEST_CASE("parallel_for visits every index once and rethrows") {
  for (unsigned workers : {1u, 3u, 8u}) {
    std::vector<std::atomic<int>> hits(97);
    parallel_for(97, workers, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) CHECK(h.load() == 1);
  }
  CHECK_THROWS_AS(parallel_for(10, 2, [](std::size_t i) {
                    if (i == 7) throw Error(Errc::domain, "boom");
                  }),
                  Error);
}

TEST_CASE("escape_epoch") {
  auto rec = [](int epoch, double inner) { return TrajectoryRecord{epoch, 0, inner, 0, 0}; };
  CHECK(escape_epoch({}) == -1);
  CHECK(escape_epoch({rec(1, 0.2), rec(2, 0.3)}) == 1);
  CHECK(escape_epoch({rec(1, -0.2), rec(2, 0.1), rec(3, 0.3)}) == 2);
  CHECK(escape_epoch({rec(1, -0.2), rec(2, 0.1), rec(2, -0.1), rec(3, 0.3)}) == 3);
  CHECK(escape_epoch({rec(1, 0.2), rec(2, -0.1)}) == -1);
}

TEST_CASE("number formatting round-trips exactly") {
  RngStream rng(82, 1);
  for (int i = 0; i < 10000; ++i) {
    const double x = std::ldexp(rng.normal(), static_cast<int>(rng.uniform() * 80) - 40);
    REQUIRE(parse_double(format_double(x)) == x);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK_THROWS_AS(parse_double("1.5x"), Error);
  CHECK_THROWS_AS(parse_int("12.5"), Error);
  CHECK(split("a,,b", ',') == std::vector<std::string>{"a", "", "b"});
  CHECK(trim("  x y \t") == "x y");
}

TEST_CASE("trajectory CSV round-trips the in-memory records") {
  RngStream rng(83, 1);
  std::vector<TrialRecord> rows;
  for (int i = 0; i < 50; ++i) {
    rows.push_back({i % 3, {1 + i / 10, 10LL * i, rng.normal(), 3 * rng.uniform(), rng.uniform() / 7}});
  }
  const auto dir = temp_dir("csv");
  write_trajectory_csv(dir / "t.csv", rows);
  CHECK(slurp(dir / "t.csv").rfind(std::string(kTrajectoryHeader) + "\n", 0) == 0);
  const auto back = read_trajectory_csv(dir / "t.csv");
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].trial == rows[i].trial);
    CHECK(back[i].record.epoch == rows[i].record.epoch);
    CHECK(back[i].record.iter == rows[i].record.iter);
    CHECK(back[i].record.inner_aa == rows[i].record.inner_aa);
    CHECK(back[i].record.phi == rows[i].record.phi);
    CHECK(back[i].record.loss == rows[i].record.loss);
  }
  {
    std::ofstream bad(dir / "bad.csv");
    bad << "trial,epoch\n1,2\n";
  }
  CHECK_THROWS_AS(read_trajectory_csv(dir / "bad.csv"), Error);
  CHECK_THROWS_AS(read_trajectory_csv(dir / "missing.csv"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("key-value config parsing and overlays") {
  const auto kv = KeyValueConfig::parse(
      "# comment\n  p = 7  \nk = 10, 20 # trailing\nratio_grid = 0,1.5\nalgorithm = gd\n");
  CHECK(kv.get_int("p", 0) == 7);
  CHECK(kv.get_ints("k", {}) == std::vector<int>{10, 20});
  CHECK(kv.get_doubles("ratio_grid", {}) == std::vector<double>{0.0, 1.5});
  CHECK(kv.get_string("missing", "dflt") == "dflt");
  CHECK_THROWS_AS(KeyValueConfig::parse("no equals sign\n"), Error);
  CHECK_THROWS_AS(KeyValueConfig::parse("p = six\n").get_int("p", 0), Error);

  const ExperimentConfig c = ExperimentConfig::from(Experiment::table1, kv);
  CHECK(c.p == 7);
  CHECK(c.k_grid == std::vector<int>{10, 20});
  CHECK(c.algorithm == Algorithm::gd);
  CHECK(c.trials == 100);
  CHECK(c.eta0 == 0.1);
  CHECK(c.rho_w0 == 36.0);

  const ExperimentConfig tr = ExperimentConfig::from(Experiment::trajectory, KeyValueConfig{});
  CHECK(tr.k_grid == std::vector<int>{100});
  CHECK(tr.epochs == 10);
  CHECK(tr.iters == 1000);
  CHECK(tr.trials == 10);

  CHECK_THROWS_AS(
      ExperimentConfig::from(Experiment::table1, KeyValueConfig::parse("trials = 0\n")).validate(),
      Error);
  CHECK_THROWS_AS(
      ExperimentConfig::from(Experiment::table1, KeyValueConfig::parse("ratio_grid = -1\n")).validate(),
      Error);
  CHECK_THROWS_AS(parse_algorithm("adam"), Error);
  CHECK_THROWS_AS(KeyValueConfig::load("/nonexistent/lab.cfg"), Error);
}

TEST_CASE("misspelled or mismatched config keys are rejected") {
  const auto from = [](const char* text) {
    return ExperimentConfig::from(Experiment::table1, KeyValueConfig::parse(text));
  };
  CHECK_THROWS_AS(from("trails = 5\n"), Error);
  CHECK_THROWS_AS(from("experiment = trajectory\n"), Error);
  CHECK(from("experiment = table1\ntrials = 5\n").trials == 5);
}

TEST_CASE("seed falls back to LAB_SEED only when no seed is configured") {
  ::setenv("LAB_SEED", "4242", 1);
  CHECK(ExperimentConfig::from(Experiment::table1, KeyValueConfig{}).seed == 4242);
  CHECK(ExperimentConfig::from(Experiment::table1, KeyValueConfig::parse("seed = 9\n")).seed == 9);
  ::setenv("LAB_SEED", "oops", 1);
  CHECK_THROWS_AS(ExperimentConfig::from(Experiment::table1, KeyValueConfig{}), Error);
  ::unsetenv("LAB_SEED");
  CHECK(ExperimentConfig::from(Experiment::table1, KeyValueConfig{}).seed == 20190101);
}

TEST_CASE("table results do not depend on the worker count") {
  for (const char* alg : {"pgd", "gd", "psgd"}) {
    ExperimentConfig one = small_config(Experiment::table1, std::string("algorithm = ") + alg + "\n");
    ExperimentConfig many = one;
    one.workers = 1;
    many.workers = 4;
    const SuccessTable a = run_table1(one, false);
    const SuccessTable b = run_table1(many, false);
    REQUIRE(a.cells.size() == 2);
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
      CHECK(a.cells[i].successes == b.cells[i].successes);
      CHECK(a.cells[i].trials == 6);
    }
    for (int trial = 0; trial < 3; ++trial) {
      const TrialOutcome x = run_trial(one, 10, 4.0, trial);
      const TrialOutcome y = run_trial(many, 10, 4.0, trial);
      CHECK(x.run.final.w.vec() == y.run.final.w.vec());
      CHECK(x.run.final.a == y.run.final.a);
    }
  }
}

TEST_CASE("table CSV layout") {
  SuccessTable t{{25, 100}, {0.0, 4.0}, {{25, 0, 47, 100}, {25, 4, 100, 100}, {100, 0, 5, 10}, {100, 4, 0, 10}}};
  CHECK(t.csv() == "k,0,4\n25,0.47,1.00\n100,0.50,0.00\n");
  CHECK(t.at(100, 0.0).successes == 5);
  CHECK_THROWS_AS(t.at(7, 0.0), Error);
}

TEST_CASE("experiment outputs are byte-identical across reruns") {
  const auto d1 = temp_dir("det1");
  const auto d2 = temp_dir("det2");
  for (const auto& dir : {d1, d2}) {
    ExperimentConfig c = small_config(Experiment::trajectory, "k = 10\ntrials = 3\n");
    c.out_dir = dir;
    c.workers = dir == d1 ? 1 : 3;
    run_trajectory(c);
    ExperimentConfig t = small_config(Experiment::table1);
    t.out_dir = dir;
    run_table1(t);
  }
  for (const char* f : {"trajectory_pgd.csv", "trajectory_pgd_mean.csv",
                        "trajectory_pgd_summary.json", "table1_pgd.csv", "table1_pgd.json"}) {
    CAPTURE(f);
    REQUIRE(std::filesystem::exists(d1 / f));
    CHECK(slurp(d1 / f) == slurp(d2 / f));
  }
  const auto rows = read_trajectory_csv(d1 / "trajectory_pgd.csv");
  CHECK(rows.size() == 3 * (4 * 59 / 5));
  const auto doc = nlohmann::json::parse(slurp(d1 / "table1_pgd.json"));
  CHECK(doc.contains("config"));
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
}

TEST_CASE("two-filter experiment at reduced size") {
  ExperimentConfig c = ExperimentConfig::from(
      Experiment::overparam,
      KeyValueConfig::parse("overparam_n = 500\noverparam_iters = 200\noverparam_record_every = 50\n"));
  const auto dir = temp_dir("overparam");
  c.out_dir = dir;
  const OverparamReport r = run_overparam(c);
  CHECK(r.population_spurious_loss == doctest::Approx(0.13327).epsilon(1e-4));
  CHECK(std::abs(r.run.initial_loss - r.population_spurious_loss) <= 0.05);
  CHECK(r.run.trajectory.size() == 5);
  const Dataset back = load_dataset(dir / "overparam_dataset.bin");
  CHECK(back.n() == 500);
  CHECK(slurp(dir / "overparam.csv").rfind("iter,loss,grad_norm\n", 0) == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("verification report: format and negative control") {
  ExperimentConfig c = ExperimentConfig::from(
      Experiment::verify,
      KeyValueConfig::parse("mc_samples = 1000\ndissipativity_samples = 10000\nfd_points = 5\n"));
  const auto dir = temp_dir("verify");
  c.out_dir = dir;
  VerifyOptions corrupted;
  corrupted.kernel = corrupted_g;
  const VerifyReport bad = run_verify(c, corrupted, true);
  CHECK_FALSE(bad.all_pass());
  bool found = false;
  for (const auto& claim : bad.claims) {
    if (claim.claim_id == "fd_population_w_sphere") {
      found = true;
      CHECK_FALSE(claim.pass);
    }
  }
  CHECK(found);

  const auto doc = nlohmann::json::parse(slurp(dir / "verify_report.json"));
  REQUIRE(doc.is_array());
  CHECK(doc.size() == bad.claims.size());
  for (const auto& entry : doc) {
    CHECK(entry.size() == 5);
    for (const char* key : {"claim_id", "estimate", "std_error", "tolerance", "pass"}) {
      CHECK(entry.contains(key));
    }
  }
  CHECK(slurp(dir / "verify_report.txt").find("FAIL fd_population_w_sphere") != std::string::npos);
  std::filesystem::remove_all(dir);
}
