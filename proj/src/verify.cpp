#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "pgd/analysis.hpp"
#include "pgd/csv.hpp"
#include "pgd/error.hpp"
#include "pgd/harness.hpp"

namespace pgd {

using std::numbers::pi;

bool VerifyReport::all_pass() const {
  return std::all_of(claims.begin(), claims.end(), [](const Claim& c) { return c.pass; });
}

std::string VerifyReport::json() const {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& c : claims) {
    arr.push_back({{"claim_id", c.claim_id},
                   {"estimate", c.estimate},
                   {"std_error", c.std_error},
                   {"tolerance", c.tolerance},
                   {"pass", c.pass}});
  }
  return arr.dump(2) + "\n";
}

std::string VerifyReport::text() const {
  std::ostringstream out;
  out.precision(6);
  int failed = 0;
  for (const auto& c : claims) {
    out << (c.pass ? "PASS " : "FAIL ") << c.claim_id << "  estimate=" << c.estimate
        << " se=" << c.std_error << " tol=" << c.tolerance << "  (" << c.description << ")\n";
    if (!c.pass) ++failed;
  }
  out << claims.size() - failed << "/" << claims.size() << " claims passed\n";
  return out.str();
}

namespace {

Vec uniform_vec(Eigen::Index n, double lo, double hi, RngStream& rng) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = lo + (hi - lo) * rng.uniform();
  return v;
}

TeacherParams random_teacher(int p, int k, double scale, RngStream& rng) {
  UnitVector w = sample_sphere(p, rng);
  return TeacherParams(std::move(w), uniform_vec(k, -scale, scale, rng));
}

class ClaimSuite {
 public:
  ClaimSuite(const ExperimentConfig& cfg, const VerifyOptions& opts) : cfg_(cfg), opts_(opts) {}

  VerifyReport run() {
    spurious_stationarity();
    finite_differences();
    noise_expectation_bounds();
    large_noise_limit();
    gamma_ratio();
    sin_power();
    small_noise();
    symmetry_zero();
    region_consistency();
    dissipativity();
    closed_form_vs_monte_carlo();
    return std::move(report_);
  }

 private:
  RngStream stream(std::uint64_t id) const { return RngStream(cfg_.seed, mix64(id ^ 0x5eed)); }

  void add(std::string id, std::string desc, double estimate, double se, double tol, bool pass) {
    report_.claims.push_back({std::move(id), std::move(desc), estimate, se, tol, pass});
  }

  void spurious_stationarity() {
    RngStream rng = stream(1);
    const int ks[] = {10, 25, 100};
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const TeacherParams t = random_teacher(6, ks[i % 3], 1.0, rng);
      const StudentParams s = spurious_optimum(t);
      worst = std::max({worst, grad_a(s, t).norm(), manifold_grad_w(s, t).norm()});
    }
    add("spurious_stationarity", "gradients vanish at the spurious optimum, 20 teachers", worst,
        0.0, 1e-10, worst <= 1e-10);
  }

  void finite_differences() {
    const int points = cfg_.fd_points;
    RngStream rng = stream(2);
    double worst_a = 0.0;
    double worst_w = 0.0;
    for (int i = 0; i < points; ++i) {
      const TeacherParams t = random_teacher(6, 10, 2.0, rng);
      const StudentParams s(sample_sphere(6, rng), uniform_vec(10, -2.0, 2.0, rng));
      FdPoint pt{s, t};
      pt.kernel = opts_.kernel;
      pt.seed = cfg_.seed + static_cast<std::uint64_t>(i);
      worst_a = std::max(worst_a, finite_diff_check(LossId::population_a, pt, 1e-5));
      worst_w = std::max(worst_w, finite_diff_check(LossId::population_w_sphere, pt, 1e-6));
    }
    add("fd_population_a", "central differences of the population loss in a", worst_a, 0.0, 1e-6,
        worst_a <= 1e-6);
    add("fd_population_w_sphere", "great-circle differences of the population loss in w",
        worst_w, 0.0, 1e-5, worst_w <= 1e-5);

    double worst_o = 0.0;
    for (int i = 0; i < points; ++i) {
      const TeacherParams t = random_teacher(6, 5, 1.0, rng);
      const Dataset d = Dataset::sample(20, 6, 5, rng);
      UnitVector w = sample_sphere(6, rng);
      UnitVector v = sample_sphere(6, rng);
      while (activation_margin(d, w) < 1e-3 || activation_margin(d, v) < 1e-3) {
        w = sample_sphere(6, rng);
        v = sample_sphere(6, rng);
      }
      FdPoint pt{StudentParams(w, Vec::Zero(5)), t};
      pt.data = &d;
      pt.overparam = OverparamStudent{w, v, uniform_vec(5, -2.0, 2.0, rng),
                                      uniform_vec(5, -2.0, 2.0, rng)};
      worst_o = std::max(worst_o, finite_diff_check(LossId::overparam, pt, 1e-5));
    }
    add("fd_overparam", "central differences of the two-filter empirical loss", worst_o, 0.0,
        1e-6, worst_o <= 1e-6);
  }

  void noise_expectation_bounds() {
    RngStream rng = stream(3);
    for (int p : {4, 6, 10}) {
      const UnitVector ws = sample_sphere(p, rng);
      const UnitVector ortho = vector_at_angle(ws, pi / 2.0, rng);
      const std::pair<const char*, UnitVector> starts[] = {
          {"aligned", ws}, {"antipodal", -ws}, {"orthogonal", ortho}};
      const double rho = static_cast<double>(p * p);
      for (const auto& [name, w] : starts) {
        const std::string tag = "/p" + std::to_string(p) + "/" + name;
        const McEstimate g = mc_expected_gphi(w, ws, rho, cfg_.mc_samples, rng);
        const McEstimate f = mc_expected_phi(w, ws, rho, cfg_.mc_samples, rng);
        add("noise_gphi_lower" + tag, "E g(phi_xi) - 3 SE > 1 at rho_w = p^2",
            g.mean - 3.0 * g.std_error, g.std_error, 1.0, g.mean - 3.0 * g.std_error > 1.0);
        add("noise_gphi_upper" + tag, "E g(phi_xi) + 3 SE <= pi + 0.01 at rho_w = p^2",
            g.mean + 3.0 * g.std_error, g.std_error, pi + 0.01,
            g.mean + 3.0 * g.std_error <= pi + 0.01);
        add("noise_phi_upper" + tag, "E phi_xi - 3 SE <= 3 pi / 4 at rho_w = p^2",
            f.mean - 3.0 * f.std_error, f.std_error, 0.75 * pi,
            f.mean - 3.0 * f.std_error <= 0.75 * pi);
      }
    }
  }

  void large_noise_limit() {
    RngStream rng = stream(4);
    const UnitVector ws = sample_sphere(6, rng);
    const UnitVector w = sample_sphere(6, rng);
    const McEstimate g = mc_expected_gphi(w, ws, 1e4, cfg_.mc_samples, rng);
    const McEstimate f = mc_expected_phi(w, ws, 1e4, cfg_.mc_samples, rng);
    const double target = gamma_ratio_limit(6);
    add("large_noise_gphi", "E g(phi_xi) at rho_w = 1e4 matches the Gamma-ratio limit", g.mean,
        g.std_error, 3.0 * g.std_error + 0.01,
        std::abs(g.mean - target) <= 3.0 * g.std_error + 0.01);
    add("large_noise_phi", "E phi_xi at rho_w = 1e4 is pi/2", f.mean, f.std_error,
        3.0 * f.std_error + 0.05, std::abs(f.mean - pi / 2.0) <= 3.0 * f.std_error + 0.05);
  }

  void gamma_ratio() {
    double min_step = 1.0;
    bool above_one = true;
    for (int p = 2; p < 64; ++p) {
      min_step = std::min(min_step, gamma_ratio_limit(p) - gamma_ratio_limit(p + 1));
      above_one = above_one && gamma_ratio_limit(p + 1) > 1.0;
    }
    add("gamma_ratio_monotone", "Gamma ratio strictly decreases towards 1 on p = 2..64", min_step,
        0.0, 0.0, min_step > 0.0 && above_one);
    const double p = 1e4;
    const double dev = std::abs(gamma_ratio_limit(10000) - (1.0 + 1.0 / (2 * p) + 1.0 / (8 * p * p)));
    add("gamma_ratio_expansion", "Gamma ratio at p = 1e4 matches 1 + 1/2p + 1/8p^2", dev, 0.0, 1e-6,
        dev <= 1e-6);
  }

  void sin_power() {
    double worst = 0.0;
    for (int n = 0; n <= 10; ++n) {
      // Composite Simpson on 2000 panels as an independent value.
      const int m = 2000;
      const double h = pi / m;
      double acc = 0.0;
      for (int i = 0; i <= m; ++i) {
        const double wgt = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        acc += wgt * std::pow(std::sin(i * h), n);
      }
      worst = std::max(worst, std::abs(sin_power_integral(n) - acc * h / 3.0));
    }
    add("sin_power_integral", "closed-form sine-power integral vs Simpson quadrature, n = 0..10",
        worst, 0.0, 1e-9, worst <= 1e-9);
  }

  void small_noise() {
    double worst_zero = 0.0;
    double worst_identity = 0.0;
    for (int i = 0; i <= 50; ++i) {
      const double phi = (pi / 2.0) * i / 50.0;
      const SmallNoiseBounds z = small_noise_bounds(phi, 0.0);
      worst_zero = std::max({worst_zero, std::abs(z.u1 - phi), std::abs(z.u3 - g_phi(phi))});
      for (int j = 0; j < 20; ++j) {
        const double rho = 0.95 * j / 19.0;
        worst_identity = std::max(
            worst_identity, std::abs(small_noise_bounds(phi, rho).u1 - (phi + std::asin(rho))));
      }
    }
    add("small_noise_rho_zero", "bounds reduce to (phi, (pi-g)^2, g) at rho = 0", worst_zero, 0.0,
        1e-12, worst_zero <= 1e-12);
    add("small_noise_angle_addition", "U1 equals phi + asin(rho) on a grid", worst_identity, 0.0,
        1e-9, worst_identity <= 1e-9);

    RngStream rng = stream(5);
    const BracketCheck bc = check_angle_bracket(6, pi / 3.0, 0.1, 100000, rng);
    add("noise_angle_bracket", "all sampled angles in [phi - asin rho, phi + asin rho]",
        static_cast<double>(bc.violations), 0.0, 0.0, bc.violations == 0);

    RngStream rng2 = stream(6);
    long long upper_violations = 0;
    const UnitVector ws = sample_sphere(6, rng2);
    for (double phi : {0.3, 0.8, 1.2, pi / 2.0}) {
      const UnitVector w = vector_at_angle(ws, phi, rng2);
      const double u1 = small_noise_bounds(angle(w, ws), 0.1).u1;
      for (int i = 0; i < 25000; ++i) {
        if (angle(w.vec() + sample_unit_ball({6, 0.1}, rng2), ws) > u1) ++upper_violations;
      }
    }
    add("small_noise_upper_bound", "every sampled phi_xi <= U1 at rho = 0.1",
        static_cast<double>(upper_violations), 0.0, 0.0, upper_violations == 0);
  }

  void symmetry_zero() {
    RngStream rng = stream(7);
    for (double rho : {0.5, 5.0, 50.0}) {
      double worst_z = 0.0;
      double se = 0.0;
      for (int i = 0; i < 10; ++i) {
        const UnitVector w = sample_sphere(6, rng);
        const UnitVector ws = sample_sphere(6, rng);
        const McEstimate e = mc_symmetry_term(w, ws, rho, 100000, rng);
        const double z = std::abs(e.mean) / e.std_error;
        if (z > worst_z) {
          worst_z = z;
          se = e.std_error;
        }
      }
      add("symmetry_zero/rho" + format_rho(rho),
          "E (w* - (w^T w*) w)^T xi / |w + xi| within 4 SE of 0 (worst of 10 pairs, in SE units)",
          worst_z, se, 4.0, worst_z <= 4.0);
    }
  }

  static std::string format_rho(double rho) {
    std::ostringstream s;
    s << rho;
    return s.str();
  }

  // Second evaluation path for the region predicates, written against the raw
  // coordinates rather than Eigen reductions.
  static bool region_direct(const StudentParams& s, const TeacherParams& t, const RegionSpec& r) {
    double inner = 0.0, as2 = 0.0, s1 = 0.0, sa = 0.0, far = 0.0, ww = 0.0, dist = 0.0;
    for (Eigen::Index j = 0; j < t.k(); ++j) {
      inner += s.a[j] * t.a_star[j];
      as2 += t.a_star[j] * t.a_star[j];
      s1 += t.a_star[j];
      sa += s.a[j];
      far += (s.a[j] - t.a_star[j] / 2) * (s.a[j] - t.a_star[j] / 2);
    }
    for (Eigen::Index i = 0; i < t.p(); ++i) {
      ww += s.w[i] * t.w_star[i];
      dist += (s.w[i] - t.w_star[i]) * (s.w[i] - t.w_star[i]);
    }
    const double p = static_cast<double>(t.p());
    if (r.kind == RegionKind::A) {
      if (!(inner <= r.c2 * as2 / p || far >= as2)) return false;
      const double mid = s1 * sa - s1 * s1;
      return mid >= -4 * s1 * s1 && mid <= r.c3 * as2 / p;
    }
    if (inner < r.m || inner > r.M) return false;
    if (r.kind == RegionKind::K) return ww >= r.c4;
    return dist <= r.c10 * r.gamma;
  }

  void region_consistency() {
    RngStream rng = stream(8);
    long long mismatches = 0;
    for (int i = 0; i < 3000; ++i) {
      const TeacherParams t = random_teacher(6, 8, 1.0, rng);
      const StudentParams s(sample_sphere(6, rng), uniform_vec(8, -1.0, 1.0, rng));
      const RegionSpec specs[] = {
          RegionSpec::a_region(0.1 + 3 * rng.uniform(), 0.1 + 3 * rng.uniform()),
          RegionSpec::k_region(-0.9 + 1.8 * rng.uniform(), 0.05, 0.05 + 2 * rng.uniform()),
          RegionSpec::r_region(-1.0, 1.0, 1.0, 4.0 * rng.uniform() + 1e-3)};
      for (const auto& r : specs) {
        if (in_region(s, t, r) != region_direct(s, t, r)) ++mismatches;
      }
    }
    add("region_predicates", "in_region agrees with a direct coordinate evaluation",
        static_cast<double>(mismatches), 0.0, 0.0, mismatches == 0);
  }

  void dissipativity() {
    RngStream rng = stream(9);
    const TeacherParams t = build_teacher(6, 25, 0.0, rng);
    const double as_norm = t.a_star.norm();
    const RegionSpec region_a = RegionSpec::a_region(0.1, 1.0);

    double worst_a = std::numeric_limits<double>::infinity();
    double se_a = 0.0;
    int found = 0;
    while (found < 20) {
      StudentParams s(sample_sphere(6, rng), sample_unit_ball({25, 0.3 * as_norm}, rng));
      if (!in_region(s, t, region_a)) continue;
      ++found;
      const McEstimate e = dissipativity_a(s, t, 36.0, 1.0, cfg_.dissipativity_samples, rng);
      if (e.mean - 3 * e.std_error < worst_a) {
        worst_a = e.mean - 3 * e.std_error;
        se_a = e.std_error;
      }
    }
    add("dissipativity_a", "min over 20 region-A points of mean - 3 SE (rho_w = 36, rho_a = 1)",
        worst_a, se_a, 0.0, worst_a > 0.0);

    const double as2 = t.a_star.squaredNorm();
    const RegionSpec region_k = RegionSpec::k_region(0.1, 0.1 * as2, 2.0 * as2);
    double worst_w = std::numeric_limits<double>::infinity();
    double se_w = 0.0;
    found = 0;
    while (found < 20) {
      const double c = 0.1 + 0.65 * rng.uniform();
      StudentParams s(vector_at_angle(t.w_star, std::acos(c), rng),
                      (0.3 + 1.2 * rng.uniform()) * t.a_star +
                          sample_unit_ball({25, 0.2 * as_norm}, rng));
      if (!in_region(s, t, region_k) || (s.w.vec() - t.w_star.vec()).squaredNorm() < 0.5) continue;
      ++found;
      const McEstimate e = dissipativity_w(s, t, 0.01, 0.1, cfg_.dissipativity_samples, rng);
      if (e.mean - 3 * e.std_error < worst_w) {
        worst_w = e.mean - 3 * e.std_error;
        se_w = e.std_error;
      }
    }
    add("dissipativity_w", "min over 20 region-K points of mean - 3 SE (rho_w = 0.01)", worst_w,
        se_w, 0.0, worst_w > 0.0);
  }

  void closed_form_vs_monte_carlo() {
    RngStream rng = stream(10);
    double worst_z = 0.0;
    double se = 0.0;
    for (int i = 0; i < 10; ++i) {
      const TeacherParams t = random_teacher(6, 10, 1.0, rng);
      const StudentParams s(sample_sphere(6, rng), uniform_vec(10, -1.0, 1.0, rng));
      McAccumulator acc;
      for (long long n = 0; n < cfg_.mc_samples; ++n) {
        const InputSample z = sample_input(6, 10, rng);
        const double r = forward(z, s.w, s.a) - forward(z, t.w_star, t.a_star);
        acc.add(0.5 * r * r);
      }
      const McEstimate e = acc.estimate();
      const double z = std::abs(e.mean - population_loss(s, t, opts_.kernel)) / e.std_error;
      if (z > worst_z) {
        worst_z = z;
        se = e.std_error;
      }
    }
    add("population_loss_mc", "closed-form loss vs Monte-Carlo average (worst of 10, in SE units)",
        worst_z, se, 4.0, worst_z <= 4.0);
  }

  const ExperimentConfig& cfg_;
  const VerifyOptions& opts_;
  VerifyReport report_;
};

}  // namespace

VerifyReport run_verify(const ExperimentConfig& cfg, const VerifyOptions& opts, bool write_files) {
  VerifyReport report = ClaimSuite(cfg, opts).run();
  if (write_files) {
    write_text_file(cfg.out_dir / "verify_report.json", report.json());
    write_text_file(cfg.out_dir / "verify_report.txt", report.text());
  }
  return report;
}

}  // namespace pgd
