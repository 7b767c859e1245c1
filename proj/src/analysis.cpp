#include "pgd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pgd/error.hpp"

namespace pgd {

using std::numbers::pi;

void McAccumulator::add(double x) {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

McEstimate McAccumulator::estimate() const {
  McEstimate e;
  e.n_samples = n_;
  e.mean = mean_;
  if (n_ > 1) {
    const double var = m2_ / static_cast<double>(n_ - 1);
    e.std_error = std::sqrt(var / static_cast<double>(n_));
  }
  return e;
}

namespace {

void require_samples(long long n, long long minimum, const char* what) {
  if (n < minimum) {
    throw Error(Errc::domain, std::string(what) + " needs at least " + std::to_string(minimum) +
                                  " samples, got " + std::to_string(n));
  }
}

template <typename F>
McEstimate mc_over_ball(const UnitVector& w, const UnitVector& w_star, double rho_w, long long n,
                        RngStream& rng, F&& f) {
  if (w.dim() != w_star.dim()) throw Error(Errc::dimension_mismatch, "w and w* differ in size");
  if (rho_w == 0.0) return {f(angle(w, w_star)), 0.0, n};
  McAccumulator acc;
  for (long long i = 0; i < n; ++i) {
    const Vec x = w.vec() + sample_unit_ball({w.dim(), rho_w}, rng);
    acc.add(f(angle(x, w_star)));
  }
  return acc.estimate();
}

}  // namespace

McEstimate mc_expected_gphi(const UnitVector& w, const UnitVector& w_star, double rho_w,
                            long long n, RngStream& rng) {
  require_samples(n, 1000, "mc_expected_gphi");
  return mc_over_ball(w, w_star, rho_w, n, rng, [](double phi) { return g_phi(phi); });
}

McEstimate mc_expected_phi(const UnitVector& w, const UnitVector& w_star, double rho_w,
                           long long n, RngStream& rng) {
  require_samples(n, 1000, "mc_expected_phi");
  return mc_over_ball(w, w_star, rho_w, n, rng, [](double phi) { return phi; });
}

double gamma_ratio_limit(int p) {
  if (p < 2) throw Error(Errc::domain, "gamma_ratio_limit needs p >= 2");
  const double h = 0.5 * static_cast<double>(p);
  return std::exp(std::lgamma(h) + std::lgamma(h + 1.0) - 2.0 * std::lgamma(h + 0.5));
}

double sin_power_integral(int n) {
  if (n < 0) throw Error(Errc::domain, "sin_power_integral needs n >= 0");
  const double nd = static_cast<double>(n);
  return std::sqrt(pi) * std::exp(std::lgamma(0.5 * (1.0 + nd)) - std::lgamma(1.0 + 0.5 * nd));
}

RegionSpec RegionSpec::a_region(double c2, double c3) {
  if (!(c2 > 0.0) || !(c3 > 0.0)) throw Error(Errc::domain, "region A needs C2, C3 > 0");
  RegionSpec r;
  r.kind = RegionKind::A;
  r.c2 = c2;
  r.c3 = c3;
  return r;
}

RegionSpec RegionSpec::k_region(double c4, double m, double M) {
  if (!(c4 > -1.0 && c4 <= 1.0)) throw Error(Errc::domain, "region K needs C4 in (-1, 1]");
  if (!(m > 0.0) || !(M > m)) throw Error(Errc::domain, "region K needs 0 < m < M");
  RegionSpec r;
  r.kind = RegionKind::K;
  r.c4 = c4;
  r.m = m;
  r.M = M;
  return r;
}

RegionSpec RegionSpec::r_region(double m, double M, double c10, double gamma) {
  if (!(M >= m)) throw Error(Errc::domain, "region R needs m <= M");
  if (!(c10 > 0.0) || !(gamma > 0.0)) throw Error(Errc::domain, "region R needs C10, gamma > 0");
  RegionSpec r;
  r.kind = RegionKind::R;
  r.m = m;
  r.M = M;
  r.c10 = c10;
  r.gamma = gamma;
  return r;
}

bool in_region(const StudentParams& s, const TeacherParams& t, const RegionSpec& spec) {
  if (s.w.dim() != t.p() || s.a.size() != t.k()) {
    throw Error(Errc::dimension_mismatch, "in_region: student does not match teacher");
  }
  const double inner = s.a.dot(t.a_star);
  const double as2 = t.a_star.squaredNorm();
  switch (spec.kind) {
    case RegionKind::A: {
      const double p = static_cast<double>(t.p());
      const bool small_overlap = inner <= spec.c2 / p * as2;
      const bool far_out = (s.a - 0.5 * t.a_star).squaredNorm() >= as2;
      const double s1 = t.a_star.sum();
      const double mid = s1 * s.a.sum() - s1 * s1;
      const bool bracket = -4.0 * s1 * s1 <= mid && mid <= spec.c3 / p * as2;
      return (small_overlap || far_out) && bracket;
    }
    case RegionKind::K:
      return inner >= spec.m && inner <= spec.M && s.w.vec().dot(t.w_star.vec()) >= spec.c4;
    case RegionKind::R:
      return inner >= spec.m && inner <= spec.M &&
             (s.w.vec() - t.w_star.vec()).squaredNorm() <= spec.c10 * spec.gamma;
  }
  return false;
}

McEstimate dissipativity_a(const StudentParams& s, const TeacherParams& t, double rho_w,
                           double rho_a, long long n, RngStream& rng) {
  require_samples(n, 10000, "dissipativity_a");
  const Vec dir = t.a_star - s.a;
  McAccumulator acc;
  for (long long i = 0; i < n; ++i) {
    const PerturbedGrads g = perturbed_grads(s, t, rho_w, rho_a, rng);
    acc.add(-g.grad_a.dot(dir));
  }
  return acc.estimate();
}

McEstimate dissipativity_w(const StudentParams& s, const TeacherParams& t, double rho_w,
                           double rho_a, long long n, RngStream& rng) {
  require_samples(n, 10000, "dissipativity_w");
  const Vec dir = t.w_star.vec() - s.w.vec();
  McAccumulator acc;
  for (long long i = 0; i < n; ++i) {
    const PerturbedGrads g = perturbed_grads(s, t, rho_w, rho_a, rng);
    acc.add(-tangent_project(s.w, g.grad_w).dot(dir));
  }
  return acc.estimate();
}

SmallNoiseBounds small_noise_bounds(double phi, double rho) {
  if (!(phi >= 0.0 && phi <= pi / 2.0)) {
    throw Error(Errc::domain, "small_noise_bounds needs phi in [0, pi/2]");
  }
  if (!(rho >= 0.0 && rho < 1.0)) throw Error(Errc::domain, "small_noise_bounds needs rho in [0, 1)");
  SmallNoiseBounds b;
  const double c = std::clamp(std::cos(phi) * std::sqrt(1.0 - rho * rho) - rho * std::sin(phi),
                              -1.0, 1.0);
  b.u1 = std::acos(c);
  b.u3 = g_phi(b.u1);
  b.u2 = (pi - b.u3) * (pi - b.u3);
  return b;
}

AngleBracket noise_angle_bracket(double phi, double rho) {
  if (!(phi >= 0.0 && phi <= pi)) throw Error(Errc::domain, "angle outside [0, pi]");
  if (!(rho >= 0.0 && rho < 1.0)) throw Error(Errc::domain, "bracket needs rho in [0, 1)");
  const double spread = std::asin(rho);
  return {std::max(0.0, phi - spread), std::min(pi, phi + spread)};
}

BracketCheck check_angle_bracket(int p, double phi, double rho, long long n, RngStream& rng) {
  const UnitVector w_star = sample_sphere(p, rng);
  const UnitVector w = vector_at_angle(w_star, phi, rng);
  // Use the realised angle so the check is not polluted by construction rounding.
  const AngleBracket br = noise_angle_bracket(angle(w, w_star), rho);
  BracketCheck out{n, 0, pi, 0.0};
  for (long long i = 0; i < n; ++i) {
    const double a = angle(w.vec() + sample_unit_ball({p, rho}, rng), w_star);
    out.min_angle = std::min(out.min_angle, a);
    out.max_angle = std::max(out.max_angle, a);
    if (a < br.lower || a > br.upper) ++out.violations;
  }
  return out;
}

McEstimate mc_symmetry_term(const UnitVector& w, const UnitVector& w_star, double rho_w,
                            long long n, RngStream& rng) {
  const Vec lever = w_star.vec() - w.vec().dot(w_star.vec()) * w.vec();
  McAccumulator acc;
  for (long long i = 0; i < n; ++i) {
    const Vec xi = sample_unit_ball({w.dim(), rho_w}, rng);
    acc.add(lever.dot(xi) / (w.vec() + xi).norm());
  }
  return acc.estimate();
}

namespace {

double rel_err(double numeric, double analytic) {
  return std::abs(numeric - analytic) / std::max(std::abs(analytic), 1e-8);
}

double fd_population_a(const FdPoint& pt, double h) {
  const Vec an = grad_a(pt.student, pt.teacher, pt.kernel);
  double worst = 0.0;
  StudentParams probe = pt.student;
  for (Eigen::Index i = 0; i < an.size(); ++i) {
    const double orig = probe.a[i];
    probe.a[i] = orig + h;
    const double up = population_loss(probe, pt.teacher, pt.kernel);
    probe.a[i] = orig - h;
    const double down = population_loss(probe, pt.teacher, pt.kernel);
    probe.a[i] = orig;
    worst = std::max(worst, rel_err((up - down) / (2.0 * h), an[i]));
  }
  return worst;
}

double fd_population_w(const FdPoint& pt, double h) {
  const Vec mg = manifold_grad_w(pt.student, pt.teacher);
  RngStream rng(pt.seed, 0x7d1f);
  double worst = 0.0;
  for (int d = 0; d < pt.directions; ++d) {
    Vec u = tangent_project(pt.student.w, rng.normal_vector(pt.student.w.dim()));
    u.normalize();
    const StudentParams up(project_to_sphere(pt.student.w.vec() + h * u), pt.student.a);
    const StudentParams down(project_to_sphere(pt.student.w.vec() - h * u), pt.student.a);
    const double numeric = (population_loss(up, pt.teacher, pt.kernel) -
                            population_loss(down, pt.teacher, pt.kernel)) /
                           (2.0 * h);
    worst = std::max(worst, rel_err(numeric, u.dot(mg)));
  }
  return worst;
}

double fd_overparam(const FdPoint& pt, double h) {
  if (pt.data == nullptr || !pt.overparam) {
    throw Error(Errc::domain, "overparam finite-difference check needs a dataset and a student");
  }
  const OverparamObjective obj(*pt.data, pt.teacher);
  const OverparamStudent& s = *pt.overparam;
  Vec w = s.w.vec();
  Vec v = s.v.vec();
  Vec a = s.a;
  Vec b = s.b;
  const OverparamGrad an = obj.grad_raw(w, v, a, b);
  double worst = 0.0;
  auto probe = [&](Vec& target, const Vec& analytic) {
    for (Eigen::Index i = 0; i < target.size(); ++i) {
      const double orig = target[i];
      target[i] = orig + h;
      const double up = obj.loss_raw(w, v, a, b);
      target[i] = orig - h;
      const double down = obj.loss_raw(w, v, a, b);
      target[i] = orig;
      worst = std::max(worst, rel_err((up - down) / (2.0 * h), analytic[i]));
    }
  };
  probe(w, an.gw);
  probe(v, an.gv);
  probe(a, an.ga);
  probe(b, an.gb);
  return worst;
}

}  // namespace

double finite_diff_check(LossId id, const FdPoint& point, double h) {
  if (!(h > 0.0)) throw Error(Errc::domain, "finite-difference step must be positive");
  switch (id) {
    case LossId::population_a: return fd_population_a(point, h);
    case LossId::population_w_sphere: return fd_population_w(point, h);
    case LossId::overparam: return fd_overparam(point, h);
  }
  return 0.0;
}

}  // namespace pgd
