#include <cmath>
#include <numbers>

#include "doctest.h"
#include "pgd/analysis.hpp"
#include "pgd/empirical.hpp"
#include "pgd/error.hpp"
#include "pgd/population.hpp"

using namespace pgd;
using std::numbers::pi;

namespace {

Vec uniform_vec(Eigen::Index n, double lo, double hi, RngStream& rng) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = lo + (hi - lo) * rng.uniform();
  return v;
}

TeacherParams random_teacher(int p, int k, RngStream& rng) {
  return TeacherParams(sample_sphere(p, rng), uniform_vec(k, -2.0, 2.0, rng));
}

TeacherParams pm_teacher(int p, int k, double level, RngStream& rng) {
  Vec a(k);
  for (int j = 0; j < k; ++j) a[j] = j < k / 2 ? -level : level;
  return TeacherParams(sample_sphere(p, rng), a);
}

// Loss of the off-sphere extension, built from the Gaussian ReLU moments
// E relu(u)^2 = |x|^2 / 2, E relu(u) = |x| / sqrt(2 pi),
// E relu(u) relu(v) = |x||y| g(angle) / (2 pi) for distinct-patch-free pairs.
double extended_loss(const Vec& x, const Vec& a, const TeacherParams& t) {
  const double nx = x.norm();
  const double phi = angle(x, t.w_star);
  const Vec& as = t.a_star;
  double student = 0.0, teacher = 0.0, cross = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    for (Eigen::Index j = 0; j < a.size(); ++j) {
      if (i == j) {
        student += a[i] * a[j] * nx * nx / 2;
        teacher += as[i] * as[j] / 2;
        cross += a[i] * as[j] * nx * g_phi(phi) / (2 * pi);
      } else {
        student += a[i] * a[j] * nx * nx / (2 * pi);
        teacher += as[i] * as[j] / (2 * pi);
        cross += a[i] * as[j] * nx / (2 * pi);
      }
    }
  }
  return 0.5 * (student + teacher - 2 * cross);
}

double corrupted_g(double phi) { return g_phi(phi) + 0.05 * std::sin(3 * phi); }

}  // namespace

TEST_CASE("g_phi examples, range and monotonicity") {
  CHECK(g_phi(0) == doctest::Approx(pi).epsilon(1e-15));
  CHECK(g_phi(pi / 2) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(g_phi(pi)) <= 1e-15);
  CHECK_THROWS_AS(g_phi(-1e-3), Error);
  CHECK_THROWS_AS(g_phi(pi + 1e-3), Error);
  double prev = g_phi(0);
  for (int i = 1; i <= 10000; ++i) {
    const double v = g_phi(pi * i / 10000);
    CHECK(v <= prev + 1e-15);
    CHECK(v >= 0.0);
    CHECK(v <= pi);
    prev = v;
  }
}

TEST_CASE("global optimum: zero loss, zero gradients") {
  RngStream rng(11, 1);
  for (int i = 0; i < 10; ++i) {
    const TeacherParams t = random_teacher(6, 12, rng);
    const StudentParams s = StudentParams::from_teacher(t);
    CHECK(population_loss(s, t) <= 1e-12);
    CHECK(grad_a(s, t).norm() <= 1e-12);
    CHECK(manifold_grad_w(s, t).norm() <= 1e-12);
  }
}

TEST_CASE("spurious optimum: stationarity, closed form, positive loss") {
  RngStream rng(12, 1);
  const TeacherParams pm = pm_teacher(6, 10, 0.1, rng);
  const StudentParams sp = spurious_optimum(pm);
  CHECK((sp.a + pm.a_star / (pi - 1)).norm() <= 1e-14);
  CHECK((sp.w.vec() + pm.w_star.vec()).norm() == 0.0);

  const int ks[] = {10, 25, 100};
  for (int i = 0; i < 20; ++i) {
    const TeacherParams t = random_teacher(6, ks[i % 3], rng);
    const StudentParams s = spurious_optimum(t);
    const Eigen::MatrixXd m = Eigen::MatrixXd::Ones(t.k(), t.k());
    const Eigen::MatrixXd lhs = m + (pi - 1) * Eigen::MatrixXd::Identity(t.k(), t.k());
    const Eigen::MatrixXd rhs = m - Eigen::MatrixXd::Identity(t.k(), t.k());
    CHECK((lhs * s.a - rhs * t.a_star).norm() <= 1e-10);
    CHECK(grad_a(s, t).norm() <= 1e-10);
    CHECK(manifold_grad_w(s, t).norm() <= 1e-10);
    CHECK(population_loss(s, t) > 0.0);
  }
}

TEST_CASE("two-filter teacher: spurious loss ((pi-1)^2 - 1) / (4 pi (pi-1))") {
  RngStream rng(13, 1);
  const TeacherParams t = pm_teacher(15, 10, -1.0 / std::sqrt(10.0), rng);
  const double expected = ((pi - 1) * (pi - 1) - 1) / (4 * pi * (pi - 1));
  CHECK(population_loss(spurious_optimum(t), t) == doctest::Approx(expected).epsilon(1e-13));
  CHECK(expected == doctest::Approx(0.13327).epsilon(1e-4));
}

TEST_CASE("grad_a matches central differences (h = 1e-5, rel 1e-6)") {
  RngStream rng(14, 1);
  const double h = 1e-5;
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    const TeacherParams t = random_teacher(6, 10, rng);
    StudentParams s(sample_sphere(6, rng), uniform_vec(10, -2, 2, rng));
    const Vec g = grad_a(s, t);
    for (int j = 0; j < 10; ++j) {
      StudentParams up = s, dn = s;
      up.a[j] += h;
      dn.a[j] -= h;
      const double fd = (population_loss(up, t) - population_loss(dn, t)) / (2 * h);
      worst = std::max(worst, std::abs(fd - g[j]) / std::max(std::abs(g[j]), 1e-8));
    }
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("manifold_grad_w matches great-circle differences (h = 1e-6, rel 1e-5)") {
  RngStream rng(15, 1);
  const double h = 1e-6;
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    const TeacherParams t = random_teacher(6, 10, rng);
    const StudentParams s(sample_sphere(6, rng), uniform_vec(10, -2, 2, rng));
    const Vec g = manifold_grad_w(s, t);
    for (int d = 0; d < 4; ++d) {
      const Vec u = tangent_project(s.w, rng.normal_vector(6)).normalized();
      const StudentParams up(project_to_sphere(s.w.vec() + h * u), s.a);
      const StudentParams dn(project_to_sphere(s.w.vec() - h * u), s.a);
      const double fd = (population_loss(up, t) - population_loss(dn, t)) / (2 * h);
      const double an = u.dot(g);
      worst = std::max(worst, std::abs(fd - an) / std::max(std::abs(an), 1e-8));
    }
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("grad_w_general is the gradient of the off-sphere extension") {
  RngStream rng(16, 1);
  const double h = 1e-6;
  for (int n = 0; n < 30; ++n) {
    const TeacherParams t = random_teacher(5, 7, rng);
    const Vec x = (0.3 + 3 * rng.uniform()) * sample_sphere(5, rng).vec();
    const Vec a = uniform_vec(7, -2, 2, rng);
    const Vec g = grad_w_general(x, a, t);
    for (int i = 0; i < 5; ++i) {
      Vec up = x, dn = x;
      up[i] += h;
      dn[i] -= h;
      const double fd = (extended_loss(up, a, t) - extended_loss(dn, a, t)) / (2 * h);
      CHECK(fd == doctest::Approx(g[i]).epsilon(1e-6).scale(1.0));
    }
  }
  // On the sphere the extension is the population loss itself.
  const TeacherParams t = random_teacher(5, 7, rng);
  const StudentParams s(sample_sphere(5, rng), uniform_vec(7, -2, 2, rng));
  CHECK(extended_loss(s.w, s.a, t) == doctest::Approx(population_loss(s, t)).epsilon(1e-12));
  CHECK((grad_w(s, t) - grad_w_general(s.w, s.a, t)).norm() <= 1e-14);
}

TEST_CASE("closed-form loss agrees with Monte-Carlo average over Gaussian inputs") {
  RngStream rng(17, 1);
  for (int n = 0; n < 3; ++n) {
    const TeacherParams t = random_teacher(6, 10, rng);
    const StudentParams s = n == 0 ? spurious_optimum(t)
                                   : StudentParams(sample_sphere(6, rng), uniform_vec(10, -1, 1, rng));
    McAccumulator acc;
    for (int i = 0; i < 1000000; ++i) {
      const InputSample z = sample_input(6, 10, rng);
      const double r = forward(z, s.w, s.a) - forward(z, t.w_star, t.a_star);
      acc.add(0.5 * r * r);
    }
    const McEstimate e = acc.estimate();
    CHECK(std::abs(e.mean - population_loss(s, t)) <= 4 * e.std_error);
  }
}

TEST_CASE("perturbed_grads reduces to the noiseless gradients at zero radii") {
  RngStream rng(18, 1);
  const TeacherParams t = random_teacher(6, 10, rng);
  const StudentParams s(sample_sphere(6, rng), uniform_vec(10, -1, 1, rng));
  const PerturbedGrads pg = perturbed_grads(s, t, 0.0, 0.0, rng);
  CHECK(pg.grad_a == grad_a(s, t));
  CHECK(pg.grad_w == grad_w(s, t));
  CHECK(pg.xi.norm() == 0.0);
  CHECK(pg.epsilon.norm() == 0.0);
}

TEST_CASE("perturbed a-gradient: seed self-consistency and kernel bridge") {
  RngStream setup(19, 1);
  Vec a_star(25);
  for (int j = 0; j < 25; ++j) a_star[j] = 0.1 * (j % 2 ? 1 : -1) + 0.05 * setup.uniform();
  const TeacherParams t(sample_sphere(6, setup), a_star);
  const StudentParams s(sample_sphere(6, setup), uniform_vec(25, -0.2, 0.2, setup));
  const long long n = 1000000;

  auto average = [&](std::uint64_t stream, McAccumulator* gker) {
    RngStream rng(19, stream);
    std::vector<McAccumulator> acc(25);
    const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(25, 25);
    for (long long i = 0; i < n; ++i) {
      const PerturbedGrads pg = perturbed_grads(s, t, 36.0, 1.0, rng);
      for (int j = 0; j < 25; ++j) acc[j].add(pg.grad_a[j]);
      if (gker) {
        // Recover g(phi_xi) from the first coordinate of the linear a-gradient.
        const Vec ae = s.a + pg.epsilon;
        const double lin = (ones * ae + (pi - 1) * ae - ones * t.a_star)[0];
        gker->add(1.0 - (2 * pi * pg.grad_a[0] - lin) / t.a_star[0]);
      }
    }
    return acc;
  };

  McAccumulator gker;
  const auto first = average(2, &gker);
  const auto second = average(3, nullptr);
  for (int j = 0; j < 25; ++j) {
    const McEstimate x = first[j].estimate();
    const McEstimate y = second[j].estimate();
    CHECK(std::abs(x.mean - y.mean) <= 4 * std::hypot(x.std_error, y.std_error));
  }

  RngStream rng(19, 4);
  const McEstimate g = gker.estimate();
  const McEstimate ref = mc_expected_gphi(s.w, t.w_star, 36.0, n, rng);
  CHECK(std::abs(g.mean - ref.mean) <= 4 * std::hypot(g.std_error, ref.std_error));
}

TEST_CASE("dimension and parameter validation") {
  RngStream rng(20, 1);
  CHECK_THROWS_AS(TeacherParams(sample_sphere(6, rng), Vec::Ones(1)), Error);
  const TeacherParams t = random_teacher(6, 10, rng);
  const StudentParams bad_a(sample_sphere(6, rng), Vec::Ones(9));
  const StudentParams bad_w(sample_sphere(5, rng), Vec::Ones(10));
  CHECK_THROWS_AS(population_loss(bad_a, t), Error);
  CHECK_THROWS_AS(grad_a(bad_w, t), Error);
  CHECK_THROWS_AS(grad_w(bad_w, t), Error);
  const StudentParams ok(sample_sphere(6, rng), Vec::Ones(10));
  CHECK_THROWS_AS(perturbed_grads(ok, t, -1.0, 0.0, rng), Error);
}

TEST_CASE("negative control: a corrupted kernel breaks the finite-difference match") {
  RngStream rng(21, 1);
  const TeacherParams t = random_teacher(6, 10, rng);
  const StudentParams s(vector_at_angle(t.w_star, 1.0, rng), uniform_vec(10, -2, 2, rng));
  FdPoint pt{s, t};
  pt.kernel = corrupted_g;
  CHECK(finite_diff_check(LossId::population_w_sphere, pt, 1e-6) > 1e-5);
  pt.kernel = g_phi;
  CHECK(finite_diff_check(LossId::population_w_sphere, pt, 1e-6) <= 1e-5);
}
