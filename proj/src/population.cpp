#include "pgd/population.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pgd/error.hpp"

namespace pgd {

using std::numbers::pi;

namespace {

void check_dims(const Vec& w, const Vec& a, const TeacherParams& t) {
  if (w.size() != t.p() || a.size() != t.k()) {
    throw Error(Errc::dimension_mismatch,
                "student (p=" + std::to_string(w.size()) + ", k=" + std::to_string(a.size()) +
                    ") vs teacher (p=" + std::to_string(t.p()) + ", k=" + std::to_string(t.k()) +
                    ")");
  }
}

}  // namespace

TeacherParams::TeacherParams(UnitVector w, Vec a) : w_star(std::move(w)), a_star(std::move(a)) {
  if (a_star.size() < 2) throw Error(Errc::invalid_dimension, "teacher needs k >= 2");
}

double g_phi(double phi) {
  if (!(phi >= 0.0 && phi <= pi)) {
    throw Error(Errc::domain, "g_phi: angle " + std::to_string(phi) + " outside [0, pi]");
  }
  return (pi - phi) * std::cos(phi) + std::sin(phi);
}

double population_loss(const StudentParams& s, const TeacherParams& t, AngleKernel kernel) {
  check_dims(s.w, s.a, t);
  const Vec& a = s.a;
  const Vec& as = t.a_star;
  const double g = kernel(angle(s.w, t.w_star));
  const double sa = a.sum();
  const double sas = as.sum();
  const double val = (pi - 1.0) / (2.0 * pi) * as.squaredNorm() +
                     (pi - 1.0) / (2.0 * pi) * a.squaredNorm() - (g - 1.0) / pi * a.dot(as) +
                     sas * sas / (2.0 * pi) + sa * sa / (2.0 * pi) - sas * sa / pi;
  // Rounding can leave a -1e-17 residue at the global optimum.
  return std::max(0.0, 0.5 * val);
}

Vec grad_a_at_angle(double phi, const Vec& a, const TeacherParams& t, AngleKernel kernel) {
  if (a.size() != t.k()) throw Error(Errc::dimension_mismatch, "grad_a: a has wrong length");
  const Vec& as = t.a_star;
  const double g = kernel(phi);
  const Vec ones = Vec::Ones(a.size());
  // (1/2pi)(11^T + (pi-1)I) a - (1/2pi)(11^T + (g-1)I) a*
  return ((a.sum() - as.sum()) * ones + (pi - 1.0) * a - (g - 1.0) * as) / (2.0 * pi);
}

Vec grad_a(const StudentParams& s, const TeacherParams& t, AngleKernel kernel) {
  check_dims(s.w, s.a, t);
  return grad_a_at_angle(angle(s.w, t.w_star), s.a, t, kernel);
}

Vec grad_w_general(const Vec& x, const Vec& a, const TeacherParams& t) {
  check_dims(x, a, t);
  const Vec& as = t.a_star;
  const double phi = angle(x, t.w_star);
  const double inner = a.dot(as);
  const double sa = a.sum();
  const double sas = as.sum();
  const double a2 = a.squaredNorm();
  const double inv_norm = 1.0 / x.norm();  // |w*| = 1
  const double radial = a2 / 2.0 + (sa * sa - a2) / (2.0 * pi) -
                        inner * std::sin(phi) / (2.0 * pi) * inv_norm -
                        (sa * sas - inner) / (2.0 * pi) * inv_norm;
  return -(inner * (pi - phi) / (2.0 * pi)) * t.w_star.vec() + radial * x;
}

Vec grad_w(const StudentParams& s, const TeacherParams& t) {
  return grad_w_general(s.w, s.a, t);
}

Vec manifold_grad_w(const StudentParams& s, const TeacherParams& t) {
  return tangent_project(s.w, grad_w(s, t));
}

PerturbedGrads perturbed_grads(const StudentParams& s, const TeacherParams& t, double rho_w,
                               double rho_a, RngStream& rng) {
  check_dims(s.w, s.a, t);
  if (!(rho_w >= 0.0) || !(rho_a >= 0.0)) {
    throw Error(Errc::domain, "perturbed_grads: noise radii must be nonnegative");
  }
  PerturbedGrads out;
  out.xi = sample_unit_ball({t.p(), rho_w}, rng);
  out.epsilon = sample_unit_ball({t.k(), rho_a}, rng);
  const Vec x = s.w.vec() + out.xi;
  const Vec b = s.a + out.epsilon;
  if (x.norm() == 0.0) {
    throw Error(Errc::domain, "perturbed_grads: w + xi is the zero vector");
  }
  out.grad_w = grad_w_general(x, b, t);
  out.grad_a = grad_a_at_angle(angle(x, t.w_star), b, t);
  return out;
}

StudentParams spurious_optimum(const TeacherParams& t) {
  const Eigen::Index k = t.k();
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(k, k);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(k, k);
  const Eigen::MatrixXd lhs = ones + (pi - 1.0) * eye;
  const Vec rhs = (ones - eye) * t.a_star;
  Vec a_tilde = lhs.llt().solve(rhs);
  return StudentParams(-t.w_star, std::move(a_tilde));
}

}  // namespace pgd
