#pragma once

#include <Eigen/Dense>

#include "pgd/rng.hpp"
#include "pgd/sphere.hpp"

namespace pgd {

// Ground truth (w*, a*) of the teacher network.
struct TeacherParams {
  UnitVector w_star;
  Vec a_star;

  TeacherParams(UnitVector w, Vec a);
  Eigen::Index p() const noexcept { return w_star.dim(); }
  Eigen::Index k() const noexcept { return a_star.size(); }
};

// Current iterate (w, a) of the student network.
struct StudentParams {
  UnitVector w;
  Vec a;

  StudentParams(UnitVector w_, Vec a_) : w(std::move(w_)), a(std::move(a_)) {}
  static StudentParams from_teacher(const TeacherParams& t) { return {t.w_star, t.a_star}; }
};

using AngleKernel = double (*)(double);

// (pi - phi) cos(phi) + sin(phi) on [0, pi].
double g_phi(double phi);

// Closed-form population loss for Gaussian inputs.
//
// `kernel` replaces g(phi) in the closed form; it exists so that a corrupted
// kernel can serve as a negative control for the gradient checks.
double population_loss(const StudentParams& s, const TeacherParams& t, AngleKernel kernel = g_phi);

// Gradient in a. Depends on w only through the angle phi between w and w*.
Vec grad_a(const StudentParams& s, const TeacherParams& t, AngleKernel kernel = g_phi);
Vec grad_a_at_angle(double phi, const Vec& a, const TeacherParams& t, AngleKernel kernel = g_phi);

// Euclidean gradient in w. The general form accepts any nonzero x (not only
// unit vectors) and keeps the |w*| / |x| factors; this is exactly the
// gradient of the off-sphere extension of the loss.
Vec grad_w(const StudentParams& s, const TeacherParams& t);
Vec grad_w_general(const Vec& x, const Vec& a, const TeacherParams& t);

// (I - w w^T) grad_w.
Vec manifold_grad_w(const StudentParams& s, const TeacherParams& t);

struct PerturbedGrads {
  Vec grad_w;
  Vec grad_a;
  Vec xi;       // the w-noise that was drawn
  Vec epsilon;  // the a-noise that was drawn
};

// Gradients at (w + xi, a + eps) with xi ~ unif(B(rho_w)), eps ~ unif(B(rho_a)).
// xi is drawn before eps.
PerturbedGrads perturbed_grads(const StudentParams& s, const TeacherParams& t, double rho_w,
                               double rho_a, RngStream& rng);

// The stationary point (-w*, a~) with (11^T + (pi-1)I) a~ = (11^T - I) a*.
StudentParams spurious_optimum(const TeacherParams& t);

}  // namespace pgd
