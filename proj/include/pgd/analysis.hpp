#pragma once

#include <cstdint>
#include <optional>

#include "pgd/empirical.hpp"
#include "pgd/population.hpp"
#include "pgd/rng.hpp"

namespace pgd {

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // sample std / sqrt(n_samples)
  long long n_samples = 0;
};

// Streaming mean / variance (Welford).
class McAccumulator {
 public:
  void add(double x);
  McEstimate estimate() const;

 private:
  long long n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// E g(angle(w + xi, w*)), xi ~ unif(B(rho_w)). Requires n >= 1000.
McEstimate mc_expected_gphi(const UnitVector& w, const UnitVector& w_star, double rho_w,
                            long long n, RngStream& rng);
// E angle(w + xi, w*).
McEstimate mc_expected_phi(const UnitVector& w, const UnitVector& w_star, double rho_w,
                           long long n, RngStream& rng);

// Gamma(p/2) Gamma((p+2)/2) / Gamma((p+1)/2)^2: the limit of E g(phi_xi) as
// the noise radius grows.
double gamma_ratio_limit(int p);

// Integral of sin^n over [0, pi].
double sin_power_integral(int n);

enum class RegionKind { A, K, R };

struct RegionSpec {
  RegionKind kind = RegionKind::A;
  double c2 = 0.0, c3 = 0.0;        // A
  double c4 = 0.0;                  // K
  double m = 0.0, M = 0.0;          // K and R
  double c10 = 0.0, gamma = 0.0;    // R

  static RegionSpec a_region(double c2, double c3);
  static RegionSpec k_region(double c4, double m, double M);
  static RegionSpec r_region(double m, double M, double c10, double gamma);
};

// A: (a^T a* <= (C2/p)|a*|^2 or |a - a*/2|^2 >= |a*|^2) and
//    -4 (1^T a*)^2 <= (1^T a*)(1^T a) - (1^T a*)^2 <= (C3/p)|a*|^2.
// K: a^T a* in [m, M] and w^T w* >= C4.
// R: a^T a* in [m, M] and |w - w*|^2 <= C10 gamma.
bool in_region(const StudentParams& s, const TeacherParams& t, const RegionSpec& spec);

// <-E grad_a L(w + xi, a + eps), a* - a>. Requires n >= 10^4.
McEstimate dissipativity_a(const StudentParams& s, const TeacherParams& t, double rho_w,
                           double rho_a, long long n, RngStream& rng);
// <-E (I - w w^T) grad_w L(w + xi, a + eps), w* - w>. Requires n >= 10^4.
McEstimate dissipativity_w(const StudentParams& s, const TeacherParams& t, double rho_w,
                           double rho_a, long long n, RngStream& rng);

struct SmallNoiseBounds {
  double u1 = 0.0;  // bound on E phi_xi
  double u2 = 0.0;  // bound on E (pi - g(phi_xi))^2
  double u3 = 0.0;  // lower bound on E g(phi_xi)
};

// Deterministic small-noise bounds; phi in [0, pi/2], rho in [0, 1).
SmallNoiseBounds small_noise_bounds(double phi, double rho);

// Per-draw angle bracket for w + xi with |w| = 1, |xi| <= rho < 1:
// [max(0, phi - asin rho), phi + asin rho].
struct AngleBracket {
  double lower = 0.0;
  double upper = 0.0;
};
AngleBracket noise_angle_bracket(double phi, double rho);

struct BracketCheck {
  long long draws = 0;
  long long violations = 0;
  double min_angle = 0.0;
  double max_angle = 0.0;
};

// Draws n noise vectors at a w making angle phi with a random w* in R^p and
// counts the angles falling outside noise_angle_bracket.
BracketCheck check_angle_bracket(int p, double phi, double rho, long long n, RngStream& rng);

// (w* - (w^T w*) w)^T xi / |w + xi|, whose mean vanishes by symmetry.
McEstimate mc_symmetry_term(const UnitVector& w, const UnitVector& w_star, double rho_w,
                            long long n, RngStream& rng);

enum class LossId {
  population_a,        // population loss, coordinates of a
  population_w_sphere, // population loss along great circles through w
  overparam,           // empirical two-filter loss, all of (w, v, a, b)
};

struct FdPoint {
  StudentParams student;
  TeacherParams teacher;
  const Dataset* data = nullptr;                // overparam only
  std::optional<OverparamStudent> overparam;    // overparam only
  int directions = 4;                           // population_w_sphere only
  std::uint64_t seed = 0;                       // tangent directions
  AngleKernel kernel = g_phi;                   // population losses only
};

// Central-difference gradient vs the analytic one. Returns the max
// per-coordinate relative error, denominator max(|analytic|, 1e-8).
double finite_diff_check(LossId id, const FdPoint& point, double h);

}  // namespace pgd
