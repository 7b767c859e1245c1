#pragma once

#include <Eigen/Dense>

#include "pgd/rng.hpp"

namespace pgd {

using Vec = Eigen::VectorXd;

// A vector of unit Euclidean norm (tolerance 1e-12) in dimension >= 2.
class UnitVector {
 public:
  static constexpr double kNormTolerance = 1e-12;

  // Validates an already-normalized vector; throws on a norm or dimension violation.
  explicit UnitVector(Vec entries);

  // The i-th standard basis vector of R^dim.
  static UnitVector basis(Eigen::Index dim, Eigen::Index i);

  const Vec& vec() const noexcept { return v_; }
  operator const Vec&() const noexcept { return v_; }  // NOLINT(google-explicit-constructor)
  Eigen::Index dim() const noexcept { return v_.size(); }
  double operator[](Eigen::Index i) const { return v_[i]; }

  UnitVector operator-() const;

 private:
  struct Unchecked {};
  UnitVector(Vec entries, Unchecked) : v_(std::move(entries)) {}
  friend UnitVector project_to_sphere(const Vec& v);

  Vec v_;
};

struct BallSpec {
  Eigen::Index dim = 0;
  double radius = 0.0;
};

// Uniform draw from the closed ball of the given radius centred at the origin.
// Radius 0 yields the zero vector without consuming randomness.
Vec sample_unit_ball(const BallSpec& spec, RngStream& rng);

// Uniform draw on the unit sphere in R^dim.
UnitVector sample_sphere(Eigen::Index dim, RngStream& rng);

// v / |v|. Refuses |v| < 1e-300.
UnitVector project_to_sphere(const Vec& v);

// g - (w^T g) w.
Vec tangent_project(const Vec& w, const Vec& g);

// Angle in [0, pi] between two nonzero vectors (arccos input clamped).
double angle(const Vec& u, const Vec& v);

// A unit vector making the given angle with `axis`, rotated towards a random
// direction orthogonal to it.
UnitVector vector_at_angle(const UnitVector& axis, double phi, RngStream& rng);

}  // namespace pgd
