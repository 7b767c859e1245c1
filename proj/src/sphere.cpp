#include "pgd/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pgd/error.hpp"

namespace pgd {

UnitVector::UnitVector(Vec entries) : v_(std::move(entries)) {
  if (v_.size() < 2) {
    throw Error(Errc::invalid_dimension,
                "unit vector needs dimension >= 2, got " + std::to_string(v_.size()));
  }
  const double n = v_.norm();
  if (!(std::abs(n - 1.0) <= kNormTolerance)) {
    throw Error(Errc::domain, "vector norm " + std::to_string(n) + " is not 1");
  }
}

UnitVector UnitVector::basis(Eigen::Index dim, Eigen::Index i) {
  if (dim < 2 || i < 0 || i >= dim) {
    throw Error(Errc::invalid_dimension, "basis index out of range");
  }
  return UnitVector(Vec::Unit(dim, i));
}

UnitVector UnitVector::operator-() const { return UnitVector(-v_, Unchecked{}); }

Vec sample_unit_ball(const BallSpec& spec, RngStream& rng) {
  if (spec.dim <= 0) {
    throw Error(Errc::invalid_dimension, "ball dimension must be positive");
  }
  if (!(spec.radius >= 0.0)) {
    throw Error(Errc::domain, "ball radius must be nonnegative");
  }
  if (spec.radius == 0.0) return Vec::Zero(spec.dim);

  Vec dir = rng.normal_vector(spec.dim);
  double n = dir.norm();
  while (n == 0.0) {
    dir = rng.normal_vector(spec.dim);
    n = dir.norm();
  }
  const double r = spec.radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(spec.dim));
  dir *= r / n;
  // Rounding in the rescale can overshoot the radius by an ulp.
  const double got = dir.norm();
  if (got > spec.radius) dir *= spec.radius / got;
  return dir;
}

UnitVector sample_sphere(Eigen::Index dim, RngStream& rng) {
  if (dim < 2) throw Error(Errc::invalid_dimension, "sphere dimension must be >= 2");
  Vec g = rng.normal_vector(dim);
  while (g.norm() == 0.0) g = rng.normal_vector(dim);
  return project_to_sphere(g);
}

UnitVector project_to_sphere(const Vec& v) {
  if (v.size() < 2) {
    throw Error(Errc::invalid_dimension, "cannot project a vector of dimension < 2");
  }
  const double n = v.norm();
  if (!(n >= 1e-300)) {
    throw Error(Errc::degenerate_projection, "cannot project a zero vector onto the sphere");
  }
  return UnitVector(v / n, UnitVector::Unchecked{});
}

Vec tangent_project(const Vec& w, const Vec& g) {
  if (w.size() != g.size()) {
    throw Error(Errc::dimension_mismatch, "tangent_project: dims " + std::to_string(w.size()) +
                                              " vs " + std::to_string(g.size()));
  }
  return g - w.dot(g) * w;
}

double angle(const Vec& u, const Vec& v) {
  if (u.size() != v.size()) throw Error(Errc::dimension_mismatch, "angle: dimension mismatch");
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) throw Error(Errc::domain, "angle: zero-vector argument");
  const double c = std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
  return std::acos(c);
}

UnitVector vector_at_angle(const UnitVector& axis, double phi, RngStream& rng) {
  Vec ortho = tangent_project(axis.vec(), rng.normal_vector(axis.dim()));
  while (ortho.norm() < 1e-8) ortho = tangent_project(axis.vec(), rng.normal_vector(axis.dim()));
  ortho.normalize();
  return project_to_sphere(std::cos(phi) * axis.vec() + std::sin(phi) * ortho);
}

}  // namespace pgd
