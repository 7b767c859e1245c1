#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pgd/population.hpp"
#include "pgd/rng.hpp"
#include "pgd/sphere.hpp"

namespace pgd {

// One Gaussian input Z in R^{p x k}; column j is the j-th patch Z_j.
struct InputSample {
  Eigen::MatrixXd z;
};

InputSample sample_input(Eigen::Index p, Eigen::Index k, RngStream& rng);

// a^T relu(Z^T w). w need not be a unit vector.
double forward(const InputSample& z, const Vec& w, const Vec& a);

struct SampleGrad {
  Vec gw;
  Vec ga;
};

// Exact gradient of 0.5 * (f(Z,w,a) - f(Z,w*,a*))^2 in (w, a). The ReLU
// derivative at exactly 0 is taken as 0.
SampleGrad sample_grad(const InputSample& z, const Vec& w, const Vec& a, const TeacherParams& t);
SampleGrad sample_grad(const InputSample& z, const StudentParams& s, const TeacherParams& t);

// The w-gradient expression exactly as printed for the per-sample loss in the
// original SGD derivation. It is not the gradient of the per-sample loss (it
// drops the a^T a self term) and is kept only as a diagnostic for comparison.
Vec printed_sample_grad_w(const InputSample& z, const Vec& w, const Vec& a, const TeacherParams& t);

// Mean of sample_grad over a nonempty batch.
SampleGrad minibatch_grad(std::span<const InputSample> batch, const Vec& w, const Vec& a,
                          const TeacherParams& t);
SampleGrad minibatch_grad(std::span<const InputSample> batch, const StudentParams& s,
                          const TeacherParams& t);

// Two-filter student h(Z) = a^T relu(Z^T w) + b^T relu(Z^T v).
struct OverparamStudent {
  UnitVector w;
  UnitVector v;
  Vec a;
  Vec b;
};

// n Gaussian inputs held in memory as one p x (n*k) matrix; sample i owns
// columns [i*k, (i+1)*k).
class Dataset {
 public:
  Dataset(Eigen::Index p, Eigen::Index k, Eigen::MatrixXd columns, std::uint64_t seed);

  // Draws n samples in sequence from `rng`; sample i equals the i-th
  // sample_input call on the same stream.
  static Dataset sample(Eigen::Index n, Eigen::Index p, Eigen::Index k, RngStream& rng);

  Eigen::Index n() const noexcept { return n_; }
  Eigen::Index p() const noexcept { return p_; }
  Eigen::Index k() const noexcept { return k_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const Eigen::MatrixXd& columns() const noexcept { return columns_; }

  InputSample sample_at(Eigen::Index i) const;
  Dataset concatenated(const Dataset& other) const;

 private:
  Eigen::Index n_;
  Eigen::Index p_;
  Eigen::Index k_;
  std::uint64_t seed_;
  Eigen::MatrixXd columns_;
};

struct OverparamGrad {
  Vec gw;
  Vec gv;
  Vec ga;
  Vec gb;

  double euclidean_norm() const;
  // Norm with the w and v blocks projected onto their sphere tangent spaces.
  double manifold_norm(const OverparamStudent& s) const;
};

// min over all patches of |Z_ij^T w|: distance to the nearest ReLU kink.
double activation_margin(const Dataset& d, const Vec& w);

// F_n = (1/2n) sum_i (h(Z_i) - f(Z_i, w*, a*))^2.
double overparam_loss(const Dataset& d, const OverparamStudent& s, const TeacherParams& t);
OverparamGrad overparam_grad(const Dataset& d, const OverparamStudent& s, const TeacherParams& t);

// F_n and its gradient with the teacher outputs cached; used by the GD loop.
// The overparam_* free functions are thin wrappers over this.
class OverparamObjective {
 public:
  OverparamObjective(const Dataset& d, const TeacherParams& t);

  double loss(const OverparamStudent& s) const;
  OverparamGrad grad(const OverparamStudent& s, double* loss_out = nullptr) const;

  // Same contract with w, v allowed off the sphere (for finite differences).
  double loss_raw(const Vec& w, const Vec& v, const Vec& a, const Vec& b) const;
  OverparamGrad grad_raw(const Vec& w, const Vec& v, const Vec& a, const Vec& b,
                         double* loss_out = nullptr) const;

 private:
  void check(const Vec& w, const Vec& v, const Vec& a, const Vec& b) const;

  const Dataset& data_;
  Vec targets_;
};

// Binary dataset file: 8-byte magic "PGDDATA1", then little-endian uint64
// n, p, k, seed, then n*p*k float64 values, each sample stored row-major
// (entry (r, c) of Z_i at offset i*p*k + r*k + c).
void save_dataset(const Dataset& d, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace pgd
