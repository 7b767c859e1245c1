#include "pgd/empirical.hpp"

#include <cmath>
#include <string>

#include "pgd/error.hpp"

namespace pgd {

namespace {

void check_sample(const InputSample& z, const Vec& w, const Vec& a) {
  if (z.z.rows() != w.size() || z.z.cols() != a.size()) {
    throw Error(Errc::dimension_mismatch,
                "input is " + std::to_string(z.z.rows()) + "x" + std::to_string(z.z.cols()) +
                    " but w has " + std::to_string(w.size()) + " and a has " +
                    std::to_string(a.size()) + " entries");
  }
}

void check_teacher(const InputSample& z, const TeacherParams& t) {
  if (z.z.rows() != t.p() || z.z.cols() != t.k()) {
    throw Error(Errc::dimension_mismatch, "input shape does not match the teacher");
  }
}

}  // namespace

InputSample sample_input(Eigen::Index p, Eigen::Index k, RngStream& rng) {
  if (p < 1 || k < 1) throw Error(Errc::invalid_dimension, "sample_input: p and k must be >= 1");
  InputSample s{Eigen::MatrixXd(p, k)};
  double* data = s.z.data();
  for (Eigen::Index i = 0; i < p * k; ++i) data[i] = rng.normal();
  return s;
}

double forward(const InputSample& z, const Vec& w, const Vec& a) {
  check_sample(z, w, a);
  return (z.z.transpose() * w).cwiseMax(0.0).dot(a);
}

SampleGrad sample_grad(const InputSample& z, const Vec& w, const Vec& a, const TeacherParams& t) {
  check_sample(z, w, a);
  check_teacher(z, t);
  const Vec pre = z.z.transpose() * w;
  const Vec act = pre.cwiseMax(0.0);
  const double r = act.dot(a) - forward(z, t.w_star, t.a_star);
  const Vec gated = (pre.array() > 0.0).select(a.array(), 0.0).matrix();
  return {r * (z.z * gated), r * act};
}

SampleGrad sample_grad(const InputSample& z, const StudentParams& s, const TeacherParams& t) {
  return sample_grad(z, s.w.vec(), s.a, t);
}

Vec printed_sample_grad_w(const InputSample& z, const Vec& w, const Vec& a, const TeacherParams& t) {
  check_sample(z, w, a);
  check_teacher(z, t);
  const Eigen::Index k = a.size();
  const Vec pre = z.z.transpose() * w;
  const Vec pre_star = z.z.transpose() * t.w_star.vec();
  // sum_j a_j a*_j Z_j Z_j^T 1_j w*  +  sum_{i != j} a_i a*_j Z_i Z_j^T 1_j w*
  Vec out = Vec::Zero(w.size());
  for (Eigen::Index j = 0; j < k; ++j) {
    if (!(pre[j] >= 0.0 && pre_star[j] >= 0.0)) continue;
    const double proj = pre_star[j] * t.a_star[j];
    out += a[j] * proj * z.z.col(j);
    for (Eigen::Index i = 0; i < k; ++i) {
      if (i != j) out += a[i] * proj * z.z.col(i);
    }
  }
  return out;
}

SampleGrad minibatch_grad(std::span<const InputSample> batch, const Vec& w, const Vec& a,
                          const TeacherParams& t) {
  if (batch.empty()) throw Error(Errc::domain, "minibatch_grad: empty batch");
  SampleGrad acc{Vec::Zero(w.size()), Vec::Zero(a.size())};
  for (const auto& z : batch) {
    const SampleGrad g = sample_grad(z, w, a, t);
    acc.gw += g.gw;
    acc.ga += g.ga;
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  acc.gw *= inv;
  acc.ga *= inv;
  return acc;
}

SampleGrad minibatch_grad(std::span<const InputSample> batch, const StudentParams& s,
                          const TeacherParams& t) {
  return minibatch_grad(batch, s.w.vec(), s.a, t);
}

Dataset::Dataset(Eigen::Index p, Eigen::Index k, Eigen::MatrixXd columns, std::uint64_t seed)
    : n_(0), p_(p), k_(k), seed_(seed), columns_(std::move(columns)) {
  if (p < 1 || k < 1) throw Error(Errc::invalid_dimension, "dataset needs p, k >= 1");
  if (columns_.rows() != p || columns_.cols() % k != 0 || columns_.cols() == 0) {
    throw Error(Errc::dimension_mismatch, "dataset storage does not hold whole p x k samples");
  }
  n_ = columns_.cols() / k;
}

Dataset Dataset::sample(Eigen::Index n, Eigen::Index p, Eigen::Index k, RngStream& rng) {
  if (n < 1) throw Error(Errc::invalid_dimension, "dataset needs n >= 1");
  if (p < 1 || k < 1) throw Error(Errc::invalid_dimension, "dataset needs p, k >= 1");
  Eigen::MatrixXd cols(p, n * k);
  double* data = cols.data();
  for (Eigen::Index i = 0; i < n * p * k; ++i) data[i] = rng.normal();
  return Dataset(p, k, std::move(cols), rng.seed());
}

InputSample Dataset::sample_at(Eigen::Index i) const {
  if (i < 0 || i >= n_) throw Error(Errc::domain, "dataset index out of range");
  return InputSample{columns_.middleCols(i * k_, k_)};
}

Dataset Dataset::concatenated(const Dataset& other) const {
  if (other.p_ != p_ || other.k_ != k_) {
    throw Error(Errc::dimension_mismatch, "cannot concatenate datasets of different shape");
  }
  Eigen::MatrixXd cols(p_, columns_.cols() + other.columns_.cols());
  cols << columns_, other.columns_;
  return Dataset(p_, k_, std::move(cols), seed_);
}

double activation_margin(const Dataset& d, const Vec& w) {
  if (w.size() != d.p()) throw Error(Errc::dimension_mismatch, "activation_margin: bad w");
  return (d.columns().transpose() * w).cwiseAbs().minCoeff();
}

double OverparamGrad::euclidean_norm() const {
  return std::sqrt(gw.squaredNorm() + gv.squaredNorm() + ga.squaredNorm() + gb.squaredNorm());
}

double OverparamGrad::manifold_norm(const OverparamStudent& s) const {
  return std::sqrt(tangent_project(s.w, gw).squaredNorm() + tangent_project(s.v, gv).squaredNorm() +
                   ga.squaredNorm() + gb.squaredNorm());
}

OverparamObjective::OverparamObjective(const Dataset& d, const TeacherParams& t) : data_(d) {
  if (d.p() != t.p() || d.k() != t.k()) {
    throw Error(Errc::dimension_mismatch, "dataset shape does not match the teacher");
  }
  const Vec pre = d.columns().transpose() * t.w_star.vec();
  const Eigen::Map<const Eigen::MatrixXd> act(pre.data(), d.k(), d.n());
  targets_ = act.cwiseMax(0.0).transpose() * t.a_star;
}

void OverparamObjective::check(const Vec& w, const Vec& v, const Vec& a, const Vec& b) const {
  if (w.size() != data_.p() || v.size() != data_.p() || a.size() != data_.k() ||
      b.size() != data_.k()) {
    throw Error(Errc::dimension_mismatch, "overparam student shape does not match the dataset");
  }
}

double OverparamObjective::loss_raw(const Vec& w, const Vec& v, const Vec& a, const Vec& b) const {
  check(w, v, a, b);
  const Eigen::Index n = data_.n();
  const Eigen::Index k = data_.k();
  Eigen::MatrixXd filters(data_.p(), 2);
  filters << w, v;
  const Eigen::MatrixXd pre = data_.columns().transpose() * filters;
  const Eigen::Map<const Eigen::MatrixXd> pw(pre.col(0).data(), k, n);
  const Eigen::Map<const Eigen::MatrixXd> pv(pre.col(1).data(), k, n);
  const Vec resid = pw.cwiseMax(0.0).transpose() * a + pv.cwiseMax(0.0).transpose() * b - targets_;
  return resid.squaredNorm() / (2.0 * static_cast<double>(n));
}

OverparamGrad OverparamObjective::grad_raw(const Vec& w, const Vec& v, const Vec& a, const Vec& b,
                                           double* loss_out) const {
  check(w, v, a, b);
  const Eigen::Index n = data_.n();
  const Eigen::Index k = data_.k();
  const Eigen::Index p = data_.p();
  const double inv_n = 1.0 / static_cast<double>(n);

  OverparamGrad g;
  g.gw = Vec::Zero(p);
  g.gv = Vec::Zero(p);
  g.ga = Vec::Zero(k);
  g.gb = Vec::Zero(k);
  Vec pw(k), pv(k), cw(k), cv(k);
  double sq = 0.0;
  // One pass per sample keeps its k patches in cache for both the forward
  // and the backward product.
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto patches = data_.columns().middleCols(i * k, k);
    pw.noalias() = patches.transpose() * w;
    pv.noalias() = patches.transpose() * v;
    const double r = pw.cwiseMax(0.0).dot(a) + pv.cwiseMax(0.0).dot(b) - targets_[i];
    sq += r * r;
    cw = (pw.array() > 0.0).select(r * a.array(), 0.0);
    cv = (pv.array() > 0.0).select(r * b.array(), 0.0);
    g.gw.noalias() += patches * cw;
    g.gv.noalias() += patches * cv;
    g.ga += r * pw.cwiseMax(0.0);
    g.gb += r * pv.cwiseMax(0.0);
  }
  if (loss_out != nullptr) *loss_out = sq * 0.5 * inv_n;
  g.gw *= inv_n;
  g.gv *= inv_n;
  g.ga *= inv_n;
  g.gb *= inv_n;
  return g;
}

double OverparamObjective::loss(const OverparamStudent& s) const {
  return loss_raw(s.w, s.v, s.a, s.b);
}

OverparamGrad OverparamObjective::grad(const OverparamStudent& s, double* loss_out) const {
  return grad_raw(s.w, s.v, s.a, s.b, loss_out);
}

double overparam_loss(const Dataset& d, const OverparamStudent& s, const TeacherParams& t) {
  return OverparamObjective(d, t).loss(s);
}

OverparamGrad overparam_grad(const Dataset& d, const OverparamStudent& s, const TeacherParams& t) {
  return OverparamObjective(d, t).grad(s);
}

}  // namespace pgd
