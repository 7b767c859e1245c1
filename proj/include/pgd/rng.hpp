#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace pgd {

// A reproducible random stream keyed by (seed, stream_id). Two streams with
// the same key produce the same sequence; distinct stream ids are
// statistically independent, so workers can each own one.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  // Uniform on [0, 1).
  double uniform();
  double normal();
  Eigen::VectorXd normal_vector(Eigen::Index n);

  // Independent child stream; deterministic in (seed, stream_id, child).
  RngStream child(std::uint64_t child_id) const;

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// SplitMix64 finalizer, used to derive well-mixed stream ids.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace pgd
