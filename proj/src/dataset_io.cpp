#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "pgd/empirical.hpp"
#include "pgd/error.hpp"

namespace pgd {

namespace {

constexpr std::array<char, 8> kMagic = {'P', 'G', 'D', 'D', 'A', 'T', 'A', '1'};

static_assert(std::endian::native == std::endian::little,
              "dataset files are little-endian; add byte swapping for this platform");

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::filesystem::path& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw Error(Errc::io, "truncated dataset file " + path.string());
  }
  return value;
}

}  // namespace

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot open " + path.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(d.n()));
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(d.p()));
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(d.k()));
  write_pod<std::uint64_t>(out, d.seed());
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    const auto z = d.columns().middleCols(i * d.k(), d.k());
    for (Eigen::Index r = 0; r < d.p(); ++r) {
      for (Eigen::Index c = 0; c < d.k(); ++c) write_pod<double>(out, z(r, c));
    }
  }
  if (!out) throw Error(Errc::io, "write failed for " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw Error(Errc::io, path.string() + " is not a dataset file");
  }
  const auto n = read_pod<std::uint64_t>(in, path);
  const auto p = read_pod<std::uint64_t>(in, path);
  const auto k = read_pod<std::uint64_t>(in, path);
  const auto seed = read_pod<std::uint64_t>(in, path);
  if (n == 0 || p == 0 || k == 0 || n * p * k > (std::uint64_t{1} << 34)) {
    throw Error(Errc::io, path.string() + " has an implausible header");
  }
  const auto ki = static_cast<Eigen::Index>(k);
  Eigen::MatrixXd cols(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(n) * ki);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(p); ++r) {
      for (Eigen::Index c = 0; c < ki; ++c) cols(r, i * ki + c) = read_pod<double>(in, path);
    }
  }
  return Dataset(static_cast<Eigen::Index>(p), ki, std::move(cols), seed);
}

}  // namespace pgd
