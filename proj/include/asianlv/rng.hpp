#pragma once

#include <array>
#include <cstdint>

namespace asianlv {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// Output depends only on (key, counter), so any draw can be produced
/// independently of scheduling or batching.
class Philox4x32 {
public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox4x32(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  Counter operator()(Counter ctr) const;

private:
  Key key_;
};

/// Standard normal draws addressed by (stream, path, index).
///
/// Two normals are produced per Philox block via Box-Muller; index 2k and
/// 2k+1 share a block.
class NormalStream {
public:
  NormalStream(std::uint64_t seed, std::uint32_t stream) : gen_(seed), stream_(stream) {}

  double at(std::uint64_t path, std::uint64_t index) const;

  /// Fills out[0..n) with draws index = first..first+n-1 for one path.
  void fill(std::uint64_t path, std::uint64_t first, double* out, std::size_t n) const;

private:
  std::array<double, 2> pair(std::uint64_t path, std::uint64_t block) const;

  Philox4x32 gen_;
  std::uint32_t stream_;
};

/// Stream identifiers reserved by the library.
namespace streams {
inline constexpr std::uint32_t brownian = 0;
inline constexpr std::uint32_t sampling_oracle = 7;
inline constexpr std::uint32_t synthetic = 11;
}  // namespace streams

}  // namespace asianlv
