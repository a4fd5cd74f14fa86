#include "asianlv/rng.hpp"

#include <cmath>
#include <numbers>

namespace asianlv {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// 53-bit uniform in (0, 1], never zero so log() is safe.
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Counter Philox4x32::operator()(Counter ctr) const {
  Key key = key_;
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

std::array<double, 2> NormalStream::pair(std::uint64_t path, std::uint64_t block) const {
  const auto out = gen_({static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
                         static_cast<std::uint32_t>(path),
                         static_cast<std::uint32_t>(path >> 32) ^ (stream_ << 16)});
  const double u1 = to_unit(out[0], out[1]);
  const double u2 = to_unit(out[2], out[3]);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

double NormalStream::at(std::uint64_t path, std::uint64_t index) const {
  return pair(path, index / 2)[index % 2];
}

void NormalStream::fill(std::uint64_t path, std::uint64_t first, double* out, std::size_t n) const {
  std::size_t k = 0;
  std::uint64_t index = first;
  if (n > 0 && index % 2 == 1) {
    out[k++] = pair(path, index / 2)[1];
    ++index;
  }
  while (k + 1 < n) {
    const auto z = pair(path, index / 2);
    out[k++] = z[0];
    out[k++] = z[1];
    index += 2;
  }
  if (k < n) out[k] = pair(path, index / 2)[0];
}

}  // namespace asianlv
