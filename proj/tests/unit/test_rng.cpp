#include "doctest.h"

#include <cmath>
#include <vector>

#include "asianlv/rng.hpp"

using namespace asianlv;

TEST_CASE("philox known answers") {
  // Reference vectors from the Random123 distribution (kat_vectors).
  {
    Philox4x32 g(0);
    const auto out = g({0, 0, 0, 0});
    CHECK(out == Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  }
  {
    Philox4x32 g(0xffffffffffffffffull);
    const auto out = g({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu});
    CHECK(out == Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  }
}

TEST_CASE("normal stream is addressable and repeatable") {
  NormalStream a(42, 0), b(42, 0), other(42, 1);
  std::vector<double> buf(37);
  a.fill(5, 3, buf.data(), buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) CHECK(buf[i] == b.at(5, 3 + i));
  CHECK(a.at(5, 3) != other.at(5, 3));
  CHECK(a.at(5, 3) != a.at(6, 3));
}

TEST_CASE("normal stream moments") {
  NormalStream z(7, 0);
  const std::size_t n = 400000;
  std::vector<double> v(n);
  z.fill(0, 0, v.data(), n);
  double m = 0, m2 = 0, m4 = 0;
  for (double x : v) {
    m += x;
    m2 += x * x;
    m4 += x * x * x * x;
  }
  m /= n;
  m2 /= n;
  m4 /= n;
  CHECK(std::abs(m) < 4.0 / std::sqrt(n));
  CHECK(std::abs(m2 - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(m4 - 3.0) < 4.0 * std::sqrt(96.0 / n));
}
