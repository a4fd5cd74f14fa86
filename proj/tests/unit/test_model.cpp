#include "doctest.h"

#include <cmath>
#include <random>

#include "asianlv/model.hpp"

using namespace asianlv;

namespace {

LocalVolSurface capped() { return LocalVolSurface(surface::CappedPower{0.2, 100.0, -0.3, 0.05, 1.0}); }

// sigma(t,x) x and its x-derivatives by central differences.
VolPoint fd_oracle(const LocalVolSurface& s, double t, double x, double h) {
  auto f = [&](double y) { return s.sigma(t, y) * y; };
  return {s.sigma(t, x), (f(x + h) - f(x - h)) / (2 * h), (f(x + h) - 2 * f(x) + f(x - h)) / (h * h)};
}

}  // namespace

TEST_CASE("vol_at closed forms") {
  const VolPoint c = vol_at(LocalVolSurface::constant(0.2), 0.7, 123.0);
  CHECK(c.sigma == 0.2);
  CHECK(c.nu == 0.2);
  CHECK(c.rho == 0.0);

  const VolPoint ts = vol_at(LocalVolSurface(surface::TimeScaled{0.2, 1.0, 1.0, 1.0}), 0.5, 80.0);
  CHECK(ts.sigma == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(ts.nu == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(ts.rho == 0.0);

  CHECK_THROWS_AS(vol_at(LocalVolSurface::constant(0.2), -1.0, 100.0), DomainError);
  CHECK_THROWS_AS(vol_at(capped(), 0.0, -1.0), DomainError);
}

TEST_CASE("capped power derivatives against finite differences") {
  const auto s = capped();
  const VolPoint v = vol_at(s, 0.0, 100.0);
  const VolPoint o = fd_oracle(s, 0.0, 100.0, 1e-4);
  CHECK(v.sigma == doctest::Approx(0.2));
  CHECK(v.nu == doctest::Approx(o.nu).epsilon(1e-6));
  CHECK(v.rho == doctest::Approx(o.rho).epsilon(1e-3));
  CHECK(v.nu == doctest::Approx(0.7 * 0.2).epsilon(1e-12));

  // nu within 1e-6 relative of a central difference of sigma x across the range.
  for (double x : {20.0, 55.0, 99.0, 150.0, 400.0}) {
    const VolPoint a = vol_at(s, 0.3, x);
    const VolPoint b = fd_oracle(s, 0.3, x, 1e-4 * x);
    CHECK(a.nu == doctest::Approx(b.nu).epsilon(1e-6));
  }
  // Beyond the cap region sigma is flat, so nu = sigma and rho = 0.
  const VolPoint flat = vol_at(s, 0.0, 1e6);
  CHECK(flat.sigma == 0.05);
  CHECK(flat.nu == 0.05);
  CHECK(flat.rho == 0.0);
}

TEST_CASE("check_assumptions") {
  SUBCASE("constant") {
    const auto r = check_assumptions(LocalVolSurface::constant(0.2), ProbeGrid{});
    CHECK(r.pass);
    CHECK(r.sigma_lo == 0.2);
    CHECK(r.sigma_hi == 0.2);
    CHECK(r.lip_sigma == 0.0);
    CHECK(r.lip_nu == 0.0);
    CHECK(r.lip_rho == 0.0);
    // sigma x = 0.2 x is Lipschitz with constant 0.2.
    CHECK(r.lip_sigma_x == doctest::Approx(0.2).epsilon(1e-12));
  }
  SUBCASE("capped power on [50, 200]") {
    ProbeGrid g;
    g.x_lo = 50;
    g.x_hi = 200;
    const auto r = check_assumptions(capped(), g);
    CHECK(r.pass);
    CHECK(r.sigma_lo >= 0.05);
    double lo = 1e9, hi = 0;
    for (int j = 0; j < 1501; ++j) {
      const double x = 50 + 150.0 * j / 1500;
      lo = std::min(lo, capped().sigma(0.0, x));
      hi = std::max(hi, capped().sigma(0.0, x));
    }
    CHECK(r.sigma_lo == doctest::Approx(lo).epsilon(1e-12));
    CHECK(r.sigma_hi == doctest::Approx(hi).epsilon(1e-12));
    // The reported bounds hold on a ten times finer grid.
    for (int j = 0; j < 1501; ++j) {
      const double x = 50 + 150.0 * j / 1500;
      CHECK(capped().sigma(0.5, x) >= r.sigma_lo - 1e-15);
      CHECK(capped().sigma(0.5, x) <= r.sigma_hi + 1e-15);
    }
  }
  SUBCASE("uncapped power is unbounded near zero") {
    const LocalVolSurface u(surface::CappedPower{0.2, 100.0, -0.3, 0.0, INFINITY});
    ProbeGrid g;
    g.x_lo = 0.0;
    g.x_hi = 200.0;
    const auto r = check_assumptions(u, g);
    CHECK_FALSE(r.pass);
    CHECK_FALSE(r.bounded);
    CHECK_FALSE(r.failures.empty());
  }
  SUBCASE("zero volatility fails the lower bound") {
    const auto r = check_assumptions(LocalVolSurface::constant(0.0), ProbeGrid{});
    CHECK_FALSE(r.pass);
    CHECK_FALSE(r.positive_lower_bound);
  }
}

TEST_CASE("tabulated surface") {
  const std::string csv =
      "t,x,sigma\n"
      "0,50,0.3\n0,150,0.1\n1,50,0.4\n1,150,0.2\n";
  const auto s = parse_surface_csv(csv);
  CHECK(s.family() == SurfaceFamily::tabulated);
  CHECK(s.sigma(0.0, 100.0) == doctest::Approx(0.2));
  CHECK(s.sigma(0.5, 100.0) == doctest::Approx(0.25));
  // Constant extrapolation in t.
  CHECK(s.sigma(3.0, 50.0) == doctest::Approx(0.4));
  // sigma x = (0.4 - 0.002 x) x at t=0 gives nu = 0.4 - 0.004 x and rho = -0.004.
  const VolPoint v = vol_at(s, 0.0, 100.0);
  CHECK(v.nu == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(v.rho == doctest::Approx(-0.004).epsilon(1e-6));
  CHECK_THROWS_AS(s.sigma(0.0, 200.0), DomainError);
  CHECK_THROWS(parse_surface_csv("t,x,vol\n0,1,0.2\n"));
  CHECK_THROWS(parse_surface_csv("t,x,sigma\n0,50,0.3\n0,150,0.1\n1,50,0.4\n"));
}

TEST_CASE("payoffs") {
  CHECK(payoff_eval(PayoffSpec::call(100), 105) == 5.0);
  CHECK(payoff_eval(PayoffSpec::power_call(100, 0.5), 100) == 0.0);
  CHECK(payoff_eval(PayoffSpec::power_call(100, 0.5), 104) == doctest::Approx(2.0));
  CHECK(payoff_eval(PayoffSpec::put(100), 90) == 10.0);
  CHECK(payoff_eval(PayoffSpec::linear(2.0, 1.0), 3.0) == 7.0);
  CHECK(payoff_eval(PayoffSpec::constant(4.0), 3.0) == 4.0);

  const auto tab = PayoffSpec::table({90, 100, 110}, {0, 0, 10});
  CHECK(payoff_eval(tab, 105) == doctest::Approx(5.0));
  CHECK_THROWS_AS(payoff_eval(tab, 120), DomainError);

  CHECK(PayoffSpec::call(100).holder_gamma == 1.0);
  CHECK(PayoffSpec::call(100).holder_beta == 1.0);
  CHECK_THROWS(PayoffSpec::power_call(100, 1.5).validate());
  CHECK_THROWS(PayoffSpec::power_call(100, 0.0).validate());

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 200.0);
  for (int i = 0; i < 2000; ++i) {
    const double x = u(rng), y = u(rng);
    for (const auto& p : {PayoffSpec::call(100), PayoffSpec::put(100)})
      CHECK(std::abs(payoff_eval(p, x) - payoff_eval(p, y)) <= std::abs(x - y) + 1e-12);
  }
}
