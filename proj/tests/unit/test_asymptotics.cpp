#include "doctest.h"

#include <cmath>
#include <numbers>

#include "asianlv/approxlab.hpp"
#include "asianlv/asymptotics.hpp"
#include "asianlv/quadrature.hpp"
#include "asianlv/rng.hpp"

using namespace asianlv;

namespace {

double Ncdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace

TEST_CASE("asian and european vols") {
  const auto c = LocalVolSurface::constant(0.2);
  CHECK(asian_vol(c, 100, 0.7) == doctest::Approx(0.2 / std::sqrt(3.0)).epsilon(1e-14));
  CHECK(european_vol(c, 100, 0.7) == doctest::Approx(0.2).epsilon(1e-14));
  for (double sigma : {0.1, 0.2, 0.4})
    for (double T : log_spaced(1e-4, 2.0, 20)) {
      const VolQuote q = vol_quote(LocalVolSurface::constant(sigma), 100, T);
      CHECK(std::abs(q.asian_vol - q.european_vol / std::sqrt(3.0)) <= 1e-12);
    }

  // sigma(t) = 0.2 sqrt(t): int t (T - t)^2 dt = T^4 / 12
  const LocalVolSurface root(surface::TimeScaled{0.2, 0.0, 1.0, 0.5});
  CHECK(asian_vol(root, 100, 1.0) == doctest::Approx(0.2 * std::sqrt(1.0 / 12)).epsilon(1e-12));
  // sigma(t) = 0.2 (1 + t): int (1 + t)^2 dt over [0, 1] = 7/3
  const LocalVolSurface lin(surface::TimeScaled{0.2, 1.0, 1.0, 1.0});
  CHECK(european_vol(lin, 100, 1.0) == doctest::Approx(0.2 * std::sqrt(7.0 / 3)).epsilon(1e-12));
  // Short-maturity limits.
  CHECK(asian_vol(lin, 100, 1e-6) == doctest::Approx(0.2 / std::sqrt(3.0)).epsilon(1e-5));
  CHECK(european_vol(lin, 100, 1e-6) == doctest::Approx(0.2).epsilon(1e-5));
}

TEST_CASE("asymptotic prices") {
  const double vA = 0.2 / std::sqrt(3.0);
  const auto atm = asym_price(PayoffSpec::call(100), 100, vA, 0.25);
  const double s = 100 * vA * 0.5;
  CHECK(atm.value == doctest::Approx(s / std::sqrt(2 * std::numbers::pi)).epsilon(1e-14));
  CHECK(atm.value == doctest::Approx(2.30329).epsilon(1e-5));
  CHECK(atm.claimed_error_order == 1.0);
  // 200-node Gauss-Hermite oracle; the kink limits it to about 1e-3 relative.
  const double gh = gauss_hermite_expectation([s](double z) { return std::max(s * z, 0.0); }, 200);
  CHECK(std::abs(atm.value - gh) < 5e-3 * atm.value);

  CHECK(asym_price(PayoffSpec::constant(3.5), 100, vA, 0.25).value == doctest::Approx(3.5).epsilon(1e-13));
  CHECK(asym_price(PayoffSpec::call(110), 100, vA, 1e-4).value < 1e-12);
  CHECK(asym_price(PayoffSpec::call(90), 100, vA, 1e-4).value == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(asym_price(PayoffSpec::put(90), 100, vA, 1e-4).value < 1e-12);

  // Closed form against quadrature across the stated range.
  for (double rel : log_spaced(1e-4, 0.5, 7))
    for (double d : {-6.0, -2.5, 0.0, 1.0, 6.0}) {
      const double K = 100 - d * rel * 100;
      for (const auto& p : {PayoffSpec::call(K), PayoffSpec::put(K)}) {
        CHECK(std::abs(asym_price(p, 100, rel, 1.0).value - asym_price_quadrature(p, 100, rel, 1.0)) <= 1e-8);
        CHECK(std::abs(asym_delta(p, 100, rel, 1.0).value - asym_delta_quadrature(p, 100, rel, 1.0)) <= 1e-8);
      }
    }
  CHECK_THROWS(asym_price(PayoffSpec::call(100), 100, 0.0, 0.25));
}

TEST_CASE("asymptotic deltas") {
  const double vA = 0.2 / std::sqrt(3.0);
  CHECK(asym_delta(PayoffSpec::call(100), 100, vA, 0.25).value == 0.5);
  CHECK(asym_delta(PayoffSpec::linear(1.0), 100, vA, 0.25).value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(asym_delta(PayoffSpec::call(50), 100, vA, 0.01).value == doctest::Approx(1.0).epsilon(1e-6));
  const double s = 100 * vA * std::sqrt(0.1);
  CHECK(asym_delta(PayoffSpec::call(103), 100, vA, 0.1).value == doctest::Approx(Ncdf(-3.0 / s)).epsilon(1e-12));
  CHECK(asym_delta(PayoffSpec::call(103), 100, vA, 0.1).claimed_error_order == 0.5);

  // Unsubtracted defining expectation E[Phi(S0 + sZ) Z] / s as the oracle.
  const auto pc = PayoffSpec::power_call(98, 0.75);
  const double raw = gaussian_expectation(
                         [&](double z) { return payoff_eval(pc, 100 + s * z) * z; }, {(98 - 100) / s},
                         GaussianQuadOptions{1e-12, 8.0, 128, 1 << 15, 14}) /
                     s;
  CHECK(asym_delta(pc, 100, vA, 0.1).value == doctest::Approx(raw).epsilon(1e-9));

  // Kinked payoffs: the delta tends to the average of the one-sided derivatives.
  const auto tab = PayoffSpec::table({0, 100, 1000}, {0, 0, 900});
  CHECK(std::abs(asym_delta(tab, 100, vA, 1e-6).value - 0.5) < 5e-3);
  const auto kink = PayoffSpec::table({0, 100, 1000}, {-50, 0, 1800});
  CHECK(std::abs(asym_delta(kink, 100, vA, 1e-6).value - 1.25) < 5e-3);
}

TEST_CASE("absolute moments") {
  CHECK(abs_moment(0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(abs_moment(1) == doctest::Approx(std::sqrt(2 / std::numbers::pi)).epsilon(1e-15));
  CHECK(std::abs(abs_moment(2) - 1) <= 1e-12);
  CHECK(std::abs(abs_moment(4) - 3) <= 1e-12);
  CHECK(std::abs(abs_moment(6) - 15) <= 1e-12);
  for (double g : {0.3, 1.5, 2.7})
    CHECK(abs_moment(g) == doctest::Approx(gaussian_expectation([g](double z) { return std::pow(std::abs(z), g); },
                                                                {0.0}, GaussianQuadOptions{1e-13, 10.0, 128, 1 << 15, 14}))
                               .epsilon(1e-10));
  // Dips below 1 on (0, 2), increasing beyond; log-convex throughout.
  CHECK(abs_moment(1.0) < 1.0);
  for (int i = 20; i < 40; ++i) CHECK(abs_moment(0.1 * (i + 1)) > abs_moment(0.1 * i));
  for (int i = 1; i < 40; ++i)
    CHECK(2 * std::log(abs_moment(0.1 * i)) <= std::log(abs_moment(0.1 * (i - 1))) + std::log(abs_moment(0.1 * (i + 1))));
  CHECK_THROWS(abs_moment(-0.5));
}

TEST_CASE("power payoff leading terms") {
  const double vA = 0.2 / std::sqrt(3.0);
  const auto one = power_leading_terms(1.0, 100, vA, 0.25);
  CHECK(one.price_lead == doctest::Approx(asym_price(PayoffSpec::call(100), 100, vA, 0.25).value).epsilon(1e-14));
  CHECK(one.delta_lead == doctest::Approx(0.5).epsilon(1e-14));
  const auto q = power_leading_terms(0.75, 100, 0.11547, 0.04);
  CHECK(q.price_lead == doctest::Approx(0.5 * std::pow(11.547, 0.75) * abs_moment(0.75) * std::pow(0.04, 0.375))
                            .epsilon(1e-14));
  CHECK(std::abs(q.price_lead - asym_price(PayoffSpec::power_call(100, 0.75), 100, 0.11547, 0.04).value) <= 1e-10);
  CHECK(q.delta_in_range);
  CHECK(q.delta_T_exponent == doctest::Approx(-0.125));
  CHECK(q.delta_lead ==
        doctest::Approx(abs_moment(1.75) / (2 * std::pow(11.547, 0.25)) * std::pow(0.04, -0.125)).epsilon(1e-14));
  CHECK_FALSE(power_leading_terms(0.4, 100, vA, 0.1).delta_in_range);
  CHECK_THROWS(power_leading_terms(2.5, 100, vA, 0.1));
}

TEST_CASE("delta parity and Taylor expansion") {
  const auto a = delta_parity_and_itm(0.05, 0.0, 0.5);
  CHECK(a.parity == doctest::Approx(0.9876036).epsilon(1e-7));
  CHECK(a.taylor == doctest::Approx(0.9876042).epsilon(1e-7));
  CHECK(std::abs(a.parity - a.taylor) < 1e-5);
  const auto z = delta_parity_and_itm(0.0, 0.0, 0.3);
  CHECK(z.parity == 1.0);
  CHECK(z.taylor == 1.0);
  CHECK(delta_parity_and_itm(0.03, 0.03, 1.0).parity == doctest::Approx(std::exp(-0.03)).epsilon(1e-15));
}

TEST_CASE("volatility matching") {
  const auto flat = VolCurve::polynomial({0.3});
  for (double s : {0.01, 0.5, 2.0})
    CHECK(match_volatility(MatchDirection::implied_to_tau, flat, s) == doctest::Approx(0.3 / std::sqrt(3.0)).epsilon(1e-12));
  const auto c = VolCurve::polynomial({0.17});
  CHECK(match_volatility(MatchDirection::tau_to_implied, c, 0.4) == doctest::Approx(0.17 * std::sqrt(3.0)).epsilon(1e-14));

  // Round trip on tau(s) = 0.1 + 0.05 s.
  const auto tau = VolCurve::polynomial({0.1, 0.05});
  const auto implied = VolCurve::callable([&](double s) {
    return match_volatility(MatchDirection::tau_to_implied, tau, std::max(s, 1e-12));
  });
  for (double s : {0.05, 0.3, 0.7, 1.0})
    CHECK(match_volatility(MatchDirection::implied_to_tau, implied, s) == doctest::Approx(tau.value(s)).epsilon(1e-6));

  // Spline curve through samples of a smooth function.
  std::vector<double> vals;
  for (int i = 0; i <= 100; ++i) vals.push_back(0.2 + 0.1 * std::sin(0.02 * i));
  const auto sp = VolCurve::spline(0.0, 0.02, vals);
  CHECK(sp.value(0.5) == doctest::Approx(0.2 + 0.1 * std::sin(0.5)).epsilon(1e-8));
  CHECK(sp.d1(0.5) == doctest::Approx(0.1 * std::cos(0.5)).epsilon(1e-5));

  // A steeply falling tau makes the bracket negative.
  const auto steep = VolCurve::polynomial({0.3, -2.0});
  CHECK_THROWS_AS(match_volatility(MatchDirection::tau_to_implied, steep, 0.1), DomainError);
}

TEST_CASE("geometric and european Black-Scholes") {
  MarketParams m{100, 0.03, 0.01};
  const double T = 0.5;
  const auto zero = geometric_bs(0.0, m, PayoffFamily::call, 95, T);
  CHECK(zero.price ==
        doctest::Approx(std::exp(-m.rate * T) * (100 * std::exp((m.rate - m.dividend) * T / 2) - 95)).epsilon(1e-14));

  const double sigma = 0.25;
  const auto c = geometric_bs(sigma, m, PayoffFamily::call, 102, T);
  const auto p = geometric_bs(sigma, m, PayoffFamily::put, 102, T);
  const double meanG = std::exp(std::log(100) + (m.rate - m.dividend - 0.5 * sigma * sigma) * T / 2 + sigma * sigma * T / 6);
  CHECK(c.price - p.price == doctest::Approx(std::exp(-m.rate * T) * (meanG - 102)).epsilon(1e-12));

  // Delta against a bump of the closed form.
  MarketParams up = m, dn = m;
  up.spot *= 1 + 1e-5;
  dn.spot *= 1 - 1e-5;
  const double fd = (geometric_bs(sigma, up, PayoffFamily::call, 102, T).price -
                     geometric_bs(sigma, dn, PayoffFamily::call, 102, T).price) / (2e-5 * 100);
  CHECK(c.delta == doctest::Approx(fd).epsilon(1e-7));

  // Exact-distribution sampling oracle, ATM, r = q = 0, T = 0.25.
  const MarketParams flat;
  const auto g = geometric_bs(0.2, flat, PayoffFamily::call, 100, 0.25);
  NormalStream z(99, streams::sampling_oracle);
  const double mlog = std::log(100) - 0.5 * 0.04 * 0.25 / 2, sd = 0.2 * std::sqrt(0.25 / 3);
  double s1 = 0, s2 = 0;
  const std::size_t n = 1000000;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::max(std::exp(mlog + sd * z.at(0, i)) - 100, 0.0);
    s1 += x;
    s2 += x * x;
  }
  const double mu = s1 / n, se = std::sqrt((s2 / n - mu * mu) / (n - 1));
  CHECK(std::abs(mu - g.price) <= 3 * se);

  // European: put-call parity and the textbook value.
  const auto bc = black_scholes(0.2, m, PayoffFamily::call, 100, 1.0);
  const auto bp = black_scholes(0.2, m, PayoffFamily::put, 100, 1.0);
  CHECK(bc.price - bp.price == doctest::Approx(100 * std::exp(-0.01) - 100 * std::exp(-0.03)).epsilon(1e-12));
  CHECK(black_scholes(0.2, MarketParams{100, 0.05, 0}, PayoffFamily::call, 100, 1.0).price ==
        doctest::Approx(10.450583572185565).epsilon(1e-12));
}

TEST_CASE("lognormal expectation") {
  const double m = std::log(100), v = 0.04;
  CHECK(lognormal_expectation(PayoffSpec::linear(1.0), m, v) == doctest::Approx(100 * std::exp(0.02)).epsilon(1e-14));
  // Power call through quadrature against a sampling-free Gauss-Legendre oracle in log space.
  const auto pc = PayoffSpec::power_call(100, 0.75);
  // z = u^4 smooths the (z)^0.75 onset at the strike.
  const double ref = integrate(
      [&](double u) {
        const double z = u * u * u * u;
        return 4 * u * u * u * payoff_eval(pc, std::exp(m + 0.2 * z)) * std::exp(-0.5 * z * z) /
               std::sqrt(2 * std::numbers::pi);
      },
      0.0, std::pow(10.0, 0.25), 1e-12);
  CHECK(lognormal_expectation(pc, m, v) == doctest::Approx(ref).epsilon(1e-9));
}
