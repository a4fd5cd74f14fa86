#include "doctest.h"

#include <cmath>
#include <sstream>

#include "asianlv/asymptotics.hpp"
#include "asianlv/montecarlo.hpp"

using namespace asianlv;

namespace {

const LocalVolSurface kCapped(surface::CappedPower{0.2, 100.0, -0.3, 0.05, 1.0});

SimConfig small_cfg(std::size_t n_paths, std::size_t steps = 50) {
  SimConfig cfg;
  cfg.n_paths = n_paths;
  cfg.steps = steps;
  cfg.threads = 1;
  return cfg;
}

bool within(double a, double b, double se, double k = 4.0) { return std::abs(a - b) <= k * se; }

}  // namespace

TEST_CASE("simulated processes") {
  const MarketParams mkt{100.0, 0.03, 0.01};
  const auto cfg = small_cfg(20000);
  const auto b = simulate(kCapped, mkt, 0.5, cfg);
  REQUIRE(b.n_exploded == 0);
  const std::size_t N = b.steps;

  // Discounted S and X are martingales; Y is the first variation of X.
  double sS = 0, sX = 0, sY = 0, qS = 0, qX = 0, qY = 0;
  for (std::size_t p = 0; p < b.n_paths; ++p) {
    const double s = b.at(b.S, p, N) * std::exp(-(mkt.rate - mkt.dividend) * 0.5), x = b.at(b.X, p, N),
                 y = b.at(b.Y, p, N);
    sS += s;
    sX += x;
    sY += y;
    qS += s * s;
    qX += x * x;
    qY += y * y;
  }
  const double n = static_cast<double>(b.n_paths);
  auto se = [n](double s, double q) { return std::sqrt((q / n - (s / n) * (s / n)) / n); };
  CHECK(within(sS / n, 100.0, se(sS, qS)));
  CHECK(within(sX / n, 100.0, se(sX, qX)));
  CHECK(within(sY / n, 1.0, se(sY, qY)));
  CHECK(b.time.front() == 0.0);
  CHECK(b.time.back() == doctest::Approx(0.5));

  SUBCASE("constant sigma makes X and X-tilde identical") {
    const auto c = simulate(LocalVolSurface::constant(0.25), MarketParams{}, 0.3, small_cfg(200));
    for (std::size_t i = 0; i < c.X.size(); ++i) REQUIRE(c.X[i] == c.X_tilde[i]);
  }

  SUBCASE("paths csv") {
    auto cfg2 = small_cfg(2, 4);
    cfg2.include = IncludeFlags{true, false, true, false, false, false, false, false};
    std::ostringstream os;
    write_paths_csv(simulate(kCapped, mkt, 0.1, cfg2), os);
    const std::string text = os.str();
    CHECK(text.substr(0, text.find('\n')) == "path,step,t,S,Y");
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 2 * 5);
  }
}

TEST_CASE("zero volatility is deterministic") {
  const MarketParams mkt{100.0, 0.05, 0.0};
  const double T = 0.5;
  const auto e = mc_price(LocalVolSurface::constant(0.0), mkt, PayoffSpec::call(100.0), Style::asian, T,
                          small_cfg(100, 200));
  // Trapezoidal average of 100 e^{rt} on the grid, discounted.
  const std::size_t N = 200;
  const double dt = T / N;
  double avg = 0.0;
  for (std::size_t i = 0; i < N; ++i) avg += 0.5 * (std::exp(mkt.rate * i * dt) + std::exp(mkt.rate * (i + 1) * dt));
  avg *= 100.0 / N;
  CHECK(e.std_error <= 1e-12);
  CHECK(e.mean == doctest::Approx(std::exp(-mkt.rate * T) * (avg - 100.0)).epsilon(1e-12));
}

TEST_CASE("determinism") {
  const MarketParams mkt{};
  auto cfg = small_cfg(4000);
  const auto a = mc_price(kCapped, mkt, PayoffSpec::call(100), Style::asian, 0.2, cfg);
  const auto b = mc_price(kCapped, mkt, PayoffSpec::call(100), Style::asian, 0.2, cfg);
  cfg.threads = 3;
  const auto c = mc_price(kCapped, mkt, PayoffSpec::call(100), Style::asian, 0.2, cfg);
  CHECK(a.mean == b.mean);
  CHECK(a.mean == c.mean);
  CHECK(a.std_error == c.std_error);
  cfg.seed += 1;
  const auto d = mc_price(kCapped, mkt, PayoffSpec::call(100), Style::asian, 0.2, cfg);
  CHECK(a.mean != d.mean);
}

TEST_CASE("finite-difference deltas") {
  SUBCASE("linear payoff") {
    // With level-independent sigma the average is linear in S0.
    const MarketParams mkt{};
    const auto cfg = small_cfg(5000);
    const auto flat = LocalVolSurface::constant(0.2);
    const auto fd = mc_delta_fd(flat, mkt, PayoffSpec::linear(1.0), Style::asian, 0.25, cfg);
    const auto pr = mc_price(flat, mkt, PayoffSpec::linear(1.0), Style::asian, 0.25, cfg);
    CHECK(std::abs(fd.mean - pr.mean / 100.0) <= 1e-10);
    CHECK(within(fd.mean, 1.0, fd.std_error, 3.0));
  }
  SUBCASE("european call against Black-Scholes") {
    const MarketParams mkt{100.0, 0.02, 0.0};
    const auto fd = mc_delta_fd(LocalVolSurface::constant(0.2), mkt, PayoffSpec::call(105), Style::european, 0.25,
                                small_cfg(40000, 20));
    const double bs = black_scholes(0.2, mkt, PayoffFamily::call, 105, 0.25).delta;
    CHECK(within(fd.mean, bs, fd.std_error));
  }
  SUBCASE("at the money near one half") {
    const auto fd = mc_delta_fd(kCapped, MarketParams{}, PayoffSpec::call(100), Style::asian, 0.02,
                                small_cfg(20000, 100));
    CHECK(std::abs(fd.mean - 0.5) <= std::max(4.0 * fd.std_error, 0.02));
  }
}

TEST_CASE("malliavin weights") {
  const MarketParams mkt{100.0, 0.02, 0.0};
  auto cfg = small_cfg(3, 40);
  const auto b = simulate(kCapped, mkt, 0.3, cfg);
  const double dt = 0.3 / 40;
  for (std::size_t p = 0; p < 3; ++p) {
    std::vector<double> S(41), Z(41), dW(40);
    std::vector<VolPoint> vp(41);
    for (std::size_t i = 0; i <= 40; ++i) {
      S[i] = b.at(b.S, p, i);
      Z[i] = b.at(b.Z, p, i);
      vp[i] = vol_at(kCapped, b.time[i], S[i]);
    }
    for (std::size_t i = 0; i < 40; ++i) dW[i] = b.dW[p * 40 + i];
    const double fast = malliavin_asian_weight(S, Z, vp, dW, dt);
    const double naive = malliavin_asian_weight_naive(S, Z, vp, dW, dt);
    CHECK(fast == doctest::Approx(naive).epsilon(1e-11));
  }

  SUBCASE("constant payoff has zero delta") {
    const auto m = mc_delta_malliavin(kCapped, mkt, PayoffSpec::constant(3.0), Style::asian, 0.1, small_cfg(5000));
    CHECK(within(m.mean, 0.0, m.std_error, 3.0));
  }

  SUBCASE("budget") {
    auto big = small_cfg(1000, 100);
    big.malliavin_budget = 1e4;
    CHECK_THROWS_AS(mc_delta_malliavin(kCapped, mkt, PayoffSpec::call(100), Style::asian, 0.1, big),
                    std::invalid_argument);
    CHECK_THROWS_AS(mc_delta_malliavin(kCapped, mkt, PayoffSpec::call(100), Style::geometric, 0.1, small_cfg(10)),
                    std::invalid_argument);
  }
}

TEST_CASE("malliavin against finite differences") {
  const MarketParams mkt{};
  const std::vector<PayoffSpec> payoffs = {PayoffSpec::call(0), PayoffSpec::put(0), PayoffSpec::power_call(0, 0.75)};
  for (double T : {0.05, 0.1})
    for (double K : {90.0, 100.0, 110.0})
      for (PayoffSpec pay : payoffs) {
        pay.strike = K;
        const auto cfg = small_cfg(8000, 50);
        const auto fd = mc_delta_fd(kCapped, mkt, pay, Style::asian, T, cfg);
        const auto ma = mc_delta_malliavin(kCapped, mkt, pay, Style::asian, T, cfg);
        const double se = std::hypot(fd.std_error, ma.std_error);
        INFO("T=" << T << " K=" << K << " family=" << to_string(pay.family) << " fd=" << fd.mean
                  << " mall=" << ma.mean << " se=" << se);
        CHECK(std::abs(fd.mean - ma.mean) <= 4.0 * se + 1e-3);
      }
}

TEST_CASE("european malliavin under constant volatility") {
  const MarketParams mkt{100.0, 0.03, 0.0};
  const auto m = mc_delta_malliavin(LocalVolSurface::constant(0.2), mkt, PayoffSpec::call(100), Style::european,
                                    0.2, small_cfg(40000, 20));
  const double bs = black_scholes(0.2, mkt, PayoffFamily::call, 100, 0.2).delta;
  CHECK(within(m.mean, bs, m.std_error));
}

TEST_CASE("coupled estimators") {
  const MarketParams mkt{100.0, 0.02, 0.0};
  const auto cfg = small_cfg(20000, 50);
  for (double K : {95.0, 100.0, 110.0}) {
    const auto plain = mc_price(kCapped, mkt, PayoffSpec::call(K), Style::asian, 0.2, cfg);
    const auto coupled = mc_price_coupled(kCapped, mkt, PayoffSpec::call(K), Style::asian, 0.2, cfg);
    INFO("K=" << K << " plain=" << plain.mean << " coupled=" << coupled.mean);
    CHECK(within(plain.mean, coupled.mean, std::hypot(plain.std_error, coupled.std_error)));
    CHECK(coupled.std_error < 0.5 * plain.std_error);
  }
  const auto plain = mc_delta_fd(kCapped, mkt, PayoffSpec::call(100), Style::european, 0.2, cfg);
  const auto coupled = mc_delta_fd_coupled(kCapped, mkt, PayoffSpec::call(100), Style::european, 0.2, cfg);
  CHECK(within(plain.mean, coupled.mean, std::hypot(plain.std_error, coupled.std_error)));

  SUBCASE("proxy law against closed form for constant sigma") {
    const auto law = proxy_law(LocalVolSurface::constant(0.2), mkt, 1.0, 1000, Style::european);
    CHECK(law.log_mean == doctest::Approx(std::log(100.0) + 0.02 - 0.02).epsilon(1e-12));
    CHECK(law.log_var == doctest::Approx(0.04).epsilon(1e-12));
    const auto a = proxy_law(LocalVolSurface::constant(0.2), mkt, 1.0, 4000, Style::asian);
    CHECK(a.log_var == doctest::Approx(0.04 / 3).epsilon(1e-3));
  }
}

TEST_CASE("standard error halves with four times the paths") {
  const MarketParams mkt{};
  const auto a = mc_price(kCapped, mkt, PayoffSpec::call(100), Style::asian, 0.2, small_cfg(5000, 20));
  const auto b = mc_price(kCapped, mkt, PayoffSpec::call(100), Style::asian, 0.2, small_cfg(20000, 20));
  CHECK(b.std_error / a.std_error == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("geometric crosscheck") {
  const MarketParams mkt{100.0, 0.04, 0.01};
  const auto e = geometric_mc_crosscheck(0.3, mkt, PayoffSpec::call(100), 0.5, small_cfg(40000, 200));
  const double exact = geometric_bs(0.3, mkt, PayoffFamily::call, 100, 0.5).price;
  CHECK(std::abs(e.mean - exact) <= 4.0 * e.std_error + 2e-3);
  CHECK_THROWS_AS(geometric_mc_crosscheck(-0.1, mkt, PayoffSpec::call(100), 0.5, small_cfg(10)), DomainError);
}

TEST_CASE("euler weak order under grid refinement") {
  // Common driver at the finest resolution; errors against a 256-step run.
  const MarketParams mkt{100.0, 0.05, 0.0};
  SimConfig cfg = small_cfg(20000);
  cfg.scheme = Scheme::euler;
  cfg.driver_steps = 256;
  cfg.steps = 256;
  const double ref = mc_price(kCapped, mkt, PayoffSpec::call(100), Style::european, 0.5, cfg).mean;
  std::vector<double> lx, ly;
  for (std::size_t N : {4, 8, 16, 32}) {
    cfg.steps = N;
    const double v = mc_price(kCapped, mkt, PayoffSpec::call(100), Style::european, 0.5, cfg).mean;
    lx.push_back(std::log(0.5 / N));
    ly.push_back(std::log(std::abs(v - ref)));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i] / lx.size(), my += ly[i] / ly.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) sxy += (lx[i] - mx) * (ly[i] - my), sxx += (lx[i] - mx) * (lx[i] - mx);
  INFO("order " << sxy / sxx);
  CHECK(sxy / sxx >= 0.8);
}

TEST_CASE("explosions and validation") {
  // sigma up to 50 with a crude Euler grid drives S negative on most paths.
  const LocalVolSurface wild(surface::CappedPower{5.0, 100.0, -1.0, 0.05, 50.0});
  SimConfig cfg = small_cfg(2000, 2);
  cfg.scheme = Scheme::euler;
  CHECK_THROWS_AS(mc_price(wild, MarketParams{}, PayoffSpec::call(100), Style::asian, 1.0, cfg), NumericError);

  SimConfig bad = small_cfg(0);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(parse_scheme("milstein"), std::invalid_argument);
  CHECK(parse_scheme(to_string(Scheme::euler)) == Scheme::euler);
}
