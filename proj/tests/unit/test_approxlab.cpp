#include "doctest.h"

#include <cmath>
#include <sstream>

#include "asianlv/approxlab.hpp"

using namespace asianlv;

namespace {

const LocalVolSurface kCapped(surface::CappedPower{0.2, 100.0, -0.3, 0.05, 1.0});

SimConfig cfg(std::size_t n_paths, std::size_t steps) {
  SimConfig c;
  c.n_paths = n_paths;
  c.steps = steps;
  c.threads = 1;
  return c;
}

}  // namespace

TEST_CASE("log spaced grid") {
  const auto g = log_spaced(0.01, 1.0, 3);
  CHECK(g[0] == 0.01);
  CHECK(g[1] == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(g[2] == 1.0);
  CHECK_THROWS_AS(log_spaced(0.0, 1.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(log_spaced(0.1, 1.0, 1), std::invalid_argument);
}

TEST_CASE("pair names") {
  for (auto p : {ProcessPair::S_X, ProcessPair::X_Xtilde, ProcessPair::Xtilde_Xhat, ProcessPair::Y_Ytilde,
                 ProcessPair::Ytilde_Yhat})
    CHECK(parse_pair(to_string(p)) == p);
  CHECK_THROWS_AS(parse_pair("X-Y"), std::invalid_argument);
}

TEST_CASE("constant volatility gives a degenerate curve") {
  const auto curve = lp_distance_curve(LocalVolSurface::constant(0.2), MarketParams{}, ProcessPair::X_Xtilde, 2.0,
                                       log_spaced(0.01, 0.5, 4), cfg(500, 20));
  for (double m : curve.moment) CHECK(m == 0.0);
  const auto fit = scaling_exponent(curve);
  CHECK_FALSE(fit.fitted);
  CHECK(fit.status == "degenerate-curve");
}

TEST_CASE("scaling exponent on a synthetic curve") {
  DistanceCurve c;
  c.t = log_spaced(0.01, 0.5, 6);
  for (double t : c.t) {
    c.moment.push_back(0.7 * t * t);
    c.std_error.push_back(0.0);
  }
  const auto fit = scaling_exponent(c);
  CHECK(fit.fitted);
  CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::exp(fit.intercept) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(fit.r_squared == doctest::Approx(1.0));

  std::ostringstream os;
  write_curve_csv(c, os);
  CHECK(os.str().rfind("t,moment,std_error\n", 0) == 0);
}

TEST_CASE("distance curves under a level-dependent surface") {
  const auto t = log_spaced(0.02, 0.5, 5);
  const auto xh = lp_distance_curve(kCapped, MarketParams{}, ProcessPair::Xtilde_Xhat, 2.0, t, cfg(4000, 50));
  for (std::size_t i = 0; i + 1 < t.size(); ++i) CHECK(xh.moment[i + 1] > xh.moment[i]);

  const auto sx = lp_distance_curve(kCapped, MarketParams{100, 0.05, 0}, ProcessPair::S_X, 2.0, t, cfg(4000, 50));
  for (double m : sx.moment) CHECK(m > 0.0);
  // E|S - X|^2 ~ (r S0 t)^2 for small t.
  CHECK(scaling_exponent(sx).slope == doctest::Approx(2.0).epsilon(0.1));

  const auto st = step_doubling_study(kCapped, MarketParams{}, ProcessPair::X_Xtilde, 2.0, t, cfg(4000, 25), 0.1);
  CHECK(st.fine.steps == 50);
  CHECK(st.coarse_fit.fitted);
  CHECK(st.stable);
  CHECK(st.fine_fit.slope == doctest::Approx(2.0).epsilon(0.1));

  CHECK_THROWS_AS(lp_distance_curve(kCapped, MarketParams{}, ProcessPair::S_X, 2.0, {0.2, 0.1}, cfg(10, 10)),
                  std::invalid_argument);
  CHECK_THROWS_AS(lp_distance_curve(kCapped, MarketParams{}, ProcessPair::S_X, 2.0, {0.5, 2.0}, cfg(10, 10)),
                  std::invalid_argument);
}
