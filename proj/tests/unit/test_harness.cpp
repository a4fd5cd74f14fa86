#include "doctest.h"

#include <cmath>
#include <sstream>

#include "asianlv/harness.hpp"
#include "asianlv/rng.hpp"

using namespace asianlv;

namespace {

std::vector<ErrorPoint> synthetic(double c, double order, double noise, std::uint32_t stream) {
  const NormalStream z(7, stream);
  std::vector<ErrorPoint> pts;
  std::uint64_t i = 0;
  for (double T : default_T_grid()) {
    const double v = c * std::pow(T, order);
    pts.push_back({T, v * (1 + noise * z.at(0, i++)), noise * v});
  }
  return pts;
}

}  // namespace

TEST_CASE("convergence report on exact power laws") {
  const auto rep = convergence_report(synthetic(3.0, 1.0, 0.0, 1), 1.0);
  CHECK(rep.status == "ok");
  CHECK_FALSE(rep.weighted);
  CHECK(rep.order == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::exp(rep.intercept) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(rep.r_squared == doctest::Approx(1.0));
  CHECK(rep.verdict);

  // A negative sign does not matter; the fit is on |e|.
  auto neg = synthetic(-2.0, 0.5, 0.0, 1);
  const auto rn = convergence_report(neg, 1.0, 0.2);
  CHECK(rn.order == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_FALSE(rn.verdict);
}

TEST_CASE("convergence report with noise") {
  const auto rep = convergence_report(synthetic(1.0, 0.5, 0.01, 2), 0.5);
  CHECK(rep.weighted);
  CHECK(rep.order == doctest::Approx(0.5).epsilon(0.05));
  CHECK(rep.verdict);

  // Scaling every error by a constant only shifts the intercept.
  auto scaled = synthetic(1.0, 0.5, 0.01, 2);
  for (auto& p : scaled) {
    p.value *= 40;
    p.std_error *= 40;
  }
  const auto rs = convergence_report(scaled, 0.5);
  CHECK(rs.order == doctest::Approx(rep.order).epsilon(1e-12));
  CHECK(rs.intercept == doctest::Approx(rep.intercept + std::log(40.0)).epsilon(1e-12));

  // Errors buried in noise are dropped.
  std::vector<ErrorPoint> noisy;
  for (double T : default_T_grid()) noisy.push_back({T, 1e-4, 1e-3});
  const auto rd = convergence_report(noisy, 1.0);
  CHECK(rd.status == "insufficient-data");
  CHECK(rd.dropped.size() == 5);
  CHECK_FALSE(rd.verdict);
}

TEST_CASE("scaled paths") {
  CHECK(scaled_paths(200000, 0.2) == 200000);
  CHECK(scaled_paths(200000, 0.0125) == 3200000);
  CHECK(scaled_paths(1, 10.0) == 1);
}

TEST_CASE("comparison with zero volatility") {
  CompareOptions opt;
  opt.n_base = 200;
  SimConfig cfg;
  cfg.steps = 20;
  cfg.threads = 1;
  const auto tab = compare_experiment(LocalVolSurface::constant(0.0), MarketParams{}, PayoffSpec::call(100), opt, cfg);
  CHECK(tab.rows.size() == opt.T_grid.size());
  CHECK(tab.matched_fit.status == "insufficient-data");
  CHECK(tab.unmatched_fit.status == "insufficient-data");
  for (const auto& r : tab.rows) CHECK(std::abs(r.mc) <= 1e-12);

  std::ostringstream os;
  write_comparison_csv(tab, os);
  const std::string text = os.str();
  CHECK(text.rfind("T,", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + static_cast<long>(opt.T_grid.size()));
}

TEST_CASE("comparison on a small black-scholes run") {
  CompareOptions opt;
  opt.n_base = 20000;
  SimConfig cfg;
  cfg.steps = 100;
  cfg.threads = 1;
  const auto tab = compare_experiment(LocalVolSurface::constant(0.3), MarketParams{}, PayoffSpec::call(100), opt, cfg);
  CHECK(tab.geometric_enabled);
  // The unmatched European error is of order sqrt(T) and dwarfs the others.
  for (const auto& r : tab.rows) {
    CHECK(r.asian_vol == doctest::Approx(0.3 / std::sqrt(3.0)).epsilon(1e-12));
    CHECK(std::abs(r.err_unmatched) > 5 * std::abs(r.err_matched));
  }
  CHECK(tab.unmatched_fit.order == doctest::Approx(0.5).epsilon(0.1));
}
