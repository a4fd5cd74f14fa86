#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "asianlv/asymptotics.hpp"
#include "asianlv/model.hpp"
#include "asianlv/montecarlo.hpp"

namespace asianlv {

struct ErrorPoint {
  double T = 0.0;
  double value = 0.0;
  double std_error = 0.0;
};

struct ConvergenceReport {
  std::vector<ErrorPoint> points;
  /// Points excluded from the fit because |value| <= 3 std_error (or zero).
  std::vector<ErrorPoint> dropped;
  double order = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double hypothesized = 0.0;
  double slack = 0.0;
  bool weighted = false;
  bool verdict = false;
  /// "ok" or "insufficient-data".
  std::string status;
};

/// Weighted least squares of log|e| against log T, weights (value / std_error)^2.
/// Falls back to an unweighted fit when any retained point has std_error = 0.
ConvergenceReport convergence_report(const std::vector<ErrorPoint>& errors, double hypothesized_order,
                                     double slack = 0.2);

std::vector<double> default_T_grid();

struct CompareOptions {
  std::vector<double> T_grid = default_T_grid();
  /// Paths at T = 0.2; scaled as 0.2 / T across the grid.
  std::size_t n_base = 200000;
  QuoteKind quantity = QuoteKind::price;
  double bump = 1e-3;
  double slack = 0.2;
};

struct CompareRow {
  double T = 0.0;
  std::size_t n_paths = 0;
  double mc = 0.0;
  double asym = 0.0;
  double err_asym = 0.0;
  double err_matched = 0.0;
  double err_unmatched = 0.0;
  /// NaN unless the surface is a constant volatility.
  double err_geo = 0.0;
  double std_error = 0.0;
  /// Standard error of err_unmatched when it needs its own simulation.
  double std_error_unmatched = 0.0;
  double asian_vol = 0.0;
  double european_vol = 0.0;
};

struct ComparisonTable {
  QuoteKind quantity = QuoteKind::price;
  std::vector<CompareRow> rows;
  bool geometric_enabled = false;
  ConvergenceReport asym_fit, matched_fit, unmatched_fit, geo_fit;
};

/// Monte Carlo Asian quotes against the asymptotic Asian quote, the European
/// quote at the Asian volatility (matched), the European quote at the European
/// volatility (unmatched) and, for constant volatility, the geometric Asian.
ComparisonTable compare_experiment(const LocalVolSurface& surface, const MarketParams& params,
                                   const PayoffSpec& payoff, const CompareOptions& opt, const SimConfig& cfg);

/// CSV `T,mc,asym,err_matched,err_unmatched,err_geo,stderr`.
void write_comparison_csv(const ComparisonTable& table, std::ostream& out);

std::size_t scaled_paths(std::size_t n_base, double T);

}  // namespace asianlv
