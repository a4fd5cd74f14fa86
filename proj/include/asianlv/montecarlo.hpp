#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "asianlv/asymptotics.hpp"
#include "asianlv/model.hpp"

namespace asianlv {

enum class Scheme { euler, log_euler };

std::string to_string(Scheme scheme);
Scheme parse_scheme(const std::string& name);

/// Processes to keep in a PathBundle.
struct IncludeFlags {
  bool S = true, X = true, Y = true, Z = true;
  bool X_tilde = true, X_hat = true, Y_tilde = true, Y_hat = true;
};

struct SimConfig {
  std::size_t steps = 200;
  std::size_t n_paths = 10000;
  std::uint64_t seed = 20240601;
  Scheme scheme = Scheme::log_euler;
  IncludeFlags include;
  /// Resolution of the Brownian driver; coarse increments are sums of fine
  /// ones, so runs with steps N and 2N share one driver. 0 means `steps`.
  std::size_t driver_steps = 0;
  /// Worker threads; 0 picks ASIANLV_THREADS or the hardware count.
  std::size_t threads = 0;
  /// Cap on steps * n_paths for the Malliavin estimators.
  double malliavin_budget = 2e10;

  void validate() const;
  std::size_t driver() const { return driver_steps == 0 ? steps : driver_steps; }
};

/// Worker count actually used for a config.
std::size_t resolve_threads(std::size_t requested);

/// Simulated grids, row-major: value of path p at step i is v[p * (steps + 1) + i].
struct PathBundle {
  double maturity = 0.0;
  std::size_t steps = 0;
  std::size_t n_paths = 0;
  IncludeFlags include;
  std::vector<double> time;
  std::vector<double> S, X, Y, Z, X_tilde, X_hat, Y_tilde, Y_hat;
  /// Brownian increments, dW[p * steps + i].
  std::vector<double> dW;
  /// Trapezoidal (1/T) int S dt, (1/T) int X dt, (1/T) int Y dt, (1/T) int log S dt.
  std::vector<double> avg_S, avg_X, avg_Y, avg_log_S;
  std::vector<std::uint8_t> exploded;
  std::size_t n_exploded = 0;

  double at(const std::vector<double>& process, std::size_t path, std::size_t step) const {
    return process[path * (steps + 1) + step];
  }
};

PathBundle simulate(const LocalVolSurface& surface, const MarketParams& params, double T, const SimConfig& cfg);

/// CSV `path,step,t,<columns>` for the requested subset of S, X, Y, Z.
void write_paths_csv(const PathBundle& bundle, std::ostream& out);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
  std::string estimator;
  /// Paths dropped for non-finite states.
  std::size_t n_excluded = 0;
  /// Paths whose Malliavin weight was truncated to zero.
  std::size_t n_flagged = 0;
  /// Moments of the Malliavin weight (NaN for other estimators).
  double weight_mean = 0.0;
  double weight_sd = 0.0;
};

McEstimate mc_price(const LocalVolSurface& surface, const MarketParams& params, const PayoffSpec& payoff,
                    Style style, double T, const SimConfig& cfg);

/// Central difference in S0 with both legs on the same Brownian increments.
McEstimate mc_delta_fd(const LocalVolSurface& surface, const MarketParams& params, const PayoffSpec& payoff,
                       Style style, double T, const SimConfig& cfg, double bump = 1e-3);

/// Malliavin-weight delta; asian or european style.
McEstimate mc_delta_malliavin(const LocalVolSurface& surface, const MarketParams& params,
                              const PayoffSpec& payoff, Style style, double T, const SimConfig& cfg);

/// Geometric-average price under Black-Scholes with volatility sigma.
McEstimate geometric_mc_crosscheck(double sigma, const MarketParams& params, const PayoffSpec& payoff, double T,
                                   const SimConfig& cfg);

/// Price estimators coupled to a lognormal proxy driven by the same
/// increments: the geometric trapezoidal average (asian) or terminal value
/// (european) of the process with drift r - q and volatility frozen at
/// sigma(t, S0). The proxy's law on the grid is known exactly, so the mean
/// stays an unbiased price estimate while differences against asymptotic
/// formulas are no longer swamped by path noise.
McEstimate mc_price_coupled(const LocalVolSurface& surface, const MarketParams& params, const PayoffSpec& payoff,
                            Style style, double T, const SimConfig& cfg);
McEstimate mc_delta_fd_coupled(const LocalVolSurface& surface, const MarketParams& params,
                               const PayoffSpec& payoff, Style style, double T, const SimConfig& cfg,
                               double bump = 1e-3);

/// Per-path difference Phi(asian average) - Phi(S_T), discounted.
McEstimate mc_asian_minus_european(const LocalVolSurface& surface, const MarketParams& params,
                                   const PayoffSpec& payoff, double T, const SimConfig& cfg);

struct ProxyLaw {
  double log_mean = 0.0;
  double log_var = 0.0;
};

/// Exact law of the log of the coupled proxy on the simulation grid.
ProxyLaw proxy_law(const LocalVolSurface& surface, const MarketParams& params, double T, std::size_t steps,
                   Style style);

/// Reference O(N^2) evaluation of the asian Malliavin weight on one path,
/// kept for testing the factorised implementation.
double malliavin_asian_weight_naive(const std::vector<double>& S, const std::vector<double>& Z,
                                    const std::vector<VolPoint>& vp, const std::vector<double>& dW, double dt);
double malliavin_asian_weight(const std::vector<double>& S, const std::vector<double>& Z,
                              const std::vector<VolPoint>& vp, const std::vector<double>& dW, double dt);

/// Sum with pairwise splitting, independent of how the data was produced.
double pairwise_sum(const double* x, std::size_t n);

}  // namespace asianlv
