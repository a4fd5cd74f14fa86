#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace asianlv {

/// Thrown when a surface or payoff is evaluated outside its domain.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Thrown when a computation produces a non-finite or unconverged result.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct MarketParams {
  double spot = 100.0;
  double rate = 0.0;
  double dividend = 0.0;

  void validate() const;
};

/// sigma(t,x) together with nu = d/dx(sigma x) and rho = d2/dx2(sigma x).
struct VolPoint {
  double sigma;
  double nu;
  double rho;
};

namespace surface {

struct Constant {
  double sigma = 0.2;
};

/// sigma(t) = level * (shift + slope * t)^exponent, independent of x.
struct TimeScaled {
  double level = 0.2;
  double shift = 1.0;
  double slope = 1.0;
  double exponent = 1.0;
};

/// sigma(x) = clamp(level * (x / reference)^beta, floor, cap).
/// floor = 0 and cap = +inf give the uncapped power law.
struct CappedPower {
  double level = 0.2;
  double reference = 100.0;
  double beta = -0.3;
  double floor = 0.05;
  double cap = 1.0;
};

/// Bilinear interpolation on a (t, x) grid; sigma[i * x_nodes.size() + j]
/// is the value at (t_nodes[i], x_nodes[j]).
struct Tabulated {
  std::vector<double> t_nodes;
  std::vector<double> x_nodes;
  std::vector<double> sigma;
};

}  // namespace surface

enum class SurfaceFamily { constant, time_scaled, capped_power, tabulated };

class LocalVolSurface {
public:
  using Params = std::variant<surface::Constant, surface::TimeScaled, surface::CappedPower,
                              surface::Tabulated>;

  explicit LocalVolSurface(Params params);

  static LocalVolSurface constant(double sigma) { return LocalVolSurface(surface::Constant{sigma}); }

  SurfaceFamily family() const;
  const Params& params() const { return params_; }

  /// Level-only evaluation; the hot path for simulation.
  double sigma(double t, double x) const;

  /// sigma with its x-derivatives of sigma(t,x) x.
  VolPoint at(double t, double x) const;

  /// True when sigma does not depend on x.
  bool level_independent() const;
  /// True when sigma does not depend on t.
  bool time_homogeneous() const;

  /// x-range on which the surface is defined (closed).
  double x_min() const;
  double x_max() const;

private:
  double tab_sigma(double t, double x) const;

  Params params_;
  double fd_step_ = 0.0;
};

/// Loads a tabulated surface from CSV with header `t,x,sigma`. Rows may come
/// in any order but must cover the full tensor grid.
LocalVolSurface load_surface_csv(const std::string& path);
LocalVolSurface parse_surface_csv(const std::string& text);

VolPoint vol_at(const LocalVolSurface& surface, double t, double x);

struct ProbeGrid {
  double t_lo = 0.0;
  double t_hi = 1.0;
  std::size_t nt = 11;
  /// x_lo <= 0 means the lower end is open at 0: nodes are x_hi * j / nx.
  double x_lo = 50.0;
  double x_hi = 200.0;
  std::size_t nx = 151;
};

struct AssumptionReport {
  double sigma_lo = 0.0;
  double sigma_hi = 0.0;
  /// Empirical Lipschitz constants in x of sigma, sigma*x, nu, rho.
  double lip_sigma = 0.0;
  double lip_sigma_x = 0.0;
  double lip_nu = 0.0;
  double lip_rho = 0.0;
  ProbeGrid probe;

  bool positive_lower_bound = false;
  bool bounded = false;
  bool finite_estimates = false;
  bool pass = false;
  std::vector<std::string> failures;
};

AssumptionReport check_assumptions(const LocalVolSurface& surface, const ProbeGrid& probe);

enum class PayoffFamily { call, put, power_call, capped_power, linear, constant, table };

struct PayoffSpec {
  PayoffFamily family = PayoffFamily::call;
  double strike = 100.0;
  /// power_call: exponent gamma in (0,1]; capped_power: 1 + epsilon.
  double exponent = 1.0;
  /// capped_power: width delta of the curved region.
  double width = 0.0;
  /// linear: slope * x + intercept; constant: intercept.
  double slope = 1.0;
  double intercept = 0.0;
  /// table: piecewise-linear interpolation through (x, y) nodes.
  std::vector<double> table_x;
  std::vector<double> table_y;

  double holder_gamma = 1.0;
  double holder_beta = 1.0;

  static PayoffSpec call(double strike);
  static PayoffSpec put(double strike);
  static PayoffSpec power_call(double strike, double gamma);
  static PayoffSpec capped_power(double strike, double exponent, double width);
  static PayoffSpec linear(double slope, double intercept = 0.0);
  static PayoffSpec constant(double value);
  static PayoffSpec table(std::vector<double> xs, std::vector<double> ys);

  void validate() const;

  /// Points where the payoff is not smooth; used to split quadrature panels.
  std::vector<double> breakpoints() const;
};

double payoff_eval(const PayoffSpec& spec, double x);

std::string to_string(PayoffFamily family);
std::string to_string(SurfaceFamily family);

}  // namespace asianlv
