#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "asianlv/model.hpp"

namespace asianlv {

/// inf over g with g(0) = log y and int_0^1 e^g = x of 1/2 int_0^1 (g'/sigma(e^g))^2.
struct RateFunctionProblem {
  /// (sigma, nu, rho) as functions of the level only.
  std::function<VolPoint(double)> vol;
  double x = 100.0;
  double y = 100.0;
  std::size_t grid_n = 200;
  double tolerance = 1e-8;
  std::size_t max_outer = 40;
  std::size_t max_inner = 200;
  double penalty0 = 10.0;
  double penalty_factor = 10.0;

  void validate() const;
};

/// Problem for a time-homogeneous surface (sigma evaluated at t = 0).
RateFunctionProblem make_rate_problem(const LocalVolSurface& surface, double x, double y, std::size_t grid_n = 200);

struct RateFunctionResult {
  double value = 0.0;
  std::vector<double> t;
  std::vector<double> g;
  /// int e^g / x - 1 on the grid.
  double constraint_residual = 0.0;
  /// Max norm of the discrete Euler-Lagrange residual grad(J) - lambda grad(c), per unit h.
  double el_residual = 0.0;
  double multiplier = 0.0;
  bool converged = false;
  std::size_t outer_iterations = 0;
  std::size_t newton_iterations = 0;
};

RateFunctionResult rate_function(const RateFunctionProblem& problem);

struct ShootingResult {
  double value = 0.0;
  bool found = false;
  double initial_slope = 0.0;
  double multiplier = 0.0;
  std::string status;
};

/// Independent oracle: shoots on (g'(0), lambda) for the Euler-Lagrange
/// equation g'' = (lambda e^g - w'(g) g'^2 / 2) / w(g), w = sigma(e^g)^-2,
/// with g'(1) = 0 and int e^g = x.
ShootingResult rate_function_shooting(const RateFunctionProblem& problem);

struct DecayReport {
  /// Extrapolated limit of T log(value) as T -> 0.
  double limit = 0.0;
  double distance = 0.0;
  double relative_distance = 0.0;
  std::vector<double> coefficients;
};

/// Fits T log V = c0 + c1 T + c2 T log T (c2 dropped with fewer than four
/// points) and compares c0 with -I_ref.
DecayReport decay_slope(const std::vector<double>& T, const std::vector<double>& values, double I_ref);

void write_rate_path_csv(const RateFunctionResult& result, std::ostream& out);

}  // namespace asianlv
