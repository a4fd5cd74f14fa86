#pragma once

#include <functional>
#include <vector>

namespace asianlv {

struct QuadInfo {
  int nodes = 0;
  /// Difference between the last two refinement levels.
  double error_estimate = 0.0;
  /// Bound on the mass ignored outside the truncated z-range.
  double truncation_error = 0.0;
  bool converged = false;
};

struct GaussianQuadOptions {
  double tolerance = 1e-12;
  double z_max = 8.0;
  int initial_nodes = 128;
  int max_nodes = 1 << 15;
  /// Geometrically graded panels (ratio 0.15) toward each interior breakpoint;
  /// needed when the integrand has an unbounded derivative there.
  int grade_layers = 0;
};

/// E[f(Z)] for standard normal Z. The truncated range [-z_max, z_max] is split
/// at the given z-breakpoints and each piece integrated with composite
/// Gauss-Legendre against the normal density; the panel count doubles until
/// two successive levels agree to the tolerance.
double gaussian_expectation(const std::function<double(double)>& f, const std::vector<double>& z_breaks,
                            const GaussianQuadOptions& opt = {}, QuadInfo* info = nullptr);

struct HermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Hermite rule for the standard normal weight (weights sum to 1).
HermiteRule gauss_hermite_rule(int n);

double gauss_hermite_expectation(const std::function<double(double)>& f, int n);

/// Adaptive Gauss-Kronrod integral on [a, b]; throws NumericError when the
/// estimated error exceeds tol * max(1, |result|).
double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-13,
                 QuadInfo* info = nullptr);

}  // namespace asianlv
