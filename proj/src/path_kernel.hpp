#pragma once

// Per-path simulation pieces shared by the Monte Carlo estimators and the
// approximation lab. Not part of the installed interface.

#include <cmath>
#include <exception>
#include <functional>
#include <vector>

#include "asianlv/montecarlo.hpp"
#include "asianlv/rng.hpp"

namespace asianlv::detail {

class PathKernel {
public:
  PathKernel(const LocalVolSurface& surface, const MarketParams& params, double T, const SimConfig& cfg);

  std::size_t steps() const { return n_; }
  double dt() const { return dt_; }
  double maturity() const { return T_; }
  double time(std::size_t i) const { return static_cast<double>(i) * dt_; }
  const std::vector<double>& frozen_sigma() const { return sig0_; }

  /// Coarse increments dW[0..steps) for one path.
  void increments(std::uint64_t path, double* dW, double* scratch) const;

  /// S (drift r - q) or X (drift 0) from x0, optionally with its first
  /// variation v and the (sigma, nu, rho) seen at each left point.
  /// Returns false when the state leaves (0, inf) or turns non-finite.
  bool evolve(double x0, double drift, const double* dW, double* x, double* v, VolPoint* vp) const;

  /// X-tilde / Y-tilde (lognormal with coefficients frozen at S0).
  void tilde(const double* dW, double* xt, double* yt) const;
  /// X-hat / Y-hat (Gaussian with coefficients frozen at S0).
  void hat(const double* dW, double* xh, double* yh) const;

  /// (1/T) trapezoid of x[0..steps].
  double average(const double* x) const;
  double log_average(const double* x) const;

  double drift() const { return params_.rate - params_.dividend; }
  const MarketParams& params() const { return params_; }
  const LocalVolSurface& surface() const { return surface_; }

private:
  const LocalVolSurface& surface_;
  MarketParams params_;
  double T_;
  std::size_t n_;
  std::size_t fine_;
  double dt_;
  Scheme scheme_;
  NormalStream normals_;
  std::vector<double> sig0_, nu0_;
};

/// Runs body(begin, end) over contiguous path ranges on `threads` workers.
/// The first exception thrown by any worker is rethrown here.
void parallel_paths(std::size_t n_paths, std::size_t threads,
                    const std::function<void(std::size_t, std::size_t)>& body);

struct SampleStats {
  double mean = 0.0;
  double std_error = 0.0;
  double sd = 0.0;
  std::size_t used = 0;
  std::size_t excluded = 0;
};

/// Mean and standard error over finite entries; NaN entries count as
/// exclusions and more than 0.1% of them is an error.
SampleStats summarize(const std::vector<double>& values, const char* what);

}  // namespace asianlv::detail
