#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "asianlv/montecarlo.hpp"

namespace asianlv {

enum class ProcessPair { S_X, X_Xtilde, Xtilde_Xhat, Y_Ytilde, Ytilde_Yhat };

std::string to_string(ProcessPair pair);
ProcessPair parse_pair(const std::string& name);

struct DistanceCurve {
  ProcessPair pair = ProcessPair::X_Xtilde;
  double p = 2.0;
  std::vector<double> t;
  std::vector<double> moment;
  std::vector<double> std_error;
  std::size_t n_paths = 0;
  std::size_t steps = 0;
  std::uint64_t seed = 0;
};

/// E|A_t - B_t|^p for each t in the grid. Every t is its own simulation with
/// horizon t and cfg.steps steps, all on the same seed.
DistanceCurve lp_distance_curve(const LocalVolSurface& surface, const MarketParams& params, ProcessPair pair,
                                double p, const std::vector<double>& t_grid, const SimConfig& cfg);

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  /// False when some moment is not positive; no fit is attempted then.
  bool fitted = false;
  std::string status;
};

/// Least squares of log(moment) on log(t).
ScalingFit scaling_exponent(const DistanceCurve& curve);

struct StepDoubling {
  DistanceCurve coarse, fine;
  ScalingFit coarse_fit, fine_fit;
  bool stable = false;
};

/// Curves at cfg.steps and 2 * cfg.steps on a shared driver; stable when the
/// two slopes agree within `tolerance`.
StepDoubling step_doubling_study(const LocalVolSurface& surface, const MarketParams& params, ProcessPair pair,
                                 double p, const std::vector<double>& t_grid, const SimConfig& cfg,
                                 double tolerance = 0.1);

void write_curve_csv(const DistanceCurve& curve, std::ostream& out);

std::vector<double> log_spaced(double lo, double hi, std::size_t n);

}  // namespace asianlv
