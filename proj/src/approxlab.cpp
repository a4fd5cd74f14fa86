#include "asianlv/approxlab.hpp"

#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "path_kernel.hpp"

namespace asianlv {

std::string to_string(ProcessPair pair) {
  switch (pair) {
    case ProcessPair::S_X: return "S-X";
    case ProcessPair::X_Xtilde: return "X-Xtilde";
    case ProcessPair::Xtilde_Xhat: return "Xtilde-Xhat";
    case ProcessPair::Y_Ytilde: return "Y-Ytilde";
    case ProcessPair::Ytilde_Yhat: return "Ytilde-Yhat";
  }
  return "?";
}

ProcessPair parse_pair(const std::string& name) {
  for (auto p : {ProcessPair::S_X, ProcessPair::X_Xtilde, ProcessPair::Xtilde_Xhat, ProcessPair::Y_Ytilde,
                 ProcessPair::Ytilde_Yhat})
    if (to_string(p) == name) return p;
  throw std::invalid_argument(
      fmt::format("unknown pair '{}' (S-X|X-Xtilde|Xtilde-Xhat|Y-Ytilde|Ytilde-Yhat)", name));
}

std::vector<double> log_spaced(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw std::invalid_argument("log_spaced needs 0 < lo < hi and n >= 2");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * static_cast<double>(i) / (n - 1.0));
  out.front() = lo;
  out.back() = hi;
  return out;
}

namespace {

// |A_N - B_N| at the horizon of one simulated path; NaN if the path exploded.
double terminal_gap(const detail::PathKernel& k, ProcessPair pair, const double* dW, std::vector<double>& a,
                    std::vector<double>& b, std::vector<double>& c) {
  const std::size_t N = k.steps();
  const double s0 = k.params().spot;
  switch (pair) {
    case ProcessPair::S_X:
      if (!k.evolve(s0, k.drift(), dW, a.data(), nullptr, nullptr)) return NAN;
      if (!k.evolve(s0, 0.0, dW, b.data(), nullptr, nullptr)) return NAN;
      return a[N] - b[N];
    case ProcessPair::X_Xtilde:
      if (!k.evolve(s0, 0.0, dW, a.data(), nullptr, nullptr)) return NAN;
      k.tilde(dW, b.data(), nullptr);
      return a[N] - b[N];
    case ProcessPair::Xtilde_Xhat:
      k.tilde(dW, a.data(), nullptr);
      k.hat(dW, b.data(), nullptr);
      return a[N] - b[N];
    case ProcessPair::Y_Ytilde:
      if (!k.evolve(s0, 0.0, dW, c.data(), a.data(), nullptr)) return NAN;
      k.tilde(dW, nullptr, b.data());
      return a[N] - b[N];
    case ProcessPair::Ytilde_Yhat:
      k.tilde(dW, nullptr, a.data());
      k.hat(dW, nullptr, b.data());
      return a[N] - b[N];
  }
  return NAN;
}

}  // namespace

DistanceCurve lp_distance_curve(const LocalVolSurface& surface, const MarketParams& params, ProcessPair pair,
                                double p, const std::vector<double>& t_grid, const SimConfig& cfg) {
  if (!(p > 0.0)) throw std::invalid_argument("p must be positive");
  if (t_grid.empty()) throw std::invalid_argument("t grid must be nonempty");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > 0.0 && t_grid[i] <= 1.0)) throw std::invalid_argument("t grid values must lie in (0, 1]");
    if (i > 0 && !(t_grid[i] > t_grid[i - 1])) throw std::invalid_argument("t grid must be strictly increasing");
  }
  DistanceCurve curve;
  curve.pair = pair;
  curve.p = p;
  curve.t = t_grid;
  curve.n_paths = cfg.n_paths;
  curve.steps = cfg.steps;
  curve.seed = cfg.seed;
  for (double t : t_grid) {
    detail::PathKernel k(surface, params, t, cfg);
    std::vector<double> vals(cfg.n_paths);
    detail::parallel_paths(cfg.n_paths, cfg.threads, [&](std::size_t begin, std::size_t end) {
      std::vector<double> dW(k.steps()), scratch(cfg.driver()), a(k.steps() + 1), b(k.steps() + 1),
          c(k.steps() + 1);
      for (std::size_t i = begin; i < end; ++i) {
        k.increments(i, dW.data(), scratch.data());
        vals[i] = std::pow(std::abs(terminal_gap(k, pair, dW.data(), a, b, c)), p);
      }
    });
    const auto st = detail::summarize(vals, "lp_distance_curve");
    curve.moment.push_back(st.mean);
    curve.std_error.push_back(st.std_error);
  }
  return curve;
}

ScalingFit scaling_exponent(const DistanceCurve& curve) {
  ScalingFit fit;
  const std::size_t n = curve.t.size();
  if (n < 2) {
    fit.status = "insufficient-data";
    return fit;
  }
  for (double m : curve.moment)
    if (!(m > 0.0)) {
      fit.status = "degenerate-curve";
      return fit;
    }
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(curve.t[i]), y = std::log(curve.moment[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double nn = static_cast<double>(n);
  const double vx = sxx - sx * sx / nn, vy = syy - sy * sy / nn, cxy = sxy - sx * sy / nn;
  fit.slope = cxy / vx;
  fit.intercept = (sy - fit.slope * sx) / nn;
  fit.r_squared = vy > 0.0 ? cxy * cxy / (vx * vy) : 1.0;
  fit.fitted = true;
  fit.status = "ok";
  return fit;
}

StepDoubling step_doubling_study(const LocalVolSurface& surface, const MarketParams& params, ProcessPair pair,
                                 double p, const std::vector<double>& t_grid, const SimConfig& cfg,
                                 double tolerance) {
  SimConfig coarse = cfg;
  coarse.driver_steps = 2 * cfg.steps;
  SimConfig fine = cfg;
  fine.steps = 2 * cfg.steps;
  fine.driver_steps = 2 * cfg.steps;
  StepDoubling out;
  out.coarse = lp_distance_curve(surface, params, pair, p, t_grid, coarse);
  out.fine = lp_distance_curve(surface, params, pair, p, t_grid, fine);
  out.coarse_fit = scaling_exponent(out.coarse);
  out.fine_fit = scaling_exponent(out.fine);
  out.stable = out.coarse_fit.fitted && out.fine_fit.fitted &&
               std::abs(out.coarse_fit.slope - out.fine_fit.slope) <= tolerance;
  return out;
}

void write_curve_csv(const DistanceCurve& curve, std::ostream& out) {
  out << "t,moment,std_error\n";
  for (std::size_t i = 0; i < curve.t.size(); ++i)
    out << fmt::format("{:.17g},{:.17g},{:.17g}\n", curve.t[i], curve.moment[i], curve.std_error[i]);
}

}  // namespace asianlv
