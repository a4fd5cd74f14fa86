#include "asianlv/ldp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>

#include <boost/numeric/odeint.hpp>
#include <fmt/format.h>

namespace asianlv {

void RateFunctionProblem::validate() const {
  if (!vol) throw std::invalid_argument("rate function problem needs a volatility function");
  if (!(x > 0.0) || !(y > 0.0)) throw std::invalid_argument("rate function needs x > 0 and y > 0");
  if (grid_n < 2) throw std::invalid_argument("grid_n must be >= 2");
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (!(penalty0 > 0.0) || !(penalty_factor >= 1.0)) throw std::invalid_argument("invalid penalty schedule");
}

RateFunctionProblem make_rate_problem(const LocalVolSurface& surface, double x, double y, std::size_t grid_n) {
  if (!surface.time_homogeneous())
    throw std::invalid_argument("the rate function needs a time-homogeneous surface sigma(x)");
  RateFunctionProblem p;
  p.vol = [surface](double level) { return vol_at(surface, 0.0, level); };
  p.x = x;
  p.y = y;
  p.grid_n = grid_n;
  return p;
}

namespace {

// w(g) = sigma(e^g)^-2 and its first two g-derivatives.
struct Weight {
  double w, w1, w2;
};

Weight weight_at(const RateFunctionProblem& pb, double g) {
  const double x = std::exp(g);
  const VolPoint v = pb.vol(x);
  const double s = v.sigma;
  if (!(s > 0.0) || !std::isfinite(s)) throw DomainError(fmt::format("sigma({}) = {} must be positive", x, s));
  const double s1 = v.nu - v.sigma;
  const double s2 = x * v.rho - s1;
  const double s3 = s * s * s;
  return {1.0 / (s * s), -2.0 * s1 / s3, -2.0 * s2 / s3 + 6.0 * s1 * s1 / (s3 * s)};
}

struct Discrete {
  const RateFunctionProblem& pb;
  std::size_t n;
  double h;

  double omega(std::size_t i) const { return (i == 0 || i == n) ? 0.5 : 1.0; }

  double constraint(const std::vector<double>& g) const {
    double s = 0.0;
    for (std::size_t i = 0; i <= n; ++i) s += omega(i) * std::exp(g[i]);
    return h * s / pb.x - 1.0;
  }

  double objective(const std::vector<double>& g) const {
    double J = 0.0;
    double wl = weight_at(pb, g[0]).w;
    for (std::size_t k = 0; k < n; ++k) {
      const double wr = weight_at(pb, g[k + 1]).w;
      const double d = g[k + 1] - g[k];
      J += d * d / (4.0 * h) * (wl + wr);
      wl = wr;
    }
    return J;
  }

  // Gradient and tridiagonal Hessian of J over all nodes 0..n.
  void derivatives(const std::vector<double>& g, std::vector<double>& grad, std::vector<double>& diag,
                   std::vector<double>& off) const {
    std::vector<Weight> W(n + 1);
    for (std::size_t i = 0; i <= n; ++i) W[i] = weight_at(pb, g[i]);
    grad.assign(n + 1, 0.0);
    diag.assign(n + 1, 0.0);
    off.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const double d = g[k + 1] - g[k];
      const double ws = W[k].w + W[k + 1].w;
      grad[k] += -d / (2.0 * h) * ws + d * d / (4.0 * h) * W[k].w1;
      grad[k + 1] += d / (2.0 * h) * ws + d * d / (4.0 * h) * W[k + 1].w1;
      diag[k] += ws / (2.0 * h) - d / h * W[k].w1 + d * d / (4.0 * h) * W[k].w2;
      diag[k + 1] += ws / (2.0 * h) + d / h * W[k + 1].w1 + d * d / (4.0 * h) * W[k + 1].w2;
      off[k] += -ws / (2.0 * h) - d / (2.0 * h) * W[k + 1].w1 + d / (2.0 * h) * W[k].w1;
    }
  }
};

// Solves the symmetric tridiagonal system (diag, off) u = rhs in place.
// Returns false if a pivot is not positive.
bool thomas(std::vector<double> diag, const std::vector<double>& off, std::vector<double>& rhs) {
  const std::size_t m = diag.size();
  for (std::size_t i = 1; i < m; ++i) {
    if (!(diag[i - 1] > 0.0)) return false;
    const double f = off[i - 1] / diag[i - 1];
    diag[i] -= f * off[i - 1];
    rhs[i] -= f * rhs[i - 1];
  }
  if (!(diag[m - 1] > 0.0)) return false;
  rhs[m - 1] /= diag[m - 1];
  for (std::size_t i = m - 1; i-- > 0;) rhs[i] = (rhs[i] - off[i] * rhs[i + 1]) / diag[i];
  return true;
}

// Slope b such that the straight line log y + b t meets the discrete constraint.
double initial_slope(const Discrete& D) {
  auto f = [&](double b, double& df) {
    double s = 0.0, ds = 0.0;
    for (std::size_t i = 0; i <= D.n; ++i) {
      const double t = static_cast<double>(i) * D.h;
      const double e = D.omega(i) * D.pb.y * std::exp(b * t);
      s += e;
      ds += e * t;
    }
    df = D.h * ds;
    return D.h * s - D.pb.x;
  };
  double b = 2.0 * std::log(D.pb.x / D.pb.y);
  for (int it = 0; it < 100; ++it) {
    double df;
    const double v = f(b, df);
    const double step = v / df;
    b -= std::clamp(step, -2.0, 2.0);
    if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(b))) break;
  }
  return b;
}

}  // namespace

RateFunctionResult rate_function(const RateFunctionProblem& pb) {
  pb.validate();
  const std::size_t n = pb.grid_n;
  Discrete D{pb, n, 1.0 / static_cast<double>(n)};
  RateFunctionResult res;
  res.t.resize(n + 1);
  res.g.resize(n + 1);
  const double b = initial_slope(D);
  for (std::size_t i = 0; i <= n; ++i) {
    res.t[i] = static_cast<double>(i) * D.h;
    res.g[i] = std::log(pb.y) + b * res.t[i];
  }
  std::vector<double>& g = res.g;

  double lambda = 0.0;
  double mu = pb.penalty0;
  std::vector<double> grad, diag, off, a(n + 1), rhs, z, trial(n + 1);
  auto lagr = [&](const std::vector<double>& v) {
    const double c = D.constraint(v);
    return D.objective(v) - lambda * c + 0.5 * mu * c * c;
  };
  auto constraint_grad = [&](const std::vector<double>& v) {
    for (std::size_t i = 0; i <= n; ++i) a[i] = D.h * D.omega(i) * std::exp(v[i]) / pb.x;
  };

  bool inner_ok = true;
  for (std::size_t outer = 0; outer < pb.max_outer; ++outer) {
    res.outer_iterations = outer + 1;
    inner_ok = false;
    for (std::size_t it = 0; it < pb.max_inner; ++it) {
      ++res.newton_iterations;
      const double c = D.constraint(g);
      D.derivatives(g, grad, diag, off);
      constraint_grad(g);
      const double coef = mu * c - lambda;
      // Unknowns are nodes 1..n; node 0 is pinned at log y.
      std::vector<double> r(n), dg(n), of(n - 1), aa(n);
      double gmax = 0.0;
      for (std::size_t i = 1; i <= n; ++i) {
        r[i - 1] = grad[i] + coef * a[i];
        dg[i - 1] = diag[i] + coef * a[i];
        aa[i - 1] = a[i];
        gmax = std::max(gmax, std::abs(r[i - 1]));
      }
      for (std::size_t i = 1; i < n; ++i) of[i - 1] = off[i];
      if (gmax <= 1e-13 * D.h) {
        inner_ok = true;
        break;
      }
      // Newton step on tridiagonal + rank one, with Levenberg damping if needed.
      std::vector<double> step;
      double damping = 0.0;
      for (int attempt = 0; attempt < 60; ++attempt) {
        std::vector<double> dd = dg;
        for (double& v : dd) v += damping;
        rhs = r;
        for (double& v : rhs) v = -v;
        z = aa;
        if (thomas(dd, of, rhs) && thomas(dd, of, z)) {
          double ay = 0.0, az = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            ay += aa[i] * rhs[i];
            az += aa[i] * z[i];
          }
          const double f = mu * ay / (1.0 + mu * az);
          step = rhs;
          for (std::size_t i = 0; i < n; ++i) step[i] -= f * z[i];
          break;
        }
        damping = damping == 0.0 ? 1e-8 * std::max(1.0, *std::max_element(dg.begin(), dg.end())) : 4.0 * damping;
      }
      if (step.empty()) break;
      double slope = 0.0, smax = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        slope += step[i] * r[i];
        smax = std::max(smax, std::abs(step[i]));
      }
      if (smax < 1e-15) {
        inner_ok = true;
        break;
      }
      const double f0 = lagr(g);
      double alpha = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 50; ++ls) {
        trial = g;
        for (std::size_t i = 1; i <= n; ++i) trial[i] += alpha * step[i - 1];
        double f1;
        try {
          f1 = lagr(trial);
        } catch (const DomainError&) {
          f1 = std::numeric_limits<double>::infinity();
        }
        if (std::isfinite(f1) && f1 <= f0 + 1e-4 * alpha * slope + 1e-15 * std::abs(f0)) {
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        // Already at the floating-point floor of the merit function.
        inner_ok = gmax <= 1e-9 * D.h;
        break;
      }
      g.swap(trial);
    }
    const double c = D.constraint(g);
    if (std::abs(c) < pb.tolerance && inner_ok) {
      res.converged = true;
      lambda -= mu * c;
      break;
    }
    lambda -= mu * c;
    mu = std::min(mu * pb.penalty_factor, 1e12);
  }

  res.value = D.objective(g);
  res.constraint_residual = D.constraint(g);
  res.multiplier = lambda;
  D.derivatives(g, grad, diag, off);
  constraint_grad(g);
  double el = 0.0;
  for (std::size_t i = 1; i <= n; ++i) el = std::max(el, std::abs(grad[i] - lambda * a[i]) / (D.h * D.omega(i)));
  res.el_residual = el;
  return res;
}

namespace {

using State = std::array<double, 4>;  // g, g', int e^g, 1/2 int w g'^2

// Integrates the Euler-Lagrange system over [0, 1]; NaN state on failure.
State shoot(const RateFunctionProblem& pb, double slope, double lambda) {
  namespace ode = boost::numeric::odeint;
  State s{std::log(pb.y), slope, 0.0, 0.0};
  auto rhs = [&pb, lambda](const State& u, State& du, double) {
    const Weight w = weight_at(pb, u[0]);
    const double e = std::exp(u[0]);
    du[0] = u[1];
    du[1] = (lambda * e - 0.5 * w.w1 * u[1] * u[1]) / w.w;
    du[2] = e;
    du[3] = 0.5 * w.w * u[1] * u[1];
  };
  try {
    ode::integrate_adaptive(ode::make_controlled<ode::runge_kutta_dopri5<State>>(1e-13, 1e-13), rhs, s, 0.0, 1.0,
                            1e-3);
  } catch (const std::exception&) {
    s.fill(std::numeric_limits<double>::quiet_NaN());
  }
  return s;
}

std::array<double, 2> residual(const RateFunctionProblem& pb, double slope, double lambda) {
  const State s = shoot(pb, slope, lambda);
  return {s[1], s[2] / pb.x - 1.0};
}

double norm(const std::array<double, 2>& r) {
  const double v = std::hypot(r[0], r[1]);
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

// Damped Newton on (slope, lambda) with a finite-difference Jacobian.
bool newton2(const RateFunctionProblem& pb, double& slope, double& lambda) {
  auto r = residual(pb, slope, lambda);
  for (int it = 0; it < 60; ++it) {
    if (norm(r) < 1e-12) return true;
    const double hs = 1e-7 * std::max(1.0, std::abs(slope));
    const double hl = 1e-7 * std::max(1e-3, std::abs(lambda));
    const auto rs = residual(pb, slope + hs, lambda);
    const auto rl = residual(pb, slope, lambda + hl);
    const double j00 = (rs[0] - r[0]) / hs, j10 = (rs[1] - r[1]) / hs;
    const double j01 = (rl[0] - r[0]) / hl, j11 = (rl[1] - r[1]) / hl;
    const double det = j00 * j11 - j01 * j10;
    if (!std::isfinite(det) || det == 0.0) return false;
    const double ds = -(j11 * r[0] - j01 * r[1]) / det;
    const double dl = -(-j10 * r[0] + j00 * r[1]) / det;
    double alpha = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls) {
      const auto rn = residual(pb, slope + alpha * ds, lambda + alpha * dl);
      if (norm(rn) < (1.0 - 1e-4 * alpha) * norm(r)) {
        slope += alpha * ds;
        lambda += alpha * dl;
        r = rn;
        moved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!moved) return norm(r) < 1e-10;
  }
  return norm(r) < 1e-10;
}

}  // namespace

ShootingResult rate_function_shooting(const RateFunctionProblem& problem) {
  problem.validate();
  ShootingResult out;
  if (problem.x == problem.y) {
    out.found = true;
    out.status = "trivial";
    return out;
  }
  // Continuation in the target from y to x, starting from the small-move
  // solution g = log y + p (t - t^2/2) with p = 3 log(x/y).
  const int stages = 8;
  RateFunctionProblem pb = problem;
  const double ratio = std::log(problem.x / problem.y);
  double slope = 0.0, lambda = 0.0;
  for (int k = 1; k <= stages; ++k) {
    pb.x = problem.y * std::exp(ratio * k / stages);
    if (k == 1) {
      slope = 3.0 * std::log(pb.x / pb.y);
      lambda = -slope * weight_at(pb, std::log(pb.y)).w / pb.y;
    }
    if (!newton2(pb, slope, lambda)) {
      out.status = fmt::format("no-solution (Newton failed at continuation stage {} of {})", k, stages);
      return out;
    }
  }
  const State s = shoot(problem, slope, lambda);
  out.value = s[3];
  out.found = std::isfinite(out.value);
  out.initial_slope = slope;
  out.multiplier = lambda;
  out.status = out.found ? "ok" : "no-solution";
  return out;
}

DecayReport decay_slope(const std::vector<double>& T, const std::vector<double>& values, double I_ref) {
  if (T.size() != values.size() || T.size() < 2) throw std::invalid_argument("decay_slope needs >= 2 (T, value) pairs");
  for (std::size_t i = 0; i < T.size(); ++i) {
    if (!(values[i] > 0.0)) throw DomainError(fmt::format("decay_slope: value {} at T={} is not positive", values[i], T[i]));
    if (!(T[i] > 0.0)) throw DomainError("decay_slope: T must be positive");
  }
  const std::size_t m = T.size() >= 4 ? 3 : 2;
  // Normal equations for the small basis {1, T, T log T}.
  std::vector<std::vector<double>> A(m, std::vector<double>(m + 1, 0.0));
  for (std::size_t i = 0; i < T.size(); ++i) {
    const double basis[3] = {1.0, T[i], T[i] * std::log(T[i])};
    const double y = T[i] * std::log(values[i]);
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < m; ++c) A[r][c] += basis[r] * basis[c];
      A[r][m] += basis[r] * y;
    }
  }
  for (std::size_t col = 0; col < m; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < m; ++r)
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    std::swap(A[col], A[piv]);
    if (A[col][col] == 0.0) throw NumericError("decay_slope: singular fit (repeated T values?)");
    for (std::size_t r = 0; r < m; ++r) {
      if (r == col) continue;
      const double f = A[r][col] / A[col][col];
      for (std::size_t c = col; c <= m; ++c) A[r][c] -= f * A[col][c];
    }
  }
  DecayReport rep;
  for (std::size_t r = 0; r < m; ++r) rep.coefficients.push_back(A[r][m] / A[r][r]);
  rep.limit = rep.coefficients[0];
  rep.distance = std::abs(rep.limit + I_ref);
  rep.relative_distance = I_ref != 0.0 ? rep.distance / std::abs(I_ref) : rep.distance;
  return rep;
}

void write_rate_path_csv(const RateFunctionResult& result, std::ostream& out) {
  out << "t,g\n";
  for (std::size_t i = 0; i < result.t.size(); ++i) out << fmt::format("{:.17g},{:.17g}\n", result.t[i], result.g[i]);
}

}  // namespace asianlv
