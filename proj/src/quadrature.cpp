#include "asianlv/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include "asianlv/model.hpp"

namespace asianlv {

namespace {

constexpr int kPanelPoints = 30;

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) * boost::math::constants::one_div_root_two_pi<double>();
}

double composite(const std::function<double(double)>& f, const std::vector<double>& edges, int panels) {
  using Rule = boost::math::quadrature::gauss<double, kPanelPoints>;
  auto g = [&f](double z) { return f(z) * normal_pdf(z); };
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const double h = (edges[k + 1] - edges[k]) / panels;
    for (int p = 0; p < panels; ++p) {
      const double a = edges[k] + p * h;
      total += Rule::integrate(g, a, a + h);
    }
  }
  return total;
}

}  // namespace

double gaussian_expectation(const std::function<double(double)>& f, const std::vector<double>& z_breaks,
                            const GaussianQuadOptions& opt, QuadInfo* info) {
  const double zm = opt.z_max;
  std::vector<double> edges{-zm, zm};
  for (double b : z_breaks)
    if (std::isfinite(b) && b > -zm && b < zm) edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  if (opt.grade_layers > 0) {
    std::vector<double> graded = edges;
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
      const double a = edges[k], b = edges[k + 1], len = b - a;
      double r = 1.0;
      for (int j = 0; j < opt.grade_layers; ++j) {
        r *= 0.15;
        if (k > 0) graded.push_back(a + len * r);
        if (k + 2 < edges.size()) graded.push_back(b - len * r);
      }
    }
    std::sort(graded.begin(), graded.end());
    edges = std::move(graded);
  }

  const int pieces = static_cast<int>(edges.size()) - 1;
  int panels = std::max(1, opt.initial_nodes / (kPanelPoints * pieces));
  double prev = composite(f, edges, panels);
  double diff = std::numeric_limits<double>::infinity();
  double cur = prev;
  bool converged = false;
  while (2 * panels * pieces * kPanelPoints <= opt.max_nodes) {
    panels *= 2;
    cur = composite(f, edges, panels);
    diff = std::abs(cur - prev);
    prev = cur;
    if (diff <= opt.tolerance * std::max(1.0, std::abs(cur))) {
      converged = true;
      break;
    }
  }
  // Tail mass beyond z_max, weighted by the payoff size at the cut.
  const double tail = 0.5 * std::erfc(zm / std::numbers::sqrt2);
  const double trunc = tail * (std::abs(f(-zm)) + std::abs(f(zm))) * (1.0 + 1.0 / (zm * zm));
  if (info) *info = QuadInfo{panels * pieces * kPanelPoints, diff, trunc, converged};
  if (!std::isfinite(cur)) throw NumericError("gaussian_expectation: non-finite integrand");
  if (!converged)
    throw NumericError(fmt::format("gaussian_expectation: no convergence, last difference {:.3g}", diff));
  return cur;
}

namespace {

// Orthonormal physicists' Hermite polynomials p_n(z), p_{n-1}(z), rescaled to
// stay finite; the true values are the returned ones times e^{log_scale}.
struct HermiteEval {
  double pn, pn1, log_scale;
};

HermiteEval hermite_eval(int n, double z) {
  double p1 = std::pow(std::numbers::pi, -0.25), p2 = 0.0, log_scale = 0.0;
  for (int j = 0; j < n; ++j) {
    const double p3 = p2;
    p2 = p1;
    p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
    if (std::abs(p1) > 1e100) {
      p1 *= 1e-100;
      p2 *= 1e-100;
      log_scale += 100.0 * std::numbers::ln10;
    }
  }
  return {p1, p2, log_scale};
}

}  // namespace

HermiteRule gauss_hermite_rule(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite_rule: n must be positive");
  static std::mutex mu;
  static std::map<int, HermiteRule> cache;
  std::lock_guard lock(mu);
  if (auto it = cache.find(n); it != cache.end()) return it->second;

  // Roots of p_n on z >= 0 are bracketed by a scan finer than the smallest gap,
  // bisected and polished by Newton; weights 2 / (sqrt(2n) p_{n-1})^2.
  const double zmax = std::sqrt(2.0 * n + 1.0) + 1.0;
  const double step = 0.05 * std::numbers::pi / std::sqrt(2.0 * n + 1.0);
  std::vector<double> roots, weights;
  auto sign_at = [n](double z) { return std::signbit(hermite_eval(n, z).pn); };
  // For odd n, z = 0 is a root; start just past it.
  double lo = n % 2 == 1 ? 0.5 * step : 0.0;
  if (n % 2 == 1) roots.push_back(0.0);
  bool slo = sign_at(lo);
  for (double hi = lo + step; lo < zmax && roots.size() < static_cast<std::size_t>((n + 1) / 2); hi += step) {
    const bool shi = sign_at(hi);
    if (shi != slo) {
      double a = lo, b = hi;
      for (int it = 0; it < 60 && b - a > 1e-15 * b; ++it) {
        const double m = 0.5 * (a + b);
        (sign_at(m) == slo ? a : b) = m;
      }
      double z = 0.5 * (a + b);
      for (int it = 0; it < 3; ++it) {
        const auto e = hermite_eval(n, z);
        const double dz = e.pn / (std::sqrt(2.0 * n) * e.pn1);
        if (std::abs(dz) < b - a + 1e-15) z -= dz;
      }
      roots.push_back(z);
    }
    lo = hi;
    slo = shi;
  }
  if (roots.size() != static_cast<std::size_t>((n + 1) / 2))
    throw NumericError(fmt::format("gauss_hermite_rule: found {} of {} roots", roots.size(), (n + 1) / 2));
  std::vector<double> x(n), w(n);
  for (std::size_t i = 0; i < roots.size(); ++i) {
    const auto e = hermite_eval(n, roots[i]);
    const double pp = std::sqrt(2.0 * n) * e.pn1;
    const double wi = 2.0 / (pp * pp) * std::exp(-2.0 * e.log_scale);
    const std::size_t hi = n / 2 + i, lo_i = (n - 1) / 2 - i;
    x[hi] = roots[i];
    x[lo_i] = -roots[i];
    w[hi] = w[lo_i] = wi;
  }
  HermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = x[i] * std::numbers::sqrt2;
    rule.weights[i] = w[i] / std::sqrt(std::numbers::pi);
  }
  return cache.emplace(n, rule).first->second;
}

double gauss_hermite_expectation(const std::function<double(double)>& f, int n) {
  const HermiteRule rule = gauss_hermite_rule(n);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += rule.weights[i] * f(rule.nodes[i]);
  return s;
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol, QuadInfo* info) {
  double err = 0.0;
  double l1 = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, tol, &err, &l1);
  if (info) *info = QuadInfo{31, err, 0.0, err <= tol * std::max(1.0, l1)};
  if (!std::isfinite(v)) throw NumericError("integrate: non-finite result");
  if (err > 1e3 * tol * std::max(1.0, l1))
    throw NumericError(fmt::format("integrate: achieved error {:.3g} exceeds tolerance {:.3g}", err, tol));
  return v;
}

}  // namespace asianlv
