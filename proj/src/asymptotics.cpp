#include "asianlv/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <fmt/format.h>

namespace asianlv {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

std::string to_string(Style style) {
  switch (style) {
    case Style::asian: return "asian";
    case Style::european: return "european";
    case Style::geometric: return "geometric";
  }
  return "?";
}

Style parse_style(const std::string& name) {
  if (name == "asian") return Style::asian;
  if (name == "european") return Style::european;
  if (name == "geometric") return Style::geometric;
  throw std::invalid_argument(fmt::format("unknown style '{}' (asian|european|geometric)", name));
}

VolQuote vol_quote(const LocalVolSurface& surface, double spot, double T, double tol) {
  if (!(T > 0.0)) throw DomainError(fmt::format("maturity T={} must be positive", T));
  // Substitute t = T u so both integrals live on [0, 1].
  QuadInfo qa, qe;
  const double a2 = integrate(
      [&](double u) {
        const double s = surface.sigma(T * u, spot);
        return s * s * (1.0 - u) * (1.0 - u);
      },
      0.0, 1.0, tol, &qa);
  const double e2 = integrate(
      [&](double u) {
        const double s = surface.sigma(T * u, spot);
        return s * s;
      },
      0.0, 1.0, tol, &qe);
  VolQuote q;
  q.asian_vol = std::sqrt(a2);
  q.european_vol = std::sqrt(e2);
  q.maturity = T;
  q.quad = QuadInfo{qa.nodes + qe.nodes, std::max(qa.error_estimate, qe.error_estimate), 0.0,
                    qa.converged && qe.converged};
  return q;
}

double asian_vol(const LocalVolSurface& surface, double spot, double T) {
  return vol_quote(surface, spot, T).asian_vol;
}

double european_vol(const LocalVolSurface& surface, double spot, double T) {
  return vol_quote(surface, spot, T).european_vol;
}

namespace {

double normal_scale(double spot, double vol, double T) {
  if (!(vol > 0.0)) throw DomainError(fmt::format("vol={} must be positive", vol));
  if (!(T > 0.0)) throw DomainError(fmt::format("maturity T={} must be positive", T));
  if (!(spot > 0.0)) throw DomainError(fmt::format("spot={} must be positive", spot));
  return spot * vol * std::sqrt(T);
}

std::vector<double> z_breaks(const PayoffSpec& payoff, double spot, double s) {
  std::vector<double> z;
  for (double b : payoff.breakpoints()) z.push_back((b - spot) / s);
  return z;
}

AsymptoticQuote make_quote(const PayoffSpec& payoff, QuoteKind kind, Style style, double spot, double vol,
                           double T) {
  AsymptoticQuote q;
  q.kind = kind;
  q.style = style;
  q.payoff = payoff;
  q.spot = spot;
  q.vol = vol;
  q.maturity = T;
  q.claimed_error_order = kind == QuoteKind::price ? payoff.holder_gamma : payoff.holder_gamma - 0.5;
  return q;
}

GaussianQuadOptions for_payoff(GaussianQuadOptions opt, const PayoffSpec& payoff) {
  if (payoff.holder_gamma < 1.0 && opt.grade_layers == 0) opt.grade_layers = 14;
  return opt;
}

}  // namespace

double asym_price_quadrature(const PayoffSpec& payoff, double spot, double vol, double T,
                             const GaussianQuadOptions& opt, QuadInfo* info) {
  payoff.validate();
  const double s = normal_scale(spot, vol, T);
  return gaussian_expectation([&](double z) { return payoff_eval(payoff, spot + s * z); },
                              z_breaks(payoff, spot, s), for_payoff(opt, payoff), info);
}

double asym_delta_quadrature(const PayoffSpec& payoff, double spot, double vol, double T,
                             const GaussianQuadOptions& opt, QuadInfo* info) {
  payoff.validate();
  const double s = normal_scale(spot, vol, T);
  const double phi0 = payoff_eval(payoff, spot);
  auto breaks = z_breaks(payoff, spot, s);
  breaks.push_back(0.0);
  // (Phi(S0 + sZ) - Phi(S0)) / (sZ) * Z^2, written without the division.
  return gaussian_expectation([&](double z) { return (payoff_eval(payoff, spot + s * z) - phi0) * z / s; },
                              breaks, for_payoff(opt, payoff), info);
}

AsymptoticQuote asym_price(const PayoffSpec& payoff, double spot, double vol, double T, Style style,
                           const GaussianQuadOptions& opt) {
  payoff.validate();
  const double s = normal_scale(spot, vol, T);
  AsymptoticQuote q = make_quote(payoff, QuoteKind::price, style, spot, vol, T);
  const double d = (spot - payoff.strike) / s;
  switch (payoff.family) {
    case PayoffFamily::call:
      q.value = (spot - payoff.strike) * normal_cdf(d) + s * normal_pdf(d);
      q.closed_form = true;
      break;
    case PayoffFamily::put:
      q.value = (payoff.strike - spot) * normal_cdf(-d) + s * normal_pdf(d);
      q.closed_form = true;
      break;
    case PayoffFamily::linear:
      q.value = payoff.slope * spot + payoff.intercept;
      q.closed_form = true;
      break;
    case PayoffFamily::constant:
      q.value = payoff.intercept;
      q.closed_form = true;
      break;
    default: q.value = asym_price_quadrature(payoff, spot, vol, T, opt, &q.quad);
  }
  return q;
}

AsymptoticQuote asym_delta(const PayoffSpec& payoff, double spot, double vol, double T, Style style,
                           const GaussianQuadOptions& opt) {
  payoff.validate();
  const double s = normal_scale(spot, vol, T);
  AsymptoticQuote q = make_quote(payoff, QuoteKind::delta, style, spot, vol, T);
  const double d = (spot - payoff.strike) / s;
  switch (payoff.family) {
    case PayoffFamily::call:
      q.value = normal_cdf(d);
      q.closed_form = true;
      break;
    case PayoffFamily::put:
      q.value = normal_cdf(d) - 1.0;
      q.closed_form = true;
      break;
    case PayoffFamily::linear:
      q.value = payoff.slope;
      q.closed_form = true;
      break;
    case PayoffFamily::constant:
      q.value = 0.0;
      q.closed_form = true;
      break;
    default: q.value = asym_delta_quadrature(payoff, spot, vol, T, opt, &q.quad);
  }
  return q;
}

double abs_moment(double gamma) {
  if (!(gamma >= 0.0)) throw DomainError(fmt::format("abs_moment: gamma={} must be >= 0", gamma));
  return std::pow(2.0, 0.5 * gamma) * std::tgamma(0.5 * (gamma + 1.0)) / std::sqrt(std::numbers::pi);
}

PowerLeading power_leading_terms(double exponent, double spot, double vol, double T) {
  if (!(exponent > 0.0 && exponent < 2.0))
    throw DomainError(fmt::format("power_leading_terms: exponent={} outside (0, 2)", exponent));
  normal_scale(spot, vol, T);
  const double sv = spot * vol;
  PowerLeading out;
  out.price_T_exponent = 0.5 * exponent;
  out.delta_T_exponent = 0.5 * (exponent - 1.0);
  out.price_lead = 0.5 * std::pow(sv, exponent) * abs_moment(exponent) * std::pow(T, out.price_T_exponent);
  out.delta_lead =
      0.5 * std::pow(sv, exponent - 1.0) * abs_moment(exponent + 1.0) * std::pow(T, out.delta_T_exponent);
  out.delta_in_range = exponent > 0.5;
  return out;
}

DeltaParity delta_parity_and_itm(double r, double q, double T) {
  if (!(T > 0.0)) throw DomainError(fmt::format("maturity T={} must be positive", T));
  DeltaParity out;
  if (std::abs(r - q) < 1e-12)
    out.parity = std::exp(-r * T);
  else
    out.parity = (std::exp(-q * T) - std::exp(-r * T)) / ((r - q) * T);
  out.taylor = 1.0 - 0.5 * (r + q) * T + (r * r + r * q + q * q) / 6.0 * T * T;
  return out;
}

VolCurve VolCurve::polynomial(std::vector<double> coeffs) {
  if (coeffs.empty()) throw std::invalid_argument("polynomial curve needs coefficients");
  auto eval = [](const std::vector<double>& c, double s) {
    double v = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * s + *it;
    return v;
  };
  std::vector<double> c1, c2;
  for (std::size_t k = 1; k < coeffs.size(); ++k) c1.push_back(k * coeffs[k]);
  for (std::size_t k = 1; k < c1.size(); ++k) c2.push_back(k * c1[k]);
  if (c1.empty()) c1.push_back(0.0);
  if (c2.empty()) c2.push_back(0.0);
  VolCurve c;
  c.f_ = [eval, coeffs](double s) { return eval(coeffs, s); };
  c.d1_ = [eval, c1](double s) { return eval(c1, s); };
  c.d2_ = [eval, c2](double s) { return eval(c2, s); };
  return c;
}

VolCurve VolCurve::spline(double s0, double ds, std::vector<double> values) {
  if (values.size() < 4 || !(ds > 0.0)) throw std::invalid_argument("spline curve needs >= 4 values and ds > 0");
  using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;
  auto sp = std::make_shared<Spline>(values.begin(), values.end(), s0, ds);
  VolCurve c;
  c.f_ = [sp](double s) { return (*sp)(s); };
  c.d1_ = [sp](double s) { return sp->prime(s); };
  c.d2_ = [sp](double s) { return sp->double_prime(s); };
  return c;
}

VolCurve VolCurve::callable(std::function<double(double)> f) {
  VolCurve c;
  auto step = [](double s) { return std::min(1e-4, 0.5 * std::abs(s)) + 1e-12; };
  c.f_ = f;
  c.d1_ = [f, step](double s) {
    const double h = step(s);
    return (f(s + h) - f(s - h)) / (2.0 * h);
  };
  c.d2_ = [f, step](double s) {
    const double h = std::max(step(s), 1e-3 * std::min(1.0, std::abs(s)));
    return (f(s + h) - 2.0 * f(s) + f(s - h)) / (h * h);
  };
  return c;
}

double match_volatility(MatchDirection direction, const VolCurve& curve, double s) {
  if (!(s > 0.0)) throw DomainError(fmt::format("match_volatility: s={} must be positive", s));
  if (direction == MatchDirection::implied_to_tau) {
    // u = s v turns (2/s^3) int_0^s sigma^2(u)(us - u^2) du into 2 int_0^1 sigma^2(sv)(v - v^2) dv.
    const double t2 = 2.0 * integrate(
                                [&](double v) {
                                  const double sig = curve.value(s * v);
                                  return sig * sig * (v - v * v);
                                },
                                0.0, 1.0);
    return std::sqrt(t2);
  }
  const double tau = curve.value(s);
  if (!(tau > 0.0)) throw DomainError(fmt::format("match_volatility: tau({})={} must be positive", s, tau));
  const double g = curve.d1(s) / tau;
  const double bracket = 3.0 + 6.0 * s * g + s * s * g * g + s * s * curve.d2(s) / tau;
  if (bracket < 0.0)
    throw DomainError(fmt::format("match_volatility: bracket {:.6g} < 0 at s={}; no real implied vol", bracket, s));
  return tau * std::sqrt(bracket);
}

namespace {

void check_vanilla(PayoffFamily family, double strike, double sigma, double T) {
  if (family != PayoffFamily::call && family != PayoffFamily::put)
    throw std::invalid_argument("closed forms are available for call and put only");
  if (!(strike > 0.0)) throw DomainError("strike must be positive");
  if (!(sigma >= 0.0)) throw DomainError("sigma must be >= 0");
  if (!(T > 0.0)) throw DomainError("maturity must be positive");
}

// Discounted E[(F - K)_+] or E[(K - F)_+] for lognormal F with mean `mean`
// and log-variance `var`, and d/d(mean) of it.
PriceDelta lognormal_option(PayoffFamily family, double mean, double var, double strike, double disc) {
  const bool call = family == PayoffFamily::call;
  if (var <= 0.0) {
    const double intrinsic = call ? mean - strike : strike - mean;
    double slope = mean > strike ? 1.0 : (mean < strike ? 0.0 : 0.5);
    if (!call) slope -= 1.0;
    return {disc * std::max(intrinsic, 0.0), disc * slope};
  }
  const double sd = std::sqrt(var);
  const double d1 = (std::log(mean / strike) + 0.5 * var) / sd;
  const double d2 = d1 - sd;
  if (call) return {disc * (mean * normal_cdf(d1) - strike * normal_cdf(d2)), disc * normal_cdf(d1)};
  return {disc * (strike * normal_cdf(-d2) - mean * normal_cdf(-d1)), -disc * normal_cdf(-d1)};
}

}  // namespace

double lognormal_expectation(const PayoffSpec& payoff, double log_mean, double log_var,
                             const GaussianQuadOptions& opt) {
  payoff.validate();
  if (!(log_var >= 0.0)) throw DomainError("lognormal_expectation: variance must be >= 0");
  const double mean = std::exp(log_mean + 0.5 * log_var);
  if ((payoff.family == PayoffFamily::call || payoff.family == PayoffFamily::put) && payoff.strike > 0.0)
    return lognormal_option(payoff.family, mean, log_var, payoff.strike, 1.0).price;
  if (payoff.family == PayoffFamily::linear) return payoff.slope * mean + payoff.intercept;
  if (payoff.family == PayoffFamily::constant || log_var == 0.0) return payoff_eval(payoff, std::exp(log_mean));
  const double sd = std::sqrt(log_var);
  std::vector<double> breaks;
  for (double b : payoff.breakpoints())
    if (b > 0.0) breaks.push_back((std::log(b) - log_mean) / sd);
  return gaussian_expectation([&](double z) { return payoff_eval(payoff, std::exp(log_mean + sd * z)); }, breaks,
                              for_payoff(opt, payoff));
}

PriceDelta geometric_bs(double sigma, const MarketParams& params, PayoffFamily family, double strike, double T) {
  params.validate();
  check_vanilla(family, strike, sigma, T);
  const double m = std::log(params.spot) + (params.rate - params.dividend - 0.5 * sigma * sigma) * T / 2.0;
  const double v = sigma * sigma * T / 3.0;
  const double mean = std::exp(m + 0.5 * v);
  PriceDelta pd = lognormal_option(family, mean, v, strike, std::exp(-params.rate * T));
  pd.delta *= mean / params.spot;
  return pd;
}

PriceDelta black_scholes(double sigma, const MarketParams& params, PayoffFamily family, double strike, double T) {
  params.validate();
  check_vanilla(family, strike, sigma, T);
  const double fwd = params.spot * std::exp((params.rate - params.dividend) * T);
  PriceDelta pd = lognormal_option(family, fwd, sigma * sigma * T, strike, std::exp(-params.rate * T));
  pd.delta *= fwd / params.spot;
  return pd;
}

}  // namespace asianlv
