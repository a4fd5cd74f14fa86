#pragma once

#include <functional>
#include <string>
#include <vector>

#include "asianlv/model.hpp"
#include "asianlv/quadrature.hpp"

namespace asianlv {

enum class Style { asian, european, geometric };
enum class QuoteKind { price, delta };

std::string to_string(Style style);
Style parse_style(const std::string& name);

struct VolQuote {
  double asian_vol = 0.0;
  double european_vol = 0.0;
  double maturity = 0.0;
  QuadInfo quad;
};

VolQuote vol_quote(const LocalVolSurface& surface, double spot, double T, double tol = 1e-13);

/// sqrt(T^-3 * int_0^T sigma^2(t,S0) (T-t)^2 dt)
double asian_vol(const LocalVolSurface& surface, double spot, double T);
/// sqrt(T^-1 * int_0^T sigma^2(t,S0) dt)
double european_vol(const LocalVolSurface& surface, double spot, double T);

struct AsymptoticQuote {
  double value = 0.0;
  QuoteKind kind = QuoteKind::price;
  Style style = Style::asian;
  /// Exponent of T in the error bound: gamma for prices, gamma - 1/2 for deltas.
  double claimed_error_order = 0.0;
  PayoffSpec payoff;
  double spot = 0.0;
  double vol = 0.0;
  double maturity = 0.0;
  bool closed_form = false;
  QuadInfo quad;
};

/// E[Phi(S0 + s Z)] with s = S0 * vol * sqrt(T). Calls and puts use the
/// normal-model closed form; everything else goes through quadrature.
AsymptoticQuote asym_price(const PayoffSpec& payoff, double spot, double vol, double T,
                           Style style = Style::asian, const GaussianQuadOptions& opt = {});

/// E[(Phi(S0 + s Z) - Phi(S0)) / (s Z) * Z^2], i.e. E[Phi(S0 + s Z) Z] / s.
AsymptoticQuote asym_delta(const PayoffSpec& payoff, double spot, double vol, double T,
                           Style style = Style::asian, const GaussianQuadOptions& opt = {});

/// Same expectations forced through quadrature (no closed form shortcut).
double asym_price_quadrature(const PayoffSpec& payoff, double spot, double vol, double T,
                             const GaussianQuadOptions& opt = {}, QuadInfo* info = nullptr);
double asym_delta_quadrature(const PayoffSpec& payoff, double spot, double vol, double T,
                             const GaussianQuadOptions& opt = {}, QuadInfo* info = nullptr);

/// E|Z|^gamma = 2^(gamma/2) Gamma((gamma+1)/2) / sqrt(pi).
double abs_moment(double gamma);

struct PowerLeading {
  double price_lead = 0.0;
  double delta_lead = 0.0;
  /// Powers of T carried by the two leading terms.
  double price_T_exponent = 0.0;
  double delta_T_exponent = 0.0;
  /// Whether the exponent lies in the range where the delta expansion is stated.
  bool delta_in_range = false;
};

/// Leading terms for the ATM payoff (x - S0)_+^a with a in (0, 2): price
/// 1/2 (S0 v)^a M(a) T^(a/2), delta 1/2 (S0 v)^(a-1) M(a+1) T^((a-1)/2).
PowerLeading power_leading_terms(double exponent, double spot, double vol, double T);

struct DeltaParity {
  double parity = 0.0;
  double taylor = 0.0;
};

/// Call-minus-put Asian delta, (e^{-qT} - e^{-rT}) / ((r-q)T), and its
/// second-order expansion in T.
DeltaParity delta_parity_and_itm(double r, double q, double T);

/// A function of time at fixed spot with first and second derivatives.
class VolCurve {
public:
  /// c0 + c1 s + c2 s^2 + ...
  static VolCurve polynomial(std::vector<double> coeffs);
  /// Cubic B-spline through equally spaced values starting at s0.
  static VolCurve spline(double s0, double ds, std::vector<double> values);
  /// Arbitrary callable; derivatives by central differences.
  static VolCurve callable(std::function<double(double)> f);

  double value(double s) const { return f_(s); }
  double d1(double s) const { return d1_(s); }
  double d2(double s) const { return d2_(s); }

private:
  std::function<double(double)> f_, d1_, d2_;
};

enum class MatchDirection { implied_to_tau, tau_to_implied };

/// implied_to_tau: tau(s) = [2/s^3 int_0^s sigma^2(u)(us - u^2) du]^(1/2).
/// tau_to_implied: tau [3 + 6 s tau'/tau + s^2 (tau'/tau)^2 + s^2 tau''/tau]^(1/2);
/// a negative bracket raises DomainError.
double match_volatility(MatchDirection direction, const VolCurve& curve, double s);

struct PriceDelta {
  double price = 0.0;
  double delta = 0.0;
};

/// Geometric-average Asian option under Black-Scholes (continuous averaging).
PriceDelta geometric_bs(double sigma, const MarketParams& params, PayoffFamily family, double strike, double T);

/// European Black-Scholes price and spot delta with continuous dividend yield.
PriceDelta black_scholes(double sigma, const MarketParams& params, PayoffFamily family, double strike, double T);

/// E[Phi(exp(m + sqrt(v) Z))]; closed form for calls and puts.
double lognormal_expectation(const PayoffSpec& payoff, double log_mean, double log_var,
                             const GaussianQuadOptions& opt = {});

double normal_cdf(double x);
double normal_pdf(double x);

}  // namespace asianlv
