#include "asianlv/harness.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

namespace asianlv {

ConvergenceReport convergence_report(const std::vector<ErrorPoint>& errors, double hypothesized_order,
                                     double slack) {
  ConvergenceReport rep;
  rep.hypothesized = hypothesized_order;
  rep.slack = slack;
  std::vector<ErrorPoint> used;
  for (const ErrorPoint& p : errors) {
    if (!(p.T > 0.0)) throw std::invalid_argument("convergence_report: T must be positive");
    const double a = std::abs(p.value);
    if (!std::isfinite(a) || a == 0.0 || a <= 3.0 * p.std_error)
      rep.dropped.push_back(p);
    else
      used.push_back(p);
  }
  rep.points = used;
  if (used.size() < 4) {
    rep.status = "insufficient-data";
    rep.order = rep.intercept = rep.r_squared = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }
  rep.weighted = true;
  for (const ErrorPoint& p : used)
    if (p.std_error <= 0.0) rep.weighted = false;

  double sw = 0, sx = 0, sy = 0;
  std::vector<double> xs, ys, ws;
  for (const ErrorPoint& p : used) {
    const double rel = p.std_error / std::abs(p.value);
    const double w = rep.weighted ? 1.0 / (rel * rel) : 1.0;
    xs.push_back(std::log(p.T));
    ys.push_back(std::log(std::abs(p.value)));
    ws.push_back(w);
    sw += w;
    sx += w * xs.back();
    sy += w * ys.back();
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += ws[i] * (xs[i] - mx) * (xs[i] - mx);
    sxy += ws[i] * (xs[i] - mx) * (ys[i] - my);
    syy += ws[i] * (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) {
    rep.status = "insufficient-data";
    return rep;
  }
  rep.order = sxy / sxx;
  rep.intercept = my - rep.order * mx;
  rep.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  rep.verdict = rep.order >= hypothesized_order - slack;
  rep.status = "ok";
  return rep;
}

std::vector<double> default_T_grid() { return {0.2, 0.1, 0.05, 0.025, 0.0125}; }

std::size_t scaled_paths(std::size_t n_base, double T) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(n_base) * 0.2 / T)));
}

namespace {

bool vanilla(const PayoffSpec& p) { return p.family == PayoffFamily::call || p.family == PayoffFamily::put; }

double european_closed_form(double vol, const MarketParams& params, const PayoffSpec& payoff, double T,
                            QuoteKind q) {
  const PriceDelta pd = black_scholes(vol, params, payoff.family, payoff.strike, T);
  return q == QuoteKind::price ? pd.price : pd.delta;
}

}  // namespace

ComparisonTable compare_experiment(const LocalVolSurface& surface, const MarketParams& params,
                                   const PayoffSpec& payoff, const CompareOptions& opt, const SimConfig& cfg) {
  params.validate();
  payoff.validate();
  if (opt.T_grid.empty()) throw std::invalid_argument("compare: empty T grid");
  const bool closed_european = surface.level_independent() && vanilla(payoff);
  ComparisonTable tab;
  tab.quantity = opt.quantity;
  tab.geometric_enabled = surface.family() == SurfaceFamily::constant && vanilla(payoff);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double S0 = params.spot;

  for (double T : opt.T_grid) {
    if (!(T > 0.0)) throw std::invalid_argument("compare: T must be positive");
    SimConfig c = cfg;
    c.n_paths = scaled_paths(opt.n_base, T);
    CompareRow row;
    row.T = T;
    row.n_paths = c.n_paths;
    const VolQuote vq = vol_quote(surface, S0, T);
    row.asian_vol = vq.asian_vol;
    row.european_vol = vq.european_vol;

    const bool price = opt.quantity == QuoteKind::price;
    const McEstimate mc = price ? mc_price_coupled(surface, params, payoff, Style::asian, T, c)
                                : mc_delta_fd_coupled(surface, params, payoff, Style::asian, T, c, opt.bump);
    row.mc = mc.mean;
    row.std_error = mc.std_error;

    if (vq.asian_vol > 0.0) {
      row.asym = price ? asym_price(payoff, S0, vq.asian_vol, T).value : asym_delta(payoff, S0, vq.asian_vol, T).value;
    } else {
      const double h = opt.bump * S0;
      row.asym = price ? payoff_eval(payoff, S0)
                       : (payoff_eval(payoff, S0 + h) - payoff_eval(payoff, S0 - h)) / (2.0 * h);
    }
    row.err_asym = row.mc - row.asym;

    if (vanilla(payoff)) {
      row.err_matched = row.mc - european_closed_form(vq.asian_vol, params, payoff, T, opt.quantity);
    } else {
      // European quote at the Asian volatility through the lognormal law.
      const double v = vq.asian_vol * vq.asian_vol * T;
      const double m = std::log(S0) + (params.rate - params.dividend) * T - 0.5 * v;
      const double disc = std::exp(-params.rate * T);
      if (price) {
        row.err_matched = row.mc - disc * lognormal_expectation(payoff, m, v);
      } else {
        const double h = opt.bump;
        const double up = lognormal_expectation(payoff, m + std::log1p(h), v);
        const double dn = lognormal_expectation(payoff, m + std::log1p(-h), v);
        row.err_matched = row.mc - disc * (up - dn) / (2.0 * h * S0);
      }
    }

    if (closed_european) {
      row.err_unmatched = row.mc - european_closed_form(vq.european_vol, params, payoff, T, opt.quantity);
      row.std_error_unmatched = row.std_error;
    } else if (price) {
      const McEstimate d = mc_asian_minus_european(surface, params, payoff, T, c);
      row.err_unmatched = d.mean;
      row.std_error_unmatched = d.std_error;
    } else {
      const McEstimate e = mc_delta_fd_coupled(surface, params, payoff, Style::european, T, c, opt.bump);
      row.err_unmatched = row.mc - e.mean;
      row.std_error_unmatched = std::hypot(row.std_error, e.std_error);
    }

    if (tab.geometric_enabled) {
      const double sigma = std::get<surface::Constant>(surface.params()).sigma;
      const PriceDelta g = geometric_bs(sigma, params, payoff.family, payoff.strike, T);
      row.err_geo = row.mc - (price ? g.price : g.delta);
    } else {
      row.err_geo = nan;
    }
    tab.rows.push_back(row);
  }

  auto fit = [&](auto member, auto se, double order) {
    std::vector<ErrorPoint> pts;
    for (const CompareRow& r : tab.rows) pts.push_back({r.T, r.*member, r.*se});
    return convergence_report(pts, order, opt.slack);
  };
  // Hypothesised orders: prices carry O(T), deltas O(T^(1/2)); the unmatched
  // European quote is only O(T^(1/2)) away for prices.
  const bool price = opt.quantity == QuoteKind::price;
  tab.asym_fit = fit(&CompareRow::err_asym, &CompareRow::std_error, price ? 1.0 : 0.5);
  tab.matched_fit = fit(&CompareRow::err_matched, &CompareRow::std_error, price ? 1.0 : 0.5);
  tab.unmatched_fit = fit(&CompareRow::err_unmatched, &CompareRow::std_error_unmatched, price ? 0.5 : 0.0);
  if (tab.geometric_enabled)
    tab.geo_fit = fit(&CompareRow::err_geo, &CompareRow::std_error, price ? 1.0 : 0.5);
  else
    tab.geo_fit.status = "disabled";
  return tab;
}

void write_comparison_csv(const ComparisonTable& table, std::ostream& out) {
  out << "T,mc,asym,err_matched,err_unmatched,err_geo,stderr\n";
  for (const CompareRow& r : table.rows)
    out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.T, r.mc, r.asym, r.err_matched,
                       r.err_unmatched, r.err_geo, r.std_error);
}

}  // namespace asianlv
