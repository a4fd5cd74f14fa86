#include "asianlv/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include <fmt/format.h>

namespace asianlv {

void MarketParams::validate() const {
  if (!(spot > 0.0) || !std::isfinite(spot)) throw std::invalid_argument("market.spot must be positive");
  if (!std::isfinite(rate)) throw std::invalid_argument("market.rate must be finite");
  if (!std::isfinite(dividend)) throw std::invalid_argument("market.dividend must be finite");
}

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_tabulated(const surface::Tabulated& tab) {
  if (tab.t_nodes.empty() || tab.x_nodes.size() < 2)
    throw std::invalid_argument("tabulated surface needs >= 1 t node and >= 2 x nodes");
  if (tab.sigma.size() != tab.t_nodes.size() * tab.x_nodes.size())
    throw std::invalid_argument("tabulated surface: sigma size does not match grid");
  auto increasing = [](const std::vector<double>& v) {
    return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end();
  };
  if (!increasing(tab.t_nodes) || !increasing(tab.x_nodes))
    throw std::invalid_argument("tabulated surface: nodes must be strictly increasing");
  for (double s : tab.sigma)
    if (!std::isfinite(s)) throw std::invalid_argument("tabulated surface: non-finite sigma");
}

// Index i with nodes[i] <= v < nodes[i+1], clamped to the valid cell range.
std::size_t cell(const std::vector<double>& nodes, double v) {
  auto it = std::upper_bound(nodes.begin(), nodes.end(), v);
  std::size_t i = it == nodes.begin() ? 0 : static_cast<std::size_t>(it - nodes.begin()) - 1;
  return std::min(i, nodes.size() - 2);
}

}  // namespace

LocalVolSurface::LocalVolSurface(Params params) : params_(std::move(params)) {
  std::visit(Overloaded{
                 [](const surface::Constant& c) {
                   if (!std::isfinite(c.sigma)) throw std::invalid_argument("constant sigma must be finite");
                 },
                 [](const surface::TimeScaled& s) {
                   if (!std::isfinite(s.level) || !std::isfinite(s.shift) || !std::isfinite(s.slope) ||
                       !std::isfinite(s.exponent))
                     throw std::invalid_argument("time-scaled surface parameters must be finite");
                 },
                 [](const surface::CappedPower& p) {
                   if (!(p.level > 0.0) || !(p.reference > 0.0))
                     throw std::invalid_argument("capped-power surface needs level > 0 and reference > 0");
                   if (!(p.floor >= 0.0) || !(p.cap > p.floor))
                     throw std::invalid_argument("capped-power surface needs 0 <= floor < cap");
                 },
                 [this](const surface::Tabulated& tab) {
                   check_tabulated(tab);
                   double h = std::numeric_limits<double>::infinity();
                   for (std::size_t j = 1; j < tab.x_nodes.size(); ++j)
                     h = std::min(h, tab.x_nodes[j] - tab.x_nodes[j - 1]);
                   fd_step_ = h / 10.0;
                 },
             },
             params_);
}

SurfaceFamily LocalVolSurface::family() const {
  return static_cast<SurfaceFamily>(params_.index());
}

bool LocalVolSurface::level_independent() const {
  return family() == SurfaceFamily::constant || family() == SurfaceFamily::time_scaled;
}

bool LocalVolSurface::time_homogeneous() const {
  if (family() == SurfaceFamily::tabulated) return std::get<surface::Tabulated>(params_).t_nodes.size() == 1;
  if (family() == SurfaceFamily::time_scaled) {
    const auto& s = std::get<surface::TimeScaled>(params_);
    return s.slope == 0.0 || s.exponent == 0.0;
  }
  return true;
}

double LocalVolSurface::x_min() const {
  switch (family()) {
    case SurfaceFamily::capped_power: return 0.0;
    case SurfaceFamily::tabulated: return std::get<surface::Tabulated>(params_).x_nodes.front();
    default: return -std::numeric_limits<double>::infinity();
  }
}

double LocalVolSurface::x_max() const {
  if (family() == SurfaceFamily::tabulated) return std::get<surface::Tabulated>(params_).x_nodes.back();
  return std::numeric_limits<double>::infinity();
}

double LocalVolSurface::tab_sigma(double t, double x) const {
  const auto& tab = std::get<surface::Tabulated>(params_);
  if (x < tab.x_nodes.front() || x > tab.x_nodes.back())
    throw DomainError(fmt::format("tabulated surface: x={} outside [{}, {}]", x, tab.x_nodes.front(),
                                  tab.x_nodes.back()));
  const std::size_t nx = tab.x_nodes.size();
  const std::size_t j = cell(tab.x_nodes, x);
  const double wx = (x - tab.x_nodes[j]) / (tab.x_nodes[j + 1] - tab.x_nodes[j]);
  auto row = [&](std::size_t i) {
    return (1.0 - wx) * tab.sigma[i * nx + j] + wx * tab.sigma[i * nx + j + 1];
  };
  if (tab.t_nodes.size() == 1 || t <= tab.t_nodes.front()) return row(0);
  if (t >= tab.t_nodes.back()) return row(tab.t_nodes.size() - 1);
  const std::size_t i = cell(tab.t_nodes, t);
  const double wt = (t - tab.t_nodes[i]) / (tab.t_nodes[i + 1] - tab.t_nodes[i]);
  return (1.0 - wt) * row(i) + wt * row(i + 1);
}

double LocalVolSurface::sigma(double t, double x) const {
  return std::visit(Overloaded{
                        [](const surface::Constant& c) { return c.sigma; },
                        [t](const surface::TimeScaled& s) {
                          return s.level * std::pow(s.shift + s.slope * t, s.exponent);
                        },
                        [x](const surface::CappedPower& p) {
                          if (!(x > 0.0)) throw DomainError(fmt::format("capped-power surface: x={} <= 0", x));
                          return std::clamp(p.level * std::pow(x / p.reference, p.beta), p.floor, p.cap);
                        },
                        [this, t, x](const surface::Tabulated&) { return tab_sigma(t, x); },
                    },
                    params_);
}

VolPoint LocalVolSurface::at(double t, double x) const {
  VolPoint v = std::visit(
      Overloaded{
          [](const surface::Constant& c) { return VolPoint{c.sigma, c.sigma, 0.0}; },
          [t](const surface::TimeScaled& s) {
            const double sig = s.level * std::pow(s.shift + s.slope * t, s.exponent);
            return VolPoint{sig, sig, 0.0};
          },
          [x](const surface::CappedPower& p) {
            if (!(x > 0.0)) throw DomainError(fmt::format("capped-power surface: x={} <= 0", x));
            const double raw = p.level * std::pow(x / p.reference, p.beta);
            if (raw <= p.floor) return VolPoint{p.floor, p.floor, 0.0};
            if (raw >= p.cap) return VolPoint{p.cap, p.cap, 0.0};
            return VolPoint{raw, (1.0 + p.beta) * raw, p.beta * (1.0 + p.beta) * raw / x};
          },
          [this, t, x](const surface::Tabulated& tab) {
            const double h = fd_step_;
            const double lo = tab.x_nodes.front();
            const double hi = tab.x_nodes.back();
            const double sig = tab_sigma(t, x);
            const double c = std::clamp(x, lo + h, hi - h);
            const double fm = tab_sigma(t, c - h) * (c - h);
            const double f0 = tab_sigma(t, c) * c;
            const double fp = tab_sigma(t, c + h) * (c + h);
            return VolPoint{sig, (fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / (h * h)};
          },
      },
      params_);
  if (!std::isfinite(v.sigma) || !std::isfinite(v.nu) || !std::isfinite(v.rho))
    throw NumericError(fmt::format("surface evaluation not finite at t={}, x={}", t, x));
  return v;
}

VolPoint vol_at(const LocalVolSurface& surface, double t, double x) {
  if (!(t >= 0.0)) throw DomainError(fmt::format("vol_at: t={} must be >= 0", t));
  return surface.at(t, x);
}

LocalVolSurface parse_surface_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("surface csv: empty input");
  line.erase(std::remove_if(line.begin(), line.end(), [](char c) { return c == ' ' || c == '\r'; }), line.end());
  if (line != "t,x,sigma") throw std::invalid_argument("surface csv: header must be 't,x,sigma'");
  std::map<std::pair<double, double>, double> values;
  std::vector<double> ts, xs;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \r\t") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double t, x, s;
    if (!(row >> t >> x >> s)) throw std::invalid_argument(fmt::format("surface csv: bad row at line {}", lineno));
    if (!values.emplace(std::make_pair(t, x), s).second)
      throw std::invalid_argument(fmt::format("surface csv: duplicate node at line {}", lineno));
    ts.push_back(t);
    xs.push_back(x);
  }
  auto uniq = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  surface::Tabulated tab{uniq(ts), uniq(xs), {}};
  tab.sigma.reserve(tab.t_nodes.size() * tab.x_nodes.size());
  for (double t : tab.t_nodes)
    for (double x : tab.x_nodes) {
      auto it = values.find({t, x});
      if (it == values.end())
        throw std::invalid_argument(fmt::format("surface csv: missing node t={}, x={}", t, x));
      tab.sigma.push_back(it->second);
    }
  return LocalVolSurface(std::move(tab));
}

LocalVolSurface load_surface_csv(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw std::invalid_argument(fmt::format("cannot open surface csv '{}'", path));
  std::stringstream buf;
  buf << file.rdbuf();
  return parse_surface_csv(buf.str());
}

AssumptionReport check_assumptions(const LocalVolSurface& surface, const ProbeGrid& probe) {
  if (probe.nt == 0 || probe.nx < 2 || !(probe.x_hi > probe.x_lo) || !(probe.t_hi >= probe.t_lo))
    throw std::invalid_argument("probe grid must be nonempty with x_hi > x_lo and nx >= 2");

  AssumptionReport rep;
  rep.probe = probe;
  const bool open_lower = probe.x_lo <= 0.0;
  std::vector<double> xs(probe.nx);
  for (std::size_t j = 0; j < probe.nx; ++j) {
    xs[j] = open_lower ? probe.x_hi * static_cast<double>(j + 1) / static_cast<double>(probe.nx)
                       : probe.x_lo + (probe.x_hi - probe.x_lo) * static_cast<double>(j) /
                                          static_cast<double>(probe.nx - 1);
  }

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  bool evaluation_ok = true;
  bool stabilized = true;
  std::vector<VolPoint> row(probe.nx);
  for (std::size_t i = 0; i < probe.nt; ++i) {
    const double t = probe.nt == 1 ? probe.t_lo
                                   : probe.t_lo + (probe.t_hi - probe.t_lo) * static_cast<double>(i) /
                                                      static_cast<double>(probe.nt - 1);
    bool row_ok = true;
    for (std::size_t j = 0; j < probe.nx; ++j) {
      try {
        row[j] = vol_at(surface, t, xs[j]);
      } catch (const std::exception& e) {
        rep.failures.push_back(fmt::format("evaluation failed at (t={}, x={}): {}", t, xs[j], e.what()));
        evaluation_ok = row_ok = false;
        continue;
      }
      lo = std::min(lo, row[j].sigma);
      hi = std::max(hi, row[j].sigma);
    }
    if (!row_ok) continue;
    for (std::size_t j = 0; j + 1 < probe.nx; ++j) {
      const double dx = xs[j + 1] - xs[j];
      rep.lip_sigma = std::max(rep.lip_sigma, std::abs(row[j + 1].sigma - row[j].sigma) / dx);
      rep.lip_sigma_x = std::max(rep.lip_sigma_x, std::abs(row[j + 1].sigma * xs[j + 1] - row[j].sigma * xs[j]) / dx);
      rep.lip_nu = std::max(rep.lip_nu, std::abs(row[j + 1].nu - row[j].nu) / dx);
      rep.lip_rho = std::max(rep.lip_rho, std::abs(row[j + 1].rho - row[j].rho) / dx);
    }
    if (open_lower) {
      // Approach the open end geometrically; a bounded surface must settle.
      double prev = row[0].sigma;
      double last_change = 0.0;
      for (int k = 1; k <= 6; ++k) {
        const double x = xs[0] * std::pow(10.0, -k);
        double s;
        try {
          s = surface.sigma(t, x);
        } catch (const std::exception& e) {
          rep.failures.push_back(fmt::format("evaluation failed at (t={}, x={}): {}", t, x, e.what()));
          evaluation_ok = false;
          break;
        }
        lo = std::min(lo, s);
        hi = std::max(hi, s);
        last_change = std::abs(s - prev) / std::max(std::abs(prev), 1e-300);
        prev = s;
      }
      if (last_change > 1e-9) {
        stabilized = false;
        rep.failures.push_back(fmt::format("sigma does not settle as x -> 0 at t={} (last relative change {:.3g})",
                                           t, last_change));
      }
    }
  }

  rep.sigma_lo = lo;
  rep.sigma_hi = hi;
  rep.positive_lower_bound = evaluation_ok && lo > 0.0;
  if (evaluation_ok && !(lo > 0.0)) rep.failures.push_back(fmt::format("sigma_lo = {} is not positive", lo));
  rep.bounded = evaluation_ok && stabilized && std::isfinite(hi);
  rep.finite_estimates = std::isfinite(rep.lip_sigma) && std::isfinite(rep.lip_sigma_x) &&
                         std::isfinite(rep.lip_nu) && std::isfinite(rep.lip_rho);
  if (!rep.finite_estimates) rep.failures.push_back("non-finite Lipschitz estimate");
  rep.pass = evaluation_ok && rep.positive_lower_bound && rep.bounded && rep.finite_estimates;
  return rep;
}

// ---------------------------------------------------------------- payoffs

PayoffSpec PayoffSpec::call(double strike) {
  PayoffSpec p;
  p.family = PayoffFamily::call;
  p.strike = strike;
  return p;
}

PayoffSpec PayoffSpec::put(double strike) {
  PayoffSpec p = call(strike);
  p.family = PayoffFamily::put;
  return p;
}

PayoffSpec PayoffSpec::power_call(double strike, double gamma) {
  PayoffSpec p = call(strike);
  p.family = PayoffFamily::power_call;
  p.exponent = gamma;
  p.holder_gamma = gamma;
  p.holder_beta = 1.0;
  return p;
}

PayoffSpec PayoffSpec::capped_power(double strike, double exponent, double width) {
  PayoffSpec p = call(strike);
  p.family = PayoffFamily::capped_power;
  p.exponent = exponent;
  p.width = width;
  p.holder_gamma = 1.0;
  p.holder_beta = exponent * std::pow(width, exponent - 1.0);
  return p;
}

PayoffSpec PayoffSpec::linear(double slope, double intercept) {
  PayoffSpec p;
  p.family = PayoffFamily::linear;
  p.slope = slope;
  p.intercept = intercept;
  p.holder_beta = slope != 0.0 ? std::abs(slope) : 1.0;
  return p;
}

PayoffSpec PayoffSpec::constant(double value) {
  PayoffSpec p;
  p.family = PayoffFamily::constant;
  p.slope = 0.0;
  p.intercept = value;
  return p;
}

PayoffSpec PayoffSpec::table(std::vector<double> xs, std::vector<double> ys) {
  PayoffSpec p;
  p.family = PayoffFamily::table;
  p.table_x = std::move(xs);
  p.table_y = std::move(ys);
  double beta = 0.0;
  for (std::size_t i = 0; i + 1 < p.table_x.size() && p.table_x.size() == p.table_y.size(); ++i)
    beta = std::max(beta, std::abs((p.table_y[i + 1] - p.table_y[i]) / (p.table_x[i + 1] - p.table_x[i])));
  p.holder_beta = beta > 0.0 ? beta : 1.0;
  return p;
}

void PayoffSpec::validate() const {
  if (!(holder_gamma > 0.0 && holder_gamma <= 1.0))
    throw std::invalid_argument(fmt::format("payoff.holder_gamma = {} must lie in (0, 1]", holder_gamma));
  if (!(holder_beta > 0.0)) throw std::invalid_argument("payoff.holder_beta must be positive");
  switch (family) {
    case PayoffFamily::call:
    case PayoffFamily::put:
      if (!std::isfinite(strike)) throw std::invalid_argument("payoff.strike must be finite");
      break;
    case PayoffFamily::power_call:
      if (!(exponent > 0.0 && exponent <= 1.0))
        throw std::invalid_argument(fmt::format("payoff.exponent = {} must lie in (0, 1]", exponent));
      break;
    case PayoffFamily::capped_power:
      if (!(exponent >= 1.0 && exponent < 2.0))
        throw std::invalid_argument(fmt::format("payoff.exponent = {} must lie in [1, 2)", exponent));
      if (!(width > 0.0)) throw std::invalid_argument("payoff.width must be positive");
      break;
    case PayoffFamily::linear:
    case PayoffFamily::constant:
      if (!std::isfinite(slope) || !std::isfinite(intercept))
        throw std::invalid_argument("payoff coefficients must be finite");
      break;
    case PayoffFamily::table:
      if (table_x.size() < 2 || table_x.size() != table_y.size())
        throw std::invalid_argument("payoff.table needs >= 2 (x, y) nodes of equal length");
      if (std::adjacent_find(table_x.begin(), table_x.end(), std::greater_equal<>()) != table_x.end())
        throw std::invalid_argument("payoff.table x nodes must be strictly increasing");
      break;
  }
}

std::vector<double> PayoffSpec::breakpoints() const {
  switch (family) {
    case PayoffFamily::call:
    case PayoffFamily::put:
    case PayoffFamily::power_call: return {strike};
    case PayoffFamily::capped_power: return {strike, strike + width};
    case PayoffFamily::table: return table_x;
    default: return {};
  }
}

double payoff_eval(const PayoffSpec& spec, double x) {
  switch (spec.family) {
    case PayoffFamily::call: return std::max(x - spec.strike, 0.0);
    case PayoffFamily::put: return std::max(spec.strike - x, 0.0);
    case PayoffFamily::power_call: return x > spec.strike ? std::pow(x - spec.strike, spec.exponent) : 0.0;
    case PayoffFamily::capped_power: {
      if (x < spec.strike) return 0.0;
      if (x < spec.strike + spec.width) return std::pow(x - spec.strike, spec.exponent);
      return std::pow(spec.width, spec.exponent);
    }
    case PayoffFamily::linear: return spec.slope * x + spec.intercept;
    case PayoffFamily::constant: return spec.intercept;
    case PayoffFamily::table: {
      const auto& xs = spec.table_x;
      if (x < xs.front() || x > xs.back())
        throw DomainError(fmt::format("payoff table: x={} outside [{}, {}] (no extrapolation)", x, xs.front(),
                                      xs.back()));
      const std::size_t i = cell(xs, x);
      const double w = (x - xs[i]) / (xs[i + 1] - xs[i]);
      return (1.0 - w) * spec.table_y[i] + w * spec.table_y[i + 1];
    }
  }
  return 0.0;
}

std::string to_string(PayoffFamily family) {
  switch (family) {
    case PayoffFamily::call: return "call";
    case PayoffFamily::put: return "put";
    case PayoffFamily::power_call: return "power-call";
    case PayoffFamily::capped_power: return "capped-power";
    case PayoffFamily::linear: return "linear";
    case PayoffFamily::constant: return "constant";
    case PayoffFamily::table: return "table";
  }
  return "?";
}

std::string to_string(SurfaceFamily family) {
  switch (family) {
    case SurfaceFamily::constant: return "constant";
    case SurfaceFamily::time_scaled: return "time-scaled";
    case SurfaceFamily::capped_power: return "capped-power";
    case SurfaceFamily::tabulated: return "tabulated";
  }
  return "?";
}

}  // namespace asianlv
