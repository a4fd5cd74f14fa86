#include "asianlv/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"

#include "asianlv/acceptance.hpp"
#include "asianlv/approxlab.hpp"
#include "asianlv/asymptotics.hpp"
#include "asianlv/config.hpp"
#include "asianlv/harness.hpp"
#include "asianlv/ldp.hpp"
#include "asianlv/montecarlo.hpp"

namespace asianlv {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string g17(double v) { return fmt::format("{:.17g}", v); }
std::string g6(double v) { return fmt::format("{:.6g}", v); }

struct Check {
  std::string name;
  bool pass;
};

/// What a command produced: CSV body, extra files, summary record and checks.
struct Outcome {
  std::string csv;
  std::vector<std::pair<std::string, std::string>> extra_files;
  Json summary = Json::object();
  std::vector<Check> checks;
  std::vector<std::string> human;
};

std::vector<double> grid_of(const Json& exp, const char* key) {
  std::vector<double> v;
  for (const Json& x : exp.at(key)) {
    if (!x.is_number() || !(x.get<double>() > 0.0))
      throw ConfigError(fmt::format("'experiment.{}' must hold positive numbers", key));
    v.push_back(x.get<double>());
  }
  if (v.empty()) throw ConfigError(fmt::format("'experiment.{}' must not be empty", key));
  return v;
}

std::string str_of(const Json& exp, const char* key, std::initializer_list<const char*> allowed) {
  const std::string v = exp.at(key).get<std::string>();
  for (const char* a : allowed)
    if (v == a) return v;
  std::string list;
  for (const char* a : allowed) list += (list.empty() ? "" : "|") + std::string(a);
  throw ConfigError(fmt::format("'experiment.{}' = '{}' must be one of {}", key, v, list));
}

Json estimate_json(const McEstimate& e) {
  return {{"mean", e.mean},         {"std_error", e.std_error},   {"n_paths", e.n_paths},
          {"estimator", e.estimator}, {"n_excluded", e.n_excluded}, {"n_flagged", e.n_flagged}};
}

Json fit_json(const ConvergenceReport& r) {
  return {{"status", r.status},       {"order", r.order},         {"intercept", r.intercept},
          {"r_squared", r.r_squared}, {"hypothesized", r.hypothesized}, {"slack", r.slack},
          {"verdict", r.verdict},     {"dropped", r.dropped.size()}};
}

Outcome cmd_vols(const RunConfig& rc) {
  Outcome o;
  const auto T = grid_of(rc.experiment(), "T_grid");
  std::string csv = "T,asian_vol,european_vol,ratio\n";
  const bool constant = rc.surface.level_independent() && rc.surface.time_homogeneous();
  double worst = 0.0;
  for (double t : T) {
    const VolQuote q = vol_quote(rc.surface, rc.market.spot, t);
    const double ratio = q.asian_vol / q.european_vol;
    worst = std::max(worst, std::abs(ratio - 1.0 / std::sqrt(3.0)));
    csv += fmt::format("{},{},{},{}\n", g17(t), g17(q.asian_vol), g17(q.european_vol), g17(ratio));
    o.human.push_back(fmt::format("T={} asian={} european={} ratio={}", g6(t), g6(q.asian_vol), g6(q.european_vol),
                                  g6(ratio)));
  }
  o.csv = csv;
  o.summary["max_ratio_deviation"] = worst;
  if (constant) o.checks.push_back({"ratio 1/sqrt(3) within 1e-12", worst <= 1e-12});
  return o;
}

double asym_vol_for(const RunConfig& rc, Style style, double T) {
  const VolQuote q = vol_quote(rc.surface, rc.market.spot, T);
  return style == Style::european ? q.european_vol : q.asian_vol;
}

Outcome cmd_price(const RunConfig& rc, std::size_t threads) {
  Outcome o;
  const Json& e = rc.experiment();
  const Style style = parse_style(str_of(e, "style", {"asian", "european", "geometric"}));
  const std::string method = str_of(e, "method", {"asym", "mc", "both"});
  const std::string estimator = str_of(e, "estimator", {"plain", "coupled"});
  SimConfig cfg = rc.mc;
  cfg.threads = threads;
  std::string csv = "T,asym,mc,stderr,diff\n";
  Json rows = Json::array();
  for (double T : grid_of(e, "T_grid")) {
    double asym = kNaN;
    McEstimate mc;
    mc.mean = mc.std_error = kNaN;
    if (method != "mc") asym = asym_price(rc.payoff, rc.market.spot, asym_vol_for(rc, style, T), T, style).value;
    if (method != "asym")
      mc = (estimator == "coupled" && style != Style::geometric)
               ? mc_price_coupled(rc.surface, rc.market, rc.payoff, style, T, cfg)
               : mc_price(rc.surface, rc.market, rc.payoff, style, T, cfg);
    const double diff = mc.mean - asym;
    csv += fmt::format("{},{},{},{},{}\n", g17(T), g17(asym), g17(mc.mean), g17(mc.std_error), g17(diff));
    o.human.push_back(fmt::format("T={} asym={} mc={} (se {}) diff={}", g6(T), g6(asym), g6(mc.mean),
                                  g6(mc.std_error), g6(diff)));
    Json r = {{"T", T}, {"asym", asym}};
    if (method != "asym") r["mc"] = estimate_json(mc);
    rows.push_back(r);
  }
  o.csv = csv;
  o.summary["rows"] = rows;
  return o;
}

Outcome cmd_delta(const RunConfig& rc, std::size_t threads) {
  Outcome o;
  const Json& e = rc.experiment();
  const Style style = parse_style(str_of(e, "style", {"asian", "european", "geometric"}));
  const std::string method = str_of(e, "method", {"asym", "fd", "malliavin", "all"});
  const std::string estimator = str_of(e, "estimator", {"plain", "coupled"});
  const double bump = e.at("bump").get<double>();
  const bool do_fd = method == "fd" || method == "all";
  const bool do_mall = method == "malliavin" || (method == "all" && style != Style::geometric);
  SimConfig cfg = rc.mc;
  cfg.threads = threads;
  std::string csv = "T,asym,fd,fd_stderr,malliavin,malliavin_stderr\n";
  Json rows = Json::array();
  for (double T : grid_of(e, "T_grid")) {
    double asym = kNaN;
    McEstimate fd, ml;
    fd.mean = fd.std_error = ml.mean = ml.std_error = kNaN;
    if (method == "asym" || method == "all")
      asym = asym_delta(rc.payoff, rc.market.spot, asym_vol_for(rc, style, T), T, style).value;
    if (do_fd)
      fd = (estimator == "coupled" && style != Style::geometric)
               ? mc_delta_fd_coupled(rc.surface, rc.market, rc.payoff, style, T, cfg, bump)
               : mc_delta_fd(rc.surface, rc.market, rc.payoff, style, T, cfg, bump);
    if (do_mall) ml = mc_delta_malliavin(rc.surface, rc.market, rc.payoff, style, T, cfg);
    csv += fmt::format("{},{},{},{},{},{}\n", g17(T), g17(asym), g17(fd.mean), g17(fd.std_error), g17(ml.mean),
                       g17(ml.std_error));
    o.human.push_back(fmt::format("T={} asym={} fd={} (se {}) malliavin={} (se {})", g6(T), g6(asym), g6(fd.mean),
                                  g6(fd.std_error), g6(ml.mean), g6(ml.std_error)));
    Json r = {{"T", T}, {"asym", asym}};
    if (do_fd) r["fd"] = estimate_json(fd);
    if (do_mall) {
      r["malliavin"] = estimate_json(ml);
      r["malliavin"]["weight_mean"] = ml.weight_mean;
      r["malliavin"]["weight_sd"] = ml.weight_sd;
    }
    if (do_fd && do_mall) {
      const double se = std::hypot(fd.std_error, ml.std_error);
      o.checks.push_back({fmt::format("T={} fd and malliavin within 3 combined std errors", g6(T)),
                          std::abs(fd.mean - ml.mean) <= 3.0 * se});
    }
    rows.push_back(r);
  }
  o.csv = csv;
  o.summary["rows"] = rows;
  return o;
}

Outcome cmd_verify_approx(const RunConfig& rc, std::size_t threads) {
  Outcome o;
  const Json& e = rc.experiment();
  const double p = e.at("p").get<double>();
  if (!(p > 0.0)) throw ConfigError("'experiment.p' must be positive");
  const double t_min = e.at("t_min").get<double>(), t_max = e.at("t_max").get<double>();
  const auto count = e.at("t_count").get<std::size_t>();
  if (!(t_min > 0.0 && t_max <= 1.0 && t_min < t_max && count >= 2))
    throw ConfigError("experiment t grid needs 0 < t_min < t_max <= 1 and t_count >= 2");
  const auto t = log_spaced(t_min, t_max, count);
  const bool doubling = e.at("step_doubling").get<bool>();
  const double tol = e.at("stability_tolerance").get<double>();
  SimConfig cfg = rc.mc;
  cfg.threads = threads;
  std::string csv = "pair,slope,intercept,r_squared,fine_slope,stable,status\n";
  Json fits = Json::array();
  for (const Json& name : e.at("pairs")) {
    if (!name.is_string()) throw ConfigError("'experiment.pairs' must hold pair names");
    ProcessPair pair;
    try {
      pair = parse_pair(name.get<std::string>());
    } catch (const std::exception& ex) {
      throw ConfigError(fmt::format("'experiment.pairs': {}", ex.what()));
    }
    const std::string tag = to_string(pair);
    DistanceCurve curve;
    ScalingFit fit;
    double fine_slope = kNaN;
    bool stable = true;
    if (doubling) {
      const StepDoubling sd = step_doubling_study(rc.surface, rc.market, pair, p, t, cfg, tol);
      curve = sd.coarse;
      fit = sd.coarse_fit;
      fine_slope = sd.fine_fit.slope;
      stable = sd.stable;
      std::ostringstream fine;
      write_curve_csv(sd.fine, fine);
      o.extra_files.emplace_back("verify-approx." + tag + ".fine.csv", fine.str());
    } else {
      curve = lp_distance_curve(rc.surface, rc.market, pair, p, t, cfg);
      fit = scaling_exponent(curve);
    }
    std::ostringstream c;
    write_curve_csv(curve, c);
    o.extra_files.emplace_back("verify-approx." + tag + ".csv", c.str());
    csv += fmt::format("{},{},{},{},{},{},{}\n", tag, g17(fit.slope), g17(fit.intercept), g17(fit.r_squared),
                       g17(fine_slope), stable ? "true" : "false", fit.status);
    o.human.push_back(fmt::format("{}: slope={} r2={} fine_slope={} stable={} ({})", tag, g6(fit.slope),
                                  g6(fit.r_squared), g6(fine_slope), stable, fit.status));
    fits.push_back({{"pair", tag},
                    {"slope", fit.slope},
                    {"intercept", fit.intercept},
                    {"r_squared", fit.r_squared},
                    {"fine_slope", fine_slope},
                    {"stable", stable},
                    {"status", fit.status}});
    if (fit.fitted) {
      o.checks.push_back({tag + " slope >= p - 0.15", fit.slope >= p - 0.15});
      o.checks.push_back({tag + " r^2 >= 0.95", fit.r_squared >= 0.95});
      if (doubling) o.checks.push_back({tag + " stable under step doubling", stable});
    }
  }
  o.csv = csv;
  o.summary["fits"] = fits;
  return o;
}

Outcome cmd_ldp(const RunConfig& rc, std::size_t threads) {
  Outcome o;
  const Json& e = rc.experiment();
  if (!rc.surface.time_homogeneous()) throw ConfigError("ldp needs a time-homogeneous surface");
  const auto ratios = grid_of(e, "x_over_y");
  const auto n = e.at("grid_n").get<std::size_t>();
  const bool shoot = e.at("shooting").get<bool>();
  const double y = rc.market.spot;
  std::string csv = "x,y,I,converged,constraint_residual,el_residual,shooting,relative_gap\n";
  Json rows = Json::array();
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    const double x = ratios[i] * y;
    const RateFunctionProblem pb = make_rate_problem(rc.surface, x, y, n);
    const RateFunctionResult r = rate_function(pb);
    double sv = kNaN, gap = kNaN;
    std::string status = "skipped";
    if (shoot) {
      const ShootingResult s = rate_function_shooting(pb);
      status = s.status;
      if (s.found) {
        sv = s.value;
        gap = s.value > 0.0 ? std::abs(r.value - s.value) / s.value : std::abs(r.value - s.value);
        o.checks.push_back({fmt::format("x/y={} solver vs shooting within 1e-3", g6(ratios[i])), gap <= 1e-3});
      }
    }
    o.checks.push_back({fmt::format("x/y={} converged", g6(ratios[i])), r.converged});
    csv += fmt::format("{},{},{},{},{},{},{},{}\n", g17(x), g17(y), g17(r.value), r.converged ? "true" : "false",
                       g17(r.constraint_residual), g17(r.el_residual), g17(sv), g17(gap));
    o.human.push_back(fmt::format("I({}, {}) = {} converged={} shooting={} gap={}", g6(x), g6(y), g6(r.value),
                                  r.converged, g6(sv), g6(gap)));
    std::ostringstream path;
    write_rate_path_csv(r, path);
    o.extra_files.emplace_back(fmt::format("ldp.path{}.csv", i), path.str());
    rows.push_back({{"x", x},
                    {"y", y},
                    {"I", r.value},
                    {"converged", r.converged},
                    {"constraint_residual", r.constraint_residual},
                    {"el_residual", r.el_residual},
                    {"multiplier", r.multiplier},
                    {"outer_iterations", r.outer_iterations},
                    {"newton_iterations", r.newton_iterations},
                    {"shooting", sv},
                    {"shooting_status", status}});
  }
  o.summary["rows"] = rows;

  const Json& decay = e.at("decay");
  std::vector<double> Td;
  for (const Json& v : decay.at("T_grid")) Td.push_back(v.get<double>());
  if (!Td.empty()) {
    const double K = decay.at("strike").get<double>();
    if (K == y) throw ConfigError("'experiment.decay.strike' must differ from the spot");
    const PayoffSpec pay = K > y ? PayoffSpec::call(K) : PayoffSpec::put(K);
    const double I = rate_function(make_rate_problem(rc.surface, K, y, n)).value;
    SimConfig cfg = rc.mc;
    cfg.threads = threads;
    std::vector<double> vals;
    Json drows = Json::array();
    for (double T : Td) {
      const McEstimate m = mc_price(rc.surface, rc.market, pay, Style::asian, T, cfg);
      vals.push_back(m.mean);
      drows.push_back({{"T", T}, {"price", m.mean}, {"std_error", m.std_error}, {"T_log_price", T * std::log(m.mean)}});
      o.human.push_back(fmt::format("decay T={} price={} T*log(price)={} (-I = {})", g6(T), g6(m.mean),
                                    g6(T * std::log(m.mean)), g6(-I)));
    }
    Json d = {{"strike", K}, {"I", I}, {"rows", drows}};
    if (Td.size() >= 2) {
      const DecayReport rep = decay_slope(Td, vals, I);
      d["limit"] = rep.limit;
      d["relative_distance"] = rep.relative_distance;
    }
    o.summary["decay"] = d;
  }
  o.csv = csv;
  return o;
}

Outcome cmd_converge(const RunConfig& rc, std::size_t threads) {
  Outcome o;
  const Json& e = rc.experiment();
  const std::string quantity = str_of(e, "quantity", {"price", "delta"});
  const bool price = quantity == "price";
  const std::string est = price ? str_of(e, "estimator", {"coupled", "plain"})
                                : str_of(e, "estimator", {"coupled", "plain", "malliavin"});
  const auto n_base = e.at("n_base").get<std::size_t>();
  const double bump = e.at("bump").get<double>();
  const double slack = e.at("slack").get<double>();
  const double gamma = rc.payoff.holder_gamma;
  double order = price ? gamma : gamma - 0.5;
  if (!e.at("order").is_null()) {
    if (!e.at("order").is_number()) throw ConfigError("'experiment.order' must be a number or null");
    order = e.at("order").get<double>();
  }
  std::string csv = "T,n_paths,mc,asym,error,stderr\n";
  std::vector<ErrorPoint> pts;
  for (double T : grid_of(e, "T_grid")) {
    SimConfig cfg = rc.mc;
    cfg.threads = threads;
    cfg.n_paths = scaled_paths(n_base, T);
    const double vol = asian_vol(rc.surface, rc.market.spot, T);
    McEstimate m;
    double asym;
    if (price) {
      m = est == "coupled" ? mc_price_coupled(rc.surface, rc.market, rc.payoff, Style::asian, T, cfg)
                           : mc_price(rc.surface, rc.market, rc.payoff, Style::asian, T, cfg);
      asym = asym_price(rc.payoff, rc.market.spot, vol, T).value;
    } else {
      m = est == "coupled"  ? mc_delta_fd_coupled(rc.surface, rc.market, rc.payoff, Style::asian, T, cfg, bump)
          : est == "plain" ? mc_delta_fd(rc.surface, rc.market, rc.payoff, Style::asian, T, cfg, bump)
                           : mc_delta_malliavin(rc.surface, rc.market, rc.payoff, Style::asian, T, cfg);
      asym = asym_delta(rc.payoff, rc.market.spot, vol, T).value;
    }
    const double err = m.mean - asym;
    pts.push_back({T, err, m.std_error});
    csv += fmt::format("{},{},{},{},{},{}\n", g17(T), cfg.n_paths, g17(m.mean), g17(asym), g17(err),
                       g17(m.std_error));
    o.human.push_back(fmt::format("T={} paths={} mc={} asym={} error={} (se {})", g6(T), cfg.n_paths, g6(m.mean),
                                  g6(asym), g6(err), g6(m.std_error)));
  }
  const ConvergenceReport rep = convergence_report(pts, order, slack);
  o.human.push_back(fmt::format("fitted order {} (r2 {}) vs hypothesis {} - {}: {}", g6(rep.order), g6(rep.r_squared),
                                g6(order), g6(slack), rep.status == "ok" ? (rep.verdict ? "pass" : "fail") : rep.status));
  o.summary["fit"] = fit_json(rep);
  o.checks.push_back({"fitted order >= hypothesis - slack", rep.status == "ok" && rep.verdict});
  o.csv = csv;
  return o;
}

Outcome cmd_compare(const RunConfig& rc, std::size_t threads) {
  Outcome o;
  const Json& e = rc.experiment();
  CompareOptions opt;
  opt.quantity = str_of(e, "quantity", {"price", "delta"}) == "price" ? QuoteKind::price : QuoteKind::delta;
  opt.T_grid = grid_of(e, "T_grid");
  opt.n_base = e.at("n_base").get<std::size_t>();
  opt.slack = e.at("slack").get<double>();
  opt.bump = e.at("bump").get<double>();
  SimConfig cfg = rc.mc;
  cfg.threads = threads;
  const ComparisonTable tab = compare_experiment(rc.surface, rc.market, rc.payoff, opt, cfg);
  std::ostringstream csv;
  write_comparison_csv(tab, csv);
  o.csv = csv.str();
  for (const CompareRow& r : tab.rows)
    o.human.push_back(fmt::format("T={} mc={} asym={} err_matched={} err_unmatched={} err_geo={} (se {})", g6(r.T),
                                  g6(r.mc), g6(r.asym), g6(r.err_matched), g6(r.err_unmatched), g6(r.err_geo),
                                  g6(r.std_error)));
  const std::pair<const char*, const ConvergenceReport*> fits[] = {
      {"asym", &tab.asym_fit}, {"matched", &tab.matched_fit}, {"unmatched", &tab.unmatched_fit}, {"geo", &tab.geo_fit}};
  for (const auto& [name, f] : fits) {
    o.summary[name] = fit_json(*f);
    o.human.push_back(fmt::format("{} error order {} (r2 {}) [{}]", name, g6(f->order), g6(f->r_squared), f->status));
  }
  if (opt.quantity == QuoteKind::price) {
    const bool ok_m = tab.matched_fit.status == "ok", ok_u = tab.unmatched_fit.status == "ok";
    o.checks.push_back({"matched order >= 0.8", ok_m && tab.matched_fit.order >= 0.8});
    o.checks.push_back({"unmatched order <= 0.65", ok_u && tab.unmatched_fit.order <= 0.65});
    o.checks.push_back(
        {"matched - unmatched >= 0.3", ok_m && ok_u && tab.matched_fit.order - tab.unmatched_fit.order >= 0.3});
    if (tab.geometric_enabled)
      o.checks.push_back({"geometric order >= 0.8", tab.geo_fit.status == "ok" && tab.geo_fit.order >= 0.8});
  }
  return o;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

Outcome cmd_check(const RunConfig& rc, std::size_t threads, std::ostream& out) {
  Outcome o;
  const Json& e = rc.experiment();
  std::vector<int> ids;
  for (const Json& v : e.at("criteria")) {
    if (!v.is_number_integer()) throw ConfigError("'experiment.criteria' must hold integers");
    ids.push_back(v.get<int>());
  }
  const auto& known = acceptance_ids();
  for (int id : ids)
    if (std::find(known.begin(), known.end(), id) == known.end())
      throw ConfigError(fmt::format("'experiment.criteria': no criterion {}", id));
  AcceptanceOptions opt;
  opt.scale = e.at("scale").get<double>();
  if (!(opt.scale > 0.0)) throw ConfigError("'experiment.scale' must be positive");
  opt.threads = threads;
  opt.work_dir = (std::filesystem::path(rc.output.dir) / (rc.output.prefix + "check.work")).string();
  const auto results = run_acceptance(ids, opt, &out);
  std::string csv = "criterion,name,pass,detail\n";
  for (const CriterionResult& r : results) {
    csv += fmt::format("{},{},{},{}\n", r.id, csv_quote(r.name), r.pass ? "true" : "false", csv_quote(r.detail));
    o.checks.push_back({fmt::format("criterion {}", r.id), r.pass});
  }
  o.csv = csv;
  return o;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  f << text;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Short-maturity Asian option engine under local volatility"};
  app.allow_extras();
  std::string command, config_path;
  std::size_t threads = 0;
  bool check = false;
  app.add_option("command", command, "vols | price | delta | verify-approx | ldp | converge | compare | check")
      ->required();
  app.add_option("-c,--config", config_path, "JSON config file (comments allowed)");
  app.add_option("--threads", threads, "worker threads (0: ASIANLV_THREADS or hardware count)");
  app.add_flag("--check", check, "exit with status 3 when a command's own checks fail");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    out << "Any other --key=value (or --key value) overrides a config entry; keys without a dot\n"
           "refer to the experiment block, e.g. --mc.seed=7 --style=european.\n";
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return exit_validation;
  }

  try {
    if (!is_command(command)) throw ConfigError(fmt::format("unknown command '{}'", command));
    Json raw = config_path.empty() ? Json::object() : load_config_file(config_path);
    const auto extras = app.remaining();
    for (std::size_t i = 0; i < extras.size(); ++i) {
      const std::string& a = extras[i];
      if (a.rfind("--", 0) != 0 || a.size() < 3) throw ConfigError(fmt::format("unexpected argument '{}'", a));
      std::string key = a.substr(2), value;
      const auto eq = key.find('=');
      if (eq != std::string::npos) {
        value = key.substr(eq + 1);
        key = key.substr(0, eq);
      } else if (i + 1 < extras.size() && extras[i + 1].rfind("--", 0) != 0) {
        value = extras[++i];
      } else {
        throw ConfigError(fmt::format("override '--{}' needs a value", key));
      }
      if (key.find('.') == std::string::npos) key = "experiment." + key;
      apply_override(raw, key, value);
    }
    const RunConfig rc = resolve_config(command, raw);

    Outcome o;
    if (command == "vols") o = cmd_vols(rc);
    else if (command == "price") o = cmd_price(rc, threads);
    else if (command == "delta") o = cmd_delta(rc, threads);
    else if (command == "verify-approx") o = cmd_verify_approx(rc, threads);
    else if (command == "ldp") o = cmd_ldp(rc, threads);
    else if (command == "converge") o = cmd_converge(rc, threads);
    else if (command == "compare") o = cmd_compare(rc, threads);
    else o = cmd_check(rc, threads, out);

    Json summary = {{"command", command}};
    Json checks = Json::array();
    bool all = true;
    for (const Check& c : o.checks) {
      checks.push_back({{"name", c.name}, {"pass", c.pass}});
      all = all && c.pass;
    }
    summary["checks"] = checks;
    summary["all_checks_pass"] = all;
    summary["results"] = o.summary;

    if (rc.output.write) {
      const std::filesystem::path dir(rc.output.dir);
      std::filesystem::create_directories(dir);
      const std::string base = rc.output.prefix + command;
      write_file(dir / (base + ".config.json"), rc.resolved.dump(2) + "\n");
      write_file(dir / (base + ".csv"), o.csv);
      write_file(dir / (base + ".summary.json"), summary.dump(2) + "\n");
      for (const auto& [name, text] : o.extra_files) write_file(dir / (rc.output.prefix + name), text);
    }
    for (const std::string& line : o.human) out << line << "\n";
    for (const Check& c : o.checks) out << (c.pass ? "ok   " : "FAIL ") << c.name << "\n";
    if ((check || command == "check") && !all) return exit_check_failed;
    return exit_ok;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return exit_validation;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_validation;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return exit_numeric;
  }
}

}  // namespace asianlv
