#include "asianlv/config.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "asianlv/approxlab.hpp"
#include "asianlv/harness.hpp"

namespace asianlv {

const std::vector<std::string>& commands() {
  static const std::vector<std::string> names = {"vols",    "price",    "delta",   "verify-approx",
                                                 "ldp",     "converge", "compare", "check"};
  return names;
}

bool is_command(const std::string& name) {
  const auto& c = commands();
  return std::find(c.begin(), c.end(), name) != c.end();
}

Json parse_config_text(const std::string& text) {
  try {
    return Json::parse(text, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
  }
}

Json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void apply_override(Json& config, const std::string& dotted_key, const std::string& value) {
  if (dotted_key.empty()) throw ConfigError("empty override key");
  Json* node = &config;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted_key.find('.', start);
    const std::string part = dotted_key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError(fmt::format("malformed override key '{}'", dotted_key));
    if (!node->is_object()) {
      if (!node->is_null()) throw ConfigError(fmt::format("override '{}' descends into a non-object", dotted_key));
      *node = Json::object();
    }
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  Json parsed;
  try {
    parsed = Json::parse(value);
  } catch (const Json::parse_error&) {
    parsed = value;
  }
  *node = parsed;
}

namespace {

// A null default marks an optional key whose type the consumer checks.
void merge(Json& target, const Json& raw, const std::string& path) {
  if (!raw.is_object()) throw ConfigError(fmt::format("'{}' must be an object", path));
  for (auto it = raw.begin(); it != raw.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!target.contains(it.key())) throw ConfigError(fmt::format("unknown config key '{}'", key));
    Json& slot = target[it.key()];
    const Json& v = it.value();
    if (slot.is_object()) {
      merge(slot, v, key);
    } else if (slot.is_null()) {
      slot = v;
    } else if (slot.is_number() != v.is_number() || slot.is_string() != v.is_string() ||
               slot.is_boolean() != v.is_boolean() || slot.is_array() != v.is_array()) {
      throw ConfigError(fmt::format("config key '{}' has the wrong type (expected {})", key, slot.type_name()));
    } else if (slot.is_number_integer() &&
               !(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0))) {
      throw ConfigError(fmt::format("config key '{}' must be a nonnegative integer", key));
    } else {
      slot = v;
    }
  }
}

Json surface_defaults(const std::string& family) {
  if (family == "constant") return {{"family", family}, {"sigma", 0.2}};
  if (family == "time-scaled")
    return {{"family", family}, {"level", 0.2}, {"shift", 1.0}, {"slope", 1.0}, {"exponent", 1.0}};
  if (family == "capped-power")
    return {{"family", family}, {"level", 0.2}, {"reference", 100.0}, {"beta", -0.3}, {"floor", 0.05}, {"cap", 1.0}};
  if (family == "tabulated") return {{"family", family}, {"file", ""}};
  throw ConfigError(fmt::format("model.surface.family: unknown family '{}' "
                                "(constant|time-scaled|capped-power|tabulated)",
                                family));
}

Json payoff_defaults(const std::string& family) {
  if (family == "call" || family == "put") return {{"family", family}, {"strike", 100.0}};
  if (family == "power-call") return {{"family", family}, {"strike", 100.0}, {"gamma", 0.5}};
  if (family == "capped-power")
    return {{"family", family}, {"strike", 100.0}, {"exponent", 1.5}, {"width", 10.0}};
  if (family == "linear") return {{"family", family}, {"slope", 1.0}, {"intercept", 0.0}};
  if (family == "constant") return {{"family", family}, {"value", 1.0}};
  if (family == "table") return {{"family", family}, {"x", Json::array()}, {"y", Json::array()}};
  throw ConfigError(fmt::format(
      "payoff.family: unknown family '{}' (call|put|power-call|capped-power|linear|constant|table)", family));
}

Json grid_json(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

Json experiment_defaults(const std::string& command) {
  if (command == "vols") return {{"T_grid", grid_json(log_spaced(1e-4, 2.0, 20))}};
  if (command == "price") return {{"style", "asian"}, {"method", "both"}, {"estimator", "coupled"}, {"T_grid", {0.25}}};
  if (command == "delta")
    return {{"style", "asian"}, {"method", "all"}, {"estimator", "plain"}, {"T_grid", {0.1}}, {"bump", 1e-3}};
  if (command == "verify-approx")
    return {{"pairs", {"X-Xtilde", "Xtilde-Xhat", "Y-Ytilde", "Ytilde-Yhat", "S-X"}},
            {"p", 2.0},
            {"t_min", 0.01},
            {"t_max", 0.5},
            {"t_count", 8},
            {"step_doubling", true},
            {"stability_tolerance", 0.1}};
  if (command == "ldp")
    return {{"x_over_y", {0.8, 1.25}},
            {"grid_n", 200},
            {"shooting", true},
            {"decay", {{"T_grid", Json::array()}, {"strike", 110.0}}}};
  if (command == "converge")
    return {{"quantity", "price"},
            {"estimator", "coupled"},
            {"T_grid", grid_json(default_T_grid())},
            {"n_base", 200000},
            {"order", nullptr},
            {"slack", 0.2},
            {"bump", 1e-3}};
  if (command == "compare")
    return {{"quantity", "price"}, {"T_grid", grid_json(default_T_grid())}, {"n_base", 200000}, {"slack", 0.2},
            {"bump", 1e-3}};
  if (command == "check") return {{"criteria", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}}, {"scale", 1.0}};
  throw ConfigError(fmt::format("unknown command '{}'", command));
}

std::string family_of(const Json& raw, const char* block, const std::string& fallback) {
  if (!raw.is_object() || !raw.contains(block)) return fallback;
  const Json& b = raw.at(block);
  if (!b.is_object() || !b.contains("family")) return fallback;
  if (!b.at("family").is_string()) throw ConfigError(fmt::format("'{}.family' must be a string", block));
  return b.at("family").get<std::string>();
}

double num(const Json& j, const char* key, const std::string& path) {
  const Json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(fmt::format("'{}.{}' must be a number", path, key));
  return v.get<double>();
}

std::vector<double> num_array(const Json& j, const char* key, const std::string& path) {
  std::vector<double> out;
  for (const Json& v : j.at(key)) {
    if (!v.is_number()) throw ConfigError(fmt::format("'{}.{}' must hold numbers", path, key));
    out.push_back(v.get<double>());
  }
  return out;
}

template <class F>
auto named(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(fmt::format("'{}': {}", key, e.what()));
  }
}

LocalVolSurface build_surface(const Json& s) {
  const std::string fam = s.at("family").get<std::string>();
  return named("model.surface", [&] {
    if (fam == "constant") return LocalVolSurface(surface::Constant{num(s, "sigma", "model.surface")});
    if (fam == "time-scaled")
      return LocalVolSurface(surface::TimeScaled{num(s, "level", "model.surface"), num(s, "shift", "model.surface"),
                                                 num(s, "slope", "model.surface"),
                                                 num(s, "exponent", "model.surface")});
    if (fam == "capped-power")
      return LocalVolSurface(surface::CappedPower{num(s, "level", "model.surface"),
                                                  num(s, "reference", "model.surface"),
                                                  num(s, "beta", "model.surface"), num(s, "floor", "model.surface"),
                                                  num(s, "cap", "model.surface")});
    const std::string file = s.at("file").get<std::string>();
    if (file.empty()) throw ConfigError("'model.surface.file' is required for a tabulated surface");
    return load_surface_csv(file);
  });
}

PayoffSpec build_payoff(const Json& p) {
  const std::string fam = p.at("family").get<std::string>();
  PayoffSpec spec;
  if (fam == "call") spec = PayoffSpec::call(num(p, "strike", "payoff"));
  else if (fam == "put") spec = PayoffSpec::put(num(p, "strike", "payoff"));
  else if (fam == "power-call") {
    const double g = num(p, "gamma", "payoff");
    if (!(g > 0.0 && g <= 1.0)) throw ConfigError(fmt::format("'payoff.gamma' = {} must lie in (0, 1]", g));
    spec = PayoffSpec::power_call(num(p, "strike", "payoff"), g);
  } else if (fam == "capped-power")
    spec = PayoffSpec::capped_power(num(p, "strike", "payoff"), num(p, "exponent", "payoff"), num(p, "width", "payoff"));
  else if (fam == "linear")
    spec = PayoffSpec::linear(num(p, "slope", "payoff"), num(p, "intercept", "payoff"));
  else if (fam == "constant")
    spec = PayoffSpec::constant(num(p, "value", "payoff"));
  else
    spec = named("payoff", [&] { return PayoffSpec::table(num_array(p, "x", "payoff"), num_array(p, "y", "payoff")); });
  named("payoff", [&] {
    spec.validate();
    return 0;
  });
  return spec;
}

}  // namespace

RunConfig resolve_config(const std::string& command, const Json& raw_in) {
  const Json raw = raw_in.is_null() ? Json::object() : raw_in;
  if (!raw.is_object()) throw ConfigError("config must be a JSON object");
  Json d;
  d["model"]["surface"] = surface_defaults(family_of(raw.contains("model") ? raw.at("model") : Json(), "surface",
                                                     "constant"));
  d["model"]["market"] = {{"spot", 100.0}, {"rate", 0.0}, {"dividend", 0.0}};
  d["payoff"] = payoff_defaults(family_of(raw, "payoff", "call"));
  d["experiment"] = experiment_defaults(command);
  d["mc"] = {{"steps", 200},         {"n_paths", 10000},          {"seed", 20240601}, {"scheme", "log-euler"},
             {"driver_steps", 0},    {"malliavin_budget", 2e10}};
  d["output"] = {{"dir", "."}, {"prefix", ""}, {"write", true}};
  merge(d, raw, "");

  RunConfig rc;
  rc.command = command;
  rc.surface = build_surface(d["model"]["surface"]);
  const Json& m = d["model"]["market"];
  rc.market = MarketParams{num(m, "spot", "model.market"), num(m, "rate", "model.market"),
                           num(m, "dividend", "model.market")};
  named("model.market", [&] {
    rc.market.validate();
    return 0;
  });
  rc.payoff = build_payoff(d["payoff"]);
  const Json& mc = d["mc"];
  rc.mc.steps = mc.at("steps").get<std::size_t>();
  rc.mc.n_paths = mc.at("n_paths").get<std::size_t>();
  rc.mc.seed = mc.at("seed").get<std::uint64_t>();
  rc.mc.scheme = named("mc.scheme", [&] { return parse_scheme(mc.at("scheme").get<std::string>()); });
  rc.mc.driver_steps = mc.at("driver_steps").get<std::size_t>();
  rc.mc.malliavin_budget = num(mc, "malliavin_budget", "mc");
  named("mc", [&] {
    rc.mc.validate();
    return 0;
  });
  rc.output.dir = d["output"]["dir"].get<std::string>();
  rc.output.prefix = d["output"]["prefix"].get<std::string>();
  rc.output.write = d["output"]["write"].get<bool>();
  rc.resolved = std::move(d);
  return rc;
}

}  // namespace asianlv
