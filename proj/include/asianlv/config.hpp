#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"

#include "asianlv/model.hpp"
#include "asianlv/montecarlo.hpp"

namespace asianlv {

using Json = nlohmann::ordered_json;

/// Invalid or unknown configuration entry; the message names the key.
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct OutputConfig {
  std::string dir = ".";
  std::string prefix;
  bool write = true;
};

/// A fully resolved configuration. `resolved` holds every key including
/// defaults; feeding it back in reproduces the run.
struct RunConfig {
  std::string command;
  Json resolved;
  LocalVolSurface surface = LocalVolSurface::constant(0.2);
  MarketParams market;
  PayoffSpec payoff;
  SimConfig mc;
  OutputConfig output;

  const Json& experiment() const { return resolved.at("experiment"); }
};

/// JSON with // and /* */ comments allowed.
Json parse_config_text(const std::string& text);
Json load_config_file(const std::string& path);

/// Sets a dotted key ("mc.seed") to a value parsed as JSON, or as a plain
/// string when it is not valid JSON.
void apply_override(Json& config, const std::string& dotted_key, const std::string& value);

/// Merges defaults for `command`, rejects unknown keys and builds the typed objects.
RunConfig resolve_config(const std::string& command, const Json& raw);

bool is_command(const std::string& name);
const std::vector<std::string>& commands();

}  // namespace asianlv
