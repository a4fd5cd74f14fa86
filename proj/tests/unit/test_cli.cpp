#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "asianlv/cli.hpp"
#include "asianlv/config.hpp"

using namespace asianlv;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("asianlv_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("config parsing and overrides") {
  const Json j = parse_config_text(R"({
    // a comment
    "mc": {"seed": 7 /* inline */}
  })");
  CHECK(j["mc"]["seed"] == 7);

  Json raw = Json::object();
  apply_override(raw, "mc.n_paths", "500");
  apply_override(raw, "payoff.family", "put");
  apply_override(raw, "experiment.T_grid", "[0.1, 0.2]");
  const RunConfig rc = resolve_config("price", raw);
  CHECK(rc.mc.n_paths == 500);
  CHECK(rc.payoff.family == PayoffFamily::put);
  CHECK(rc.experiment()["T_grid"].size() == 2);
  CHECK(rc.mc.seed == 20240601);

  // The resolved config resolves to itself.
  CHECK(resolve_config("price", rc.resolved).resolved == rc.resolved);

  SUBCASE("unknown keys are named") {
    Json bad = Json::object();
    apply_override(bad, "mc.sede", "1");
    try {
      resolve_config("price", bad);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("mc.sede") != std::string::npos);
    }
  }
  SUBCASE("types are checked") {
    Json bad = Json::object();
    apply_override(bad, "mc.n_paths", "-3");
    CHECK_THROWS_AS(resolve_config("price", bad), ConfigError);
    Json bad2 = Json::object();
    apply_override(bad2, "model.market.spot", "\"high\"");
    CHECK_THROWS_AS(resolve_config("price", bad2), ConfigError);
  }
}

TEST_CASE("exit codes and messages") {
  const auto dir = scratch("codes");
  CHECK(run_cli({"bogus"}).code == exit_validation);
  const auto unknown = run_cli({"vols", "--output.dir=" + dir.string(), "--mc.sede=1"});
  CHECK(unknown.code == exit_validation);
  CHECK(unknown.err.find("mc.sede") != std::string::npos);

  const auto gamma = run_cli({"price", "--output.dir=" + dir.string(), "--payoff.family=power-call",
                              "--payoff.gamma=1.5"});
  CHECK(gamma.code == exit_validation);
  CHECK(gamma.err.find("payoff.gamma") != std::string::npos);

  CHECK(run_cli({"--help"}).code == exit_ok);
  fs::remove_all(dir);
}

TEST_CASE("vols command") {
  const auto dir = scratch("vols");
  const auto r = run_cli({"vols", "--output.dir=" + dir.string(), "--check"});
  CHECK(r.code == exit_ok);
  CHECK(fs::exists(dir / "vols.csv"));
  CHECK(fs::exists(dir / "vols.summary.json"));
  const Json summary = Json::parse(slurp(dir / "vols.summary.json"));
  CHECK(summary["all_checks_pass"] == true);
  std::istringstream csv(slurp(dir / "vols.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "T,asian_vol,european_vol,ratio");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 20);
  fs::remove_all(dir);
}

TEST_CASE("price runs are reproducible") {
  const auto dir = scratch("price");
  const std::vector<std::string> args = {"price", "--output.dir=" + dir.string(), "--mc.n_paths=2000",
                                         "--mc.steps=20", "--method", "both", "--threads=2"};
  const auto a = run_cli(args);
  REQUIRE(a.code == exit_ok);
  CHECK(a.out.find("asym") != std::string::npos);
  const std::string csv = slurp(dir / "price.csv"), summary = slurp(dir / "price.summary.json");
  auto args1 = args;
  args1.back() = "--threads=1";
  REQUIRE(run_cli(args1).code == exit_ok);
  CHECK(slurp(dir / "price.csv") == csv);
  CHECK(slurp(dir / "price.summary.json") == summary);

  // Feeding back the written config reproduces the outputs.
  const fs::path cfg = dir / "copy.json";
  fs::copy_file(dir / "price.config.json", cfg);
  REQUIRE(run_cli({"price", "-c", cfg.string()}).code == exit_ok);
  CHECK(slurp(dir / "price.csv") == csv);
  fs::remove_all(dir);
}

TEST_CASE("prefix and no-write") {
  const auto dir = scratch("prefix");
  REQUIRE(run_cli({"vols", "--output.dir=" + dir.string(), "--output.prefix=run1_"}).code == exit_ok);
  CHECK(fs::exists(dir / "run1_vols.csv"));
  const auto dir2 = scratch("nowrite");
  REQUIRE(run_cli({"vols", "--output.dir=" + dir2.string(), "--output.write=false"}).code == exit_ok);
  CHECK_FALSE(fs::exists(dir2));
  fs::remove_all(dir);
}
