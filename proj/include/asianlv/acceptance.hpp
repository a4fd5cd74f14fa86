#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace asianlv {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  /// Multiplies Monte Carlo path counts; 1 is the pinned configuration.
  double scale = 1.0;
  std::size_t threads = 0;
  /// Scratch directory for the CLI determinism criterion.
  std::string work_dir;
};

const std::vector<int>& acceptance_ids();
std::string acceptance_name(int id);

CriterionResult run_criterion(int id, const AcceptanceOptions& opt);

/// Runs the criteria in order; when `log` is set, prints one PASS/FAIL line each.
std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids, const AcceptanceOptions& opt,
                                            std::ostream* log = nullptr);

}  // namespace asianlv
