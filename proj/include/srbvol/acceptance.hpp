#pragma once

#include "srbvol/bounds.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace srbvol {

struct SuiteOptions {
  std::string level = "full";  // "full" or "quick"
  std::uint64_t seed = 42;
  int workers = 1;
};

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;        // deterministic summary
  double seconds = 0.0;      // wall time; never serialized
  double time_limit = 0.0;   // 0 = none
  bool within_time() const { return time_limit <= 0.0 || seconds <= time_limit; }
};

struct SuiteResult {
  SuiteOptions options;
  std::vector<CriterionResult> criteria;
  std::vector<std::pair<std::string, BoundReport>> sections;

  bool all_pass() const;
  /// Artifacts: identical for identical options.
  nlohmann::json to_json() const;
  std::string to_csv() const;
};

/// One line "PASS|FAIL <id> <title>: <detail> [<seconds> s]".
std::string criterion_line(const CriterionResult& result);

/// Runs the module batteries and criteria 1-11. `progress` is called after
/// each criterion finishes.
SuiteResult run_suite(const SuiteOptions& options = {},
                      const std::function<void(const CriterionResult&)>& progress = {});

/// Criterion 12: the artifacts of two suite runs with the same options are
/// byte-identical.
CriterionResult determinism_criterion(const SuiteResult& first, const SuiteResult& second);

}  // namespace srbvol
