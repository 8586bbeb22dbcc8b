#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <utility>
#include <vector>

namespace srbvol {

/// One evaluated inequality lhs <= rhs (+ slack).
struct BoundRow {
  std::string statement;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool pass = true;
  bool vacuous = false;  // hypothesis not met; row kept for the record
  std::string note;
};

struct BoundReport {
  std::vector<BoundRow> rows;
  std::vector<std::pair<std::string, double>> constants;

  /// Adds lhs <= rhs with slack = rel_tol * max(|lhs|, |rhs|) + abs_tol.
  BoundRow& check(const std::string& statement, double lhs, double rhs, double rel_tol,
                  double abs_tol = 1e-12);
  /// Adds lhs <= rhs for positive quantities compared on a log scale:
  /// passes when log lhs <= log rhs + log_slack.
  BoundRow& check_log(const std::string& statement, double lhs, double rhs, double log_slack);
  BoundRow& add_vacuous(const std::string& statement, const std::string& why);
  void append(const BoundReport& other);

  std::size_t failures() const;
  std::size_t evaluated() const;
  bool all_pass() const { return failures() == 0; }

  nlohmann::json to_json() const;
  /// Header row followed by one row per bound, numbers printed with %.17g.
  std::vector<std::vector<std::string>> table() const;
};

}  // namespace srbvol
