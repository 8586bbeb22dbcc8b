#include "srbvol/bounds.hpp"

#include "srbvol/format.hpp"

#include <algorithm>
#include <cmath>

namespace srbvol {

BoundRow& BoundReport::check(const std::string& statement, double lhs, double rhs,
                             double rel_tol, double abs_tol) {
  BoundRow row;
  row.statement = statement;
  row.lhs = lhs;
  row.rhs = rhs;
  const double scale = std::max(std::abs(lhs), std::abs(rhs));
  row.slack = std::isfinite(scale) ? rel_tol * scale + abs_tol : abs_tol;
  row.pass = std::isfinite(lhs) && lhs <= rhs + row.slack;
  rows.push_back(row);
  return rows.back();
}

BoundRow& BoundReport::check_log(const std::string& statement, double lhs, double rhs,
                                 double log_slack) {
  BoundRow row;
  row.statement = statement;
  row.lhs = lhs;
  row.rhs = rhs;
  row.slack = rhs * std::expm1(log_slack);
  row.pass = lhs <= 0.0 || (rhs > 0.0 && std::log(lhs) <= std::log(rhs) + log_slack + 1e-12);
  rows.push_back(row);
  return rows.back();
}

BoundRow& BoundReport::add_vacuous(const std::string& statement, const std::string& why) {
  BoundRow row;
  row.statement = statement;
  row.vacuous = true;
  row.note = why;
  rows.push_back(row);
  return rows.back();
}

void BoundReport::append(const BoundReport& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
  constants.insert(constants.end(), other.constants.begin(), other.constants.end());
}

std::size_t BoundReport::failures() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const BoundRow& r) { return !r.vacuous && !r.pass; }));
}

std::size_t BoundReport::evaluated() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const BoundRow& r) { return !r.vacuous; }));
}

nlohmann::json BoundReport::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"statement", r.statement},
                         {"lhs", json_number(r.lhs)},
                         {"rhs", json_number(r.rhs)},
                         {"slack", json_number(r.slack)},
                         {"pass", r.pass},
                         {"vacuous", r.vacuous},
                         {"note", r.note}});
  }
  nlohmann::json consts = nlohmann::json::object();
  for (const auto& [name, value] : constants) consts[name] = json_number(value);
  return {{"rows", rows_json},
          {"fitted_constants", consts},
          {"evaluated", evaluated()},
          {"failures", failures()}};
}

std::vector<std::vector<std::string>> BoundReport::table() const {
  std::vector<std::vector<std::string>> out;
  out.push_back({"statement", "lhs", "rhs", "slack", "pass", "vacuous", "note"});
  for (const auto& r : rows) {
    out.push_back({r.statement, fmt_double(r.lhs), fmt_double(r.rhs), fmt_double(r.slack),
                   r.pass ? "1" : "0", r.vacuous ? "1" : "0", r.note});
  }
  return out;
}

}  // namespace srbvol
