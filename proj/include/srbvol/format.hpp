#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <utility>
#include <vector>

namespace srbvol {

using Table = std::vector<std::vector<std::string>>;
using Metadata = std::vector<std::pair<std::string, std::string>>;

/// Round-trip decimal form ("%.17g"); "inf", "-inf" and "nan" for
/// non-finite values.
std::string fmt_double(double x);

/// JSON has no infinities: non-finite values become the strings above.
nlohmann::json json_number(double x);

/// CSV with a commented "# key=value" header block. Fields containing a
/// comma or quote are quoted.
std::string to_csv(const Table& table, const Metadata& meta);

/// Pretty JSON with sorted keys and a trailing newline.
std::string to_json_text(const nlohmann::json& j);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color;
  bool steps = false;  // draw as histogram steps
};

/// Self-contained SVG line plot (no external fonts or scripts).
std::string svg_plot(const std::string& title, const std::string& xlabel,
                     const std::string& ylabel, const std::vector<Series>& series);

}  // namespace srbvol
