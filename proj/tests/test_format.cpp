#include "srbvol/bounds.hpp"
#include "srbvol/format.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <limits>

using namespace srbvol;

TEST_SUITE("format") {
  TEST_CASE("doubles round-trip") {
    for (double x : {0.1, -1.0 / 3.0, 6.02214076e23, 5e-324}) CHECK(std::strtod(fmt_double(x).c_str(), nullptr) == x);
    CHECK(fmt_double(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(fmt_double(std::nan("")) == "nan");
    CHECK(json_number(-std::numeric_limits<double>::infinity()) == "-inf");
  }

  TEST_CASE("csv header block and quoting") {
    const std::string csv = to_csv({{"a", "b"}, {"1", "x,y"}, {"2", "say \"hi\""}}, {{"seed", "42"}});
    CHECK(csv == "# seed=42\na,b\n1,\"x,y\"\n2,\"say \"\"hi\"\"\"\n");
  }

  TEST_CASE("json text is sorted and newline-terminated") {
    const std::string t = to_json_text({{"b", 1}, {"a", 2}});
    CHECK(t.find("\"a\"") < t.find("\"b\""));
    CHECK(t.back() == '\n');
  }

  TEST_CASE("svg is self-contained") {
    Series s{"y", {0, 1, 2}, {1, 4, 9}, "", false};
    const std::string svg = svg_plot("t <1>", "x", "y", {s});
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("&lt;1&gt;") != std::string::npos);
    CHECK(svg.find("href") == std::string::npos);
    CHECK(svg.find("<script") == std::string::npos);
  }
}

TEST_SUITE("bounds") {
  TEST_CASE("row semantics") {
    BoundReport r;
    CHECK(r.check("eq", 1.0, 1.0, 0.0, 0.0).pass);
    CHECK_FALSE(r.check("over", 1.1, 1.0, 0.05, 0.0).pass);
    CHECK(r.check("slack", 1.04, 1.0, 0.05, 0.0).pass);
    CHECK(r.check_log("log", 2.0, 1.0, std::log(2.0) + 1e-12).pass);
    r.add_vacuous("skip", "hypothesis not met");
    CHECK(r.failures() == 1);
    CHECK(r.evaluated() == 4);
    CHECK(r.table().size() == 6);
  }
}
