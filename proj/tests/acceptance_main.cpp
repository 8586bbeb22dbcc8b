// Acceptance run: criteria 1-11 from one suite run, criterion 12 from a second
// run with the same options. One line per criterion.
#include "srbvol/acceptance.hpp"
#include "srbvol/format.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  srbvol::SuiteOptions opt;
  std::string out;
  app.add_option("--level", opt.level, "full or quick")->check(CLI::IsMember({"full", "quick"}));
  app.add_option("--seed", opt.seed, "Master seed");
  app.add_option("--workers", opt.workers, "Worker threads");
  app.add_option("--out", out, "Directory for suite.csv and suite.json");
  CLI11_PARSE(app, argc, argv);

  const auto first = srbvol::run_suite(opt);
  const auto second = srbvol::run_suite(opt);
  const auto det = srbvol::determinism_criterion(first, second);
  bool ok = det.pass;
  for (const auto& c : first.criteria) {
    std::cout << srbvol::criterion_line(c) << "\n";
    ok = ok && c.pass;
  }
  std::cout << srbvol::criterion_line(det) << std::endl;
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    std::ofstream(std::filesystem::path(out) / "suite.csv") << first.to_csv();
    std::ofstream(std::filesystem::path(out) / "suite.json") << srbvol::to_json_text(first.to_json());
  }
  return ok ? 0 : 1;
}
