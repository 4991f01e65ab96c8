// Acceptance suite: one pass/fail line per criterion.
//   acceptance [--jobs N] [--seed S] [id ...]

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "verify/acceptance.hpp"

int main(int argc, char** argv) {
  lbp::verify::Options options;
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--jobs" && i + 1 < argc) {
      options.jobs = std::atoi(argv[++i]);
    } else if (arg == "--seed" && i + 1 < argc) {
      options.seed = std::strtoull(argv[++i], nullptr, 10);
    } else {
      only.push_back(std::atoi(arg.c_str()));
    }
  }
  const auto reports = lbp::verify::run_criteria(options, only, std::cout);
  int passed = 0;
  for (const auto& r : reports) passed += r.passed;
  std::cout << passed << "/" << reports.size() << " criteria passed\n";
  return lbp::verify::all_passed(reports) && !reports.empty() ? 0 : 1;
}
