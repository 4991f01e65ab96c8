#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace lbp::verify {

struct Options {
  int jobs = 1;
  std::uint64_t seed = 1;
};

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Outcome(const Options&)> run;
};

struct Report {
  int id;
  std::string name;
  bool passed;
  std::string detail;
  double seconds;
  double budget_seconds;
};

const std::vector<Criterion>& criteria();

// Runs the selected criteria (all when `only` is empty) and prints one
// "[PASS]"/"[FAIL]" line each. A criterion that throws fails with the message.
std::vector<Report> run_criteria(const Options& options, const std::vector<int>& only, std::ostream& log);

bool all_passed(const std::vector<Report>& reports);

}  // namespace lbp::verify
