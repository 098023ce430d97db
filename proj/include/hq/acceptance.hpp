#pragma once

#include <string>
#include <vector>

namespace hq {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
  // informational lines printed under the verdict
  std::vector<std::string> notes;
  double seconds = 0.0;
};

// ids 1..13
CriterionResult run_criterion(int id, unsigned seed = 7);
std::vector<int> all_criteria();
// the cheap invariant suites (seconds each)
std::vector<int> invariant_criteria();
std::string format_result(const CriterionResult& r);

}  // namespace hq
