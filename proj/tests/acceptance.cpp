// Runs the acceptance criteria and prints one verdict line per criterion.
// usage: acceptance [ids...] [--expect-fail id,id]
// Exit status is 0 when the failing set equals the expected-failure set, so a criterion that is known
// not to hold keeps reporting FAIL while any other change in the verdicts breaks the run.
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "hq/acceptance.hpp"

int main(int argc, char** argv) {
  std::vector<int> ids;
  std::set<int> expected;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--expect-fail" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string t; std::getline(ss, t, ',');) expected.insert(std::stoi(t));
    } else {
      ids.push_back(std::stoi(a));
    }
  }
  if (ids.empty()) ids = hq::all_criteria();
  std::set<int> failed;
  double total = 0.0;
  for (int id : ids) {
    const hq::CriterionResult r = hq::run_criterion(id);
    std::cout << hq::format_result(r) << std::endl;
    if (!r.pass) failed.insert(id);
    total += r.seconds;
  }
  std::cout << "acceptance: " << ids.size() - failed.size() << "/" << ids.size() << " PASS in " << total << " s";
  std::set<int> relevant;
  for (int id : ids)
    if (expected.count(id)) relevant.insert(id);
  if (!relevant.empty()) {
    std::cout << "; expected failures:";
    for (int id : relevant) std::cout << " " << id;
  }
  std::cout << std::endl;
  return failed == relevant ? 0 : 1;
}
