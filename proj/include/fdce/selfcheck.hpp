#pragma once

// Quick invariant suite behind the `selfcheck` verb.

#include <string>
#include <vector>

namespace fdce {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<CheckResult> run_selfcheck();

}  // namespace fdce
