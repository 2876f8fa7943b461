#pragma once

#include <string>
#include <vector>

namespace enh {

struct SelfTestResult {
  std::string name;
  bool pass = false;
  std::string detail;  // filled on failure, empty on pass
};

// Built-in oracle checks runnable from a shipped binary. Profile "fast"
// runs schedule-identities, gradient-oracle, predictor-quadrature,
// unconditional-stats, and patch-equivalence; "full" adds the 200-run
// posterior-recovery check. Any other profile is an invalid argument.
std::vector<SelfTestResult> run_selftests(const std::string& profile);

}  // namespace enh
