#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace suan::tools {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Quick self-test of the library's structural invariants: gradients against
/// finite differences, gradient reversal, register averaging, weight
/// normalisation, overlap ratios and the two bound monotonicity properties.
/// Cheap enough to run on every install (well under a second).
std::vector<CheckResult> run_invariant_checks(std::uint64_t seed);

}  // namespace suan::tools
