#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ncpd {

enum class CheckScale { tiny, full };

struct CheckOptions {
  CheckScale scale = CheckScale::tiny;
  std::uint64_t seed = 1;
  /// Added to every gradient entry (fault injection for the suite itself).
  double gradient_fault = 0.0;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;   // worst value seen over all samples
  double tolerance = 0.0;
  int samples = 0;
};

/// Oracle suite: gradient vs central differences, Gramian kernel, matrix-free
/// Gramian vs explicit Jacobian, projection Jacobian vs differences, FBE
/// inequalities, matrix-free H vs dense assembly, Cauchy scale.
std::vector<CheckResult> run_checks(const CheckOptions& opt);

/// One line per check; returns true iff every check passed.
bool print_checks(std::ostream& out, const std::vector<CheckResult>& results);

}  // namespace ncpd
